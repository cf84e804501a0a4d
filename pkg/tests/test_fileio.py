import numpy as np
import pytest

from aifgtm import fileio


@pytest.mark.parametrize("channels", [1, 3])
def test_pnm_roundtrip(tmp_path, rng, channels):
    img = rng.integers(0, 256, size=(5, 7, channels)).astype(np.float64)
    path = tmp_path / "a.pnm"
    fileio.write_pnm(path, img)
    raw = path.read_bytes()
    assert raw.startswith(b"P6" if channels == 3 else b"P5")
    np.testing.assert_array_equal(fileio.read_pnm(path), img)


def test_pnm_rounds_and_clips(tmp_path):
    img = np.array([[[-3.0, 12.4, 12.6]], [[255.4, 300.0, 127.5]]])
    fileio.write_pnm(tmp_path / "b.ppm", img)
    out = fileio.read_pnm(tmp_path / "b.ppm")
    np.testing.assert_array_equal(out[:, 0], [[0, 12, 13], [255, 255, 128]])


def test_pnm_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x01\x02")
    np.testing.assert_array_equal(fileio.read_pnm(path)[:, :, 0], [[1, 2]])


def test_pnm_rejects_ascii(tmp_path):
    path = tmp_path / "d.ppm"
    path.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(fileio.FormatError):
        fileio.read_pnm(path)


def test_pnm_truncated(tmp_path):
    path = tmp_path / "e.ppm"
    path.write_bytes(b"P6\n2 2\n255\n\x00\x00")
    with pytest.raises(fileio.FormatError):
        fileio.read_pnm(path)


def test_atns_layout(tmp_path):
    x = np.arange(12, dtype=np.float64).reshape(2, 3, 2)
    path = tmp_path / "t.atns"
    fileio.write_atns(path, x)
    raw = path.read_bytes()
    assert raw[:4] == b"ATNS"
    assert np.frombuffer(raw[4:16], "<u4").tolist() == [2, 3, 2]
    # planar: the whole first channel comes first
    assert np.frombuffer(raw[16:], "<f4")[:6].tolist() == x[:, :, 0].ravel().tolist()
    np.testing.assert_array_equal(fileio.read_atns(path), x)


def test_atns_float32_lossless(tmp_path, rng):
    x = rng.standard_normal((4, 4, 3)).astype(np.float32).astype(np.float64)
    fileio.write_atns(tmp_path / "f.atns", x)
    np.testing.assert_array_equal(fileio.read_atns(tmp_path / "f.atns"), x)


def test_atns_bad_magic(tmp_path):
    (tmp_path / "g.atns").write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(fileio.FormatError):
        fileio.read_atns(tmp_path / "g.atns")
