"""Binary image and tensor files.

* PPM (P6) / PGM (P5), 8-bit, maxval 255.
* ATNS: ``b"ATNS"`` + little-endian u32 H, W, C, then H*W*C little-endian
  float32 values stored planar (channel-major, each plane row-major).
"""

import struct

import numpy as np

ATNS_MAGIC = b"ATNS"


class FormatError(ValueError):
    pass


def _read_token(f):
    tok = b""
    while True:
        ch = f.read(1)
        if not ch:
            break
        if ch == b"#":
            f.readline()
            if tok:
                break
            continue
        if ch.isspace():
            if tok:
                break
            continue
        tok += ch
    if not tok:
        raise FormatError("unexpected end of header")
    return tok


def read_pnm(path):
    """Read a P5/P6 file into a float64 (H, W, C) array."""
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic not in (b"P5", b"P6"):
            raise FormatError(f"{path}: not a binary PGM/PPM (magic {magic!r})")
        try:
            width, height, maxval = (int(_read_token(f)) for _ in range(3))
        except ValueError as e:
            raise FormatError(f"{path}: bad header") from e
        if maxval != 255:
            raise FormatError(f"{path}: only maxval 255 is supported, got {maxval}")
        c = 3 if magic == b"P6" else 1
        buf = f.read(width * height * c)
    if len(buf) != width * height * c:
        raise FormatError(f"{path}: truncated pixel data")
    img = np.frombuffer(buf, dtype=np.uint8).reshape(height, width, c)
    return img.astype(np.float64)


def quantize(x):
    return np.clip(np.rint(np.asarray(x, dtype=np.float64)), 0, 255).astype(np.uint8)


def write_pnm(path, x):
    """Write an (H, W, 1|3) array as PGM/PPM, rounding to the nearest integer."""
    a = np.asarray(x)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise FormatError(f"cannot write shape {a.shape} as PGM/PPM")
    magic = b"P6" if a.shape[2] == 3 else b"P5"
    h, w = a.shape[:2]
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n255\n" % (w, h))
        f.write(quantize(a).tobytes())


def write_atns(path, x):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None, None]
    elif a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise FormatError(f"ATNS holds at most 3 axes, got shape {a.shape}")
    h, w, c = a.shape
    planar = np.ascontiguousarray(np.transpose(a, (2, 0, 1)), dtype="<f4")
    with open(path, "wb") as f:
        f.write(ATNS_MAGIC + struct.pack("<III", h, w, c))
        f.write(planar.tobytes())


def read_atns(path):
    """Read an ATNS file as a float64 (H, W, C) array."""
    with open(path, "rb") as f:
        head = f.read(16)
        if len(head) != 16 or head[:4] != ATNS_MAGIC:
            raise FormatError(f"{path}: not an ATNS file")
        h, w, c = struct.unpack("<III", head[4:])
        buf = f.read()
    n = h * w * c
    if len(buf) != 4 * n:
        raise FormatError(f"{path}: expected {4 * n} data bytes, found {len(buf)}")
    planar = np.frombuffer(buf, dtype="<f4").reshape(c, h, w)
    return np.transpose(planar, (1, 2, 0)).astype(np.float64)
