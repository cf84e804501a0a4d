import csv
import json
import os

import numpy as np
import pytest

from aifgtm import data, experiment, fileio, model

TINY = dict(classes=3, per_class=6, image_side=8, noise=4.0, amplitude=60.0, whitebox=["mlp:8"],
            heldout=["linear"], epochs=60, min_accuracy=0.9, attacks=["TI-DIM", "TI-DI-AITM"],
            kernel=3, max_images=4, export_examples=2)


def tiny(tmp_path, sub="run", **kw):
    return experiment.config_from_mapping({**TINY, "out": str(tmp_path / sub), **kw})


def test_defaults():
    c = experiment.ExperimentConfig()
    a = c.attack_config("TI-DI-AITM")
    assert (a.eps, a.iters, a.lam, a.mu1, a.mu2, a.beta1, a.beta2, a.tim.k) == (16, 10, 1.3, 1.5, 1.9, 0.9, 0.99, 9)
    assert c.attack_config("TI-DIM").tim.k == 15


def test_kernel_override():
    c = experiment.config_from_mapping({"kernel": "5", "schedule": "constant"})
    assert c.attack_config("TI-DI-AITM").tim.k == 5
    assert c.attack_config("TI-DI-AITM").schedule == "constant"


def test_load_config(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("eps = 8\nlambda = 2.0\nattacks = BIM, AI-FGTM\nkernel = default\n")
    c = experiment.load_config(p)
    assert c.eps == 8.0 and c.lam == 2.0 and c.attacks == ["BIM", "AI-FGTM"] and c.kernel is None


def test_load_config_sections(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[data]\nclasses = 4\n[attack]\niters = 3\n")
    c = experiment.load_config(p)
    assert c.classes == 4 and c.iters == 3


@pytest.mark.parametrize("text", ["bogus = 1\n", "eps = abc\n", "attacks = \n"])
def test_bad_config(tmp_path, text):
    p = tmp_path / "c.ini"
    p.write_text(text)
    with pytest.raises(experiment.ExperimentError):
        experiment.load_config(p)


def test_needs_model():
    with pytest.raises(experiment.ExperimentError):
        experiment.ExperimentConfig(whitebox=[])


class Wrong:
    def predict_batch(self, X):
        return np.full(len(X), -1)


def test_empty_attack_split():
    ds = data.generate_synthetic_dataset(2, 6, 8)
    with pytest.raises(experiment.ExperimentError, match="empty"):
        experiment.attack_split(ds, [Wrong()])


def test_accuracy_contract(tmp_path):
    with pytest.raises(experiment.ExperimentError, match="accuracy"):
        experiment.run_experiment(tiny(tmp_path, epochs=1, min_accuracy=1.01))


def test_one_attack_two_images(tmp_path):
    cfg = tiny(tmp_path, attacks=["AI-FGTM"], max_images=2, heldout=[])
    reps = experiment.run_experiment(cfg)
    assert len(reps) == 1 and reps[0].metadata["images"] == 2
    with open(tmp_path / "run" / "report.csv") as f:
        rows = list(csv.DictReader(f))
    assert [(r["attack"], r["model"]) for r in rows] == [("AI-FGTM", "whitebox")]


def test_artifacts(tmp_path):
    cfg = tiny(tmp_path)
    reps = experiment.run_experiment(cfg)
    out = tmp_path / "run"
    with open(out / "report.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2 * 2
    assert json.loads((out / "config.json").read_text())["kernel"] == 3
    with open(out / "traces" / "ti_di_aitm.csv") as f:
        trace = list(csv.DictReader(f))
    assert len(trace) == reps[1].metadata["images"] * 10
    with open(out / "traces" / "ti_di_aitm_hist.csv") as f:
        hist = list(csv.DictReader(f))
    assert len(hist) == 10 * 83
    n = reps[1].metadata["images"]
    assert sum(int(r["count"]) for r in hist if r["t"] == "0") == n * 8 * 8 * 3
    loaded, manifest = model.load_model(out / "models" / "wb0_mlp")
    assert manifest["kind"] == "mlp"


def test_exported_examples_in_ball(tmp_path):
    experiment.run_experiment(tiny(tmp_path))
    ex = tmp_path / "run" / "examples" / "ti_di_aitm"
    names = sorted(os.listdir(ex))
    assert len(names) == 2 * 2 * 3
    for stem in {n.rsplit("_", 1)[0] for n in names}:
        clean = fileio.read_pnm(ex / f"{stem}_clean.ppm")
        adv = fileio.read_pnm(ex / f"{stem}_adv.ppm")
        assert np.max(np.abs(adv - clean)) <= 16 + 0.5


def test_deterministic_csv(tmp_path):
    experiment.run_experiment(tiny(tmp_path, "a", workers=1))
    experiment.run_experiment(tiny(tmp_path, "b", workers=2))
    for rel in ["report.csv", "traces/ti_dim.csv", "traces/ti_di_aitm.csv", "traces/ti_di_aitm_hist.csv"]:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_data_dir_and_checkpoint(tmp_path):
    ds = data.generate_synthetic_dataset(3, 6, 8, noise=4.0, amplitude=60.0)
    data.write_dataset_dir(ds, tmp_path / "ds")
    m, acc = model.train(model.MlpModel((8, 8, 3), 3, hidden=8, seed=1), ds, epochs=60)
    model.save_model(m, tmp_path / "ck", seed=1, accuracy=acc)
    cfg = tiny(tmp_path, data_dir=str(tmp_path / "ds"), whitebox=[], whitebox_checkpoints=[str(tmp_path / "ck")])
    reps = experiment.run_experiment(cfg)
    assert reps[0].dataset == str(tmp_path / "ds")
