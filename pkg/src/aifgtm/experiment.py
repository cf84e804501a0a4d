"""End-to-end harness: data, victims, attacks, reports and exported images.

All randomness is derived from ``ExperimentConfig.seed``; two runs with the
same config write byte-identical CSV files.
"""

import configparser
import csv
import json
import os
import re
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import attacks, data, fileio, metrics, model
from .transforms import DimConfig, SimConfig, TimConfig


class ExperimentError(RuntimeError):
    pass


def _split_list(value):
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value if str(v).strip()]
    return [v.strip() for v in str(value).split(",") if v.strip()]


@dataclass
class ExperimentConfig:
    # dataset
    classes: int = 10
    per_class: int = 60
    image_side: int = 32
    noise: float = 16.0
    amplitude: float = 40.0
    data_dir: str = None
    # models, as "kind[:hidden]" specs
    whitebox: list = field(default_factory=lambda: ["mlp:64"])
    heldout: list = field(default_factory=lambda: ["mlp:48", "linear"])
    whitebox_checkpoints: list = field(default_factory=list)
    epochs: int = 300
    lr: float = 0.05
    momentum: float = 0.0
    min_accuracy: float = 0.95
    # attacks; None means "use the attack's conventional default"
    attacks: list = field(default_factory=lambda: ["TI-DIM", "TI-DI-AITM"])
    eps: float = 16.0
    iters: int = 10
    lam: float = 1.3
    mu: float = 1.0
    mu1: float = 1.5
    mu2: float = 1.9
    beta1: float = 0.9
    beta2: float = 0.99
    kernel: int = None
    sigma: float = None
    dim_p: float = 0.7
    dim_smin: float = 0.9
    sim_copies: int = 5
    schedule: str = None
    # run
    max_images: int = 200
    export_examples: int = 10
    workers: int = 1
    seed: int = 0
    out: str = "run"

    def __post_init__(self):
        self.whitebox = _split_list(self.whitebox)
        self.heldout = _split_list(self.heldout)
        self.attacks = _split_list(self.attacks)
        self.whitebox_checkpoints = _split_list(self.whitebox_checkpoints)
        if not (self.whitebox or self.whitebox_checkpoints):
            raise ExperimentError("config needs at least one white-box model")
        if not self.attacks:
            raise ExperimentError("config needs at least one attack")

    def attack_config(self, name):
        kw = dict(eps=self.eps, iters=self.iters, lam=self.lam, mu=self.mu, mu1=self.mu1,
                  mu2=self.mu2, beta1=self.beta1, beta2=self.beta2, seed=self.seed,
                  dim=DimConfig(self.dim_p, self.dim_smin), sim=SimConfig(self.sim_copies))
        if self.schedule is not None:
            kw["schedule"] = self.schedule
        base = attacks.make_config(name)
        k = self.kernel if self.kernel is not None else base.tim.k
        kw["tim"] = TimConfig(k, self.sigma)
        return attacks.make_config(name, **kw)

    def to_dict(self):
        return asdict(self)


_KEY_ALIASES = {"lambda": "lam", "dim-p": "dim_p", "per-class": "per_class"}


def _coerce(name, value):
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in types:
        raise ExperimentError(f"unknown config key {name!r}")
    if value is None or isinstance(value, (list, tuple)):
        return value
    if isinstance(value, str) and value.strip().lower() in ("", "none", "default"):
        return None
    t = types[name]
    try:
        if t is int:
            return int(value)
        if t is float:
            return float(value)
    except ValueError as e:
        raise ExperimentError(f"config key {name!r}: cannot parse {value!r}") from e
    return value


def config_from_mapping(mapping, base=None):
    """Apply flat key/value pairs on top of ``base`` (or the defaults)."""
    values = base.to_dict() if base is not None else {}
    for key, value in mapping.items():
        name = _KEY_ALIASES.get(key, key.replace("-", "_"))
        values[name] = _coerce(name, value)
    return ExperimentConfig(**values)


def load_config(path):
    """Read a flat INI-style file; keys may sit in any section or none."""
    parser = configparser.ConfigParser()
    with open(path) as f:
        text = f.read()
    if not re.search(r"^\s*\[", text, re.MULTILINE):
        text = "[experiment]\n" + text
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ExperimentError(f"{path}: {e}") from e
    mapping = {}
    for section in parser.sections():
        mapping.update(parser[section])
    return config_from_mapping(mapping)


def _parse_spec(spec):
    kind, _, hidden = spec.partition(":")
    return kind, int(hidden) if hidden else 64


def _slug(name):
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower()


def _train_models(cfg, dataset, specs, seed_offset, prefix):
    trained = {}
    for i, spec in enumerate(specs):
        kind, hidden = _parse_spec(spec)
        seed = cfg.seed * 1000 + seed_offset + i
        m = model.build_model(kind, dataset.image_shape, dataset.num_classes, hidden=hidden, seed=seed)
        m, acc = model.train(m, dataset, epochs=cfg.epochs, lr=cfg.lr, seed=seed, momentum=cfg.momentum)
        if acc < cfg.min_accuracy:
            raise ExperimentError(
                f"model {prefix}{i} ({spec}) reached held-out accuracy {acc:.3f} < {cfg.min_accuracy}"
            )
        trained[f"{prefix}{i}_{kind}"] = (m, acc, seed)
    return trained


def build_dataset(cfg):
    if cfg.data_dir:
        return data.load_dataset_dir(cfg.data_dir)
    return data.generate_synthetic_dataset(cfg.classes, cfg.per_class, cfg.image_side,
                                           seed=cfg.seed, noise=cfg.noise, amplitude=cfg.amplitude)


def attack_split(dataset, models, limit=None):
    """Indices of attack-split images every model classifies correctly."""
    idx = dataset.indices("attack")
    X, Y = dataset.images[idx], dataset.labels[idx]
    ok = np.ones(len(idx), dtype=bool)
    for m in models:
        ok &= m.predict_batch(X) == Y
    idx = idx[ok]
    if limit is not None:
        idx = idx[:limit]
    if len(idx) == 0:
        raise ExperimentError("attack split is empty after keeping correctly classified images")
    return idx


def write_trace_csv(path, traces, image_ids):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["image", "t", "alpha", "loss", "linf", "p_m"])
        for img, tr in zip(image_ids, traces):
            for t, a, loss, linf, pm in tr.rows:
                w.writerow([img, t] + [metrics.format_value(v) for v in (a, loss, linf, pm)])


def write_histogram_csv(path, traces):
    edges = attacks.histogram_edges()
    lo = np.concatenate([[-np.inf], edges[:-1], [edges[-1]]])
    hi = np.concatenate([[edges[0]], edges[1:], [np.inf]])
    total = np.sum([tr.histograms for tr in traces], axis=0)
    mid = np.mean([tr.mid_mass for tr in traces], axis=0)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "bin", "lo", "hi", "count", "mid_mass"])
        for t, counts in enumerate(total):
            for b, c in enumerate(counts):
                w.writerow([t, b, metrics.format_value(float(lo[b])), metrics.format_value(float(hi[b])),
                            int(c), metrics.format_value(float(mid[t]))])


def export_examples(directory, X, X_adv, final_losses, count):
    """Write the ``count`` highest- and lowest-loss examples as PPM triples.

    Each triple is clean, adversarial and the difference amplified 8x around
    mid-grey.
    """
    os.makedirs(directory, exist_ok=True)
    order = sorted(range(len(X)), key=lambda i: (-final_losses[i], i))
    picks = [("best", order[:count]), ("worst", order[::-1][:count])]
    for tag, ids in picks:
        for rank, i in enumerate(ids):
            stem = os.path.join(directory, f"{tag}_{rank:02d}")
            fileio.write_pnm(stem + "_clean.ppm", X[i])
            fileio.write_pnm(stem + "_adv.ppm", X_adv[i])
            fileio.write_pnm(stem + "_diff.ppm", np.clip(128.0 + 8.0 * (X_adv[i] - X[i]), 0, 255))


def run_experiment(cfg):
    """Train or load victims, attack, evaluate and write all artifacts.

    Returns the list of RunReports (one per attack). Files under ``cfg.out``:
    ``report.csv``, ``config.json``, ``traces/<attack>.csv``,
    ``traces/<attack>_hist.csv``, ``examples/<attack>/*.ppm`` and
    ``models/<name>/``.
    """
    out = cfg.out
    os.makedirs(os.path.join(out, "traces"), exist_ok=True)
    dataset = build_dataset(cfg)
    dataset_id = cfg.data_dir or (f"blobs-c{cfg.classes}-n{cfg.per_class}-s{cfg.image_side}"
                                  f"-seed{cfg.seed}")

    whitebox = {}
    for i, path in enumerate(cfg.whitebox_checkpoints):
        m, manifest = model.load_model(path)
        whitebox[f"wb{i}_{m.kind}"] = (m, manifest.get("accuracy"), manifest.get("seed"))
    whitebox.update(_train_models(cfg, dataset, cfg.whitebox, 1, "wb"))
    heldout = _train_models(cfg, dataset, cfg.heldout, 501, "bb")
    for name, (m, acc, seed) in {**whitebox, **heldout}.items():
        model.save_model(m, os.path.join(out, "models", name), seed=seed, accuracy=acc)

    wb_models = [m for m, _, _ in whitebox.values()]
    victim = wb_models[0] if len(wb_models) == 1 else model.EnsembleModel(wb_models)
    eval_models = {"whitebox": victim, **{name: m for name, (m, _, _) in heldout.items()}}

    idx = attack_split(dataset, wb_models + [m for m, _, _ in heldout.values()], cfg.max_images)
    X, Y = dataset.images[idx], dataset.labels[idx]
    ids = [dataset.names[i] for i in idx]

    reports = []
    for name in cfg.attacks:
        acfg = cfg.attack_config(name)
        t0 = time.time()
        X_adv, traces = attacks.attack_batch(victim, X, Y, acfg, workers=cfg.workers)
        elapsed = time.time() - t0
        slug = _slug(name)
        write_trace_csv(os.path.join(out, "traces", f"{slug}.csv"), traces, ids)
        write_histogram_csv(os.path.join(out, "traces", f"{slug}_hist.csv"), traces)
        if cfg.export_examples:
            export_examples(os.path.join(out, "examples", slug), X, X_adv,
                            [t.final_loss for t in traces], min(cfg.export_examples, len(X)))
        meta = {"config": acfg.to_dict(), "seed": cfg.seed, "images": len(X),
                "elapsed_s": elapsed, "finished": time.strftime("%Y-%m-%dT%H:%M:%S")}
        reports.append(metrics.build_report(name, dataset_id, eval_models, X, X_adv, Y, traces, meta))

    with open(os.path.join(out, "report.csv"), "w", newline="") as f:
        metrics.write_report_csv(reports, f)
    with open(os.path.join(out, "config.json"), "w") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True, default=str)
    return reports
