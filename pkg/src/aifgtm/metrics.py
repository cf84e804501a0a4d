"""Evaluation of adversarial examples: success rate, mean perturbation, PSNR, SSIM."""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import DimensionError

PSNR_INF = math.inf
SSIM_WINDOW = 8
C1 = (0.01 * 255) ** 2
C2 = (0.03 * 255) ** 2

REPORT_FIELDS = ("attack", "model", "success_rate", "p_m", "psnr_db", "ssim", "loss_final")


class ReportError(ValueError):
    pass


def _pair(x, x_adv):
    x = np.asarray(x, dtype=np.float64)
    x_adv = np.asarray(x_adv, dtype=np.float64)
    if x.shape != x_adv.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {x_adv.shape}")
    return x, x_adv


def success_rate(model, pairs):
    """Fraction of ``(x_adv, y_true)`` pairs the model gets wrong."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("success_rate needs at least one example")
    X = np.stack([np.asarray(p[0], dtype=np.float64) for p in pairs])
    Y = np.array([int(p[1]) for p in pairs])
    return float(np.mean(model.predict_batch(X) != Y))


def mean_perturbation(x, x_adv):
    x, x_adv = _pair(x, x_adv)
    return float(np.mean(np.abs(x_adv - x)))


def psnr(x, x_adv):
    """PSNR in dB with peak 255; identical inputs give ``math.inf``."""
    x, x_adv = _pair(x, x_adv)
    mse = float(np.mean((x - x_adv) ** 2))
    if mse == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(255.0**2 / mse)


def _box_sums(a, k):
    # sums over every k x k window (valid positions), per channel
    c = np.cumsum(np.cumsum(a, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0), (0, 0)))
    return c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]


def ssim(x, x_adv, window=SSIM_WINDOW):
    """Mean SSIM over all ``window`` x ``window`` windows (stride 1), per channel.

    Windows are uniformly weighted and use population (1/N) statistics. The
    per-channel means are averaged.
    """
    x, x_adv = _pair(x, x_adv)
    if x.ndim == 2:
        x, x_adv = x[:, :, None], x_adv[:, :, None]
    if min(x.shape[:2]) < window:
        raise DimensionError(f"image {x.shape[:2]} smaller than the {window}x{window} window")
    n = float(window * window)
    mx = _box_sums(x, window) / n
    my = _box_sums(x_adv, window) / n
    vx = _box_sums(x * x, window) / n - mx**2
    vy = _box_sums(x_adv * x_adv, window) / n - my**2
    cxy = _box_sums(x * x_adv, window) / n - mx * my
    s = ((2 * mx * my + C1) * (2 * cxy + C2)) / ((mx**2 + my**2 + C1) * (vx + vy + C2))
    return float(np.mean(s.mean(axis=(0, 1))))


def _mean_psnr(values):
    values = list(values)
    if any(math.isinf(v) for v in values):
        return PSNR_INF
    return float(np.mean(values))


def format_value(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.6f}"
    return str(v)


@dataclass
class RunReport:
    """Metrics for one attack over one batch.

    ``success`` maps model name to success rate. ``metadata`` carries the
    config echo, seed and timings; it is not part of the CSV output.
    """

    attack: str
    dataset: str
    success: dict
    p_m: float
    psnr_db: float
    ssim: float
    loss_curve: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, r in self.success.items():
            if not 0.0 <= r <= 1.0:
                raise ReportError(f"success rate for {name} outside [0, 1]")
        if not 0.0 <= self.p_m <= 255.0:
            raise ReportError("mean perturbation outside [0, 255]")
        if not -1.0 <= self.ssim <= 1.0 + 1e-12:
            raise ReportError("SSIM outside [-1, 1]")

    @property
    def loss_final(self):
        return self.loss_curve[-1] if self.loss_curve else float("nan")

    def rows(self):
        for model_name, rate in self.success.items():
            yield {
                "attack": self.attack,
                "model": model_name,
                "success_rate": rate,
                "p_m": self.p_m,
                "psnr_db": self.psnr_db,
                "ssim": self.ssim,
                "loss_final": self.loss_final,
            }


def build_report(attack, dataset, models, X, X_adv, Y, traces, metadata=None):
    """Evaluate one attack's batch against every named model in ``models``."""
    X = np.asarray(X, dtype=np.float64)
    X_adv = np.asarray(X_adv, dtype=np.float64)
    if len(X) == 0:
        raise ReportError("cannot report on an empty batch")
    success = {name: success_rate(m, zip(X_adv, Y)) for name, m in models.items()}
    curves = np.array([t.losses for t in traces])
    return RunReport(
        attack=attack,
        dataset=dataset,
        success=success,
        p_m=float(np.mean([mean_perturbation(a, b) for a, b in zip(X, X_adv)])),
        psnr_db=_mean_psnr(psnr(a, b) for a, b in zip(X, X_adv)),
        ssim=float(np.mean([ssim(a, b) for a, b in zip(X, X_adv)])),
        loss_curve=[float(v) for v in curves.mean(axis=0)],
        metadata=dict(metadata or {}),
    )


def write_report_csv(reports, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(REPORT_FIELDS)
    for rep in reports:
        for row in rep.rows():
            w.writerow([format_value(row[k]) for k in REPORT_FIELDS])


def read_report_csv(fh):
    """Parse a report CSV back into a list of row dicts (numbers as floats)."""
    rows = []
    for r in csv.DictReader(fh):
        out = {"attack": r["attack"], "model": r["model"]}
        for k in REPORT_FIELDS[2:]:
            out[k] = float(r[k])
        rows.append(out)
    return rows


@dataclass
class ComparisonTable:
    """Attacks as rows, per-model success rates as columns, plus summary columns."""

    models: list
    rows: list  # (attack, [rate per model], mean rate, p_m, psnr_db, ssim)

    def header(self):
        return ["attack", *self.models, "mean_success", "p_m", "psnr_db", "ssim"]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for attack, rates, mean, p_m, ps, ss in self.rows:
            w.writerow([attack, *map(format_value, rates), format_value(mean),
                        format_value(p_m), format_value(ps), format_value(ss)])
        return buf.getvalue()


def compare_attacks(reports):
    """Align reports that share a dataset and model set into one table."""
    reports = list(reports)
    if not reports:
        raise ReportError("nothing to compare")
    dataset = reports[0].dataset
    models = list(reports[0].success)
    for rep in reports[1:]:
        if rep.dataset != dataset:
            raise ReportError(f"report {rep.attack!r} is on dataset {rep.dataset!r}, not {dataset!r}")
        if set(rep.success) != set(models):
            raise ReportError(f"report {rep.attack!r} evaluates a different model set")
    rows = []
    for rep in reports:
        rates = [float(rep.success[m]) for m in models]
        rows.append((rep.attack, rates, float(np.mean(rates)), rep.p_m, rep.psnr_db, rep.ssim))
    return ComparisonTable(models, rows)


def reports_from_rows(rows, dataset="report"):
    """Rebuild RunReports from parsed report-CSV rows (one report per attack)."""
    by_attack = {}
    for r in rows:
        rep = by_attack.setdefault(r["attack"], dict(success={}, row=r))
        rep["success"][r["model"]] = r["success_rate"]
    out = []
    for attack, d in by_attack.items():
        r = d["row"]
        out.append(RunReport(attack, dataset, d["success"], r["p_m"], r["psnr_db"], r["ssim"],
                             [r["loss_final"]]))
    return out


def histogram_mid_mass(counts, lo=-0.5, hi=0.5):
    """Fraction of histogram mass in bins lying entirely inside (lo, hi)."""
    from .attacks import histogram_edges

    counts = np.asarray(counts)
    edges = histogram_edges()
    inner = counts[1:-1]
    inside = (edges[:-1] >= lo) & (edges[1:] <= hi)
    return float(inner[inside].sum() / counts.sum())
