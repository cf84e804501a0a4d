"""Fast-gradient attack engine.

Base update rules: BIM, MI-FGSM (NIM is MI-FGSM with the Nesterov flag) and
AI-FGTM. AI-FGTM accumulates un-normalized moments

    m <- m + mu1 * g,   v <- v + mu2 * g**2

with no (1 - beta) factors and no bias correction on m or v themselves (the
betas only enter the step-size schedule), then steps by
``alpha_t * tanh(lam * m / (sqrt(v) + delta))``. This is deliberately not the
textbook Adam recursion.

DI / TI / SI / NI flags compose with every iterative base; NI-TI-DI-AITM is
``make_config("NI-TI-DI-AITM")``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import tensor, transforms
from .transforms import DimConfig, SimConfig, TimConfig

BASES = ("bim", "mifgsm", "nim", "aifgtm")
SCHEDULES = ("constant", "dynamic")

HIST_RANGE = 2.0
HIST_BINS = 81


class ConfigError(ValueError):
    pass


class InvariantError(AssertionError):
    pass


@dataclass
class AttackConfig:
    base: str = "aifgtm"
    eps: float = 16.0
    iters: int = 10
    mu: float = 1.0
    mu1: float = 1.5
    mu2: float = 1.9
    beta1: float = 0.9
    beta2: float = 0.99
    lam: float = 1.3
    delta: float = 1e-8
    schedule: str = "dynamic"
    di: bool = False
    ti: bool = False
    si: bool = False
    ni: bool = False
    dim: DimConfig = field(default_factory=DimConfig)
    tim: TimConfig = field(default_factory=TimConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    seed: int = 0
    name: str = None

    def __post_init__(self):
        if self.base not in BASES:
            raise ConfigError(f"unknown base attack {self.base!r}; expected one of {BASES}")
        if self.base == "nim":
            self.base, self.ni = "mifgsm", True
        if self.ni and self.base == "bim":
            raise ConfigError("the Nesterov flag needs an accumulator (MI-FGSM or AI-FGTM)")
        if self.eps < 0:
            raise ConfigError("eps must be non-negative")
        if self.iters < 1:
            raise ConfigError("iters must be at least 1")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("beta1 and beta2 must lie in (0, 1)")
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.name is None:
            self.name = describe(self)

    def to_dict(self):
        return asdict(self)


def describe(cfg):
    base = {"bim": "BIM", "mifgsm": "MI-FGSM", "aifgtm": "AI-FGTM"}[cfg.base]
    flags = [f for f, on in (("SI", cfg.si), ("NI", cfg.ni), ("TI", cfg.ti), ("DI", cfg.di)) if on]
    return "-".join(flags + [base])


def make_config(name, **overrides):
    """Build a config from a conventional attack name.

    Accepts FGSM-family names such as ``BIM``, ``MI-FGSM``, ``NIM``, ``DIM``,
    ``TI-DIM``, ``NI-TI-DIM``, ``AI-FGTM``, ``TI-DI-AITM``, ``NI-TI-DI-AITM``
    and ``SI-NI-TI-DI-AITM``. Sign attacks default to a constant schedule and
    a 15x15 TI kernel, AI-FGTM to the dynamic schedule and a 9x9 kernel.
    Keyword overrides are applied last.
    """
    parts = name.upper().split("-")
    flags = {"si": False, "ni": False, "ti": False, "di": False}
    while parts and parts[0] in ("SI", "NI", "TI", "DI") and len(parts) > 1:
        flags[parts.pop(0).lower()] = True
    rest = "-".join(parts)
    if rest in ("AITM", "AI-FGTM"):
        base = "aifgtm"
    elif rest in ("MI-FGSM", "MIFGSM"):
        base = "mifgsm"
    elif rest == "DIM":
        base, flags["di"] = "mifgsm", True
    elif rest == "NIM":
        base, flags["ni"] = "mifgsm", True
    elif rest == "BIM":
        base = "bim"
    else:
        raise ConfigError(f"cannot parse attack name {name!r}")
    if base == "aifgtm":
        defaults = dict(schedule="dynamic", tim=TimConfig(9))
    else:
        defaults = dict(schedule="constant", tim=TimConfig(15))
    kw = dict(base=base, name=name, **flags, **defaults)
    kw.update(overrides)
    return AttackConfig(**kw)


def schedule_constant(eps, T):
    if T < 1:
        raise ConfigError("T must be at least 1")
    return [eps / T] * T


def schedule_dynamic(eps, T, beta1, beta2):
    """Increasing steps proportional to (1 - b1^(t+1)) / sqrt(1 - b2^(t+1)), summing to eps."""
    if T < 1:
        raise ConfigError("T must be at least 1")
    if not (0 < beta1 < 1 and 0 < beta2 < 1):
        raise ConfigError("beta1 and beta2 must lie in (0, 1)")
    t = np.arange(1, T + 1)
    w = (1.0 - beta1**t) / np.sqrt(1.0 - beta2**t)
    return list(eps * w / w.sum())


def step_sizes(cfg):
    if cfg.schedule == "constant":
        return schedule_constant(cfg.eps, cfg.iters)
    return schedule_dynamic(cfg.eps, cfg.iters, cfg.beta1, cfg.beta2)


def fgsm(model, x, y, eps):
    x = tensor.as_hwc(x)
    _, grad = model.loss_and_grad(x, y)
    tensor.check_finite(grad, "gradient")
    return tensor.clip_ball(x, x + eps * np.sign(grad), eps)


def tanh_step(m, v, lam, delta, alpha_t):
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("second moment has negative entries")
    return alpha_t * np.tanh(lam * np.asarray(m) / (np.sqrt(v) + delta))


def gradient_histogram(values):
    """Counts over 81 uniform bins on [-2, 2] plus an underflow and an overflow bin.

    Layout: ``[below -2, bin 0 .. bin 80, above 2]``.
    """
    values = np.ravel(values)
    inner, _ = np.histogram(values, bins=HIST_BINS, range=(-HIST_RANGE, HIST_RANGE))
    below = np.count_nonzero(values < -HIST_RANGE)
    above = np.count_nonzero(values > HIST_RANGE)
    return np.concatenate([[below], inner, [above]]).astype(np.int64)


def histogram_edges():
    return np.linspace(-HIST_RANGE, HIST_RANGE, HIST_BINS + 1)


@dataclass
class RunTrace:
    """Per-iteration record of one attack run.

    ``rows`` holds (t, alpha_t, loss, linf, p_m) after each update; ``loss`` is
    the white-box loss at the new adversarial example. ``histograms[t]`` bins
    the accumulated-gradient values that drove step t (for AI-FGTM:
    ``lam * m / (sqrt(v) + delta)``) and ``mid_mass[t]`` is the exact fraction
    of those values inside (-0.5, 0.5).
    """

    rows: list = field(default_factory=list)
    histograms: list = field(default_factory=list)
    mid_mass: list = field(default_factory=list)

    @property
    def losses(self):
        return [r[2] for r in self.rows]

    @property
    def final_loss(self):
        return self.rows[-1][2]


def _check_ball(x, x_adv, eps, t):
    upper = np.minimum(255.0, x + eps)
    lower = np.maximum(0.0, x - eps)
    if not (np.all(x_adv <= upper) and np.all(x_adv >= lower)):
        raise InvariantError(f"iteration {t}: adversarial example left the eps-ball")


def run_attack(model, x, y, cfg, base=None, rng=None, check=True):
    """Run ``cfg.iters`` iterations of the configured attack on one image.

    Returns ``(x_adv, RunTrace)``. ``rng`` drives DIM; it defaults to a
    generator seeded from ``cfg.seed``. Non-finite gradients raise
    ``FloatingPointError`` with the trace so far attached.
    """
    if base is not None and base != cfg.base:
        cfg = replace(cfg, base=base, name=None)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    x = tensor.as_hwc(x)
    alphas = step_sizes(cfg)
    x_adv = x.copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    g = np.zeros_like(x)
    n = x.size
    trace = RunTrace()

    for t, a in enumerate(alphas):
        if cfg.ni:
            if cfg.base == "aifgtm":
                x_eval = transforms.nesterov_point(x_adv, m, v, a, cfg.delta)
            else:
                x_eval = transforms.nesterov_point_momentum(x_adv, g, a, cfg.mu)
        else:
            x_eval = x_adv

        if cfg.di:
            x_eval, route = transforms.dim_transform(x_eval, cfg.dim, rng)
        if cfg.si:
            grad = transforms.sim_gradient(model, x_eval, y, cfg.sim)
        else:
            grad = model.loss_and_grad(x_eval, y)[1]
        grad = np.asarray(grad, dtype=np.float64).reshape(x.shape)
        if cfg.di:
            grad = transforms.dim_route_grad(grad, route)
        if cfg.ti:
            grad = transforms.tim_smooth(grad, cfg.tim)
        if not np.all(np.isfinite(grad)):
            err = FloatingPointError(f"non-finite gradient at iteration {t}")
            err.trace = trace
            raise err

        if cfg.base == "aifgtm":
            m = m + cfg.mu1 * grad
            v = v + cfg.mu2 * grad**2
            ratio = cfg.lam * m / (np.sqrt(v) + cfg.delta)
            step = a * np.tanh(ratio)
            hist_values = ratio
        else:
            l1 = np.abs(grad).sum()
            normed = grad / l1 if l1 > 0 else np.zeros_like(grad)
            if cfg.base == "mifgsm":
                g = cfg.mu * g + normed
                direction = g
            else:
                direction = normed
            step = a * np.sign(direction)
            # accumulator in units of the mean per-element magnitude of one normalized gradient
            hist_values = direction * n

        x_adv = tensor.clip_ball(x, x_adv + step, cfg.eps)
        if check:
            _check_ball(x, x_adv, cfg.eps, t)
        loss = model.loss(x_adv, y)
        if not np.isfinite(loss):
            err = FloatingPointError(f"non-finite loss at iteration {t}")
            err.trace = trace
            raise err
        diff = np.abs(x_adv - x)
        trace.rows.append((t, float(a), float(loss), float(diff.max()), float(diff.mean())))
        trace.histograms.append(gradient_histogram(hist_values))
        trace.mid_mass.append(float(np.mean(np.abs(hist_values) < 0.5)))

    return x_adv, trace


def image_rng(seed, index):
    return np.random.default_rng([int(seed), int(index)])


def attack_batch(model, X, Y, cfg, workers=1, check=True):
    """Attack every image of a batch independently.

    Image ``i`` draws its DIM randomness from ``image_rng(cfg.seed, i)``, so the
    result does not depend on ``workers``. Returns ``(X_adv, traces)``.
    """
    X = np.asarray(X, dtype=np.float64)

    def one(i):
        return run_attack(model, X[i], int(Y[i]), cfg, rng=image_rng(cfg.seed, i), check=check)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(len(X))))
    else:
        results = [one(i) for i in range(len(X))]
    X_adv = np.stack([r[0] for r in results]) if results else np.empty_like(X)
    return X_adv, [r[1] for r in results]
