"""Input and gradient transforms that compose with any base attack.

DIM (random resize-and-pad), TIM (Gaussian gradient smoothing), SIM
(intensity-halved copies) and the two Nesterov lookahead points.
"""

from dataclasses import asdict, dataclass

import numpy as np

from . import tensor
from .tensor import ParameterError


@dataclass(frozen=True)
class DimConfig:
    p: float = 0.7
    s_min: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError("DIM probability must lie in [0, 1]")
        if not 0.0 < self.s_min <= 1.0:
            raise ParameterError("DIM minimum scale must lie in (0, 1]")


@dataclass(frozen=True)
class TimConfig:
    k: int = 9
    sigma: float = None

    def kernel(self):
        return tensor.gaussian_kernel(self.k, self.sigma)


@dataclass(frozen=True)
class SimConfig:
    m: int = 5

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError("SIM needs at least one copy")


@dataclass(frozen=True)
class TransformRecord:
    """Geometry drawn by one :func:`dim_transform` call.

    ``applied`` is False for the identity branch. Otherwise the input of size
    (height, width) was resized to (h2, w2) and placed at (top, left).
    """

    height: int
    width: int
    applied: bool = False
    h2: int = 0
    w2: int = 0
    top: int = 0
    left: int = 0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def dim_transform(x, cfg, rng):
    """Resize to a random size and zero-pad back, with probability ``cfg.p``.

    ``rng`` is a ``numpy.random.Generator``; it is consumed the same way
    whichever branch is taken so runs stay aligned across configs.
    """
    x = tensor.as_hwc(x)
    H, W = x.shape[:2]
    u = rng.random()
    h2 = int(rng.integers(int(np.ceil(cfg.s_min * H)), H + 1))
    w2 = int(rng.integers(int(np.ceil(cfg.s_min * W)), W + 1))
    top = int(rng.integers(0, H - h2 + 1))
    left = int(rng.integers(0, W - w2 + 1))
    if u >= cfg.p:
        return x.copy(), TransformRecord(H, W)
    rec = TransformRecord(H, W, True, h2, w2, top, left)
    resized = tensor.resize_nearest(x, h2, w2)
    return tensor.pad_zero(resized, top, left, H, W), rec


def dim_route_grad(g, route):
    """Map a gradient taken at the transformed input back to the original input."""
    g = tensor.as_hwc(g)
    if g.shape[:2] != (route.height, route.width):
        raise ParameterError(
            f"route was recorded for {route.height}x{route.width}, gradient is {g.shape[:2]}"
        )
    if not route.applied:
        return g.copy()
    inner = tensor.crop(g, route.top, route.left, route.h2, route.w2)
    return tensor.route_resize_grad(inner, route.height, route.width)


def tim_smooth(g, cfg):
    return tensor.conv2d_same(g, cfg.kernel())


def sim_gradient(model, x, y, cfg):
    """Mean of the loss gradients evaluated at ``x / 2**i`` for i < cfg.m."""
    x = tensor.as_hwc(x)
    total = np.zeros_like(x)
    for i in range(cfg.m):
        total += model.loss_and_grad(x / 2.0**i, y)[1].reshape(x.shape)
    return total / cfg.m


def nesterov_point(x_adv, m, v, alpha_t, delta):
    """Lookahead ``x_adv + alpha_t * m / (sqrt(v) + delta)`` (not clipped)."""
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("second moment has negative entries")
    return np.asarray(x_adv, dtype=np.float64) + alpha_t * np.asarray(m) / (np.sqrt(v) + delta)


def nesterov_point_momentum(x_adv, g, alpha, mu):
    """Momentum lookahead ``x_adv + alpha * mu * g``."""
    return np.asarray(x_adv, dtype=np.float64) + alpha * mu * np.asarray(g, dtype=np.float64)
