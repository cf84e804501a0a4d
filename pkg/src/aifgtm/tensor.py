"""Pixel-space primitives on (H, W, C) float arrays.

Images live in [0, 255]. Gradients and moment accumulators share the image
shape. Every function here is pure: inputs are never modified.
"""

import numpy as np
from scipy import ndimage


class DimensionError(ValueError):
    pass


class ParameterError(ValueError):
    pass


def as_hwc(x):
    """Return ``x`` as a float64 (H, W, C) array; 2-D input gains a channel axis."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise DimensionError(f"expected an (H, W, C) array, got shape {a.shape}")
    return a


def check_finite(a, what="tensor"):
    if not np.all(np.isfinite(a)):
        raise FloatingPointError(f"{what} contains non-finite values")
    return a


def _same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def clip_ball(x_orig, x_cand, eps):
    """Per-pixel projection onto the L-inf ball of radius ``eps`` around ``x_orig``
    intersected with the valid pixel range [0, 255]."""
    x_orig = np.asarray(x_orig, dtype=np.float64)
    x_cand = np.asarray(x_cand, dtype=np.float64)
    _same_shape(x_orig, x_cand)
    if eps < 0:
        raise ParameterError("eps must be non-negative")
    lower = np.maximum(0.0, x_orig - eps)
    return np.minimum(np.minimum(255.0, x_orig + eps), np.maximum(lower, x_cand))


def gaussian_kernel(k, sigma=None):
    """Normalized k x k Gaussian kernel. ``sigma`` defaults to k / 3."""
    if int(k) != k or k < 1 or k % 2 == 0:
        raise ParameterError(f"kernel size must be an odd positive integer, got {k}")
    k = int(k)
    if sigma is None:
        sigma = k / 3.0
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    c = (k - 1) / 2.0
    r = np.arange(k) - c
    w = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * sigma**2))
    return w / w.sum()


def check_kernel(w, atol=1e-9):
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
        raise ParameterError(f"kernel must be square with odd side, got {w.shape}")
    if abs(w.sum() - 1.0) > atol:
        raise ParameterError("kernel weights must sum to 1")
    if np.any(w < 0):
        raise ParameterError("kernel weights must be non-negative")
    if not np.allclose(w, w[::-1, ::-1], atol=atol, rtol=0):
        raise ParameterError("kernel must be symmetric under 180 degree rotation")
    return w


def conv2d_same(g, w):
    """Zero-padded 'same' correlation of each channel of ``g`` with kernel ``w``."""
    g = as_hwc(g)
    w = np.asarray(w, dtype=np.float64)
    k = w.shape[0]
    if k > min(g.shape[0], g.shape[1]):
        raise ParameterError(f"kernel of size {k} does not fit a {g.shape[0]}x{g.shape[1]} image")
    out = np.empty_like(g)
    for ch in range(g.shape[2]):
        out[:, :, ch] = ndimage.correlate(g[:, :, ch], w, mode="constant", cval=0.0)
    return out


def translate(g, di, dj):
    """Shift content by ``di`` rows and ``dj`` columns; vacated cells become 0.

    ``out[i, j] = g[i - di, j - dj]`` wherever that index is valid.
    """
    g = as_hwc(g)
    h, w = g.shape[:2]
    if abs(di) >= h or abs(dj) >= w:
        raise ParameterError(f"shift ({di}, {dj}) out of range for {h}x{w}")
    out = np.zeros_like(g)
    src_r = slice(max(0, -di), h - max(0, di))
    dst_r = slice(max(0, di), h - max(0, -di))
    src_c = slice(max(0, -dj), w - max(0, dj))
    dst_c = slice(max(0, dj), w - max(0, -dj))
    out[dst_r, dst_c] = g[src_r, src_c]
    return out


def _nearest_index(n_out, n_in):
    # floor convention: output cell i samples input floor(i * n_in / n_out)
    return (np.arange(n_out) * n_in) // n_out


def resize_nearest(x, h2, w2):
    x = as_hwc(x)
    if h2 < 1 or w2 < 1:
        raise ParameterError("target size must be at least 1x1")
    ri = _nearest_index(h2, x.shape[0])
    ci = _nearest_index(w2, x.shape[1])
    return x[ri[:, None], ci[None, :]]


def route_resize_grad(g, h, w):
    """Adjoint of :func:`resize_nearest` back to an (h, w) grid (scatter-add)."""
    g = as_hwc(g)
    h2, w2, c = g.shape
    ri = _nearest_index(h2, h)
    ci = _nearest_index(w2, w)
    out = np.zeros((h, w, c))
    np.add.at(out, (ri[:, None], ci[None, :]), g)
    return out


def pad_zero(x, top, left, H, W):
    """Embed ``x`` into a zero H x W canvas with its top-left corner at (top, left)."""
    x = as_hwc(x)
    h, w, c = x.shape
    if top < 0 or left < 0 or top + h > H or left + w > W:
        raise ParameterError(f"{h}x{w} at ({top}, {left}) does not fit in {H}x{W}")
    out = np.zeros((H, W, c))
    out[top:top + h, left:left + w] = x
    return out


def crop(x, top, left, h, w):
    """Adjoint of :func:`pad_zero`."""
    x = as_hwc(x)
    if top < 0 or left < 0 or top + h > x.shape[0] or left + w > x.shape[1]:
        raise ParameterError(f"window {h}x{w} at ({top}, {left}) outside {x.shape[:2]}")
    return x[top:top + h, left:left + w].copy()
