"""
Input diversity and gradient smoothing
======================================

DIM resizes and pads the evaluation input; its gradient is routed back to the
original pixels. TIM smooths the gradient with a small Gaussian kernel.
"""

import numpy as np

from aifgtm import transforms
from aifgtm.transforms import DimConfig, TimConfig

rng = np.random.default_rng(0)
x = rng.uniform(0, 255, (32, 32, 3))

x_t, route = transforms.dim_transform(x, DimConfig(p=1.0, s_min=0.9), rng)
print("drawn geometry:", route.to_dict())

# routing is the exact adjoint of the transform
g = rng.standard_normal(x.shape)
print("<T x, g>  =", np.sum(x_t * g))
print("<x, T* g> =", np.sum(x * transforms.dim_route_grad(g, route)))

# kernel sizes used by TI-DIM and TI-DI-AITM
for k in (15, 9):
    w = TimConfig(k).kernel()
    print(f"k={k}: centre weight {w[k // 2, k // 2]:.4f}, sum {w.sum():.12f}")

smooth = transforms.tim_smooth(g, TimConfig(9))
print("std before / after smoothing:", g.std(), smooth.std())
