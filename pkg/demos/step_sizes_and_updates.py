"""
Step sizes and the tanh update
==============================

The constant schedule of the sign attacks next to the increasing schedule used
by AI-FGTM, and what the tanh update does to a moment ratio.
"""

import numpy as np

from aifgtm import attacks

# both schedules spend the same budget of eps=16 over ten steps
const = attacks.schedule_constant(16, 10)
dyn = attacks.schedule_dynamic(16, 10, 0.9, 0.99)
for t, (a, b) in enumerate(zip(const, dyn)):
    print(f"t={t}  constant {a:.4f}  dynamic {b:.4f}")
print("sums:", sum(const), sum(dyn))

# a sign step moves every pixel by alpha; tanh keeps small ratios small
m = np.array([-2.0, -0.3, -0.01, 0.0, 0.01, 0.3, 2.0])
v = np.full_like(m, 1.0)
print("sign step:", 1.6 * np.sign(m))
print("tanh step:", np.round(attacks.tanh_step(m, v, 1.3, 1e-8, 1.6), 4))

# a large lambda turns tanh back into sign
print("lam=1e6:  ", attacks.tanh_step(m, v, 1e6, 1e-8, 1.6))
