"""
Attacking a small blob classifier
=================================

Train an MLP on synthetic blob images, then compare a sign attack with
AI-FGTM on the images it classifies correctly.
"""

import numpy as np

from aifgtm import attacks, data, metrics, model

ds = data.generate_synthetic_dataset(10, 60, 32, seed=0)
victim = model.MlpModel(ds.image_shape, 10, hidden=64, seed=1)
victim, acc = model.train(victim, ds, epochs=300, seed=1)
print(f"held-out accuracy {acc:.3f}")

X, Y = ds.split("attack")
keep = victim.predict_batch(X) == Y
X, Y = X[keep][:50], Y[keep][:50]

for name in ("MI-FGSM", "AI-FGTM", "TI-DIM", "TI-DI-AITM"):
    cfg = attacks.make_config(name)
    X_adv, traces = attacks.attack_batch(victim, X, Y, cfg, workers=4)
    pm = np.mean([metrics.mean_perturbation(a, b) for a, b in zip(X, X_adv)])
    ps = np.mean([metrics.psnr(a, b) for a, b in zip(X, X_adv)])
    rate = metrics.success_rate(victim, zip(X_adv, Y))
    loss = np.mean([t.final_loss for t in traces])
    print(f"{name:12s} success {rate:.2f}  P_m {pm:6.3f}  PSNR {ps:6.2f} dB  final loss {loss:.3f}")
