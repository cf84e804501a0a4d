"""
The experiment harness
======================

``run_experiment`` trains the white-box and held-out models, attacks the
attack split and writes CSV reports, traces and example images. The same
thing is available as ``aifgtm attack``.
"""

import tempfile

from aifgtm import experiment, metrics

out = tempfile.mkdtemp(prefix="aifgtm-")
cfg = experiment.ExperimentConfig(per_class=30, epochs=150, max_images=40,
                                  attacks=["TI-DIM", "TI-DI-AITM", "NI-TI-DI-AITM"], out=out)
reports = experiment.run_experiment(cfg)

print(metrics.compare_attacks(reports).to_csv())
print("artifacts in", out)
