"""A small experiment over a (P, dt) grid with several pattern sets.

This is what ``dqatn anneal`` does: one record per grid point and
instance, a summary with means and standard errors, and a manifest with
content hashes.
"""

import csv
import sys
import tempfile
from pathlib import Path

from dqatn import ExperimentConfig, run_experiment

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="dqatn_"))
config = ExperimentConfig(
    model="perceptron", n_sites=12, alpha=0.75, n_steps=(50,), dt=(0.4, 0.8, 1.2),
    chi=8, instances=4, seed=1, observe="energy=last,entropy=last,variance=never", out=str(out),
)
run_experiment(config)
with open(out / "summary.csv") as fh:
    for row in csv.DictReader(fh):
        print(f"dt = {float(row['dt']):.1f}: eps = {float(row['energy_density_mean']):.4f} "
              f"+- {float(row['energy_density_stderr']):.4f}, "
              f"success = {float(row['success_probability_mean']):.3f}")
print("results in", out)
