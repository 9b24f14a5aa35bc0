"""Annealing a binary perceptron and reading off its solutions.

Random patterns define the cost; the exact solutions are enumerated by
brute force, then the MPS anneal is run and its success probability,
residual energy and half-chain entropy are followed along the schedule.
"""

import numpy as np

from dqatn import (
    CompressionConfig,
    ObserveConfig,
    PerceptronModel,
    Schedule,
    enumerate_ground_states,
    generate_patterns,
    run_dqa_mps,
)

N, N_XI = 16, 12
model = PerceptronModel(generate_patterns(N_XI, N, seed=3))
gs = enumerate_ground_states(model)
print(f"{gs.n_solutions} solutions with energy {gs.energy:g}")

psi, rec = run_dqa_mps(
    model,
    Schedule(200, 1.0),
    CompressionConfig(chi_max=10),
    ObserveConfig(energy=20, entropy=20, variance=None),
    solutions=gs.configs,
)
for row in rec.rows:
    if row.energy_density is not None:
        print(f"s = {row.s:4.2f}  eps = {row.energy_density:.4f}  S = {row.entropy:.3f}")
print(f"success probability {rec.final['success_probability']:.4f}")
print(f"spread of H_z per site {rec.final['sigma_hz']:.2e}")
print(f"accumulated compression error {np.sum(rec.column('dist_sq_sum')):.2e}")
