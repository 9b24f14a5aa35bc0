"""DMRG on the classical cost: each converged run lands on a single solution.

Because the cost is diagonal, a zero-energy MPS may in principle be any
superposition of solutions; the sweeps nonetheless settle on one
configuration, visible in the overlaps with the enumerated solutions.
"""

import numpy as np

from dqatn import PerceptronModel, dmrg_ground_state, enumerate_ground_states, generate_patterns

model = PerceptronModel(generate_patterns(12, 16, seed=3))
gs = enumerate_ground_states(model)
print(f"{gs.n_solutions} solutions")
for run in range(4):
    _, rep = dmrg_ground_state(model, chi=8, seed=run, solutions=gs.configs)
    best = int(np.argmax(rep.overlaps))
    print(f"run {run}: E = {rep.energy:.2e}, sigma = {rep.sigma_hz:.1e}, "
          f"solution #{best} with overlap {rep.overlaps[best]:.6f}, sweeps {rep.sweeps_used}")
