"""Compiling an annealed MPS into a quantum circuit.

The exact map turns every site tensor into a multi-qubit unitary. The
staircase optimizer instead fixes D layers of two-qubit gates and improves
them one at a time from their environments.
"""

import numpy as np

from dqatn import (
    CompressionConfig,
    ObserveConfig,
    PerceptronModel,
    Schedule,
    circuit_apply,
    circuit_fidelity,
    enumerate_ground_states,
    exact_circuit_from_mps,
    generate_patterns,
    optimize_staircase_circuit,
    run_dqa_mps,
    success_probability,
)

model = PerceptronModel(generate_patterns(9, 12, seed=5))
gs = enumerate_ground_states(model)
psi, rec = run_dqa_mps(model, Schedule(100, 1.0), CompressionConfig(8), ObserveConfig(energy=None), solutions=gs.configs)
print(f"MPS: success probability {rec.final['success_probability']:.4f}, max bond {rec.final['max_bond']}")

exact = exact_circuit_from_mps(psi)
print(f"exact map: {exact.n_gates} gates, sizes {[g.n_qubits for g in exact.gates]}, "
      f"fidelity {circuit_fidelity(exact, psi):.12f}")

for depth in (1, 2, 4):
    circ, rep = optimize_staircase_circuit(psi, depth, 200, seed=0)
    vec = circuit_apply(circ).amplitudes
    succ = success_probability(vec, gs.configs)[0]
    print(f"D = {depth}: F = {rep.fidelity:.4f} (start {rep.trace[0]:.2e}), "
          f"circuit success probability {succ:.4f}, {circ.n_gates} gates")
print("fidelity trace of the last run:", np.round(rep.trace[::40], 4))
