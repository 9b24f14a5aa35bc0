import json

import numpy as np
import pytest

from dqatn.circuit import (
    Circuit,
    Gate,
    circuit_apply,
    circuit_fidelity,
    exact_circuit_from_mps,
    export_circuit,
    gate_environment,
    import_circuit,
    optimal_gate,
    optimize_staircase_circuit,
)
from dqatn.errors import CapacityError, CircuitFormatError, DimensionError
from dqatn.mps import Mps, basis_state, product_state, random_mps, to_dense

SX = np.array([[0, 1], [1, 0]], dtype=complex)


def random_unitary(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def ghz(n):
    first = np.zeros((1, 2, 2))
    first[0, 0, 0] = first[0, 1, 1] = 1 / np.sqrt(2)
    mid = np.zeros((2, 2, 2))
    mid[0, 0, 0] = mid[1, 1, 1] = 1
    last = np.zeros((2, 2, 1))
    last[0, 0, 0] = last[1, 1, 0] = 1
    return Mps([first] + [mid.copy() for _ in range(n - 2)] + [last], None)


def staircase(n, d, rng):
    return Circuit(n, [[Gate((j, j + 1), random_unitary(rng, 4)) for j in range(n - 1)] for _ in range(d)])


# ---------------------------------------------------------------- application


def test_empty_circuit_and_sigma_x():
    out = circuit_apply(Circuit(3, [])).amplitudes
    assert np.array_equal(out, np.eye(8)[0])
    out = circuit_apply(Circuit(3, [[Gate((0,), SX)]])).amplitudes
    assert np.allclose(out, np.eye(8)[4])


def test_capacity_and_gate_validation():
    with pytest.raises(CapacityError):
        circuit_apply(Circuit(25, []))
    with pytest.raises(DimensionError):
        Gate((0, 2), np.eye(4))
    with pytest.raises(DimensionError):
        Gate((0, 1), np.eye(2))
    with pytest.raises(DimensionError):
        Circuit(2, [[Gate((1, 2), np.eye(4))]])


def test_two_qubit_gate_ordering_matches_kron():
    rng = np.random.default_rng(0)
    u = random_unitary(rng, 4)
    c = Circuit(3, [[Gate((1, 2), u)]])
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert np.allclose(circuit_apply(c, v).amplitudes, np.kron(np.eye(2), u) @ v)


# ---------------------------------------------------------------- exact map


def test_exact_map_product_state():
    rng = np.random.default_rng(1)
    locs = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
    psi = product_state(locs)
    c = exact_circuit_from_mps(psi)
    assert c.n_gates == 6 and all(g.n_qubits == 1 for g in c.gates)
    assert circuit_fidelity(c, psi) == pytest.approx(1.0, abs=1e-12)


def test_exact_map_ghz_is_two_qubit_staircase():
    c = exact_circuit_from_mps(ghz(7))
    assert c.n_gates == 7
    assert [g.n_qubits for g in c.gates] == [2] * 6 + [1]
    assert circuit_fidelity(c, ghz(7)) >= 1 - 1e-10


@pytest.mark.parametrize("n,chi,seed", [(8, 4, 2), (10, 3, 3), (12, 4, 4), (6, 2, 5)])
def test_exact_map_random_mps(n, chi, seed):
    psi = random_mps(n, chi, np.random.default_rng(seed))
    c = exact_circuit_from_mps(psi)
    assert c.n_gates == n
    assert c.max_unitarity_error() < 1e-10
    assert all(g.n_qubits <= int(np.ceil(np.log2(chi))) + 1 for g in c.gates)
    vec = circuit_apply(c).amplitudes
    ref = to_dense(psi)
    ref = ref / np.linalg.norm(ref)
    phase = np.vdot(vec, ref)
    phase /= abs(phase)
    assert np.allclose(vec * phase, ref, atol=1e-8)
    assert circuit_fidelity(c, psi) >= 1 - 1e-8


# ---------------------------------------------------------------- optimisation


def test_trace_bound_and_optimal_gate():
    rng = np.random.default_rng(6)
    env = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    v, tr = optimal_gate(env)
    assert np.allclose(v.conj().T @ v, np.eye(4), atol=1e-12)
    assert abs(np.trace(v @ env)) == pytest.approx(tr, abs=1e-12)
    assert tr == pytest.approx(np.linalg.svd(env, compute_uv=False).sum())
    for _ in range(50):
        assert abs(np.trace(random_unitary(rng, 4) @ env)) <= tr + 1e-12


@pytest.mark.parametrize("method", ["dense", "mps"])
def test_environment_reproduces_overlap(method):
    rng = np.random.default_rng(7)
    n = 6
    target = random_mps(n, 3, rng)
    c = staircase(n, 2, rng)
    t = to_dense(target)
    t = t / np.linalg.norm(t)
    amp = np.vdot(t, circuit_apply(c).amplitudes)
    for layer, gate in ((0, 0), (1, 3), (0, 4)):
        env = gate_environment(c, target, layer, gate, method=method)
        assert np.trace(c.layers[layer][gate].unitary @ env) == pytest.approx(amp, abs=1e-12)


def test_dense_and_mps_environments_agree():
    rng = np.random.default_rng(8)
    target = random_mps(7, 4, rng)
    c = staircase(7, 3, rng)
    for layer, gate in ((0, 2), (2, 5)):
        a = gate_environment(c, target, layer, gate, method="dense")
        b = gate_environment(c, target, layer, gate, method="mps")
        assert np.allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("method", ["dense", "mps"])
def test_update_trace_is_monotone_and_optimal(method):
    target = random_mps(6, 4, np.random.default_rng(9))
    circ, rep = optimize_staircase_circuit(target, 2, 5, seed=1, method=method, record_updates=True)
    u = np.array(rep.update_trace)
    assert len(u) == 5 * 2 * 5
    assert np.all(np.diff(u) >= -1e-10)
    assert np.all(np.diff(rep.trace) >= -1e-10)
    assert len(rep.trace) == 6
    assert circ.n_gates == 2 * 5 and circ.max_unitarity_error() < 1e-10
    assert circuit_fidelity(circ, target) == pytest.approx(rep.fidelity, abs=1e-10)
    # re-solving the last gate leaves the fidelity unchanged
    env = gate_environment(circ, target, 1, 4, method=method)
    _, tr = optimal_gate(env)
    assert tr**2 == pytest.approx(rep.fidelity, abs=1e-12)


def test_first_iteration_agrees_between_methods():
    target = random_mps(6, 3, np.random.default_rng(10))
    _, a = optimize_staircase_circuit(target, 2, 1, seed=3, method="dense", record_updates=True)
    _, b = optimize_staircase_circuit(target, 2, 1, seed=3, method="mps", record_updates=True)
    assert np.allclose(a.update_trace, b.update_trace, atol=1e-10)


def test_all_zero_target():
    target = basis_state([1] * 5)
    ident = Circuit(5, [[Gate((j, j + 1), np.eye(4)) for j in range(4)] for _ in range(2)])
    circ, rep = optimize_staircase_circuit(target, 2, 1, init=ident)
    assert rep.trace[0] == pytest.approx(1.0)
    assert rep.fidelity == pytest.approx(1.0, abs=1e-12)
    # from a perturbed start, coordinate ascent converges slowly along flat directions
    _, rep = optimize_staircase_circuit(target, 3, 2, seed=0)
    assert rep.fidelity >= 1 - 1e-9


def test_product_target_after_one_pass():
    rng = np.random.default_rng(11)
    locs = rng.standard_normal((7, 2)) + 1j * rng.standard_normal((7, 2))
    _, rep = optimize_staircase_circuit(product_state(locs), 1, 1, seed=2)
    assert rep.fidelity >= 1 - 1e-9


def test_zero_environment_is_flagged():
    # the initial circuit keeps |0...0>, orthogonal to the target
    target = basis_state([-1, -1, -1, -1])
    ident = Circuit(4, [[Gate((j, j + 1), np.eye(4)) for j in range(3)]])
    circ, rep = optimize_staircase_circuit(target, 1, 1, init=ident)
    assert rep.flagged
    assert circ.max_unitarity_error() < 1e-12


def test_invalid_arguments():
    with pytest.raises(ValueError):
        optimize_staircase_circuit(random_mps(4, 2, np.random.default_rng(0)), 0, 1)
    with pytest.raises(DimensionError):
        optimize_staircase_circuit(random_mps(4, 2, np.random.default_rng(0)), 2, 1, init=Circuit(4, []))


# ---------------------------------------------------------------- JSON


def test_json_roundtrip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(12)
    target = random_mps(6, 3, rng)
    circ, rep = optimize_staircase_circuit(target, 2, 3, seed=4)
    path = tmp_path / "c.json"
    export_circuit(circ, path)
    back = import_circuit(path)
    assert back == circ
    assert circuit_fidelity(back, target) == pytest.approx(rep.fidelity, abs=1e-12)
    exact = exact_circuit_from_mps(target)
    export_circuit(exact, path)
    assert import_circuit(path) == exact
    data = json.loads(path.read_text())
    assert set(data) == {"n_qubits", "layers"}


def _write(path, obj):
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return path


def test_json_errors_report_position(tmp_path):
    p = tmp_path / "bad.json"
    good = {"qubits": [0, 1], "unitary": np.eye(4, dtype=complex).reshape(-1).view(float).tolist()}
    with pytest.raises(CircuitFormatError, match="line 1"):
        import_circuit(_write(p, '{"n_qubits": 2, '))
    with pytest.raises(CircuitFormatError, match="n_qubits"):
        import_circuit(_write(p, {"layers": []}))
    bad = dict(good, unitary=(2 * np.eye(4, dtype=complex)).reshape(-1).view(float).tolist())
    with pytest.raises(CircuitFormatError, match=r"layers\[1\]\[0\]\.unitary") as exc:
        import_circuit(_write(p, {"n_qubits": 2, "layers": [[good], [bad]]}))
    assert exc.value.position == "layers[1][0].unitary"
    with pytest.raises(CircuitFormatError, match=r"layers\[0\]\[0\]\.qubits"):
        import_circuit(_write(p, {"n_qubits": 2, "layers": [[dict(good, qubits=[1, 2])]]}))
    with pytest.raises(CircuitFormatError, match=r"layers\[0\]\[0\]\.unitary"):
        import_circuit(_write(p, {"n_qubits": 2, "layers": [[dict(good, unitary=[0.0] * 8)]]}))
