import numpy as np
import pytest
import scipy.linalg

from dqatn.dqa import ObserveConfig
from dqatn.ed import (
    DenseState,
    apply_hamiltonian,
    apply_mixer,
    dense_entropy,
    dense_observables,
    iter_dqa_dense,
    iter_pspin_sector,
    plus_vector,
    propagate_exact,
    pspin_sector_evolve,
    pspin_sector_operators,
    run_dqa_dense,
    sector_entropy,
    sector_to_dense,
)
from dqatn.errors import CapacityError
from dqatn.patterns import PerceptronModel, PSpinModel, energy_table, generate_patterns
from dqatn.schedule import Schedule

SX = np.array([[0, 1], [1, 0]], dtype=complex)


def dense_h(table, s, n):
    hx = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        op = np.eye(1)
        for j in range(n):
            op = np.kron(op, SX if j == i else np.eye(2))
        hx -= op
    return s * np.diag(table) + (1 - s) * hx


def reference_trotter(model, sched):
    n = model.n_sites
    table = energy_table(model)
    hx = dense_h(np.zeros(2**n), 0.0, n)
    v = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    out = []
    for p in sched.steps:
        v = np.exp(-1j * sched.gamma(p) * table) * v
        v = scipy.linalg.expm(-1j * sched.beta(p) * hx) @ v
        out.append(v.copy())
    return out


def test_plus_vector_and_capacity():
    assert np.allclose(plus_vector(3), np.full(8, 8**-0.5))
    with pytest.raises(CapacityError):
        plus_vector(25)


def test_mixer_matches_expm():
    n = 5
    rng = np.random.default_rng(0)
    v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    hx = dense_h(np.zeros(32), 0.0, n)
    ref = scipy.linalg.expm(-1j * 0.41 * hx) @ v
    assert np.allclose(apply_mixer(v.copy(), 0.41, n), ref, atol=1e-12)


def test_hamiltonian_action():
    model = PerceptronModel(generate_patterns(4, 6, 1))
    table = energy_table(model)
    v = np.random.default_rng(2).standard_normal(64).astype(complex)
    assert np.allclose(apply_hamiltonian(v, table, 0.3, 6), dense_h(table, 0.3, 6) @ v, atol=1e-12)


@pytest.mark.parametrize("n", [6, 10])
def test_propagate_exact_matches_expm(n):
    # n = 6 uses eigh, n = 10 the Chebyshev series
    model = PerceptronModel(generate_patterns(n - 2, n, 3))
    table = energy_table(model)
    rng = np.random.default_rng(4)
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    v /= np.linalg.norm(v)
    for s, t in ((0.2, 0.7), (0.9, 2.5)):
        ref = scipy.linalg.expm(-1j * t * dense_h(table, s, n)) @ v
        out = propagate_exact(v, table, s, t, n)
        assert np.allclose(out, ref, atol=1e-11)


def test_trotterized_dense_run_matches_matrix_products():
    model = PerceptronModel(generate_patterns(5, 7, 5))
    sched = Schedule(6, 0.6)
    ref = reference_trotter(model, sched)
    for step, r in zip(iter_dqa_dense(model, sched, True), ref):
        assert np.allclose(step.vec, r, atol=1e-12)


def test_non_trotterized_run_is_product_of_propagators():
    model = PerceptronModel(generate_patterns(4, 6, 6))
    sched = Schedule(4, 0.5)
    table = energy_table(model)
    v = np.full(64, 1 / 8, dtype=complex)
    for step in iter_dqa_dense(model, sched, False):
        v = scipy.linalg.expm(-1j * sched.dt * dense_h(table, sched.s(step.p), 6)) @ v
        assert np.allclose(step.vec, v, atol=1e-11)


def test_dense_observables_and_entropy():
    model = PerceptronModel(generate_patterns(4, 6, 7))
    table = energy_table(model)
    v = np.random.default_rng(8).standard_normal(64).astype(complex)
    v /= np.linalg.norm(v)
    obs = dense_observables(v, table, 0.5, 6)
    prob = np.abs(v) ** 2
    assert obs["energy_density"] == pytest.approx((prob @ table - table.min()) / 6)
    h = dense_h(table, 0.5, 6)
    mean = np.vdot(v, h @ v).real
    var = np.vdot(h @ v, h @ v).real - mean**2
    assert obs["sigma_h"] == pytest.approx(np.sqrt(var) / 6, abs=1e-12)
    s = np.linalg.svd(v.reshape(8, 8), compute_uv=False)
    assert obs["entropy"] == pytest.approx(-np.sum(s**2 * np.log(s**2)), abs=1e-12)
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert dense_entropy(bell, 2) == pytest.approx(np.log(2))


def test_run_dqa_dense_record():
    model = PerceptronModel(generate_patterns(5, 8, 9))
    sched = Schedule(10, 0.5)
    state, rec = run_dqa_dense(model, sched, True, ObserveConfig(energy=2, entropy=None, variance=5))
    assert isinstance(state, DenseState)
    assert len(rec.rows) == 10
    assert rec.rows[0].energy_density is None and rec.rows[1].energy_density is not None
    assert rec.rows[-1].entropy is not None and rec.rows[0].entropy is None
    assert rec.final["energy_density"] == rec.rows[-1].energy_density


@pytest.mark.parametrize("p", [2, 3])
def test_sector_evolution_matches_full_space(p):
    n = 8
    model = PSpinModel(n, p)
    sched = Schedule(8, 0.7)
    dense = [s.vec.copy() for s in iter_dqa_dense(model, sched, True)]
    for (step, s, amps), ref in zip(iter_pspin_sector(n, p, sched, True), dense):
        assert np.allclose(sector_to_dense(amps), ref, atol=1e-11)
    dense_x = [s.vec.copy() for s in iter_dqa_dense(model, sched, False)]
    for (step, s, amps), ref in zip(iter_pspin_sector(n, p, sched, False), dense_x):
        assert np.allclose(sector_to_dense(amps), ref, atol=1e-10)


def test_sector_operators_and_entropy():
    hz, sx = pspin_sector_operators(6, 2)
    assert hz[0] == pytest.approx(-6) and hz[-1] == pytest.approx(-6)
    w = np.linalg.eigvalsh(sx)
    assert np.allclose(w, np.arange(-3, 4))
    rng = np.random.default_rng(10)
    amps = rng.standard_normal(11) + 1j * rng.standard_normal(11)
    amps /= np.linalg.norm(amps)
    vec = sector_to_dense(amps)
    assert np.linalg.norm(vec) == pytest.approx(1.0)
    for cut in (3, 5):
        assert sector_entropy(amps, 10, cut) == pytest.approx(dense_entropy(vec, 10, cut), abs=1e-10)


def test_sector_record_reference_energy():
    _, rec = pspin_sector_evolve(20, 2, Schedule(20, 0.5), observe=ObserveConfig(energy=1, entropy=None))
    assert rec.meta["e_gs"] == -20
    assert 0 <= rec.final["energy_density"] < 2
    assert rec.final["entropy"] is not None
