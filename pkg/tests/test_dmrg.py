import numpy as np
import pytest

from dqatn.dmrg import dmrg_ground_state
from dqatn.mps import to_dense
from dqatn.patterns import HopfieldModel, PerceptronModel, PSpinModel, energy_table, enumerate_ground_states, generate_patterns


def test_pspin_reaches_ferromagnetic_ground_state():
    model = PSpinModel(10, 3)
    psi, rep = dmrg_ground_state(model, 4, seed=0, solutions=[[1] * 10])
    assert rep.energy == pytest.approx(-10.0, abs=1e-9)
    assert rep.sigma_hz == pytest.approx(0.0, abs=1e-6)
    assert rep.overlaps[0] == pytest.approx(1.0, abs=1e-9)
    assert rep.converged


def test_single_pattern_hopfield():
    pats = generate_patterns(1, 9, 4)
    model = HopfieldModel(pats)
    gs = enumerate_ground_states(model)
    _, rep = dmrg_ground_state(model, 3, seed=1, solutions=gs.configs)
    assert rep.energy == pytest.approx(gs.energy, abs=1e-9)
    assert rep.overlaps.sum() == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_reported_values_are_those_of_returned_state(seed):
    model = PerceptronModel(generate_patterns(6, 10, 3))
    table = energy_table(model)
    gs = enumerate_ground_states(model)
    psi, rep = dmrg_ground_state(model, 4, seed=seed, solutions=gs.configs, max_sweeps=6)
    v = to_dense(psi)
    v = v / np.linalg.norm(v)
    prob = np.abs(v) ** 2
    assert rep.energy == pytest.approx(prob @ table, abs=1e-8)
    var = max(prob @ table**2 - (prob @ table) ** 2, 0.0)
    assert rep.sigma_hz == pytest.approx(np.sqrt(var) / 10, abs=1e-6)
    assert np.allclose(rep.overlaps, prob[gs.indices], atol=1e-10)
    # the variational energy never lies below the true ground energy
    assert rep.energy >= gs.energy - 1e-9
    assert rep.sweeps_used == len(rep.energies)


def test_seed_reproducibility():
    model = PerceptronModel(generate_patterns(5, 8, 9))
    _, a = dmrg_ground_state(model, 3, seed=5, max_sweeps=4)
    _, b = dmrg_ground_state(model, 3, seed=5, max_sweeps=4)
    assert a.energies == b.energies
