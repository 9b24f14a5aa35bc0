import numpy as np
import pytest

from dqatn.errors import CapacityError, DimensionError
from dqatn.patterns import (
    CustomProfileModel,
    HopfieldModel,
    PatternSet,
    PerceptronModel,
    PSpinModel,
    config_to_index,
    energy_table,
    enumerate_ground_states,
    generate_patterns,
    index_to_config,
)


def all_configs(n):
    return index_to_config(np.arange(2**n), n).astype(np.int64)


def perceptron_direct(patterns, sigma):
    n = len(sigma)
    m = patterns @ sigma  # = N - 2x
    return float(np.sum(np.where(-m > 0, -m, 0)) / np.sqrt(n))


def hopfield_direct(patterns, sigma):
    return float(-np.sum((patterns @ sigma) ** 2) / len(sigma))


def test_index_config_roundtrip_and_convention():
    cfg = index_to_config(np.arange(16), 4)
    assert np.array_equal(cfg[0], [1, 1, 1, 1])
    assert np.array_equal(cfg[8], [-1, 1, 1, 1])  # site 1 is the most significant bit
    assert np.array_equal(config_to_index(cfg), np.arange(16))


def test_generate_patterns_is_seeded():
    a = generate_patterns(5, 9, 3)
    b = generate_patterns(5, 9, 3)
    c = generate_patterns(5, 9, 4)
    assert np.array_equal(a.patterns, b.patterns)
    assert not np.array_equal(a.patterns, c.patterns)
    assert set(np.unique(a.patterns)) <= {-1, 1}
    assert a.seed == 3


def test_pattern_set_text_roundtrip(tmp_path):
    ps = generate_patterns(4, 7, 11)
    path = tmp_path / "p.txt"
    ps.save(path)
    back = PatternSet.load(path)
    assert np.array_equal(back.patterns, ps.patterns) and back.seed == 11
    none = PatternSet(ps.patterns, None)
    assert PatternSet.from_text(none.to_text()).seed is None


@pytest.mark.parametrize("text", ["", "2 3\n1 1 1\n", "2 3 0\n1 1 1\n", "1 3 0\n1 2 1\n", "1 3 0\n1 1\n"])
def test_pattern_set_rejects_malformed_text(text):
    with pytest.raises((ValueError, DimensionError)):
        PatternSet.from_text(text)


def test_pattern_validation():
    with pytest.raises(ValueError):
        PerceptronModel([[1, 0, 1]])
    with pytest.raises(DimensionError):
        PerceptronModel(np.ones(3))


@pytest.mark.parametrize("seed", range(4))
def test_model_energies_match_direct_formulas(seed):
    ps = generate_patterns(5, 8, seed)
    pat = ps.patterns.astype(np.int64)
    configs = all_configs(8)
    perc = PerceptronModel(ps)
    hop = HopfieldModel(ps)
    ep = perc.energy(configs)
    eh = hop.energy(configs)
    for k in range(0, 256, 17):
        assert ep[k] == pytest.approx(perceptron_direct(pat, configs[k]), abs=1e-12)
        assert eh[k] == pytest.approx(hopfield_direct(pat, configs[k]), abs=1e-12)


def test_hamming_distance_definition():
    model = PerceptronModel([[1, -1, 1, 1]])
    assert model.hamming(np.array([1, -1, 1, 1]))[0] == 0
    assert model.hamming(np.array([-1, 1, -1, -1]))[0] == 4
    assert model.hamming(np.array([-1, -1, 1, 1]))[0] == 1


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_pspin_energy_and_ground_state(p):
    n = 9
    model = PSpinModel(n, p)
    configs = all_configs(n)
    m = configs.sum(axis=1)
    direct = -n * (m / n) ** p
    assert np.allclose(model.energy(configs), direct)
    assert model.known_ground_energy == -n
    gs = enumerate_ground_states(model)
    assert gs.energy == pytest.approx(-n)
    assert gs.n_solutions == (2 if p % 2 == 0 else 1)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("cls", [PerceptronModel, HopfieldModel])
def test_enumeration_matches_brute_force(seed, cls):
    model = cls(generate_patterns(6, 11, seed))
    e = model.energy(all_configs(11))
    gs = enumerate_ground_states(model)
    assert gs.energy == pytest.approx(e.min(), abs=1e-12)
    expected = np.nonzero(np.abs(e - e.min()) < 1e-9)[0]
    assert np.array_equal(gs.indices, expected)
    assert np.array_equal(gs.configs, index_to_config(expected, 11))


def test_energy_table_matches_brute_force():
    model = PerceptronModel(generate_patterns(7, 10, 5))
    assert np.allclose(energy_table(model), model.energy(all_configs(10)), atol=1e-12)


def test_perceptron_sat_solutions_have_nonnegative_margins():
    model = PerceptronModel(generate_patterns(4, 12, 2))
    gs = enumerate_ground_states(model)
    assert gs.energy == pytest.approx(0.0)
    margins = gs.configs.astype(int) @ model.patterns.T.astype(int)
    assert np.all(margins >= 0)


def test_custom_profile_and_caps():
    model = CustomProfileModel([[1, 1, -1]], [0.0, 1.0, 2.0, 3.0])
    assert model.energy(np.array([1, 1, -1])) == 0.0
    assert model.energy(np.array([-1, -1, 1])) == 3.0
    with pytest.raises(DimensionError):
        CustomProfileModel([[1, 1]], [0.0])
    with pytest.raises(CapacityError):
        enumerate_ground_states(PSpinModel(31, 2))
    with pytest.raises(CapacityError):
        energy_table(PSpinModel(25, 2))


def test_enumeration_handles_many_solutions():
    # a single short pattern leaves more than the initial buffer of solutions
    model = PerceptronModel(np.ones((1, 13), dtype=int))
    gs = enumerate_ground_states(model)
    e = model.energy(all_configs(13))
    assert gs.n_solutions == np.count_nonzero(e == 0) > 1024
