"""Pattern-based classical cost functions and their ground states.

Every model has the form ``H(sigma) = sum_mu f(x_mu)`` where
``x_mu = (N - xi_mu . sigma) / 2`` is the Hamming distance between the
configuration and pattern ``xi_mu`` (labels are fixed to +1). A model is
therefore fully described by its patterns and the profile vector
``f(0), ..., f(N)``.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CapacityError, DimensionError

__all__ = [
    "ENUMERATION_CAP",
    "PatternSet",
    "generate_patterns",
    "PatternModel",
    "PerceptronModel",
    "HopfieldModel",
    "PSpinModel",
    "CustomProfileModel",
    "GroundStates",
    "enumerate_ground_states",
    "energy_table",
    "index_to_config",
    "config_to_index",
]

ENUMERATION_CAP = 30


def _check_patterns(patterns):
    patterns = np.asarray(patterns)
    if patterns.ndim != 2 or patterns.shape[0] < 1 or patterns.shape[1] < 1:
        raise DimensionError("patterns must be a non-empty (N_xi, N) array")
    if not np.all(np.isin(patterns, (-1, 1))):
        raise ValueError("pattern entries must be +1 or -1")
    return patterns.astype(np.int8)


@dataclass(frozen=True)
class PatternSet:
    """Random binary patterns together with the seed that produced them.

    The text format has a header line ``"N_xi N seed"`` followed by one
    whitespace-separated row of +1/-1 entries per pattern.
    """

    patterns: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "patterns", _check_patterns(self.patterns))

    @property
    def n_patterns(self):
        return self.patterns.shape[0]

    @property
    def n_sites(self):
        return self.patterns.shape[1]

    def to_text(self):
        seed = "none" if self.seed is None else str(self.seed)
        lines = [f"{self.n_patterns} {self.n_sites} {seed}"]
        lines += [" ".join(str(int(v)) for v in row) for row in self.patterns]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty pattern file")
        head = lines[0].split()
        if len(head) != 3:
            raise ValueError("header must read 'N_xi N seed'")
        n_pat, n = int(head[0]), int(head[1])
        seed = None if head[2].lower() == "none" else int(head[2])
        rows = [[int(v) for v in ln.split()] for ln in lines[1:]]
        if len(rows) != n_pat or any(len(r) != n for r in rows):
            raise DimensionError("pattern rows do not match the header")
        return cls(np.array(rows), seed)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())


def generate_patterns(n_patterns, n_sites, seed):
    """Draw ``n_patterns`` uniform +-1 patterns of length ``n_sites``."""
    if n_patterns < 1 or n_sites < 1:
        raise ValueError("need at least one pattern and one site")
    rng = np.random.default_rng(seed)
    patterns = 2 * rng.integers(0, 2, size=(n_patterns, n_sites)) - 1
    return PatternSet(patterns, seed)


class PatternModel:
    """Base class: patterns plus a Hamming-distance profile."""

    #: analytic ground-state energy, if known without enumeration
    known_ground_energy = None

    def __init__(self, patterns):
        if isinstance(patterns, PatternSet):
            patterns = patterns.patterns
        self.patterns = _check_patterns(patterns)

    @property
    def n_sites(self):
        return self.patterns.shape[1]

    @property
    def n_patterns(self):
        return self.patterns.shape[0]

    def profile(self):
        """Vector ``f(x)`` for ``x = 0..N``."""
        raise NotImplementedError

    def hamming(self, config):
        """Hamming distances ``x_mu`` of a configuration to each pattern."""
        config = np.asarray(config)
        if config.shape[-1] != self.n_sites:
            raise DimensionError("configuration length does not match the model")
        return (self.n_sites - config @ self.patterns.T.astype(np.int64)) // 2

    def energy(self, config):
        """Classical energy of one configuration or a stack of them."""
        return self.profile()[self.hamming(config)].sum(axis=-1)

    def __repr__(self):
        return f"{type(self).__name__}(N={self.n_sites}, N_xi={self.n_patterns})"


class PerceptronModel(PatternModel):
    """Binary perceptron cost: ``f(x) = theta(2x - N) (2x - N) / sqrt(N)``, ``theta(0) = 0``."""

    def profile(self):
        n = self.n_sites
        m = 2.0 * np.arange(n + 1) - n
        return np.where(m > 0, m, 0.0) / np.sqrt(n)


class HopfieldModel(PatternModel):
    """Hopfield energy: ``f(x) = -(N - 2x)**2 / N``."""

    def profile(self):
        n = self.n_sites
        return -((n - 2.0 * np.arange(n + 1)) ** 2) / n


class PSpinModel(PatternModel):
    """Ferromagnetic p-spin model ``-N (sum_i sigma_i / N)**p`` as a single all-ones pattern."""

    def __init__(self, n_sites, p):
        if p < 1:
            raise ValueError("p must be a positive integer")
        super().__init__(np.ones((1, n_sites), dtype=int))
        self.p = int(p)

    @property
    def known_ground_energy(self):
        return -float(self.n_sites)

    def profile(self):
        n = self.n_sites
        return -float(n) ** (1 - self.p) * (n - 2.0 * np.arange(n + 1)) ** self.p

    def __repr__(self):
        return f"PSpinModel(N={self.n_sites}, p={self.p})"


class CustomProfileModel(PatternModel):
    """Arbitrary profile vector of length ``N + 1`` shared by all patterns."""

    def __init__(self, patterns, profile):
        super().__init__(patterns)
        profile = np.asarray(profile, dtype=float)
        if profile.shape != (self.n_sites + 1,):
            raise DimensionError("profile must have length N + 1")
        self._profile = profile.copy()

    def profile(self):
        return self._profile.copy()


def index_to_config(index, n_sites):
    """Spins (+1/-1) of basis index(es); site 1 is the most significant bit."""
    index = np.asarray(index, dtype=np.int64)
    shifts = np.arange(n_sites - 1, -1, -1, dtype=np.int64)
    bits = (index[..., None] >> shifts) & 1
    return (1 - 2 * bits).astype(np.int8)


def config_to_index(config):
    config = np.asarray(config)
    n = config.shape[-1]
    bits = (config == -1).astype(np.int64)
    return (bits << np.arange(n - 1, -1, -1, dtype=np.int64)).sum(axis=-1)


def _pattern_bits(model):
    return np.ascontiguousarray((model.patterns == -1).astype(np.int64))


@dataclass(frozen=True)
class GroundStates:
    """Exhaustive ground-state search result.

    Attributes
    ----------
    energy : float
        Minimum of the cost function.
    indices : ndarray
        Sorted basis indices of all minimisers.
    configs : ndarray, shape (n_solutions, N)
        The minimisers as +-1 spins.
    """

    energy: float
    indices: np.ndarray
    configs: np.ndarray

    @property
    def n_solutions(self):
        return len(self.indices)


def enumerate_ground_states(model, cap=ENUMERATION_CAP, tol=1e-9):
    """All minimisers of ``model`` by a Gray-code scan of the ``2**N`` configurations.

    Energies within ``tol`` (scaled by the profile magnitude) of the minimum
    count as degenerate.

    Raises
    ------
    CapacityError
        If ``N`` exceeds ``cap``.
    """
    n = model.n_sites
    if n > cap:
        raise CapacityError(f"enumeration is limited to N <= {cap}")
    pbits = _pattern_bits(model)
    profile = np.ascontiguousarray(model.profile(), dtype=np.float64)
    best = _kernels.gray_minimum(pbits, profile)
    thr = best + tol * max(1.0, float(np.max(np.abs(profile))) * model.n_patterns)
    buf = np.empty(1024, dtype=np.int64)
    count = _kernels.gray_collect(pbits, profile, thr, buf)
    if count > buf.shape[0]:
        buf = np.empty(count, dtype=np.int64)
        _kernels.gray_collect(pbits, profile, thr, buf)
    idx = np.sort(buf[:count])
    return GroundStates(float(best), idx, index_to_config(idx, n))


def energy_table(model, cap=24):
    """Classical energies of all basis states indexed like dense vectors."""
    if model.n_sites > cap:
        raise CapacityError(f"energy tables are limited to N <= {cap}")
    return _kernels.gray_energy_table(_pattern_bits(model), np.ascontiguousarray(model.profile(), dtype=np.float64))
