"""Operators for digitized annealing: Fourier tables, rank-1 sums and MPOs.

The key identity is the discrete Fourier expansion of any function of a
Hamming distance,

    g(x_mu) = sum_k c_k prod_i exp(i pi k (1 - xi_i sigma_i) / (N + 1)),

with ``c_k = sum_x exp(-2 pi i k x / (N + 1)) g(x) / (N + 1)``. Each term is a
product of single-site diagonal operators, i.e. a rank-1 MPO. Applied to
``g = exp(-i gamma f)`` this gives the pattern evolution operator, and
applied to ``g = f`` the cost Hamiltonian.

MPO tensors have shape ``(bond_left, 2, 2, bond_right)`` with indices
``(left, out, in, right)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DimensionError, NumericalConsistencyError
from .mps import Mps

__all__ = [
    "Mpo",
    "Rank1Sum",
    "FourierTable",
    "build_fourier_table",
    "fourier_coefficients",
    "pattern_phases",
    "hz_rank1_terms",
    "uz_rank1_sum",
    "uz_mpo",
    "ux_mpo",
    "ux_local",
    "hx_mpo",
    "apply_local",
    "diagonal_expectations",
    "operator_expectations",
    "expectation_hz",
    "variance_hz",
]


class Mpo:
    """Matrix product operator with tensors ``(bond_left, out, in, bond_right)``."""

    def __init__(self, tensors):
        tensors = [np.asarray(w, dtype=np.complex128) for w in tensors]
        for i, w in enumerate(tensors):
            if w.ndim != 4 or w.shape[1:3] != (2, 2):
                raise DimensionError(f"MPO site {i} has shape {w.shape}")
            if i > 0 and tensors[i - 1].shape[3] != w.shape[0]:
                raise DimensionError(f"MPO bond mismatch between sites {i - 1} and {i}")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[3] != 1:
            raise DimensionError("MPO boundary bonds must have dimension 1")
        self.tensors = tensors

    @property
    def n_sites(self):
        return len(self.tensors)

    @property
    def bond_dims(self):
        return [w.shape[3] for w in self.tensors[:-1]]

    def to_dense(self, cap=12):
        """Dense ``2**N x 2**N`` matrix (site 1 most significant)."""
        if self.n_sites > cap:
            raise CapacityError(f"dense MPOs are limited to {cap} sites")
        m = self.tensors[0][0]  # (out, in, r)
        for w in self.tensors[1:]:
            # m[(O), (I), r] x w[r, o, i, r'] -> [(O o), (I i), r']
            o, i_, _ = m.shape
            t = np.tensordot(m, w, axes=(2, 0))  # O, I, o, i, r'
            t = t.transpose(0, 2, 1, 3, 4)
            m = t.reshape(o * 2, i_ * 2, w.shape[3])
        return m[:, :, 0]

    def apply(self, psi):
        """Exact MPO-MPS product; bond dimensions multiply."""
        if psi.n_sites != self.n_sites:
            raise DimensionError("operator and state sizes differ")
        out = []
        for w, a in zip(self.tensors, psi.tensors):
            # w[l, o, i, r] a[x, i, y] -> [l, x, o, r, y]
            t = np.tensordot(w, a, axes=(2, 1)).transpose(0, 3, 1, 2, 4)
            l, x, o, r, y = t.shape
            out.append(t.reshape(l * x, o, r * y))
        return Mps(out)


class Rank1Sum:
    """Weighted sum of diagonal product operators.

    Term ``k`` is ``coeffs[k] * prod_i diag(phases[k, i, :])``.

    Parameters
    ----------
    coeffs : ndarray, shape (K,)
    phases : ndarray, shape (K, N, 2)
    groups : ndarray of int, shape (K,), optional
        Label of the pattern each term belongs to. Used to organise pair
        products in :func:`variance_hz`.
    """

    def __init__(self, coeffs, phases, groups=None):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        phases = np.asarray(phases, dtype=np.complex128)
        if phases.ndim != 3 or phases.shape[2] != 2 or phases.shape[0] != coeffs.shape[0]:
            raise DimensionError("phases must have shape (K, N, 2) matching coeffs")
        if groups is None:
            groups = np.zeros(coeffs.shape[0], dtype=np.int64)
        self.coeffs = coeffs
        self.phases = phases
        self.groups = np.asarray(groups, dtype=np.int64)

    @property
    def n_terms(self):
        return self.coeffs.shape[0]

    @property
    def n_sites(self):
        return self.phases.shape[1]

    def __mul__(self, other):
        """Operator product; rank-1 times rank-1 stays rank-1."""
        if not isinstance(other, Rank1Sum):
            return NotImplemented
        if other.n_sites != self.n_sites:
            raise DimensionError("operator sizes differ")
        c = (self.coeffs[:, None] * other.coeffs[None, :]).reshape(-1)
        ph = (self.phases[:, None] * other.phases[None, :]).reshape(-1, self.n_sites, 2)
        return Rank1Sum(c, ph)

    def diagonal(self, cap=20):
        """Dense diagonal of the operator (site 1 most significant)."""
        n = self.n_sites
        if n > cap:
            raise CapacityError(f"dense diagonals are limited to {cap} sites")
        out = np.zeros(2 ** n, dtype=np.complex128)
        for c, ph in zip(self.coeffs, self.phases):
            v = np.ones(1, dtype=np.complex128)
            for i in range(n):
                v = np.outer(v, ph[i]).reshape(-1)
            out += c * v
        return out

    def to_mpo(self):
        """Bond-K MPO that is diagonal in the term index; coefficients sit on site 1."""
        k = self.n_terms
        n = self.n_sites
        tensors = []
        for i in range(n):
            left = 1 if i == 0 else k
            right = 1 if i == n - 1 else k
            w = np.zeros((left, 2, 2, right), dtype=np.complex128)
            for t in range(k):
                val = self.phases[t, i] * (self.coeffs[t] if i == 0 else 1.0)
                w[0 if i == 0 else t, 0, 0, 0 if i == n - 1 else t] = val[0]
                w[0 if i == 0 else t, 1, 1, 0 if i == n - 1 else t] = val[1]
            tensors.append(w)
        return Mpo(tensors)


def fourier_coefficients(values):
    """Coefficients ``c_k`` such that ``values[x] = sum_k c_k exp(2 pi i k x / (N + 1))``.

    Works on the first axis, so a table of several columns is transformed at once.
    """
    values = np.asarray(values)
    return np.fft.fft(values, axis=0) / values.shape[0]


def pattern_phases(pattern):
    """Single-site phases ``exp(i pi k (1 - xi_i sigma) / (N + 1))`` of shape ``(N + 1, N, 2)``.

    Only mismatches between spin and pattern bit pick up a phase
    ``omega**k`` with ``omega = exp(2 pi i / (N + 1))``.
    """
    pattern = np.asarray(pattern)
    n = pattern.shape[0]
    k = np.arange(n + 1)
    omega_k = np.exp(2j * np.pi * k / (n + 1))  # (K,)
    spins = np.array([1, -1])
    mismatch = (pattern[:, None] != spins[None, :])  # (N, 2)
    return np.where(mismatch[None, :, :], omega_k[:, None, None], 1.0 + 0.0j)


@dataclass(frozen=True)
class FourierTable:
    """Fourier transform of ``exp(-i gamma_p f(x))`` for each schedule step.

    ``values[k, p - 1]`` equals
    ``sum_x exp(-2 pi i k x / (N + 1)) exp(-i gamma_p f(x)) / sqrt(N + 1)``.
    """

    values: np.ndarray
    gammas: np.ndarray
    profile: np.ndarray

    @property
    def n_sites(self):
        return self.values.shape[0] - 1

    @property
    def n_steps(self):
        return self.values.shape[1]

    def coefficients(self, p):
        """Rank-1 weights ``U_k / sqrt(N + 1)`` for step ``p`` (1-based)."""
        if not 1 <= p <= self.n_steps:
            raise IndexError("step index out of range")
        return self.values[:, p - 1] / np.sqrt(self.n_sites + 1)


def build_fourier_table(model, schedule):
    """Fourier table for every step of ``schedule`` (computed with the FFT)."""
    f = np.asarray(model.profile(), dtype=float)
    gammas = np.asarray(schedule.gammas, dtype=float)
    g = np.exp(-1j * f[:, None] * gammas[None, :])
    values = np.fft.fft(g, axis=0) / np.sqrt(f.shape[0])
    return FourierTable(values, gammas, f)


def hz_rank1_terms(model):
    """Cost Hamiltonian as ``N_xi (N + 1)`` rank-1 diagonal terms."""
    c = fourier_coefficients(np.asarray(model.profile(), dtype=float))
    coeffs, phases, groups = [], [], []
    for mu, xi in enumerate(model.patterns):
        coeffs.append(c)
        phases.append(pattern_phases(xi))
        groups.append(np.full(c.shape[0], mu))
    return Rank1Sum(np.concatenate(coeffs), np.concatenate(phases), np.concatenate(groups))


def uz_rank1_sum(pattern, table, p):
    """Evolution ``exp(-i gamma_p f(x_mu))`` for one pattern as ``N + 1`` rank-1 terms."""
    pattern = np.asarray(pattern)
    if pattern.shape[0] != table.n_sites:
        raise DimensionError("pattern length does not match the Fourier table")
    return Rank1Sum(table.coefficients(p), pattern_phases(pattern))


def uz_mpo(pattern, table, p, root_form=False):
    """Bond-(N + 1) MPO of the pattern evolution operator.

    By default each term's coefficient is attached once, on the first
    site. ``root_form=True`` instead multiplies every site by the principal
    ``N``-th root of the coefficient; both forms represent the same operator.
    """
    op = uz_rank1_sum(pattern, table, p)
    if not root_form:
        return op.to_mpo()
    n = op.n_sites
    roots = op.coeffs.astype(np.complex128) ** (1.0 / n)
    phases = op.phases * roots[:, None, None]
    return Rank1Sum(np.ones(op.n_terms), phases).to_mpo()


def ux_local(beta):
    """Single-site block ``exp(i beta sigma^x) = cos(beta) I + i sin(beta) sigma^x``."""
    c, s = np.cos(beta), np.sin(beta)
    return np.array([[c, 1j * s], [1j * s, c]], dtype=np.complex128)


def ux_mpo(beta, n_sites):
    """Bond-1 MPO of ``exp(-i beta H_x)`` with ``H_x = -sum_i sigma^x_i``."""
    u = ux_local(beta)
    return Mpo([u.reshape(1, 2, 2, 1)] * n_sites)


def hx_mpo(n_sites):
    """Bond-2 MPO of ``H_x = -sum_i sigma^x_i``."""
    eye = np.eye(2)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    w = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    w[0, :, :, 0] = eye
    w[0, :, :, 1] = -sx
    w[1, :, :, 1] = eye
    first = w[:1]
    last = w[:, :, :, 1:]
    if n_sites == 1:
        return Mpo([(-sx).reshape(1, 2, 2, 1)])
    return Mpo([first] + [w] * (n_sites - 2) + [last])


def apply_local(psi, ops):
    """Apply single-site operators (a bond-1 MPO) exactly; bonds are unchanged.

    ``ops`` is either one 2x2 matrix used on every site or a sequence of them.
    """
    ops = np.asarray(ops, dtype=np.complex128)
    if ops.ndim == 2:
        ops = np.broadcast_to(ops, (psi.n_sites, 2, 2))
    if ops.shape != (psi.n_sites, 2, 2):
        raise DimensionError("need one 2x2 operator per site")
    tensors = [np.einsum("os,asb->aob", u, a) for u, a in zip(ops, psi.tensors)]
    center = psi.canonical_center
    # a unitary on every site keeps the isometry conditions intact
    unitary = all(np.allclose(u.conj().T @ u, np.eye(2), atol=1e-13) for u in ops)
    return Mps(tensors, center if unitary else None)


def diagonal_expectations(psi, phases):
    """Per-term values ``<psi| prod_i diag(phases[k, i]) |psi>`` of shape ``(K,)``."""
    phases = np.asarray(phases, dtype=np.complex128)
    if phases.shape[1] != psi.n_sites:
        raise DimensionError("phases do not match the number of sites")
    kk = phases.shape[0]
    env = np.ones((kk, 1, 1), dtype=np.complex128)
    for i, a in enumerate(psi.tensors):
        l, _, r = a.shape
        x = (env @ a.reshape(l, 2 * r)).reshape(kk, l, 2, r)
        x *= phases[:, i, None, :, None]
        # new[k, b, b'] = sum_{a, s} conj(A[a, s, b]) x[k, a, s, b']
        env = a.reshape(l * 2, r).conj().T @ x.reshape(kk, l * 2, r)
    return env[:, 0, 0]


def operator_expectations(psi, ops):
    """Per-term values ``<psi| prod_i ops[k, i] |psi>`` for general 2x2 site operators."""
    ops = np.asarray(ops, dtype=np.complex128)
    if ops.ndim != 4 or ops.shape[1] != psi.n_sites or ops.shape[2:] != (2, 2):
        raise DimensionError("ops must have shape (K, N, 2, 2)")
    kk = ops.shape[0]
    env = np.ones((kk, 1, 1), dtype=np.complex128)
    for i, a in enumerate(psi.tensors):
        l, _, r = a.shape
        x = (env @ a.reshape(l, 2 * r)).reshape(kk, l, 2, r)
        x = np.einsum("kos,kasb->kaob", ops[:, i], x)
        env = a.reshape(l * 2, r).conj().T @ x.reshape(kk, l * 2, r)
    return env[:, 0, 0]


def _real_checked(value, what):
    if abs(value.imag) > 1e-6:
        raise NumericalConsistencyError(f"{what} has imaginary part {value.imag:.3e}")
    return float(value.real)


def _norm_sq(psi):
    from .mps import overlap

    return overlap(psi, psi).real


def expectation_hz(psi, terms):
    """``<H_z>`` for a rank-1 decomposition (the state is normalised on the fly).

    Raises
    ------
    NumericalConsistencyError
        If the result has an imaginary part above ``1e-6``.
    """
    val = np.dot(terms.coeffs, diagonal_expectations(psi, terms.phases)) / _norm_sq(psi)
    return _real_checked(val, "<H_z>")


def variance_hz(psi, terms, return_moments=False):
    """``<H_z^2> - <H_z>^2`` from pairwise products of rank-1 terms.

    Products are formed one pair of pattern groups at a time so that the
    memory stays at ``(N + 1)**2`` terms. Negative values down to ``-1e-6``
    are clamped to zero.
    """
    nrm = _norm_sq(psi)
    mean = _real_checked(np.dot(terms.coeffs, diagonal_expectations(psi, terms.phases)) / nrm, "<H_z>")
    labels = np.unique(terms.groups)
    blocks = [np.nonzero(terms.groups == g)[0] for g in labels]
    second = 0.0 + 0.0j
    for a, ia in enumerate(blocks):
        for b in range(a, len(blocks)):
            ib = blocks[b]
            c = (terms.coeffs[ia, None] * terms.coeffs[None, ib]).reshape(-1)
            ph = (terms.phases[ia, None] * terms.phases[None, ib]).reshape(-1, terms.n_sites, 2)
            val = np.dot(c, diagonal_expectations(psi, ph)) / nrm
            second += val if a == b else 2.0 * val.real
    second = _real_checked(second, "<H_z^2>")
    var = second - mean * mean
    if var < -1e-6:
        raise NumericalConsistencyError(f"negative variance {var:.3e}")
    var = max(var, 0.0)
    if return_moments:
        return var, mean, second
    return var
