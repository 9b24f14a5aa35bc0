"""Variational compression of a weighted sum of MPS onto a bond-limited MPS.

Given ``|target> = sum_k c_k |T_k>`` the compressor minimises
``|| target - psi ||^2`` over MPS ``psi`` with bond dimension at most
``chi_max`` by one-site sweeps in mixed-canonical gauge. With the
orthogonality center at site ``i`` the optimal site tensor is

    M_i = sum_k c_k L_k[i] T_k[i] R_k[i],

where ``L_k`` and ``R_k`` are partial overlaps between ``psi`` and the
``k``-th target, and the remaining squared distance is
``||target||^2 - ||M_i||^2``. All targets are handled at once by stacking
their tensors along a leading axis.

Since one-site updates cannot enlarge bonds, a state whose bonds are
below the allowed profile ``min(chi_max, 2**i, 2**(N - i))`` is first
re-initialised by a left-to-right SVD pass over the stacked target
("zip-up"); saturated states are warm-started from the input.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .mps import Mps, canonicalize, truncate
from .tensor import lq_positive, qr_positive, truncated_svd

__all__ = [
    "CompressionConfig",
    "CompressionReport",
    "compress_sum",
    "apply_uz_and_compress",
    "bond_profile",
]


@dataclass(frozen=True)
class CompressionConfig:
    """Settings for :func:`compress_sum`.

    Parameters
    ----------
    chi_max : int
        Largest bond dimension of the result.
    n_sweeps : int
        Maximum number of full (right-left-right) sweeps.
    convergence_tol : float
        Stop when the squared distance changes by less than this amount
        between sweeps.
    renormalize : bool
        Rescale the result to unit norm.
    init_cutoff : float
        Relative squared weight below which singular values are dropped
        while building the zip-up initial guess.
    """

    chi_max: int
    n_sweeps: int = 2
    convergence_tol: float = 1e-10
    renormalize: bool = True
    init_cutoff: float = 1e-28

    def __post_init__(self):
        if self.chi_max < 1:
            raise ValueError("chi_max must be positive")
        if self.n_sweeps < 0:
            raise ValueError("n_sweeps must be non-negative")


@dataclass
class CompressionReport:
    """Diagnostics of one compression.

    Attributes
    ----------
    distance_sq : float
        Final ``||target - psi||^2`` before renormalisation.
    sweeps_used : int
    pre_norm : float
        Norm of the compressed state before renormalisation.
    history : list of float
        Squared distance after initialisation and after every sweep.
    warm_start : bool
        Whether the provided state was used as the initial guess.
    """

    distance_sq: float
    sweeps_used: int
    pre_norm: float
    history: list = field(default_factory=list)
    warm_start: bool = False


def bond_profile(n_sites, chi_max):
    """Largest meaningful bond dimension on each internal bond."""
    return [min(chi_max, 2 ** min(i, n_sites - i)) for i in range(1, n_sites)]


class _Target:
    """Per-site stacks ``(K, left, 2, right)`` of the summed states."""

    def __init__(self, stacks, coeffs, norm_sq):
        self.stacks = stacks
        self.coeffs = np.asarray(coeffs, dtype=np.complex128)
        self.norm_sq = float(norm_sq)
        self.n = len(stacks)
        self.k = self.coeffs.shape[0]

    def grow(self, left, i):
        """``Y[k, a, s, r] = sum_l left[k, a, l] T_k[i][l, s, r]``."""
        t = self.stacks[i]
        kk, l, _, r = t.shape
        return (left @ t.reshape(kk, l, 2 * r)).reshape(kk, left.shape[1], 2, r)

    def local(self, y, right):
        """Optimal center tensor from ``Y`` and the right environment ``(K, b, r)``."""
        kk, a, _, r = y.shape
        rc = (right * self.coeffs[:, None, None]).transpose(0, 2, 1).reshape(kk * r, -1)
        m = y.transpose(1, 2, 0, 3).reshape(a * 2, kk * r) @ rc
        return m.reshape(a, 2, -1)

    def shrink_right(self, right, q, i):
        """Right environment of site ``i - 1`` after fixing right-isometric ``q`` at site ``i``."""
        t = self.stacks[i]
        kk, l, _, r = t.shape
        z = t.reshape(kk, l * 2, r) @ right.transpose(0, 2, 1)  # (K, l*2, b)
        z = z.reshape(kk, l, -1)
        qq = q.reshape(q.shape[0], -1)
        return (z @ qq.conj().T).transpose(0, 2, 1)


def _stack_targets(targets):
    n = targets[0].n_sites
    if any(t.n_sites != n for t in targets):
        raise DimensionError("all targets need the same number of sites")
    stacks = []
    for i in range(n):
        lmax = max(t.tensors[i].shape[0] for t in targets)
        rmax = max(t.tensors[i].shape[2] for t in targets)
        s = np.zeros((len(targets), lmax, 2, rmax), dtype=np.complex128)
        for k, t in enumerate(targets):
            a = t.tensors[i]
            s[k, : a.shape[0], :, : a.shape[2]] = a
        stacks.append(s)
    return stacks


def _sum_norm_sq(stacks, coeffs):
    kk = coeffs.shape[0]
    env = np.ones((kk, kk, 1, 1), dtype=np.complex128)
    for t in stacks:
        env = np.einsum("kjab,kasr,jbst->kjrt", env, t.conj(), t, optimize=True)
    gram = env[:, :, 0, 0]
    return float(np.real(np.conj(coeffs) @ gram @ coeffs))


def _zip_up(target, chi_max, cutoff):
    n, kk = target.n, target.k
    left = np.ones((kk, 1, 1), dtype=np.complex128)
    lefts = [left]
    tensors = []
    for i in range(n - 1):
        y = target.grow(left, i)
        _, a, _, r = y.shape
        mat = (y * target.coeffs[:, None, None, None]).transpose(1, 2, 0, 3).reshape(a * 2, kk * r)
        svd = truncated_svd(mat, chi_max, cutoff)
        q = svd.u
        tensors.append(q.reshape(a, 2, q.shape[1]))
        left = q.conj().T @ y.reshape(kk, a * 2, r)
        lefts.append(left)
    return tensors, lefts


def _warm_start(target, init):
    c = canonicalize(init, init.n_sites - 1)
    tensors = [t.copy() for t in c.tensors]
    left = np.ones((target.k, 1, 1), dtype=np.complex128)
    lefts = [left]
    for i in range(target.n - 1):
        y = target.grow(left, i)
        a = y.shape[1]
        q = tensors[i].reshape(a * 2, -1)
        left = q.conj().T @ y.reshape(target.k, a * 2, -1)
        lefts.append(left)
    return tensors, lefts


def _sweep_engine(target, tensors, lefts, config):
    n = target.n
    ones = np.ones((target.k, 1, 1), dtype=np.complex128)
    y = target.grow(lefts[n - 1], n - 1)
    m = target.local(y, ones)
    dist = target.norm_sq - float(np.vdot(m, m).real)
    history = [dist]
    sweeps = 0
    rights = [None] * n
    rights[n - 1] = ones
    for _ in range(config.n_sweeps):
        if n == 1:
            break
        for i in range(n - 1, 0, -1):
            if i != n - 1:
                m = target.local(target.grow(lefts[i], i), rights[i])
            a, _, b = m.shape
            _, q = lq_positive(m.reshape(a, 2 * b))
            q = q.reshape(q.shape[0], 2, b)
            tensors[i] = q
            rights[i - 1] = target.shrink_right(rights[i], q, i)
        for i in range(n - 1):
            y = target.grow(lefts[i], i)
            m = target.local(y, rights[i])
            a, _, b = m.shape
            q, _ = qr_positive(m.reshape(a * 2, b))
            tensors[i] = q.reshape(a, 2, q.shape[1])
            lefts[i + 1] = q.conj().T @ y.reshape(target.k, a * 2, -1)
        m = target.local(target.grow(lefts[n - 1], n - 1), ones)
        new = target.norm_sq - float(np.vdot(m, m).real)
        sweeps += 1
        history.append(new)
        if abs(history[-2] - new) < config.convergence_tol:
            break
    tensors[n - 1] = m
    return tensors, history, sweeps


def _compress(target, config, init=None, allow_warm=True):
    n = target.n
    warm = False
    if init is not None and allow_warm:
        if max(init.bond_dims, default=1) > config.chi_max:
            init = truncate(init, config.chi_max)
        tensors, lefts = _warm_start(target, init)
        y = target.grow(lefts[n - 1], n - 1)
        m = target.local(y, np.ones((target.k, 1, 1), dtype=np.complex128))
        ov = abs(np.vdot(tensors[n - 1], m))
        scale = np.sqrt(max(target.norm_sq, 0.0)) * np.linalg.norm(tensors[n - 1])
        if ov <= 1e-14 * max(scale, 1e-300):
            warnings.warn("initial state is orthogonal to the target; using the SVD initialiser instead",
                          RuntimeWarning, stacklevel=3)
        else:
            warm = True
    if not warm:
        tensors, lefts = _zip_up(target, config.chi_max, config.init_cutoff)
        tensors.append(None)
    tensors, history, sweeps = _sweep_engine(target, tensors, lefts, config)
    pre_norm = float(np.linalg.norm(tensors[-1]))
    if config.renormalize and pre_norm > 0:
        tensors[-1] = tensors[-1] / pre_norm
    dist = max(history[-1], 0.0) if history[-1] > -1e-12 else history[-1]
    report = CompressionReport(dist, sweeps, pre_norm, history, warm)
    return Mps(tensors, n - 1), report


def compress_sum(targets, config, init=None, coeffs=None, target_norm_sq=None):
    """Compress ``sum_k coeffs[k] |targets[k]>`` to bond dimension ``config.chi_max``.

    Parameters
    ----------
    targets : sequence of Mps
    config : CompressionConfig
    init : Mps, optional
        Initial guess. Ignored (with a warning) if orthogonal to the target.
    coeffs : array_like, optional
        Weights of the targets; default all ones.
    target_norm_sq : float, optional
        Known ``||sum_k c_k T_k||^2``; computed from pairwise overlaps otherwise.

    Returns
    -------
    psi : Mps
        Left-canonical result with its center on the last site.
    report : CompressionReport
    """
    targets = list(targets)
    if not targets:
        raise ValueError("need at least one target")
    coeffs = np.ones(len(targets)) if coeffs is None else np.asarray(coeffs, dtype=np.complex128)
    if coeffs.shape != (len(targets),):
        raise DimensionError("one coefficient per target is required")
    stacks = _stack_targets(targets)
    if target_norm_sq is None:
        target_norm_sq = _sum_norm_sq(stacks, np.asarray(coeffs, dtype=np.complex128))
    target = _Target(stacks, coeffs, target_norm_sq)
    return _compress(target, config, init)


def apply_uz_and_compress(psi, op, config):
    """Apply a unitary rank-1 sum (e.g. a pattern evolution) and compress the result.

    The target norm equals ``||psi||`` because ``op`` is unitary. The input
    state serves as warm start once its bonds are saturated.
    """
    if op.n_sites != psi.n_sites:
        raise DimensionError("operator and state sizes differ")
    stacks = [a[None, :, :, :] * op.phases[:, i, None, :, None] for i, a in enumerate(psi.tensors)]
    if psi.canonical_center is not None:
        nrm_sq = float(np.vdot(psi.tensors[psi.canonical_center], psi.tensors[psi.canonical_center]).real)
    else:
        from .mps import overlap

        nrm_sq = overlap(psi, psi).real
    target = _Target(stacks, op.coeffs, nrm_sq)
    saturated = psi.bond_dims == bond_profile(psi.n_sites, config.chi_max)
    return _compress(target, config, psi, allow_warm=saturated)
