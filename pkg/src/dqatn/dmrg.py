"""One-site DMRG for the classical cost Hamiltonians.

The Hamiltonian is handled as its sum of rank-1 diagonal terms, so each
environment is a stack of ``K = N_xi (N + 1)`` small matrices. Because
every term is diagonal in the physical index, the one-site effective
Hamiltonian splits into two blocks (one per spin value); the local ground
state is the lower of the two block ground states.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import NumericalConsistencyError
from .mpo import expectation_hz, hz_rank1_terms, variance_hz
from .mps import Mps, amplitude, overlap, random_mps, truncate
from .tensor import lq_positive, qr_positive

__all__ = ["DmrgReport", "DENSE_LOCAL_MAX", "dmrg_ground_state"]

#: largest block dimension solved with a dense eigensolver
DENSE_LOCAL_MAX = 512


@dataclass
class DmrgReport:
    """Outcome of :func:`dmrg_ground_state`.

    Attributes
    ----------
    energy : float
        ``<H_z>`` of the final state.
    sigma_hz : float
        ``sqrt(<H_z^2> - <H_z>^2) / N``.
    overlaps : ndarray
        ``|<sigma*|psi>|^2`` for each supplied solution (empty if none).
    converged : bool
    sweeps_used : int
    energies : list of float
        Energy after every sweep.
    """

    energy: float
    sigma_hz: float
    overlaps: np.ndarray
    converged: bool
    sweeps_used: int
    energies: list = field(default_factory=list)


def _update_left(env, a, ph):
    kk = env.shape[0]
    l, _, r = a.shape
    x = (env @ a.reshape(l, 2 * r)).reshape(kk, l, 2, r) * ph[:, None, :, None]
    return a.reshape(l * 2, r).conj().T @ x.reshape(kk, l * 2, r)


def _update_right(env, a, ph):
    kk = env.shape[0]
    l, _, r = a.shape
    # x[k, a', s, b] = sum_b' A[a', s, b'] env[k, b, b']
    x = (a.reshape(l * 2, r) @ env.transpose(0, 2, 1)).reshape(kk, l, 2, r) * ph[:, None, :, None]
    # new[k, a, a'] = sum_{s, b} conj(A[a, s, b]) x[k, a', s, b]
    return (x.reshape(kk, l, 2 * r) @ a.reshape(l, 2 * r).conj().T).transpose(0, 2, 1)


class _Local:
    """Block-diagonal one-site effective Hamiltonian."""

    def __init__(self, coeffs, ph, left, right):
        self.w = coeffs[:, None] * ph  # (K, 2)
        self.left = left
        self.right = right

    def block(self, s):
        kk, a, _ = self.left.shape
        b = self.right.shape[1]
        lw = (self.w[:, s, None] * self.left.reshape(kk, a * a)).T
        h = (lw @ self.right.reshape(kk, b * b)).reshape(a, a, b, b)
        h = h.transpose(0, 2, 1, 3).reshape(a * b, a * b)
        asym = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
        scale = max(1.0, float(np.max(np.abs(h))) if h.size else 1.0)
        if asym > 1e-9 * scale:
            raise NumericalConsistencyError(f"effective Hamiltonian is not Hermitian ({asym:.2e})")
        return 0.5 * (h + h.conj().T)

    def matvec(self, s, v):
        kk, a, _ = self.left.shape
        b = self.right.shape[1]
        x = self.left @ v.reshape(a, b)
        x = x @ self.right.transpose(0, 2, 1)
        return np.tensordot(self.w[:, s], x, axes=(0, 0)).reshape(-1)

    def lowest(self, s, guess):
        a = self.left.shape[1]
        b = self.right.shape[1]
        dim = a * b
        if dim <= DENSE_LOCAL_MAX:
            w, v = scipy.linalg.eigh(self.block(s), subset_by_index=[0, 0])
            return float(w[0]), v[:, 0]
        op = scipy.sparse.linalg.LinearOperator((dim, dim), matvec=lambda x: self.matvec(s, x), dtype=np.complex128)
        v0 = guess.reshape(-1) if np.linalg.norm(guess) > 1e-12 else None
        w, v = scipy.sparse.linalg.eigsh(op, k=1, which="SA", v0=v0, tol=1e-12)
        return float(w[0]), v[:, 0]

    def solve(self, current):
        a, _, b = current.shape
        best = None
        for s in (0, 1):
            e, v = self.lowest(s, current[:, s, :])
            if best is None or e < best[0] - 1e-14 * max(1.0, abs(e)):
                best = (e, s, v)
        e, s, v = best
        m = np.zeros((a, 2, b), dtype=np.complex128)
        m[:, s, :] = v.reshape(a, b)
        return e, m


def dmrg_ground_state(model, chi, max_sweeps=20, tol=1e-12, seed=None, solutions=None, state_tol=1e-10):
    """Search the ground state of ``H_z`` with one-site DMRG at fixed bond dimension.

    Parameters
    ----------
    model : PatternModel
    chi : int
        Bond dimension of the random complex Gaussian initial state.
    max_sweeps : int
        Upper bound on full (left-right-left) sweeps.
    tol : float
        Convergence threshold on the energy change between sweeps.
    state_tol : float
        Convergence also requires ``1 - |<psi_prev|psi>|^2`` below this
        value, so that a run does not stop while it still drifts inside a
        degenerate ground space.
    seed : int, optional
    solutions : ndarray, optional
        Configurations whose overlaps with the final state are reported.

    Returns
    -------
    psi : Mps
    report : DmrgReport
    """
    terms = hz_rank1_terms(model)
    coeffs, phases = terms.coeffs, terms.phases
    kk = terms.n_terms
    n = model.n_sites
    psi = random_mps(n, chi, np.random.default_rng(seed))
    ts = [t.copy() for t in psi.tensors]
    ones = np.ones((kk, 1, 1), dtype=np.complex128)
    lefts = [None] * n
    rights = [None] * n
    lefts[0] = ones
    rights[n - 1] = ones
    for i in range(n - 1, 0, -1):
        rights[i - 1] = _update_right(rights[i], ts[i], phases[:, i])
    energies = []
    converged = False
    sweeps = 0
    energy = None
    prev = None
    for _ in range(max_sweeps):
        for i in range(n - 1):
            energy, m = _Local(coeffs, phases[:, i], lefts[i], rights[i]).solve(ts[i])
            a, _, b = m.shape
            q, r = qr_positive(m.reshape(a * 2, b))
            ts[i] = q.reshape(a, 2, q.shape[1])
            ts[i + 1] = np.tensordot(r, ts[i + 1], axes=(1, 0))
            lefts[i + 1] = _update_left(lefts[i], ts[i], phases[:, i])
        for i in range(n - 1, 0, -1):
            energy, m = _Local(coeffs, phases[:, i], lefts[i], rights[i]).solve(ts[i])
            a, _, b = m.shape
            l, q = lq_positive(m.reshape(a, 2 * b))
            ts[i] = q.reshape(q.shape[0], 2, b)
            ts[i - 1] = np.tensordot(ts[i - 1], l, axes=(2, 0))
            rights[i - 1] = _update_right(rights[i], ts[i], phases[:, i])
        sweeps += 1
        energies.append(energy)
        cur = Mps([t.copy() for t in ts], 0)
        drift = 1.0
        if prev is not None:
            nrm = overlap(cur, cur).real * overlap(prev, prev).real
            drift = 1.0 - abs(overlap(prev, cur)) ** 2 / nrm
        prev = cur
        if len(energies) > 1 and abs(energies[-2] - energies[-1]) < tol * max(1.0, abs(energy)) and drift < state_tol:
            converged = True
            break
    # the final center (site 0) still holds the last local solution
    energy, m = _Local(coeffs, phases[:, 0], lefts[0], rights[0]).solve(ts[0])
    ts[0] = m
    psi = Mps(ts, 0)
    # bond directions with zero weight carry no information; dropping them
    # keeps the pairwise variance evaluation cheap
    slim = truncate(psi, cutoff=1e-28, normalize=True)
    e = expectation_hz(slim, terms)
    sigma = float(np.sqrt(variance_hz(slim, terms))) / n
    if solutions is not None:
        sol = np.atleast_2d(np.asarray(solutions))
        overlaps = np.array([abs(amplitude(slim, c)) ** 2 for c in sol])
    else:
        overlaps = np.zeros(0)
    return psi, DmrgReport(e, sigma, overlaps, converged, sweeps, energies)
