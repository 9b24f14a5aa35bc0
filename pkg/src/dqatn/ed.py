"""Exact state-vector references for the annealing protocol.

Three references are provided:

* Trotterized evolution in the full ``2**N`` space, which applies exactly
  the same gate sequence as the MPS annealer without any truncation.
* Non-Trotterized evolution ``prod_p exp(-i H(s_p) dt)`` with
  ``H(s) = s H_z + (1 - s) H_x``, using a dense eigendecomposition for
  very small systems and a Chebyshev expansion of the propagator
  otherwise.
* The p-spin model restricted to the fully symmetric ``S = N/2`` sector,
  an ``(N + 1)``-dimensional problem that scales to large ``N``.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.special
from scipy.special import gammaln

from . import _kernels
from .dqa import ObserveConfig, RunRecord, StepRow, success_probability
from .errors import CapacityError, DimensionError
from .mps import entropy_from_schmidt
from .patterns import PSpinModel, energy_table

__all__ = [
    "DENSE_CAP",
    "EIGH_MAX_SITES",
    "DenseState",
    "DenseStep",
    "plus_vector",
    "apply_mixer",
    "apply_hamiltonian",
    "propagate_exact",
    "dense_entropy",
    "dense_observables",
    "iter_dqa_dense",
    "run_dqa_dense",
    "SectorState",
    "pspin_sector_operators",
    "iter_pspin_sector",
    "pspin_sector_evolve",
    "sector_to_dense",
    "sector_entropy",
]

DENSE_CAP = 24
EIGH_MAX_SITES = 8


@dataclass
class DenseState:
    """State vector of ``n_sites`` qubits (site 1 is the most significant bit)."""

    amplitudes: np.ndarray

    @property
    def n_sites(self):
        return int(round(np.log2(self.amplitudes.size)))


@dataclass
class DenseStep:
    """State after step ``p``; ``vec`` is the live buffer and changes on the next step."""

    p: int
    s: float
    vec: np.ndarray


def _check_size(n, cap=DENSE_CAP):
    if n > cap:
        raise CapacityError(f"dense evolution is limited to N <= {cap}")


def plus_vector(n_sites):
    """``|+>^N`` as a dense vector."""
    _check_size(n_sites)
    return np.full(2 ** n_sites, 2.0 ** (-n_sites / 2), dtype=np.complex128)


def apply_mixer(vec, beta, n_sites):
    """In-place ``exp(-i beta H_x) = prod_i (cos beta + i sin beta sigma^x_i)``."""
    _kernels.rotate_all_x(vec, np.cos(beta), np.sin(beta), n_sites)
    return vec


def apply_hamiltonian(vec, table, s, n_sites, out=None):
    """``H(s) vec`` with ``H(s) = s diag(table) - (1 - s) sum_i sigma^x_i``."""
    if out is None:
        out = np.empty_like(vec)
    _kernels.annealing_matvec(vec, table, float(s), float(1.0 - s), 0.0, n_sites, out)
    return out


def _dense_h(table, s, n):
    dim = 2 ** n
    h = np.diag(s * table).astype(np.complex128)
    idx = np.arange(dim)
    for q in range(n):
        h[idx, idx ^ (1 << q)] -= 1.0 - s
    return h


def _chebyshev_terms(bt, tol=1e-16):
    kmax = int(np.ceil(bt + 10.0 * np.cbrt(max(bt, 1.0)) + 30))
    k = np.arange(kmax + 1)
    jk = scipy.special.jv(k, bt)
    big = np.nonzero(np.abs(jk) > tol)[0]
    last = int(big[-1]) + 1 if big.size else 1
    coeff = 2.0 * (-1j) ** k[:last] * jk[:last]
    coeff[0] = jk[0]
    return coeff


def propagate_exact(vec, table, s, t, n_sites, bounds=None):
    """Return ``exp(-i H(s) t) vec``.

    Uses a dense eigendecomposition for ``n_sites <= EIGH_MAX_SITES`` and a
    Chebyshev expansion of the propagator otherwise. ``bounds`` are the
    extreme values of ``table`` (computed if omitted).
    """
    if n_sites <= EIGH_MAX_SITES:
        w, v = np.linalg.eigh(_dense_h(table, s, n_sites))
        return v @ (np.exp(-1j * w * t) * (v.conj().T @ vec))
    hmin, hmax = bounds if bounds is not None else (float(table.min()), float(table.max()))
    lo = s * hmin - (1.0 - s) * n_sites
    hi = s * hmax + (1.0 - s) * n_sites
    a = 0.5 * (hi + lo)
    b = 0.5 * (hi - lo) * (1.0 + 1e-9) + 1e-12
    coeff = _chebyshev_terms(b * t)
    wz, wx, shift = s / b, (1.0 - s) / b, a / b
    t_prev = vec.copy()
    acc = coeff[0] * t_prev
    if coeff.size > 1:
        t_cur = np.empty_like(vec)
        _kernels.annealing_matvec(t_prev, table, wz, wx, shift, n_sites, t_cur)
        acc += coeff[1] * t_cur
        t_next = np.empty_like(vec)
        for c in coeff[2:]:
            _kernels.annealing_matvec(t_cur, table, wz, wx, shift, n_sites, t_next)
            t_next *= 2.0
            t_next -= t_prev
            acc += c * t_next
            t_prev, t_cur, t_next = t_cur, t_next, t_prev
    acc *= np.exp(-1j * a * t)
    return acc


def dense_entropy(vec, n_sites, cut=None):
    """Half-chain (or ``cut``) von Neumann entropy of a dense vector."""
    cut = n_sites // 2 if cut is None else cut
    if not 1 <= cut <= n_sites - 1:
        raise ValueError("cut must lie strictly inside the chain")
    s = np.linalg.svd(vec.reshape(2 ** cut, -1), compute_uv=False)
    s = s / np.sqrt(np.sum(s * s))
    return entropy_from_schmidt(s)


def dense_observables(vec, table, s, n_sites, e_gs=None, entropy=True):
    """Energy density, spreads of ``H_z`` and ``H(s)``, and entropy of a dense state.

    Returns a dict with keys ``energy_density``, ``sigma_hz``, ``sigma_h``
    and ``entropy``. ``e_gs`` defaults to the minimum of ``table``.
    """
    vec = np.asarray(vec, dtype=np.complex128)
    if vec.size != table.size or vec.size != 2 ** n_sites:
        raise DimensionError("vector and energy table sizes differ")
    e_gs = float(table.min()) if e_gs is None else e_gs
    prob = np.abs(vec) ** 2
    prob /= prob.sum()
    ez = float(prob @ table)
    ez2 = float(prob @ (table * table))
    hv = apply_hamiltonian(vec / np.sqrt(np.vdot(vec, vec).real), table, s, n_sites)
    eh = np.vdot(vec, hv).real / np.sqrt(np.vdot(vec, vec).real)
    eh2 = np.vdot(hv, hv).real
    out = {
        "energy_density": (ez - e_gs) / n_sites,
        "sigma_hz": float(np.sqrt(max(ez2 - ez * ez, 0.0))) / n_sites,
        "sigma_h": float(np.sqrt(max(eh2 - eh * eh, 0.0))) / n_sites,
        "entropy": dense_entropy(vec, n_sites) if entropy else None,
    }
    return out


def iter_dqa_dense(model, schedule, trotterized=True, table=None):
    """Yield :class:`DenseStep` objects for the full-space evolution.

    With ``trotterized=True`` step ``p`` applies ``exp(-i gamma_p H_z)`` and
    then ``exp(-i beta_p H_x)``; otherwise it applies ``exp(-i H(s_p) dt)``.
    """
    n = model.n_sites
    _check_size(n)
    table = energy_table(model) if table is None else table
    bounds = (float(table.min()), float(table.max()))
    vec = plus_vector(n)
    for p in schedule.steps:
        s = schedule.s(p)
        if trotterized:
            vec *= np.exp(-1j * schedule.gamma(p) * table)
            if p < schedule.n_steps:
                apply_mixer(vec, schedule.beta(p), n)
        else:
            vec = propagate_exact(vec, table, s, schedule.dt, n, bounds)
        yield DenseStep(p, s, vec)


def run_dqa_dense(model, schedule, trotterized=True, observe=None, solutions=None, callback=None):
    """Full-space reference run.

    Returns
    -------
    state : DenseState
    record : RunRecord
        Same columns as the MPS record; ``max_bond`` and ``dist_sq_sum``
        are empty.
    """
    observe = observe or ObserveConfig()
    n = model.n_sites
    table = energy_table(model)
    e_gs = float(table.min())
    record = RunRecord(meta={
        "backend": "dense-trotter" if trotterized else "dense-exact",
        "model": repr(model),
        "n_sites": n,
        "n_patterns": model.n_patterns,
        "n_steps": schedule.n_steps,
        "dt": schedule.dt,
        "e_gs": e_gs,
        "e_gs_is_estimate": False,
    })
    t0 = time.perf_counter()
    vec = None
    for step in iter_dqa_dense(model, schedule, trotterized, table):
        vec, p = step.vec, step.p
        row = StepRow(p, step.s)
        prob = None
        if ObserveConfig.due(observe.energy, p, schedule.n_steps) or ObserveConfig.due(observe.variance, p, schedule.n_steps):
            prob = np.abs(vec) ** 2
            prob /= prob.sum()
            ez = float(prob @ table)
            if ObserveConfig.due(observe.energy, p, schedule.n_steps):
                row.energy_density = (ez - e_gs) / n
            if ObserveConfig.due(observe.variance, p, schedule.n_steps):
                row.variance = float(np.sqrt(max(float(prob @ table ** 2) - ez * ez, 0.0))) / n
        if ObserveConfig.due(observe.entropy, p, schedule.n_steps):
            row.entropy = dense_entropy(vec, n)
        record.rows.append(row)
        if callback is not None:
            callback(step)
    last = record.rows[-1]
    record.final.update({
        "energy_density": last.energy_density,
        "entropy": last.entropy,
        "sigma_hz": last.variance,
        "wall_time": time.perf_counter() - t0,
    })
    if solutions is not None:
        record.final["success_probability"] = success_probability(vec, solutions)[0]
    return DenseState(vec.copy()), record


@dataclass
class SectorState:
    """Amplitudes on the symmetric states ``|S = N/2, M = n - N/2>``, indexed by ``n`` up spins."""

    amplitudes: np.ndarray

    @property
    def n_sites(self):
        return self.amplitudes.size - 1


def pspin_sector_operators(n_sites, p):
    """Diagonal of ``H_z`` and the matrix of ``S^x`` in the symmetric sector.

    ``H_z = -N (2M / N)**p`` and ``<M + 1|S^x|M> = sqrt(S(S+1) - M(M+1)) / 2``
    with ``S = N / 2``; ``H_x = -2 S^x``.
    """
    n = n_sites
    m = np.arange(n + 1) - n / 2.0
    hz = -n * (2.0 * m / n) ** p
    sj = n / 2.0
    off = 0.5 * np.sqrt(sj * (sj + 1) - m[:-1] * (m[:-1] + 1))
    sx = np.diag(off, 1) + np.diag(off, -1)
    return hz, sx


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _sector_plus(n):
    k = np.arange(n + 1)
    return np.exp(0.5 * _log_binom(n, k) - 0.5 * n * np.log(2.0)).astype(np.complex128)


def sector_entropy(amplitudes, n_sites, cut=None):
    """Entanglement entropy of a symmetric state across ``cut`` (default ``N // 2``).

    A Dicke state splits as ``|D_N^n> = sum_l sqrt(C(L,l) C(R,n-l) / C(N,n)) |D_L^l>|D_R^{n-l}>``,
    which gives the Schmidt matrix directly.
    """
    n = n_sites
    lsz = n // 2 if cut is None else cut
    rsz = n - lsz
    l = np.arange(lsz + 1)[:, None]
    r = np.arange(rsz + 1)[None, :]
    tot = l + r
    w = np.exp(0.5 * (_log_binom(lsz, l) + _log_binom(rsz, r) - _log_binom(n, tot)))
    mat = np.asarray(amplitudes)[tot] * w
    s = np.linalg.svd(mat, compute_uv=False)
    s = s / np.sqrt(np.sum(s * s))
    return entropy_from_schmidt(s)


def sector_to_dense(state, cap=DENSE_CAP):
    """Embed a symmetric-sector state in the full ``2**N`` space."""
    amps = np.asarray(getattr(state, "amplitudes", state))
    n = amps.size - 1
    _check_size(n, cap)
    idx = np.arange(2 ** n, dtype=np.int64)
    n_down = np.bitwise_count(idx) if hasattr(np, "bitwise_count") else np.array([bin(i).count("1") for i in idx])
    n_up = n - n_down.astype(np.int64)
    return amps[n_up] * np.exp(-0.5 * _log_binom(n, n_up))


def iter_pspin_sector(n_sites, p, schedule, trotterized=True):
    """Yield ``(p, s, amplitudes)`` for the symmetric-sector evolution."""
    hz, sx = pspin_sector_operators(n_sites, p)
    lam, vecs = np.linalg.eigh(sx)
    psi = _sector_plus(n_sites)
    for step in schedule.steps:
        s = schedule.s(step)
        if trotterized:
            psi = np.exp(-1j * schedule.gamma(step) * hz) * psi
            if step < schedule.n_steps:
                # exp(-i beta H_x) = exp(2 i beta S^x)
                psi = vecs @ (np.exp(2j * schedule.beta(step) * lam) * (vecs.conj().T @ psi))
        else:
            h = s * np.diag(hz) - 2.0 * (1.0 - s) * sx
            w, v = np.linalg.eigh(h)
            psi = v @ (np.exp(-1j * w * schedule.dt) * (v.conj().T @ psi))
        yield step, s, psi


def pspin_sector_evolve(n_sites, p, schedule, trotterized=True, observe=None):
    """p-spin annealing in the symmetric sector.

    Returns
    -------
    state : SectorState
    record : RunRecord
        Energy density relative to ``E_gs = -N``; entropy uses the Dicke
        Schmidt decomposition.
    """
    observe = observe or ObserveConfig()
    hz, _ = pspin_sector_operators(n_sites, p)
    e_gs = PSpinModel(n_sites, p).known_ground_energy
    record = RunRecord(meta={
        "backend": "sector",
        "model": repr(PSpinModel(n_sites, p)),
        "n_sites": n_sites,
        "n_patterns": 1,
        "n_steps": schedule.n_steps,
        "dt": schedule.dt,
        "trotterized": trotterized,
        "e_gs": e_gs,
        "e_gs_is_estimate": False,
    })
    t0 = time.perf_counter()
    psi = None
    for step, s, psi in iter_pspin_sector(n_sites, p, schedule, trotterized):
        row = StepRow(step, s)
        prob = np.abs(psi) ** 2
        prob /= prob.sum()
        ez = float(prob @ hz)
        if ObserveConfig.due(observe.energy, step, schedule.n_steps):
            row.energy_density = (ez - e_gs) / n_sites
        if ObserveConfig.due(observe.variance, step, schedule.n_steps):
            row.variance = float(np.sqrt(max(float(prob @ hz ** 2) - ez * ez, 0.0))) / n_sites
        if ObserveConfig.due(observe.entropy, step, schedule.n_steps):
            row.entropy = sector_entropy(psi, n_sites)
        record.rows.append(row)
    last = record.rows[-1]
    record.final.update({
        "energy_density": last.energy_density,
        "entropy": last.entropy,
        "sigma_hz": last.variance,
        "wall_time": time.perf_counter() - t0,
    })
    return SectorState(psi), record
