"""Digitized quantum annealing with bond-limited matrix product states.

One annealing step ``p`` applies, in order, the pattern evolutions
``exp(-i gamma_p f(x_mu))`` for ``mu = 1..N_xi`` (each followed by a
variational compression back to ``chi_max``) and then the exact
single-site mixer ``exp(-i beta_p H_x)``. Because ``beta_P = 0`` the last
mixer is the identity and is skipped.
"""

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .compress import CompressionConfig, apply_uz_and_compress
from .errors import DimensionError, RunAborted
from .mpo import (
    apply_local,
    build_fourier_table,
    expectation_hz,
    hz_rank1_terms,
    operator_expectations,
    ux_local,
    uz_rank1_sum,
    variance_hz,
)
from .mps import Mps, amplitude, half_chain_entropy, overlap, overlap_dense, plus_state
from .patterns import ENUMERATION_CAP, config_to_index, enumerate_ground_states

__all__ = [
    "ObserveConfig",
    "StepRow",
    "RunRecord",
    "RECORD_COLUMNS",
    "reference_ground_energy",
    "energy_density",
    "sigma_hz",
    "variance_full_h",
    "success_probability",
    "fidelity",
    "MpsStep",
    "iter_dqa_mps",
    "run_dqa_mps",
]

RECORD_COLUMNS = ("p", "s", "energy_density", "variance", "entropy", "max_bond", "dist_sq_sum")


@dataclass(frozen=True)
class ObserveConfig:
    """Which observables to record and how often.

    Each stride is ``0`` (never), ``None`` (last step only) or a positive
    ``k`` (every ``k`` steps and at the last step). The ``variance`` column
    holds the per-site spread ``sqrt(<H_z^2> - <H_z>^2) / N``; its cost grows
    as ``N_xi**2 N**3 chi**3`` (about 15 s at N=21, N_xi=17, chi=10), so
    large runs usually set ``variance=0``.
    """

    energy: int | None = 1
    entropy: int | None = None
    variance: int | None = None

    @staticmethod
    def due(stride, p, n_steps):
        if stride == 0:
            return False
        if p == n_steps:
            return True
        return stride is not None and p % stride == 0


@dataclass
class StepRow:
    p: int
    s: float
    energy_density: float | None = None
    variance: float | None = None
    entropy: float | None = None
    max_bond: int | None = None
    dist_sq_sum: float | None = None


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _parse(v, kind):
    if v == "":
        return None
    return kind(v)


@dataclass
class RunRecord:
    """Per-step observables of one annealing run plus a final summary.

    Attributes
    ----------
    rows : list of StepRow
    meta : dict
        Run description (backend, model, schedule, seeds, ...).
    final : dict
        Final-state quantities such as ``energy_density``,
        ``success_probability`` and ``wall_time``.
    """

    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    final: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows], dtype=float)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RECORD_COLUMNS)
            for r in self.rows:
                w.writerow([_fmt(getattr(r, c)) for c in RECORD_COLUMNS])

    @classmethod
    def read_csv(cls, path):
        kinds = (int, float, float, float, float, int, float)
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != RECORD_COLUMNS:
                raise ValueError(f"unexpected columns {header}")
            for line in reader:
                rows.append(StepRow(*[_parse(v, k) for v, k in zip(line, kinds)]))
        return cls(rows)

    def summary(self):
        return {"meta": self.meta, "final": self.final}

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def reference_ground_energy(model, cap=ENUMERATION_CAP):
    """Exact ground energy (analytic or enumerated), or ``None`` beyond ``cap``."""
    if model.known_ground_energy is not None:
        return float(model.known_ground_energy)
    if model.n_sites > cap:
        return None
    return enumerate_ground_states(model, cap=cap).energy


def energy_density(psi, terms, e_gs, n_sites):
    """``(<H_z> - E_gs) / N``; with ``e_gs=None`` the estimate ``<H_z> / N``."""
    e = expectation_hz(psi, terms)
    return (e - (0.0 if e_gs is None else e_gs)) / n_sites


def sigma_hz(psi, terms, n_sites):
    """Per-site spread ``sqrt(<H_z^2> - <H_z>^2) / N``."""
    return float(np.sqrt(variance_hz(psi, terms))) / n_sites


def variance_full_h(psi, model, s):
    """Per-site spread of ``H(s) = s H_z + (1 - s) H_x`` with ``H_x = -sum_i sigma^x_i``.

    Returns ``sqrt(<H(s)^2> - <H(s)>^2) / N``, assembled from rank-1 terms.
    """
    n = psi.n_sites
    terms = hz_rank1_terms(model)
    _, mean_z, second_z = variance_hz(psi, terms, return_moments=True)
    nrm = overlap(psi, psi).real
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
    eye = np.eye(2, dtype=np.complex128)
    single = np.broadcast_to(eye, (n, n, 2, 2)).copy()
    single[np.arange(n), np.arange(n)] = sx
    mean_x = -np.sum(operator_expectations(psi, single)).real / nrm
    iu, ju = np.triu_indices(n, 1)
    pairs = np.broadcast_to(eye, (len(iu), n, 2, 2)).copy()
    pairs[np.arange(len(iu)), iu] = sx
    pairs[np.arange(len(iu)), ju] = sx
    second_x = n + 2.0 * np.sum(operator_expectations(psi, pairs)).real / nrm if len(iu) else float(n)
    # <H_x H_z> = -sum_i sum_t c_t <sigma^x_i D_t>
    diag = np.zeros((terms.n_terms, n, 2, 2), dtype=np.complex128)
    diag[:, :, 0, 0] = terms.phases[:, :, 0]
    diag[:, :, 1, 1] = terms.phases[:, :, 1]
    cross = 0.0 + 0.0j
    for i in range(n):
        ops = diag.copy()
        ops[:, i] = sx @ diag[:, i]
        cross -= np.dot(terms.coeffs, operator_expectations(psi, ops))
    cross /= nrm
    mean = s * mean_z + (1 - s) * mean_x
    second = s * s * second_z + (1 - s) ** 2 * second_x + 2.0 * s * (1 - s) * cross.real
    var = max(second - mean * mean, 0.0)
    return float(np.sqrt(var)) / n


def success_probability(psi, solutions):
    """Total and per-solution probabilities ``|<sigma*|psi>|^2`` of the given configurations.

    ``solutions`` is an ``(n_solutions, N)`` array of +-1 spins. For a dense
    state vector the amplitudes are read off directly.
    """
    solutions = np.atleast_2d(np.asarray(solutions))
    if isinstance(psi, Mps):
        nrm = overlap(psi, psi).real
        probs = np.array([abs(amplitude(psi, c)) ** 2 for c in solutions]) / nrm
    else:
        vec = np.asarray(getattr(psi, "amplitudes", psi))
        probs = np.abs(vec[config_to_index(solutions)]) ** 2 / np.vdot(vec, vec).real
    return float(np.sum(probs)), probs


def _as_vector(state):
    return np.asarray(getattr(state, "amplitudes", state), dtype=np.complex128)


def fidelity(a, b):
    """``|<a|b>|^2 / (<a|a> <b|b>)`` for any mix of MPS and dense vectors."""
    if isinstance(a, Mps) and isinstance(b, Mps):
        return abs(overlap(a, b)) ** 2 / (overlap(a, a).real * overlap(b, b).real)
    if isinstance(a, Mps) or isinstance(b, Mps):
        m, v = (a, _as_vector(b)) if isinstance(a, Mps) else (b, _as_vector(a))
        if v.size != 2 ** m.n_sites:
            raise DimensionError("state sizes differ")
        return abs(overlap_dense(m, v)) ** 2 / (overlap(m, m).real * np.vdot(v, v).real)
    va, vb = _as_vector(a), _as_vector(b)
    if va.shape != vb.shape:
        raise DimensionError("state sizes differ")
    return abs(np.vdot(va, vb)) ** 2 / (np.vdot(va, va).real * np.vdot(vb, vb).real)


@dataclass
class MpsStep:
    """State after annealing step ``p`` together with its compression cost."""

    p: int
    s: float
    psi: Mps
    dist_sq_sum: float


def iter_dqa_mps(model, schedule, compression, psi0=None):
    """Yield the state after each annealing step.

    Parameters
    ----------
    model : PatternModel
    schedule : Schedule
    compression : CompressionConfig or int
        An integer is read as ``chi_max`` with default settings.
    psi0 : Mps, optional
        Initial state; defaults to all spins along +x.
    """
    if not isinstance(compression, CompressionConfig):
        compression = CompressionConfig(chi_max=int(compression))
    n = model.n_sites
    psi = plus_state(n) if psi0 is None else psi0
    if psi.n_sites != n:
        raise DimensionError("initial state size does not match the model")
    table = build_fourier_table(model, schedule)
    n_steps = schedule.n_steps
    for p in schedule.steps:
        dist = 0.0
        for xi in model.patterns:
            psi, rep = apply_uz_and_compress(psi, uz_rank1_sum(xi, table, p), compression)
            if not np.isfinite(rep.pre_norm) or rep.pre_norm == 0.0:
                raise FloatingPointError(f"compression produced norm {rep.pre_norm} at step {p}")
            dist += rep.distance_sq
        if p < n_steps:
            psi = apply_local(psi, ux_local(schedule.beta(p)))
        yield MpsStep(p, schedule.s(p), psi, dist)


def run_dqa_mps(model, schedule, compression, observe=None, e_gs="auto", solutions=None,
                psi0=None, callback=None):
    """Run the MPS annealer and collect a :class:`RunRecord`.

    Parameters
    ----------
    model, schedule, compression, psi0
        As in :func:`iter_dqa_mps`.
    observe : ObserveConfig, optional
    e_gs : float, None or "auto"
        Ground energy used for the energy density. ``"auto"`` takes the
        analytic value or enumerates when ``N <= 30``; ``None`` reports
        ``<H_z> / N`` and flags it as an estimate.
    solutions : ndarray, optional
        Configurations whose total final probability is reported.
    callback : callable, optional
        Called as ``callback(step)`` with each :class:`MpsStep`.

    Returns
    -------
    psi : Mps
        Final state.
    record : RunRecord

    Raises
    ------
    RunAborted
        If a compression fails; the exception carries the partial record.
    """
    observe = observe or ObserveConfig()
    if not isinstance(compression, CompressionConfig):
        compression = CompressionConfig(chi_max=int(compression))
    if isinstance(e_gs, str):
        e_gs = reference_ground_energy(model)
    n = model.n_sites
    terms = hz_rank1_terms(model)
    record = RunRecord(meta={
        "backend": "mps",
        "model": repr(model),
        "n_sites": n,
        "n_patterns": model.n_patterns,
        "n_steps": schedule.n_steps,
        "dt": schedule.dt,
        "chi_max": compression.chi_max,
        "n_sweeps": compression.n_sweeps,
        "e_gs": e_gs,
        "e_gs_is_estimate": e_gs is None,
    })
    t0 = time.perf_counter()
    psi = None
    try:
        for step in iter_dqa_mps(model, schedule, compression, psi0):
            psi = step.psi
            p, n_steps = step.p, schedule.n_steps
            row = StepRow(p, step.s, max_bond=psi.max_bond, dist_sq_sum=step.dist_sq_sum)
            if ObserveConfig.due(observe.energy, p, n_steps):
                row.energy_density = energy_density(psi, terms, e_gs, n)
            if ObserveConfig.due(observe.entropy, p, n_steps):
                row.entropy = half_chain_entropy(psi)
            if ObserveConfig.due(observe.variance, p, n_steps):
                row.variance = sigma_hz(psi, terms, n)
            record.rows.append(row)
            if callback is not None:
                callback(step)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        record.final["aborted"] = str(exc)
        raise RunAborted(f"annealing stopped: {exc}", record) from exc
    last = record.rows[-1]
    record.final.update({
        "energy_density": last.energy_density if last.energy_density is not None
        else energy_density(psi, terms, e_gs, n),
        "entropy": last.entropy,
        "sigma_hz": last.variance,
        "max_bond": psi.max_bond,
        "wall_time": time.perf_counter() - t0,
    })
    if solutions is not None:
        record.final["success_probability"] = success_probability(psi, solutions)[0]
    return psi, record

