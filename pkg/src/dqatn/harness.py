"""Experiment driver: parameter grids, instance ensembles and result files.

An experiment runs every ``(P, dt)`` grid point on ``instances`` pattern
sets. Jobs are independent and may run in a process pool whose size is
read from the ``DQA_WORKERS`` environment variable; all files are written
by the parent process so the manifest stays consistent.

Output layout of :func:`run_experiment`::

    out/records/P{P}_dt{dt}_i{i}.csv   per-step RunRecord
    out/summary.csv                    mean and standard error per grid point
    out/manifest.json                  config, seeds, versions, wall times, sha256 of every file
"""

import configparser
import csv
import hashlib
import json
import logging
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from .compress import CompressionConfig
from .dqa import ObserveConfig, energy_density, fidelity, iter_dqa_mps, run_dqa_mps
from .ed import (
    DENSE_CAP,
    dense_entropy,
    iter_dqa_dense,
    iter_pspin_sector,
    pspin_sector_evolve,
    pspin_sector_operators,
    run_dqa_dense,
    sector_entropy,
    sector_to_dense,
    SectorState,
)
from .errors import CapacityError
from .mpo import hz_rank1_terms
from .mps import half_chain_entropy, save_mps
from .patterns import (
    HopfieldModel,
    PatternSet,
    PerceptronModel,
    PSpinModel,
    energy_table,
    enumerate_ground_states,
    generate_patterns,
)
from .schedule import Schedule

__all__ = [
    "BACKENDS",
    "MODELS",
    "WORKERS_ENV",
    "ExperimentConfig",
    "parse_observe",
    "format_observe",
    "pattern_seed",
    "build_model",
    "load_config_file",
    "run_experiment",
    "compare_backends",
    "sha256_file",
    "prepare_output_dir",
    "write_manifest",
]

log = logging.getLogger(__name__)

BACKENDS = ("mps", "dense-trotter", "dense-exact", "sector")
MODELS = ("perceptron", "hopfield", "pspin")
#: environment variable holding the worker count
WORKERS_ENV = "DQA_WORKERS"
#: largest size for which ground states are enumerated to report success probabilities
SUCCESS_CAP = 26


def parse_observe(text):
    """Parse ``"energy=1,entropy=last,variance=never"`` into an :class:`ObserveConfig`."""
    if isinstance(text, ObserveConfig):
        return text
    values = {}
    for item in filter(None, (t.strip() for t in str(text).split(","))):
        key, sep, val = item.partition("=")
        key, val = key.strip(), val.strip().lower()
        if not sep or key not in ("energy", "entropy", "variance"):
            raise ValueError(f"bad observable spec {item!r}; expected energy|entropy|variance=<k|last|never>")
        if val == "last":
            values[key] = None
        elif val == "never":
            values[key] = 0
        else:
            k = int(val)
            if k < 0:
                raise ValueError(f"stride must be non-negative, got {k}")
            values[key] = k
    return ObserveConfig(**values)


def format_observe(obs):
    def f(v):
        return "last" if v is None else ("never" if v == 0 else str(v))

    return f"energy={f(obs.energy)},entropy={f(obs.entropy)},variance={f(obs.variance)}"


def pattern_seed(base_seed, instance):
    """Seed of the pattern set of ``instance``, derived from ``base_seed``.

    The seed does not depend on the grid point, so every ``(P, dt)`` of an
    experiment sees the same pattern sets.
    """
    return int(np.random.SeedSequence([int(base_seed), int(instance)]).generate_state(1, np.uint32)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: model family, schedule grid, backend and ensemble size.

    Exactly one of ``n_patterns`` and ``alpha`` may be set for the pattern
    models (``N_xi = ceil(alpha N)``). ``patterns_file`` replaces the random
    pattern sets by a fixed one.
    """

    model: str = "perceptron"
    n_sites: int = 12
    n_patterns: int | None = None
    alpha: float | None = None
    p: int = 2
    n_steps: tuple = (100,)
    dt: tuple = (1.0,)
    chi: int = 10
    sweeps: int = 2
    seed: int = 0
    instances: int = 1
    backend: str = "mps"
    observe: ObserveConfig = field(default_factory=lambda: ObserveConfig(energy=1, entropy=None, variance=None))
    out: str = "results"
    patterns_file: str | None = None
    save_states: bool = False

    def __post_init__(self):
        object.__setattr__(self, "n_steps", tuple(int(v) for v in np.atleast_1d(self.n_steps)))
        object.__setattr__(self, "dt", tuple(float(v) for v in np.atleast_1d(self.dt)))
        object.__setattr__(self, "observe", parse_observe(self.observe) if isinstance(self.observe, str) else self.observe)
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.n_patterns is not None and self.alpha is not None:
            raise ValueError("give either n_patterns or alpha, not both")
        if self.n_sites < 2:
            raise ValueError("n_sites must be at least 2")
        if any(v <= 0 for v in self.n_steps) or any(v <= 0 for v in self.dt):
            raise ValueError("grid values must be positive")
        if self.chi < 1 or self.instances < 1 or self.sweeps < 0:
            raise ValueError("chi and instances must be positive, sweeps non-negative")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.n_patterns is not None and self.n_patterns < 1:
            raise ValueError("n_patterns must be positive")
        if self.backend == "sector" and self.model != "pspin":
            raise ValueError("the sector backend only applies to the p-spin model")
        if self.model == "pspin" and self.p < 1:
            raise ValueError("p must be positive")

    @property
    def resolved_patterns(self):
        if self.n_patterns is not None:
            return int(self.n_patterns)
        if self.alpha is not None:
            return int(np.ceil(self.alpha * self.n_sites - 1e-12))
        return max(1, int(np.ceil(0.8 * self.n_sites - 1e-12)))

    @property
    def grid(self):
        return [(p, dt) for p in self.n_steps for dt in self.dt]

    def to_dict(self):
        d = asdict(self)
        d["observe"] = format_observe(self.observe)
        d["n_steps"] = list(self.n_steps)
        d["dt"] = list(self.dt)
        return d


def build_model(config, instance=0):
    """Model of ``instance`` and the pattern seed used (``None`` if not random)."""
    if config.model == "pspin":
        return PSpinModel(config.n_sites, config.p), None
    cls = PerceptronModel if config.model == "perceptron" else HopfieldModel
    if config.patterns_file is not None:
        pset = PatternSet.load(config.patterns_file)
        if pset.patterns.shape[1] != config.n_sites:
            raise ValueError(f"pattern file holds N={pset.patterns.shape[1]}, config asks for N={config.n_sites}")
        return cls(pset.patterns), pset.seed
    seed = pattern_seed(config.seed, instance)
    return cls(generate_patterns(config.resolved_patterns, config.n_sites, seed)), seed


_FLOAT_KEYS = ("alpha", "dt")
_INT_KEYS = ("N", "Nxi", "p", "P", "chi", "sweeps", "seed", "instances")
_KEY_MAP = {"N": "n_sites", "Nxi": "n_patterns", "P": "n_steps", "patterns": "patterns_file"}


def _parse_list(text, kind):
    return tuple(kind(v) for v in str(text).replace(",", " ").split())


def load_config_file(path):
    """Read the ``[experiment]`` section of an INI file into ``ExperimentConfig`` keywords.

    Keys use the command-line names (``N``, ``Nxi``, ``P``, ``dt``, ...);
    ``P`` and ``dt`` accept comma or space separated lists.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise FileNotFoundError(path)
    if "experiment" not in parser:
        raise ValueError(f"{path}: missing [experiment] section")
    out = {}
    for key, val in parser["experiment"].items():
        if key in ("P", "dt"):
            out[_KEY_MAP.get(key, key)] = _parse_list(val, int if key == "P" else float)
        elif key in _INT_KEYS:
            out[_KEY_MAP.get(key, key)] = int(val)
        elif key in _FLOAT_KEYS:
            out[key] = float(val)
        elif key in ("model", "backend", "out", "observe", "patterns"):
            out[_KEY_MAP.get(key, key)] = val.strip()
        elif key == "save_states":
            out[key] = parser["experiment"].getboolean(key)
        else:
            raise ValueError(f"{path}: unknown key {key!r}")
    return out


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions():
    import numba

    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {
        "artifact": pkg,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def prepare_output_dir(out):
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    probe = path / ".write_probe"
    with open(probe, "w") as fh:
        fh.write("")
    probe.unlink()
    return path


def _workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _solutions(model):
    if model.n_sites > SUCCESS_CAP:
        return None
    return enumerate_ground_states(model).configs


def _tag(n_steps, dt, instance):
    return f"P{n_steps}_dt{dt:g}_i{instance}"


def _run_job(config, n_steps, dt, instance):
    model, seed = build_model(config, instance)
    schedule = Schedule(n_steps, dt)
    solutions = None if config.backend == "sector" else _solutions(model)
    state = None
    if config.backend == "mps":
        state, record = run_dqa_mps(model, schedule, CompressionConfig(config.chi, config.sweeps),
                                    config.observe, solutions=solutions)
    elif config.backend in ("dense-trotter", "dense-exact"):
        _, record = run_dqa_dense(model, schedule, config.backend == "dense-trotter", config.observe,
                                  solutions=solutions)
    else:
        _, record = pspin_sector_evolve(config.n_sites, config.p, schedule, True, config.observe)
    record.meta.update({"instance": instance, "pattern_seed": seed})
    return n_steps, dt, instance, record, (state if config.save_states else None)


def _mean_stderr(values):
    v = np.array([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return None, None
    err = float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
    return float(np.mean(v)), err


SUMMARY_METRICS = ("energy_density", "entropy", "sigma_hz", "success_probability", "wall_time")


def run_experiment(config):
    """Run every grid point and instance, writing records, summary and manifest.

    Returns
    -------
    pathlib.Path
        The output directory.
    """
    out = prepare_output_dir(config.out)
    (out / "records").mkdir(exist_ok=True)
    if config.save_states:
        (out / "states").mkdir(exist_ok=True)
    jobs = [(p, dt, i) for (p, dt) in config.grid for i in range(config.instances)]
    workers = min(_workers(), len(jobs))
    log.info("running %d jobs on %d worker(s)", len(jobs), workers)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_run_job, config, *job) for job in jobs]
            results = [f.result() for f in futures]
    else:
        results = [_run_job(config, *job) for job in jobs]
    files, runs = [], []
    finals = {}
    for n_steps, dt, inst, record, state in results:
        tag = _tag(n_steps, dt, inst)
        path = out / "records" / f"{tag}.csv"
        record.write_csv(path)
        files.append(path)
        if state is not None:
            spath = out / "states" / f"{tag}.mps"
            save_mps(state, spath)
            files.append(spath)
        finals.setdefault((n_steps, dt), []).append(record.final)
        runs.append({"tag": tag, "n_steps": n_steps, "dt": dt, "instance": inst,
                     "pattern_seed": record.meta.get("pattern_seed"), "final": record.final})
    summary = out / "summary.csv"
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["P", "dt", "instances"]
        for m in SUMMARY_METRICS:
            header += [f"{m}_mean", f"{m}_stderr"]
        w.writerow(header)
        for (n_steps, dt), fin in finals.items():
            row = [n_steps, f"{dt:.17g}", len(fin)]
            for m in SUMMARY_METRICS:
                mean, err = _mean_stderr([f.get(m) for f in fin])
                row += ["" if mean is None else f"{mean:.17g}", "" if err is None else f"{err:.17g}"]
            w.writerow(row)
    files.append(summary)
    write_manifest(out, config, files, {"runs": runs, "workers": workers})
    return out


def write_manifest(out, config, files, extra):
    manifest = {
        "config": config.to_dict(),
        "versions": _versions(),
        "command": sys.argv,
        **extra,
        "files": {str(Path(f).relative_to(out)): sha256_file(f) for f in files},
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# --------------------------------------------------------------------------
# backend comparison


def _backend_iter(backend, model, config, schedule):
    if backend == "mps":
        for step in iter_dqa_mps(model, schedule, CompressionConfig(config.chi, config.sweeps)):
            yield step.p, step.psi
    elif backend in ("dense-trotter", "dense-exact"):
        table = energy_table(model)
        for step in iter_dqa_dense(model, schedule, backend == "dense-trotter", table):
            yield step.p, step.vec
    else:
        for p, _, amps in iter_pspin_sector(config.n_sites, config.p, schedule, True):
            yield p, SectorState(amps)


def compare_backends(config, backends=None, instance=0):
    """Run several backends in lockstep and tabulate them step by step.

    For every backend the table holds the energy density, the half-chain
    entropy (on the entropy stride) and the fidelity with the dense
    non-Trotterized reference when that reference fits in memory.
    Backends beyond their capacity are skipped and listed in the manifest;
    a :class:`CapacityError` is raised after the partial output is written.
    ``backends=None`` selects every backend that applies to the model.

    Returns
    -------
    pathlib.Path
        Path of the comparison CSV.
    """
    out = prepare_output_dir(config.out)
    model, seed = build_model(config, instance)
    n = model.n_sites
    schedule = Schedule(config.n_steps[0], config.dt[0])
    if backends is None:
        backends = [b for b in BACKENDS if b != "sector" or config.model == "pspin"]
    backends = list(dict.fromkeys(backends))
    errors = {}
    active = []
    for b in backends:
        if b not in BACKENDS:
            raise ValueError(f"unknown backend {b!r}")
        if b in ("dense-trotter", "dense-exact") and n > DENSE_CAP:
            errors[b] = f"dense backends are limited to {DENSE_CAP} sites"
        elif b == "sector" and model.__class__ is not PSpinModel:
            errors[b] = "the sector backend only applies to the p-spin model"
        else:
            active.append(b)
    ref_name = "dense-exact" if n <= DENSE_CAP else None
    iters = {b: _backend_iter(b, model, config, schedule) for b in active}
    ref_iter = iters.get("dense-exact") if ref_name else None
    if ref_name and ref_iter is None:
        ref_iter = _backend_iter("dense-exact", model, config, schedule)
    terms = hz_rank1_terms(model)
    table = energy_table(model) if n <= DENSE_CAP else None
    e_gs = float(table.min()) if table is not None else model.known_ground_energy
    hz_sector = pspin_sector_operators(n, config.p)[0] if "sector" in active else None
    header = ["p", "s"]
    for b in active:
        header += [f"energy_density_{b}", f"entropy_{b}", f"fidelity_{b}"]
    rows = []
    for p in schedule.steps:
        states = {b: next(iters[b])[1] for b in active}
        ref = states["dense-exact"] if "dense-exact" in states else (next(ref_iter)[1] if ref_iter else None)
        want_s = ObserveConfig.due(config.observe.entropy, p, schedule.n_steps)
        row = [p, f"{schedule.s(p):.17g}"]
        for b in active:
            st = states[b]
            if b == "mps":
                eps = energy_density(st, terms, e_gs, n)
                ent = half_chain_entropy(st) if want_s else None
            elif b == "sector":
                prob = np.abs(st.amplitudes) ** 2
                eps = (float(prob @ hz_sector) / prob.sum() - e_gs) / n
                ent = sector_entropy(st.amplitudes, n) if want_s else None
                st = sector_to_dense(st) if ref is not None else None
            else:
                prob = np.abs(st) ** 2
                eps = (float(prob @ table) / prob.sum() - e_gs) / n
                ent = dense_entropy(st, n) if want_s else None
            fid = fidelity(st, ref) if ref is not None else None
            row += [f"{eps:.17g}", "" if ent is None else f"{ent:.17g}", "" if fid is None else f"{fid:.17g}"]
        rows.append(row)
    path = out / f"compare_{_tag(schedule.n_steps, schedule.dt, instance)}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    write_manifest(out, config, [path], {
        "backends": active, "reference": ref_name, "errors": errors,
        "instance": instance, "pattern_seed": seed,
    })
    if errors:
        raise CapacityError("; ".join(f"{b}: {m}" for b, m in errors.items()))
    return path
