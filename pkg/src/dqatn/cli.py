"""Command-line entry point ``dqatn``.

Subcommands: ``anneal``, ``compare``, ``dmrg``, ``compile`` and
``enumerate``. Settings come from the command line, then from the
``[experiment]`` section of an optional ``--config`` INI file, then from
the defaults of :class:`~dqatn.harness.ExperimentConfig`.
"""

import argparse
import json
import logging
import sys
from dataclasses import fields

import numpy as np

from .circuit import (
    circuit_apply,
    exact_circuit_from_mps,
    export_circuit,
    optimize_staircase_circuit,
)
from .dmrg import dmrg_ground_state
from .dqa import fidelity, success_probability
from .errors import CapacityError, CircuitFormatError, DimensionError
from .harness import (
    BACKENDS,
    MODELS,
    ExperimentConfig,
    prepare_output_dir,
    write_manifest,
    build_model,
    compare_backends,
    load_config_file,
    run_experiment,
)
from .mps import load_mps, save_mps
from .patterns import HopfieldModel, PatternSet, PerceptronModel, energy_table, enumerate_ground_states

__all__ = ["main", "build_parser"]


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text):
    return tuple(int(v) for v in text.replace(",", " ").split())


def _add_model_args(p):
    p.add_argument("--config", help="INI file with an [experiment] section")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--N", dest="n_sites", type=int, help="number of spins")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--Nxi", dest="n_patterns", type=int, help="number of patterns")
    g.add_argument("--alpha", type=float, help="load N_xi / N")
    p.add_argument("--p", type=int, help="interaction order of the p-spin model")
    p.add_argument("--patterns", dest="patterns_file", help="pattern file replacing the random patterns")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--out", help="output directory")


def _add_anneal_args(p):
    p.add_argument("--P", dest="n_steps", type=_ints, help="annealing steps (list allowed)")
    p.add_argument("--dt", type=_floats, help="time step (list allowed)")
    p.add_argument("--chi", type=int, help="maximum bond dimension")
    p.add_argument("--sweeps", type=int, help="compression sweeps")
    p.add_argument("--instances", type=int, help="number of pattern sets")
    p.add_argument("--observe", help="e.g. energy=1,entropy=10,variance=last")


def build_parser():
    parser = argparse.ArgumentParser(prog="dqatn", description="Tensor-network digitized quantum annealing.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("anneal", help="run dQA over a parameter grid")
    _add_model_args(p)
    _add_anneal_args(p)
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--save-states", dest="save_states", action="store_const", const=True,
                   help="store final MPS files")

    p = sub.add_parser("compare", help="compare backends step by step")
    _add_model_args(p)
    _add_anneal_args(p)
    p.add_argument("--backend", dest="backends", default="mps,dense-trotter,dense-exact",
                   help="comma separated backends")
    p.add_argument("--instance", type=int, default=0)

    p = sub.add_parser("dmrg", help="DMRG ground-state search")
    _add_model_args(p)
    p.add_argument("--chi", type=int, help="bond dimension")
    p.add_argument("--sweeps", type=int, help="maximum sweeps")
    p.add_argument("--instances", type=int, help="number of seeded runs")
    p.add_argument("--instance", type=int, default=0, help="pattern set index")

    p = sub.add_parser("compile", help="compile an MPS file into a circuit")
    p.add_argument("mps", help="MPS file")
    p.add_argument("--depth", type=int, default=4, help="staircase layers")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("auto", "dense", "mps"), default="auto")
    p.add_argument("--exact", action="store_true", help="exact multi-qubit mapping instead")
    p.add_argument("--patterns", dest="patterns_file", help="pattern file for energy and success metrics")
    p.add_argument("--model", choices=("perceptron", "hopfield"), default="perceptron")
    p.add_argument("--out", default="circuit_out")

    p = sub.add_parser("enumerate", help="enumerate classical ground states")
    _add_model_args(p)
    p.add_argument("--instance", type=int, default=0)
    return parser


_CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _config(args):
    values = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for key, val in vars(args).items():
        if key in _CONFIG_FIELDS and val is not None:
            values[key] = val
    if "n_patterns" in vars(args) and args.n_patterns is not None:
        values.pop("alpha", None)
    if "alpha" in vars(args) and args.alpha is not None:
        values.pop("n_patterns", None)
    return ExperimentConfig(**values)


def _cmd_anneal(args):
    cfg = _config(args)
    out = run_experiment(cfg)
    print(out / "summary.csv")


def _cmd_compare(args):
    cfg = _config(args)
    path = compare_backends(cfg, [b.strip() for b in args.backends.split(",") if b.strip()], args.instance)
    print(path)


def _cmd_dmrg(args):
    cfg = _config(args)
    out = prepare_output_dir(cfg.out)
    model, seed = build_model(cfg, args.instance)
    sols = enumerate_ground_states(model) if model.n_sites <= 30 else None
    runs, files = [], []
    sweeps = args.sweeps if args.sweeps is not None else 20
    chi = args.chi if args.chi is not None else 20
    for r in range(cfg.instances):
        psi, rep = dmrg_ground_state(model, chi, max_sweeps=sweeps, seed=r,
                                     solutions=None if sols is None else sols.configs)
        path = out / f"dmrg_run{r}.mps"
        save_mps(psi, path)
        files.append(path)
        best = int(np.argmax(rep.overlaps)) if rep.overlaps.size else None
        runs.append({
            "run": r, "energy": rep.energy, "sigma_hz": rep.sigma_hz, "converged": rep.converged,
            "sweeps": rep.sweeps_used, "energies": rep.energies,
            "max_overlap": float(rep.overlaps.max()) if rep.overlaps.size else None,
            "best_solution": best,
        })
        print(f"run {r}: E={rep.energy:.3e} sigma={rep.sigma_hz:.2e} sweeps={rep.sweeps_used}")
    res = out / "dmrg.json"
    with open(res, "w") as fh:
        json.dump({"pattern_seed": seed, "chi": chi,
                   "n_solutions": None if sols is None else sols.n_solutions, "runs": runs}, fh, indent=2)
    files.append(res)
    write_manifest(out, cfg, files, {"instance": args.instance})


def _cmd_compile(args):
    psi = load_mps(args.mps)
    out = prepare_output_dir(args.out)
    if args.exact:
        circ, metrics = exact_circuit_from_mps(psi, seed=args.seed), {"kind": "exact"}
    else:
        circ, rep = optimize_staircase_circuit(psi, args.depth, args.iterations, seed=args.seed, method=args.method)
        metrics = {"kind": "staircase", "depth": args.depth, "iterations": args.iterations,
                   "method": rep.method, "fidelity": rep.fidelity, "trace": rep.trace, "flagged": rep.flagged}
    metrics["n_gates"] = circ.n_gates
    if psi.n_sites <= 24:
        vec = circuit_apply(circ).amplitudes
        metrics["fidelity_dense"] = float(fidelity(psi, vec))
        if args.patterns_file:
            pset = PatternSet.load(args.patterns_file)
            model = (PerceptronModel if args.model == "perceptron" else HopfieldModel)(pset.patterns)
            table = energy_table(model)
            prob = np.abs(vec) ** 2
            metrics["energy_density"] = float((prob @ table - table.min()) / model.n_sites)
            metrics["success_probability"] = success_probability(vec, enumerate_ground_states(model).configs)[0]
    cpath = out / "circuit.json"
    export_circuit(circ, cpath)
    mpath = out / "metrics.json"
    with open(mpath, "w") as fh:
        json.dump(metrics, fh, indent=2)
    print(json.dumps({k: v for k, v in metrics.items() if k != "trace"}))


def _cmd_enumerate(args):
    cfg = _config(args)
    model, seed = build_model(cfg, args.instance)
    gs = enumerate_ground_states(model)
    out = prepare_output_dir(cfg.out)
    if cfg.model != "pspin":
        PatternSet(model.patterns, seed).save(out / "patterns.txt")
    with open(out / "ground_states.json", "w") as fh:
        json.dump({"energy": gs.energy, "n_solutions": gs.n_solutions, "pattern_seed": seed,
                   "configs": gs.configs.tolist()}, fh)
    print(f"E_gs={gs.energy:.12g} solutions={gs.n_solutions}")


_COMMANDS = {
    "anneal": _cmd_anneal,
    "compare": _cmd_compare,
    "dmrg": _cmd_dmrg,
    "compile": _cmd_compile,
    "enumerate": _cmd_enumerate,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        _COMMANDS[args.command](args)
    except (CapacityError, DimensionError, CircuitFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
