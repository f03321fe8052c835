"""Command line entry point: ``causal-mcmc {simulate,infer,experiment,report}``."""
import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .gbn import write_dag
from .mcmc import write_matrix
from .simulator import sample_parameters, simulate, write_dataset


def _load_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8")) if path else {}


def cmd_simulate(args):
    cfg = _load_json(args.config)
    dag = harness.load_dag(args.dag or cfg.get("dag", "standin"))
    sigma = args.sigma if args.sigma is not None else cfg.get("sigma", 0.1)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    design_name = args.design or cfg.get("design", "mixed")
    design = harness.load_design(design_name, dag.p)
    truth = sample_parameters(dag, sigma, harness.derive_seed(seed, 0, "params"))
    data = simulate(truth.params, truth.dag, design, harness.derive_seed(seed, 0, "data"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(data, out / "values.tsv", out / "interventions.tsv")
    write_dag(truth.dag, out / "truth_dag.tsv")
    write_matrix(out / "truth_effects.tsv", truth.dag.total_effects())
    print(f"wrote {data.n} samples x {data.p} genes to {out}")


def cmd_infer(args):
    cfg = _load_json(args.config)
    chain = dict(cfg.get("chain", cfg))
    chain = {k: v for k, v in chain.items() if k not in ("method", "pinna_matrix", "estimate")}
    if args.seed is not None:
        chain["seed"] = args.seed
    for name in ("iterations", "burn_in", "thin", "eta"):
        value = getattr(args, name)
        if value is not None:
            chain[name] = value
    method = args.method or cfg.get("method", "mallows")
    effects, result, notes = harness.infer(
        args.values,
        args.interventions,
        method,
        chain,
        args.out,
        pinna_matrix=cfg.get("pinna_matrix", "zscore"),
        estimate=cfg.get("estimate", "posterior"),
    )
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)
    if result is not None:
        print(f"acceptance rate {result.acceptance_rate:.3f}, eta {result.chosen_eta}")
    print(f"wrote effects to {Path(args.out) / 'effects.tsv'}")


def cmd_experiment(args):
    cfg = _load_json(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out"] = args.out
    if args.sigma is not None:
        cfg["sigma"] = args.sigma
    if args.design:
        cfg["designs"] = args.design
    if args.method:
        cfg["methods"] = args.method
    workers = args.workers or cfg.pop("workers", None) or harness.default_workers()
    config = harness.ExperimentConfig.from_dict(cfg)
    out = harness.run_experiment(config, workers=workers)
    print((out / "table1.tsv").read_text(encoding="utf-8"), end="")


def cmd_report(args):
    out = harness.report(args.directory)
    print((out / "summary.md").read_text(encoding="utf-8"), end="")


def build_parser():
    parser = argparse.ArgumentParser(prog="causal-mcmc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    design_help = "obs, mixed, partial, multiko or custom:<path.json>"

    p = sub.add_parser("simulate", help="simulate one dataset from a GBN")
    p.add_argument("--config")
    p.add_argument("--dag", help="DAG file or 'standin'")
    p.add_argument("--design", help=design_help)
    p.add_argument("--sigma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("infer", help="estimate total causal effects from dataset files")
    p.add_argument("--values", required=True)
    p.add_argument("--interventions")
    p.add_argument("--method", choices=harness.METHODS)
    p.add_argument("--config", help="JSON chain configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--eta", type=float, help="fixed Mallows temperature (skips tuning)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("experiment", help="run a replicated simulation experiment")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--sigma", type=float)
    p.add_argument("--design", action="append", help=design_help + " (repeatable)")
    p.add_argument("--method", action="append", choices=harness.METHODS)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="summarise an experiment directory")
    p.add_argument("directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
