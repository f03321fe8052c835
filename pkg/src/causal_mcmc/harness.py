"""Simulation experiments, single-dataset inference, and report generation.

Experiment directory layout::

    config.json
    replicates/r000/truth_dag.tsv, truth_effects.tsv
    replicates/r000/<design>/values.tsv, interventions.tsv
    replicates/r000/<design>/<method>/report.json, effects.tsv, roc.tsv, pr.tsv, chain/
    table1.tsv, aggregate.json, summary.md, heatmaps/, curves/

Every random stream is derived from ``(root seed, replicate, stage tag)`` so
any replicate can be regenerated on its own.
"""
import hashlib
import json
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import metrics, pinna
from .gbn import read_dag, standin_dag, write_dag
from .mcmc import ChainConfig, UnidentifiableOrderingWarning, read_matrix, run_chain, write_chain, write_matrix
from .simulator import design_by_name, read_dataset, read_design, sample_parameters, simulate, write_dataset

log = logging.getLogger(__name__)

METHODS = ("mallows", "uniform", "pinna")
METHOD_LABELS = {"mallows": "MCMC-Mallows", "uniform": "MCMC-uniform", "pinna": "Pinna"}
SETTING_LABELS = {
    "obs": "Observation only",
    "mixed": "Mixed",
    "partial": "Partial KO",
    "multiko": "Multiple KO",
}
CRITERIA = (("auroc", "AUROC"), ("auprc", "AUPRC"), ("spearman", "Spearman"), ("mse", "MSE"))
PINNA_SKIP_NOTE = "requires full single-knock-out design"


def default_workers():
    return max(1, int(os.environ.get("CAUSAL_MCMC_WORKERS", "1")))


def derive_seed(root, replicate, tag):
    digest = hashlib.sha256(f"{int(root)}:{int(replicate)}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class ExperimentConfig:
    dag: str = "standin"
    sigma: float = 0.1
    designs: list = field(default_factory=lambda: ["mixed"])
    replicates: int = 1
    methods: list = field(default_factory=lambda: ["mallows"])
    chain: dict = field(default_factory=dict)
    out: str = "experiment"
    seed: int = 0
    workers: int = 1
    pinna_matrix: str = "zscore"
    estimate: str = "posterior"
    save_traces: bool = True

    def __post_init__(self):
        if isinstance(self.designs, str):
            self.designs = [self.designs]
        self.designs = list(self.designs)
        self.methods = list(self.methods)
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
        if not self.designs:
            raise ValueError("at least one design is required")
        if self.estimate not in ("posterior", "best"):
            raise ValueError("estimate must be 'posterior' or 'best'")
        if self.dag != "standin" and not Path(self.dag).exists():
            raise ValueError(f"DAG file {self.dag} does not exist")
        for d in self.designs:
            if d.startswith("custom:") and not Path(d[7:]).exists():
                raise ValueError(f"design file {d[7:]} does not exist")
        ChainConfig.from_dict(self.chain)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "design" in d and "designs" not in d:
            d["designs"] = d.pop("design")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self):
        return asdict(self)


def load_dag(spec):
    return standin_dag() if spec == "standin" else read_dag(spec)


def load_design(name, p):
    if name.startswith("custom:"):
        return read_design(name[7:], p)
    return design_by_name(name, p)


def design_key(name):
    return Path(name[7:]).stem if name.startswith("custom:") else name


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def estimate_effects(data, method, chain_config, pinna_matrix="zscore", estimate="posterior"):
    """Run one method on one dataset.

    Returns ``(effects, chain_result_or_None, notes)``; raises
    :class:`MethodSkipped` when the method cannot be applied to the design.
    """
    notes = []
    if method == "pinna":
        report = pinna.pinna_requires_full_design(data)
        if not report.complete:
            missing = ",".join(str(j + 1) for j in report.missing)
            raise MethodSkipped(f"{PINNA_SKIP_NOTE} (no single knock-out for genes {missing})")
        dev = pinna.pinna_scores(data)
        if dev.infinite.any():
            notes.append("zero wild-type variance; sentinel z-scores used")
        return pinna.score_matrix(dev, pinna_matrix), None, notes
    config = ChainConfig.from_dict({**chain_config, "mode": method})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnidentifiableOrderingWarning)
        result = run_chain(data, config)
    for w in caught:
        notes.append(str(w.message))
        log.warning("%s", w.message)
    effects = result.posterior_effects if estimate == "posterior" else result.best_effects
    return effects, result, notes


class MethodSkipped(Exception):
    pass


def run_replicate(config, r):
    """Simulate and analyse replicate ``r`` of an experiment (idempotent)."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    out = Path(config.out) / "replicates" / f"r{r:03d}"
    out.mkdir(parents=True, exist_ok=True)
    dag = load_dag(config.dag)
    truth = sample_parameters(dag, config.sigma, derive_seed(config.seed, r, "params"))
    true_effects = truth.dag.total_effects()
    write_dag(truth.dag, out / "truth_dag.tsv")
    write_matrix(out / "truth_effects.tsv", true_effects)

    for dname in config.designs:
        key = design_key(dname)
        design = load_design(dname, dag.p)
        data = simulate(truth.params, truth.dag, design, derive_seed(config.seed, r, f"data:{key}"))
        ddir = out / key
        ddir.mkdir(exist_ok=True)
        write_dataset(data, ddir / "values.tsv", ddir / "interventions.tsv")
        for method in config.methods:
            mdir = ddir / method
            mdir.mkdir(exist_ok=True)
            chain_cfg = {**config.chain, "seed": derive_seed(config.seed, r, f"chain:{key}:{method}")}
            record = {"replicate": r, "design": key, "method": method}
            try:
                effects, result, notes = estimate_effects(
                    data, method, chain_cfg, config.pinna_matrix, config.estimate
                )
            except MethodSkipped as exc:
                record.update(status="skipped", notes=[str(exc)])
                _write_json(mdir / "report.json", record)
                continue
            ev = metrics.evaluate(effects, true_effects)
            record.update(status="ok", **ev.to_dict())
            record["notes"] = notes + ev.notes
            write_matrix(mdir / "effects.tsv", effects)
            try:
                roc, pr = metrics.roc_pr_curves(effects, true_effects)
                metrics.write_curve(mdir / "roc.tsv", roc, ("fpr", "tpr"))
                metrics.write_curve(mdir / "pr.tsv", pr, ("recall", "precision"))
            except ValueError:
                pass
            if result is not None:
                record["acceptance_rate"] = result.acceptance_rate
                record["chosen_eta"] = result.chosen_eta
                write_chain(result, mdir / "chain", trace=config.save_traces)
            _write_json(mdir / "report.json", record)
    return out


def run_experiment(config, workers=None):
    """Run every replicate, then write the aggregate report; returns the directory."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    workers = workers or config.workers or default_workers()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    # output location and parallelism do not affect results
    stored = {k: v for k, v in config.to_dict().items() if k not in ("out", "workers")}
    _write_json(out / "config.json", stored)
    if workers > 1 and config.replicates > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_replicate, [config.to_dict()] * config.replicates, range(config.replicates)))
    else:
        for r in range(config.replicates):
            run_replicate(config, r)
    report(out)
    return out


def infer(values_path, interventions_path, method, chain_config=None, out=None,
          pinna_matrix="zscore", estimate="posterior"):
    """Estimate the total-effect matrix of one dataset and write its artifacts to ``out``."""
    data = read_dataset(values_path, interventions_path)
    effects, result, notes = estimate_effects(data, method, chain_config or {}, pinna_matrix, estimate)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_matrix(out / "effects.tsv", effects)
        if result is not None:
            write_chain(result, out / "chain")
        if notes:
            (out / "notes.txt").write_text("\n".join(notes) + "\n", encoding="utf-8")
    return effects, result, notes


def format_cell(mean, sd):
    return f"{round(mean, 3):g} ({round(sd, 3):g})"


def _load_records(directory):
    records = []
    for path in sorted(Path(directory).glob("replicates/r*/*/*/report.json")):
        records.append((path.parent, json.loads(path.read_text(encoding="utf-8"))))
    return records


def report(directory):
    """Aggregate per-replicate reports into Table-1-style and plot-ready files."""
    directory = Path(directory)
    cfg_path = directory / "config.json"
    if not cfg_path.exists():
        raise FileNotFoundError(f"{directory} has no config.json; not an experiment directory")
    config = ExperimentConfig.from_dict(json.loads(cfg_path.read_text(encoding="utf-8")))
    records = _load_records(directory)
    if not records:
        raise FileNotFoundError(f"{directory} contains no method results")
    designs = [design_key(d) for d in config.designs]
    methods = [m for m in config.methods if any(rec["method"] == m for _, rec in records)]

    aggregate = {}
    skipped = {}
    for design in designs:
        for method in methods:
            recs = [(p, rec) for p, rec in records if rec["design"] == design and rec["method"] == method]
            ok = [rec for _, rec in recs if rec["status"] == "ok"]
            skips = [rec for _, rec in recs if rec["status"] == "skipped"]
            if skips:
                skipped[(design, method)] = skips[0]["notes"][0]
            if not ok:
                continue
            entry = {"n": len(ok)}
            for key, _ in CRITERIA:
                vals = np.array([rec[key] for rec in ok], dtype=np.float64)
                entry[key] = {"mean": float(np.mean(vals)), "sd": float(np.std(vals))}
            rates = [rec["acceptance_rate"] for rec in ok if "acceptance_rate" in rec]
            if rates:
                entry["acceptance_rate"] = {"mean": float(np.mean(rates)), "sd": float(np.std(rates))}
            aggregate[f"{design}/{method}"] = entry
            _write_heatmap(directory, design, method, [p for p, rec in recs if rec["status"] == "ok"])
            _write_curves(directory, design, method, [(p, rec) for p, rec in recs if rec["status"] == "ok"])

    _write_json(directory / "aggregate.json", {
        "aggregate": aggregate,
        "skipped": {f"{d}/{m}": note for (d, m), note in skipped.items()},
    })

    header = ["Setting", "Criterion"] + [METHOD_LABELS[m] for m in methods]
    rows = ["\t".join(header)]
    for design in designs:
        for key, label in CRITERIA:
            cells = []
            for method in methods:
                entry = aggregate.get(f"{design}/{method}")
                cells.append(format_cell(entry[key]["mean"], entry[key]["sd"]) if entry else "---")
            rows.append("\t".join([SETTING_LABELS.get(design, design), label] + cells))
    (directory / "table1.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    md = ["# Experiment summary", ""]
    md.append(f"sigma = {config.sigma}, replicates = {config.replicates}, root seed = {config.seed}, "
              f"DAG = {config.dag}")
    md.append("")
    md.append("| " + " | ".join(header) + " |")
    md.append("|" + "---|" * len(header))
    for line in rows[1:]:
        md.append("| " + " | ".join(line.split("\t")) + " |")
    if skipped:
        md += ["", "## Skipped methods", ""]
        for (d, m), note in skipped.items():
            md.append(f"- {METHOD_LABELS[m]} on {SETTING_LABELS.get(d, d)}: {note}")
    rates = [(k, v["acceptance_rate"]) for k, v in aggregate.items() if "acceptance_rate" in v]
    if rates:
        md += ["", "## Acceptance rates", ""]
        md += [f"- {k}: {format_cell(v['mean'], v['sd'])}" for k, v in rates]
    (directory / "summary.md").write_text("\n".join(md) + "\n", encoding="utf-8")
    return directory


def _write_heatmap(directory, design, method, method_dirs):
    mats = [read_matrix(d / "chain" / "order_distribution.tsv")
            for d in method_dirs if (d / "chain" / "order_distribution.tsv").exists()]
    if not mats:
        return
    (directory / "heatmaps").mkdir(exist_ok=True)
    write_matrix(directory / "heatmaps" / f"{design}_{method}.tsv", np.mean(mats, axis=0))


def _write_curves(directory, design, method, recs):
    (directory / "curves").mkdir(exist_ok=True)
    for kind, cols in (("roc", "fpr\ttpr"), ("pr", "recall\tprecision")):
        lines = [f"replicate\t{cols}"]
        for d, rec in recs:
            f = d / f"{kind}.tsv"
            if f.exists():
                for line in f.read_text(encoding="utf-8").splitlines()[1:]:
                    lines.append(f"{rec['replicate']}\t{line}")
        if len(lines) > 1:
            (directory / "curves" / f"{design}_{method}_{kind}.tsv").write_text(
                "\n".join(lines) + "\n", encoding="utf-8")
