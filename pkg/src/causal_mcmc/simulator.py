"""Synthetic data from a Gaussian Bayesian network under intervention designs."""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .gbn import GbnParams, WeightedDag

DESIGN_NAMES = ("obs", "mixed", "partial", "multiko")
DOUBLE_KNOCKOUTS = ((1, 2), (1, 3), (4, 5), (5, 6), (3, 8))  # 1-based


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Experiment:
    """``replicates`` samples under ``do(X_targets = values)``; no targets is wild-type."""

    replicates: int
    targets: tuple = ()
    values: tuple = None

    def __post_init__(self):
        targets = tuple(int(t) for t in self.targets)
        values = self.values
        if values is None:
            values = (0.0,) * len(targets)
        values = tuple(float(v) for v in values)
        if len(values) != len(targets):
            raise ValueError("one fixed value is required per target")
        if len(set(targets)) != len(targets):
            raise ValueError("duplicate intervention target")
        if self.replicates < 0:
            raise ValueError("replicate count must be non-negative")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class InterventionDesign:
    name: str
    experiments: tuple

    def __post_init__(self):
        object.__setattr__(self, "experiments", tuple(self.experiments))
        if self.n_samples < 1:
            raise ValueError("a design needs at least one sample")

    @property
    def n_samples(self):
        return sum(e.replicates for e in self.experiments)

    def check(self, p):
        for e in self.experiments:
            for t in e.targets:
                if not 0 <= t < p:
                    raise ValueError(f"design {self.name!r} targets node {t + 1} but p={p}")
        return self


@dataclass(frozen=True, eq=False)
class Dataset:
    """``values`` is N x p; ``intervened[k, j]`` marks node ``j`` clamped in sample ``k``
    (its clamped value is ``values[k, j]``)."""

    values: np.ndarray
    intervened: np.ndarray
    names: tuple = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        intervened = np.array(self.intervened, dtype=bool)
        if values.ndim != 2 or intervened.shape != values.shape:
            raise ValueError("values and intervention mask must be matching N x p arrays")
        names = self.names
        if names is None:
            names = tuple(f"G{j + 1}" for j in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise ValueError("one column name is required per node")
        values.setflags(write=False)
        intervened.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "intervened", intervened)
        object.__setattr__(self, "names", tuple(names))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def targets(self, k):
        return tuple(np.flatnonzero(self.intervened[k]).tolist())

    def free_counts(self):
        """``N_j``: number of samples in which node ``j`` was not intervened."""
        return (~self.intervened).sum(axis=0)

    def has_interventions(self):
        return bool(self.intervened.any())

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.values, other.values)
            and np.array_equal(self.intervened, other.intervened)
            and self.names == other.names
        )

    def repeated(self, times):
        return Dataset(np.tile(self.values, (times, 1)), np.tile(self.intervened, (times, 1)), self.names)


class GroundTruth(NamedTuple):
    dag: WeightedDag
    params: GbnParams
    order: np.ndarray


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def sample_parameters(dag, sigma=0.1, seed=0, mean=0.5):
    """Draw edge weights uniformly from (-1, -0.25) U (0.25, 1) for the structure of ``dag``.

    Every intercept is ``mean`` and every residual SD is ``sigma``. Returns the
    weighted DAG together with parameters in its topological ordering.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    order = dag.topological_order()
    rng = _rng(seed)
    k = len(dag.edges)
    magnitude = rng.uniform(0.25, 1.0, size=k)
    sign = np.where(rng.random(k) < 0.5, -1.0, 1.0)
    weighted = dag.with_weights(sign * magnitude)
    params = GbnParams.from_label_weights(
        np.full(dag.p, float(mean)), np.full(dag.p, float(sigma)), weighted.matrix(), order
    )
    return GroundTruth(weighted, params, order)


def simulate(params, dag, design, seed=0):
    """Ancestral sampling of every experiment in ``design``.

    Experiment ``e`` draws from its own stream derived from ``(seed, e)``, so
    appending experiments leaves earlier rows unchanged.
    """
    p = dag.p
    design.check(p)
    if params.p != p:
        raise ValueError("parameters and DAG disagree on the node count")
    W = dag.matrix()
    topo = dag.topological_order()
    blocks, masks = [], []
    for e, exp in enumerate(design.experiments):
        eps = _rng(seed, e).standard_normal((exp.replicates, p)) * params.sigma
        x = np.zeros((exp.replicates, p))
        clamp = dict(zip(exp.targets, exp.values))
        for j in topo:
            if j in clamp:
                x[:, j] = clamp[j]
            else:
                x[:, j] = params.m[j] + x @ W[:, j] + eps[:, j]
        mask = np.zeros((exp.replicates, p), dtype=bool)
        mask[:, list(exp.targets)] = True
        blocks.append(x)
        masks.append(mask)
    return Dataset(np.vstack(blocks), np.vstack(masks))


def design_by_name(name, p, knockout_value=0.0):
    """One of the four built-in designs: ``obs``, ``mixed``, ``partial``, ``multiko``."""
    ko = float(knockout_value)
    singles = [Experiment(1, (j,), (ko,)) for j in range(p)]
    if name == "obs":
        exps = [Experiment(20)]
    elif name == "mixed":
        exps = [Experiment(10)] + singles
    elif name == "partial":
        if p < 5:
            raise ValueError("the partial design knocks out genes 1-5 and needs p >= 5")
        exps = [Experiment(15)] + singles[:5]
    elif name == "multiko":
        if p < 8:
            raise ValueError("the multiple knock-out design targets gene 8 and needs p >= 8")
        doubles = [Experiment(1, (a - 1, b - 1), (ko, ko)) for a, b in DOUBLE_KNOCKOUTS]
        exps = [Experiment(10)] + singles + doubles
    else:
        raise ValueError(f"unknown design {name!r}; expected one of {DESIGN_NAMES}")
    return InterventionDesign(name, exps)


def builtin_designs(p, knockout_value=0.0):
    """The four simulation designs keyed by name, in their canonical order."""
    return {name: design_by_name(name, p, knockout_value) for name in DESIGN_NAMES}


def read_design(path, p=None):
    """Custom design from JSON: ``{"experiments": [{"replicates", "targets", "values"}]}``
    with 1-based targets."""
    spec = json.loads(Path(path).read_text(encoding="utf-8"))
    exps = []
    for item in spec["experiments"]:
        exps.append(
            Experiment(
                int(item.get("replicates", 1)),
                tuple(int(t) - 1 for t in item.get("targets", [])),
                item.get("values"),
            )
        )
    design = InterventionDesign(spec.get("name", Path(path).stem), exps)
    return design.check(p) if p is not None else design


# --------------------------------------------------------------------------
# dataset files
# --------------------------------------------------------------------------


def write_dataset(data, values_path, interventions_path):
    rows = ["\t".join(data.names)]
    rows += ["\t".join(repr(float(v)) for v in row) for row in data.values]
    Path(values_path).write_text("\n".join(rows) + "\n", encoding="utf-8")
    lines = []
    for k in range(data.n):
        targets = data.targets(k)
        if targets:
            t = ",".join(str(j + 1) for j in targets)
            v = ",".join(repr(float(data.values[k, j])) for j in targets)
        else:
            t = v = "-"
        lines.append(f"{k + 1}\t{t}\t{v}")
    Path(interventions_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _field_list(text, cast, path, lineno):
    if text == "-":
        return []
    try:
        return [cast(x) for x in text.split(",")]
    except ValueError:
        raise ParseError(f"{path}:{lineno}: malformed list {text!r}") from None


def read_dataset(values_path, interventions_path=None):
    """Parse a values TSV and its optional intervention TSV.

    Fixed values in the intervention file overwrite the corresponding entries
    of the value matrix.
    """
    lines = Path(values_path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(f"{values_path}:1: empty file")
    names = tuple(lines[0].split("\t"))
    p = len(names)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != p:
            raise ParseError(f"{values_path}:{lineno}: expected {p} fields, found {len(parts)}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError:
            raise ParseError(f"{values_path}:{lineno}: non-numeric value") from None
    values = np.array(rows, dtype=np.float64).reshape(len(rows), p)
    mask = np.zeros_like(values, dtype=bool)
    if interventions_path is not None:
        seen = set()
        text = Path(interventions_path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(f"{interventions_path}:{lineno}: expected 3 tab-separated fields")
            try:
                k = int(parts[0]) - 1
            except ValueError:
                raise ParseError(f"{interventions_path}:{lineno}: bad sample index") from None
            if not 0 <= k < values.shape[0] or k in seen:
                raise ParseError(f"{interventions_path}:{lineno}: sample index {k + 1} invalid or repeated")
            seen.add(k)
            targets = _field_list(parts[1], int, interventions_path, lineno)
            fixed = _field_list(parts[2], float, interventions_path, lineno)
            if len(targets) != len(fixed):
                raise ParseError(f"{interventions_path}:{lineno}: targets and values differ in length")
            for t, v in zip(targets, fixed):
                if not 1 <= t <= p:
                    raise ValueError(
                        f"{interventions_path}:{lineno}: target {t} outside 1..{p} of {values_path}"
                    )
                mask[k, t - 1] = True
                values[k, t - 1] = v
    return Dataset(values, mask, names)
