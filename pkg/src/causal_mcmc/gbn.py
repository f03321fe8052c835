"""Gaussian Bayesian network types and total causal effects.

Node labels are 0-based in memory and 1-based in every file format. An
ordering is an integer array ``order`` where ``order[a]`` is the node placed
at position ``a``.
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular


def as_ordering(order, p=None):
    """Validate a node ordering and return it as an int64 array."""
    arr = np.asarray(order, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("ordering must be one-dimensional")
    if p is not None and arr.size != p:
        raise ValueError(f"ordering has length {arr.size}, expected {p}")
    if not np.array_equal(np.sort(arr), np.arange(arr.size)):
        raise ValueError(f"ordering {arr.tolist()} is not a permutation of 0..{arr.size - 1}")
    return arr


def positions(order):
    """Inverse permutation: ``positions(order)[node]`` is the node's position."""
    order = np.asarray(order)
    pos = np.empty_like(order)
    pos[order] = np.arange(order.size)
    return pos


@dataclass(frozen=True)
class WeightedDag:
    """Directed acyclic graph on ``p`` nodes with one weight per edge."""

    p: int
    edges: tuple
    weights: tuple = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("a DAG needs at least one node")
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edge")
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop on node {i + 1}")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ValueError(f"edge ({i + 1}, {j + 1}) out of range for p={self.p}")
        weights = self.weights
        if weights is None:
            weights = (1.0,) * len(edges)
        weights = tuple(float(w) for w in weights)
        if len(weights) != len(edges):
            raise ValueError("one weight is required per edge")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", weights)
        self.topological_order()

    def matrix(self):
        """Weight matrix in label coordinates, ``W[i, j] = w_{i,j}``."""
        W = np.zeros((self.p, self.p))
        for (i, j), w in zip(self.edges, self.weights):
            W[i, j] = w
        return W

    def adjacency(self):
        A = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.edges:
            A[i, j] = True
        return A

    def topological_order(self):
        """Smallest-label-first topological order; raises on cycles."""
        A = self.adjacency()
        indeg = A.sum(axis=0)
        done = np.zeros(self.p, dtype=bool)
        out = []
        for _ in range(self.p):
            ready = np.flatnonzero((indeg == 0) & ~done)
            if ready.size == 0:
                raise ValueError("graph contains a cycle")
            v = ready[0]
            done[v] = True
            out.append(v)
            indeg = indeg - A[v]
        return np.array(out, dtype=np.int64)

    def ancestors(self):
        """Boolean matrix, ``anc[i, j]`` true iff there is a directed path i -> j."""
        reach = self.adjacency()
        for k in range(self.p):
            reach = reach | (reach[:, [k]] & reach[[k], :])
        return reach

    def with_weights(self, weights):
        return WeightedDag(self.p, self.edges, tuple(weights))

    def total_effects(self):
        order = self.topological_order()
        params = GbnParams.from_label_weights(
            np.zeros(self.p), np.ones(self.p), self.matrix(), order
        )
        return total_effects(params, order)


@dataclass(frozen=True, eq=False)
class GbnParams:
    """Intercepts ``m`` and residual SDs ``sigma`` (indexed by node label) and
    edge weights in ordering coordinates: ``weights[a, b]`` is the direct effect
    of ``order[a]`` on ``order[b]`` and must vanish for ``a >= b``."""

    m: np.ndarray
    sigma: np.ndarray
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        p = m.size
        if sigma.shape != (p,) or weights.shape != (p, p):
            raise ValueError("inconsistent parameter shapes")
        if np.any(np.tril(weights) != 0.0):
            raise ValueError("weights must be strictly upper triangular in ordering coordinates")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "weights", weights)

    @property
    def p(self):
        return self.m.size

    @classmethod
    def from_label_weights(cls, m, sigma, W, order):
        order = as_ordering(order, len(m))
        return cls(m, sigma, np.asarray(W, dtype=np.float64)[np.ix_(order, order)])

    def label_weights(self, order):
        """Weight matrix in label coordinates for the ordering these weights use."""
        order = as_ordering(order, self.p)
        W = np.zeros((self.p, self.p))
        W[np.ix_(order, order)] = self.weights
        return W


def validate_ordering(dag, order):
    """True iff every edge's source precedes its target in ``order``."""
    order = as_ordering(order)
    if order.size != dag.p:
        raise ValueError(f"ordering has length {order.size}, DAG has {dag.p} nodes")
    pos = positions(order)
    return all(pos[i] < pos[j] for i, j in dag.edges)


def _unit_upper_inverse(W_ord):
    p = W_ord.shape[0]
    return solve_triangular(
        np.eye(p) - W_ord, np.eye(p), lower=False, unit_diagonal=True, check_finite=False
    )


def total_effects(params, order):
    """Total causal effect matrix ``(I - W)^{-1}`` in label coordinates.

    Entry ``[i, j]`` is the effect of node ``i`` on node ``j``; the diagonal is 1
    and is never used for evaluation.
    """
    order = as_ordering(order, params.p)
    L_ord = _unit_upper_inverse(params.weights)
    L = np.empty_like(L_ord)
    L[np.ix_(order, order)] = L_ord
    return L


def intervention_moments(params, order, targets=(), fixed_values=()):
    """Mean and covariance of all nodes under ``do(X_targets = fixed_values)``.

    Incoming edges of the targets are cut and their residual variance removed,
    so clamped coordinates have the fixed value as mean and zero variance.
    """
    order = as_ordering(order, params.p)
    p = params.p
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    fixed_values = np.asarray(fixed_values, dtype=np.float64).reshape(-1)
    if targets.size != fixed_values.size:
        raise ValueError("one fixed value is required per target")
    if np.any((targets < 0) | (targets >= p)):
        raise ValueError(f"intervention target out of range for p={p}")
    W = params.label_weights(order)
    W[:, targets] = 0.0
    W_ord = W[np.ix_(order, order)]
    L_ord = _unit_upper_inverse(W_ord)
    L = np.empty_like(L_ord)
    L[np.ix_(order, order)] = L_ord

    nu = params.m.copy()
    nu[targets] = fixed_values
    var = params.sigma**2
    var[targets] = 0.0
    mean = nu @ L
    cov = L.T @ (var[:, None] * L)
    # clamped coordinates are exact
    mean[targets] = fixed_values
    cov[targets, :] = 0.0
    cov[:, targets] = 0.0
    return mean, cov


def read_dag(path):
    """Parse the DAG text format (``p=<int>`` header, then ``i<TAB>j<TAB>w`` lines)."""
    p = None
    edges, weights = [], []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if p is None:
            if not line.startswith("p="):
                raise ValueError(f"{path}:{lineno}: expected 'p=<int>' header")
            try:
                p = int(line[2:])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad node count {line[2:]!r}") from None
            continue
        parts = raw.rstrip("\r").split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
        try:
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed edge line {raw!r}") from None
        edges.append((i - 1, j - 1))
        weights.append(w)
    if p is None:
        raise ValueError(f"{path}: missing 'p=<int>' header")
    return WeightedDag(p, tuple(edges), tuple(weights))


def write_dag(dag, path):
    lines = [f"p={dag.p}"]
    for (i, j), w in zip(dag.edges, dag.weights):
        lines.append(f"{i + 1}\t{j + 1}\t{w!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def standin_dag():
    """Packaged 10-node, 21-edge example DAG.

    This is a randomly generated stand-in with labels in a valid causal order;
    it is *not* the graph used in the original simulation study.
    """
    return read_dag(Path(__file__).parent / "data" / "standin_dag.tsv")
