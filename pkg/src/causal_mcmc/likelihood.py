"""Mixture log-likelihood of observational and intervention samples, its
gradient, and closed-form maximum likelihood fits for a fixed ordering.

For node ``j`` only the samples in which ``j`` was not clamped contribute,
so the likelihood decomposes into ``p`` independent Gaussian regressions of
each node on its predecessors.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .gbn import GbnParams, as_ordering, positions


class CenteredData(NamedTuple):
    free: list      # free[j]: sample indices where j was not intervened
    counts: np.ndarray
    y: list         # y[j]: rows of free[j], centred on their own column means


def center(data):
    """Per-node centred sample blocks ``y^{k,j}`` over the free samples of ``j``."""
    free, ys = [], []
    for j in range(data.p):
        idx = np.flatnonzero(~data.intervened[:, j])
        block = data.values[idx]
        ys.append(block - block.mean(axis=0) if idx.size else block)
        free.append(idx)
    return CenteredData(free, data.free_counts(), ys)


@dataclass(frozen=True, eq=False)
class FitResult:
    params: GbnParams
    order: np.ndarray
    loglik: float
    degenerate_edges: frozenset = frozenset()
    unidentified_nodes: frozenset = frozenset()
    floored_nodes: frozenset = frozenset()


class Gradient(NamedTuple):
    m: np.ndarray
    sigma: np.ndarray
    weights: np.ndarray  # ordering coordinates, strictly upper triangle only


def _check_sigma(params):
    if np.any(params.sigma <= 0):
        raise ValueError("residual standard deviations must be positive")


def residuals(params, data, order):
    """``x^k_j - x^k W e_j - m_j`` for every sample and node (label coordinates)."""
    W = params.label_weights(order)
    return data.values - data.values @ W - params.m


def log_likelihood(params, data, order):
    """Log-likelihood of ``data`` under ``params``; clamped coordinates contribute nothing."""
    order = as_ordering(order, data.p)
    _check_sigma(params)
    free = ~data.intervened
    counts = free.sum(axis=0)
    r = residuals(params, data, order)
    quad = np.where(free, r * r, 0.0).sum(axis=0)
    return float(
        -0.5 * kernels.LOG_2PI * counts.sum()
        - np.sum(counts * np.log(params.sigma))
        - 0.5 * np.sum(quad / params.sigma**2)
    )


def analytic_gradient(params, data, order):
    """Gradient of :func:`log_likelihood` with respect to ``(m, sigma, w)``."""
    order = as_ordering(order, data.p)
    _check_sigma(params)
    free = ~data.intervened
    counts = free.sum(axis=0)
    r = np.where(free, residuals(params, data, order), 0.0)
    s2 = params.sigma**2
    g_m = r.sum(axis=0) / s2
    g_sigma = -counts / params.sigma + (r * r).sum(axis=0) / params.sigma**3
    # d/dw_{i,j} = sum_k x^k_i r^k_j / sigma_j^2, then restrict to the upper triangle
    g_label = (data.values.T @ r) / s2
    g_w = np.triu(g_label[np.ix_(order, order)], 1)
    return Gradient(g_m, g_sigma, g_w)


def _predecessor_sets(order, structure, p):
    if structure == "saturated":
        return [order[:a] for a in range(p)]
    pos = positions(order)
    parents = [[] for _ in range(p)]
    for i, j in structure:
        if pos[i] >= pos[j]:
            raise ValueError(f"edge ({i + 1}, {j + 1}) contradicts the ordering")
        parents[j].append(i)
    return [np.array(sorted(parents[order[a]], key=lambda v: pos[v]), dtype=np.int64) for a in range(p)]


def _null_coordinates(Sj, preds):
    G = Sj[np.ix_(preds, preds)]
    evals, evecs = np.linalg.eigh(G)
    null = (evals <= kernels.RCOND * max(evals.max(), 0.0)) | (evals <= 0.0)
    weight = (evecs[:, null] ** 2).sum(axis=1)
    return preds[weight > 1e-8]


def fit_mle(data, order, structure="saturated"):
    """Closed-form maximum likelihood estimate of ``(m, sigma, w)`` for ``order``.

    ``structure`` is ``"saturated"`` (every earlier node is a candidate parent)
    or an iterable of 0-based ``(i, j)`` edges consistent with ``order``.
    Rank-deficient regressions take the minimum-norm solution and report the
    affected edges; nodes clamped in every sample get ``(0, 1, no parents)``.
    """
    order = as_ordering(order, data.p)
    p = data.p
    S, counts, means = kernels.gram_stack(data.values, data.intervened)
    preds_by_pos = _predecessor_sets(order, structure, p)
    m = np.zeros(p)
    sigma = np.ones(p)
    W = np.zeros((p, p))
    degenerate, unidentified, floored = set(), set(), set()
    free = ~data.intervened
    for a in range(p):
        j = order[a]
        preds = preds_by_pos[a]
        if counts[j] == 0:
            unidentified.add(int(j))
            continue
        w, _, dropped = kernels.numpy_impl.node_fit(S[j], preds, j)
        if dropped:
            degenerate.update((int(i), int(j)) for i in _null_coordinates(S[j], preds))
        W[preds, j] = w
        m[j] = means[j, j] - means[j, preds] @ w
        rows = data.values[free[:, j]]
        r = rows[:, j] - rows @ W[:, j] - m[j]
        s = np.sqrt(np.mean(r * r))
        if s < kernels.MIN_SIGMA:
            s = kernels.MIN_SIGMA
            floored.add(int(j))
        sigma[j] = s
    params = GbnParams.from_label_weights(m, sigma, W, order)
    return FitResult(
        params,
        order,
        log_likelihood(params, data, order),
        frozenset(degenerate),
        frozenset(unidentified),
        frozenset(floored),
    )


def profile_loglik(data, order):
    """Maximised log-likelihood of ``order`` under the saturated model."""
    return fit_mle(data, order).loglik


def order_weights(S, counts, order, backend=None):
    """Saturated-model edge weights in label coordinates from a Gram stack."""
    impl = kernels.get_backend(backend)
    p = len(order)
    W = np.zeros((p, p))
    for a in range(1, p):
        j = order[a]
        if counts[j] == 0:
            continue
        w, _, _ = impl.node_fit(S[j], order[:a], j)
        W[order[:a], j] = w
    return W
