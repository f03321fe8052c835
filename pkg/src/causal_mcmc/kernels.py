"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The numba variants are written as explicit loops and compiled lazily; the
numpy variants use vectorised array operations. Both consume the same
pre-drawn uniforms so that, for a fixed random stream, they return the same
orderings. ``BACKEND`` names the implementation selected by the
``CAUSAL_MCMC_NUMBA`` environment flag and :func:`get_backend` returns the
matching namespace.

Profile likelihood evaluation works on a *Gram stack*: for every node ``j``
the centred cross-product matrix ``S[j] = Y_j^T Y_j`` of all samples in which
``j`` was not intervened, centred on their own mean. Fitting node ``j`` on a
predecessor set ``P`` only needs ``S[j][P, P]`` and ``S[j][P, j]``, so the
cost of one ordering is independent of the sample count.
"""
import math
from types import SimpleNamespace

import numpy as np

from ._accel import USE_NUMBA, njit

LOG_2PI = math.log(2.0 * math.pi)
#: relative eigenvalue cutoff below which a Gram direction counts as unidentified
RCOND = 1e-10
#: floor applied to fitted residual standard deviations
MIN_SIGMA = 1e-8


def gram_stack(values, intervened):
    """Per-node centred Gram matrices and sample counts.

    Parameters
    ----------
    values : (N, p) array
    intervened : (N, p) bool array, True where a node was clamped in a sample

    Returns
    -------
    S : (p, p, p) array, ``S[j]`` built from the samples where ``j`` is free
    counts : (p,) int array, number of such samples
    means : (p, p) array, ``means[j]`` is the column mean over those samples
    """
    values = np.asarray(values, dtype=np.float64)
    free = ~np.asarray(intervened, dtype=bool)
    n, p = values.shape
    S = np.zeros((p, p, p))
    means = np.zeros((p, p))
    counts = free.sum(axis=0).astype(np.int64)
    for j in range(p):
        rows = values[free[:, j]]
        if rows.shape[0] == 0:
            continue
        means[j] = rows.mean(axis=0)
        Y = rows - means[j]
        S[j] = Y.T @ Y
    return S, counts, means


def node_loglik_from_rss(rss, n):
    """Maximised Gaussian log-likelihood of one node given its residual sum of squares."""
    if n == 0:
        return 0.0
    sigma = max(math.sqrt(max(rss, 0.0) / n), MIN_SIGMA)
    return -0.5 * n * LOG_2PI - n * math.log(sigma) - 0.5 * rss / (sigma * sigma)


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------


@njit
def _node_fit_nb(Sj, preds, j):
    q = preds.shape[0]
    w = np.zeros(q)
    if q == 0:
        return w, max(Sj[j, j], 0.0), 0
    G = np.empty((q, q))
    b = np.empty(q)
    for a in range(q):
        b[a] = Sj[preds[a], j]
        for c in range(q):
            G[a, c] = Sj[preds[a], preds[c]]
    evals, evecs = np.linalg.eigh(G)
    top = 0.0
    for a in range(q):
        if evals[a] > top:
            top = evals[a]
    thr = RCOND * top
    dropped = 0
    for k in range(q):
        if evals[k] <= thr or evals[k] <= 0.0:
            dropped += 1
            continue
        proj = 0.0
        for a in range(q):
            proj += evecs[a, k] * b[a]
        coef = proj / evals[k]
        for a in range(q):
            w[a] += coef * evecs[a, k]
    rss = Sj[j, j]
    for a in range(q):
        rss -= w[a] * b[a]
    return w, max(rss, 0.0), dropped


@njit
def _node_ll_nb(Sj, preds, j, n):
    if n == 0:
        return 0.0
    _, rss, _ = _node_fit_nb(Sj, preds, j)
    sigma = max(math.sqrt(rss / n), MIN_SIGMA)
    return -0.5 * n * LOG_2PI - n * math.log(sigma) - 0.5 * rss / (sigma * sigma)


@njit
def _order_node_ll_nb(S, counts, order, out):
    p = order.shape[0]
    for a in range(p):
        j = order[a]
        out[j] = _node_ll_nb(S[j], order[:a], j, counts[j])


@njit
def _order_loglik_nb(S, counts, order):
    out = np.zeros(order.shape[0])
    _order_node_ll_nb(S, counts, order, out)
    return out.sum()


@njit
def _batch_loglik_nb(S, counts, orders):
    res = np.empty(orders.shape[0])
    for r in range(orders.shape[0]):
        res[r] = _order_loglik_nb(S, counts, orders[r])
    return res


@njit
def _displacement(u, t, log_phi):
    # inverse CDF of P(r) ~ phi^r on {0..t}
    if log_phi == 0.0:
        r = int(u * (t + 1))
    elif log_phi == -np.inf:
        r = 0
    else:
        c = -math.expm1((t + 1) * log_phi)
        r = int(math.floor(math.log1p(-u * c) / log_phi))
    if r < 0:
        r = 0
    if r > t:
        r = t
    return r


@njit
def _rim_nb(reference, u, log_phi):
    p = reference.shape[0]
    out = np.empty(p, dtype=np.int64)
    for t in range(p):
        pos = t - _displacement(u[t], t, log_phi)
        for s in range(t, pos, -1):
            out[s] = out[s - 1]
        out[pos] = reference[t]
    return out


@njit
def _inversions_nb(q):
    n = q.shape[0]
    a = q.copy()
    tmp = np.empty_like(a)
    count = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[i] <= a[j]:
                    tmp[k] = a[i]
                    i += 1
                else:
                    tmp[k] = a[j]
                    count += mid - i
                    j += 1
                k += 1
            while i < mid:
                tmp[k] = a[i]
                i += 1
                k += 1
            while j < hi:
                tmp[k] = a[j]
                j += 1
                k += 1
        a, tmp = tmp, a
        width *= 2
    return count


@njit
def _mh_chain_nb(S, counts, init_order, u_prop, u_acc, log_phi):
    iters = u_prop.shape[0]
    p = init_order.shape[0]
    states = np.empty((iters, p), dtype=np.int64)
    trace = np.empty(iters)
    accepted = np.zeros(iters, dtype=np.bool_)

    cur = init_order.copy()
    cur_pos = np.empty(p, dtype=np.int64)
    for a in range(p):
        cur_pos[cur[a]] = a
    cur_nodes = np.zeros(p)
    _order_node_ll_nb(S, counts, cur, cur_nodes)
    cur_ll = cur_nodes.sum()
    best = cur.copy()
    best_ll = cur_ll

    prop_nodes = np.empty(p)
    prop_pos = np.empty(p, dtype=np.int64)
    for t in range(iters):
        prop = _rim_nb(cur, u_prop[t], log_phi)
        for a in range(p):
            prop_pos[prop[a]] = a
        for a in range(p):
            j = prop[a]
            changed = False
            for i in range(p):
                if (cur_pos[i] < cur_pos[j]) != (prop_pos[i] < prop_pos[j]):
                    changed = True
                    break
            if changed:
                prop_nodes[j] = _node_ll_nb(S[j], prop[:a], j, counts[j])
            else:
                prop_nodes[j] = cur_nodes[j]
        prop_ll = prop_nodes.sum()
        if prop_ll > best_ll:
            best_ll = prop_ll
            best[:] = prop
        if u_acc[t] < math.exp(min(prop_ll - cur_ll, 0.0)):
            accepted[t] = True
            cur[:] = prop
            cur_pos[:] = prop_pos
            cur_nodes[:] = prop_nodes
            cur_ll = prop_ll
        states[t] = cur
        trace[t] = cur_ll
    return states, trace, accepted, best, best_ll


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------


def _node_fit_np(Sj, preds, j):
    preds = np.asarray(preds, dtype=np.int64)
    if preds.size == 0:
        return np.zeros(0), max(Sj[j, j], 0.0), 0
    G = Sj[np.ix_(preds, preds)]
    b = Sj[preds, j]
    evals, evecs = np.linalg.eigh(G)
    keep = (evals > RCOND * max(evals.max(), 0.0)) & (evals > 0.0)
    V = evecs[:, keep]
    w = V @ ((V.T @ b) / evals[keep])
    rss = Sj[j, j] - w @ b
    return w, max(rss, 0.0), int((~keep).sum())


def _node_ll_np(Sj, preds, j, n):
    if n == 0:
        return 0.0
    _, rss, _ = _node_fit_np(Sj, preds, j)
    return node_loglik_from_rss(rss, n)


def _order_node_ll_np(S, counts, order):
    out = np.zeros(len(order))
    for a, j in enumerate(order):
        out[j] = _node_ll_np(S[j], order[:a], j, counts[j])
    return out


def _order_loglik_np(S, counts, order):
    return float(_order_node_ll_np(S, counts, np.asarray(order)).sum())


def _batch_loglik_np(S, counts, orders):
    return np.array([_order_loglik_np(S, counts, o) for o in orders])


def _displacements_np(u, log_phi):
    t = np.arange(u.shape[0])
    if log_phi == 0.0:
        r = np.floor(u * (t + 1))
    elif log_phi == -np.inf:
        r = np.zeros_like(u)
    else:
        c = -np.expm1((t + 1) * log_phi)
        r = np.floor(np.log1p(-u * c) / log_phi)
    return np.clip(r, 0, t).astype(np.int64)


def _rim_np(reference, u, log_phi):
    r = _displacements_np(np.asarray(u, dtype=np.float64), log_phi)
    out = []
    for t, item in enumerate(np.asarray(reference)):
        out.insert(t - r[t], int(item))
    return np.array(out, dtype=np.int64)


def _inversions_np(q):
    # bottom-up merge; cross inversions counted with searchsorted
    blocks = [np.array([v]) for v in np.asarray(q)]
    count = 0
    while len(blocks) > 1:
        merged = []
        for k in range(0, len(blocks) - 1, 2):
            left, right = blocks[k], blocks[k + 1]
            count += int((left.size - np.searchsorted(left, right, side="right")).sum())
            merged.append(np.sort(np.concatenate([left, right]), kind="mergesort"))
        if len(blocks) % 2:
            merged.append(blocks[-1])
        blocks = merged
    return count


def _mh_chain_np(S, counts, init_order, u_prop, u_acc, log_phi):
    iters = u_prop.shape[0]
    p = init_order.shape[0]
    states = np.empty((iters, p), dtype=np.int64)
    trace = np.empty(iters)
    accepted = np.zeros(iters, dtype=bool)

    cur = np.array(init_order, dtype=np.int64)
    cur_pos = np.argsort(cur)
    cur_nodes = _order_node_ll_np(S, counts, cur)
    cur_ll = cur_nodes.sum()
    best, best_ll = cur.copy(), cur_ll
    for t in range(iters):
        prop = _rim_np(cur, u_prop[t], log_phi)
        prop_pos = np.argsort(prop)
        before_cur = cur_pos[:, None] < cur_pos[None, :]
        before_prop = prop_pos[:, None] < prop_pos[None, :]
        changed = (before_cur != before_prop).any(axis=0)
        prop_nodes = cur_nodes.copy()
        for j in np.flatnonzero(changed):
            prop_nodes[j] = _node_ll_np(S[j], prop[: prop_pos[j]], j, counts[j])
        prop_ll = prop_nodes.sum()
        if prop_ll > best_ll:
            best, best_ll = prop.copy(), prop_ll
        if u_acc[t] < math.exp(min(prop_ll - cur_ll, 0.0)):
            accepted[t] = True
            cur, cur_pos, cur_nodes, cur_ll = prop, prop_pos, prop_nodes, prop_ll
        states[t] = cur
        trace[t] = cur_ll
    return states, trace, accepted, best, best_ll


numba_impl = SimpleNamespace(
    name="numba",
    node_fit=_node_fit_nb,
    order_loglik=_order_loglik_nb,
    batch_loglik=_batch_loglik_nb,
    rim=_rim_nb,
    inversions=_inversions_nb,
    mh_chain=_mh_chain_nb,
)

numpy_impl = SimpleNamespace(
    name="numpy",
    node_fit=_node_fit_np,
    order_loglik=_order_loglik_np,
    batch_loglik=_batch_loglik_np,
    rim=_rim_np,
    inversions=_inversions_np,
    mh_chain=_mh_chain_np,
)

BACKEND = "numba" if USE_NUMBA else "numpy"


def get_backend(name=None):
    """Kernel namespace for ``name`` ("numba" or "numpy"); defaults to ``BACKEND``."""
    name = name or BACKEND
    if name == "numba":
        return numba_impl
    if name == "numpy":
        return numpy_impl
    raise ValueError(f"unknown kernel backend {name!r}")
