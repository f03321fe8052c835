"""Metropolis-Hastings over causal orderings with a Mallows proposal.

The target is the profile likelihood ``exp(max_theta loglik)`` of each
ordering under the saturated model. Because the Mallows kernel is symmetric
the acceptance probability reduces to ``min(1, exp(l* - l))``.
"""
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .gbn import GbnParams, total_effects
from .likelihood import order_weights

DEFAULT_ETA_GRID = tuple(round(0.2 + 0.1 * k, 1) for k in range(14))


class ChainError(RuntimeError):
    pass


class UnidentifiableOrderingWarning(UserWarning):
    """Observation-only data carry no information about the ordering."""


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 50_000
    burn_in: int = 5_000
    thin: int = 50
    eta_grid: tuple = DEFAULT_ETA_GRID
    trial_iterations: int = 1_000
    target_acceptance: tuple = (0.3, 0.4)
    seed: int = 0
    mode: str = "mallows"
    eta: float = None  # fixed temperature; skips tuning when set

    def __post_init__(self):
        object.__setattr__(self, "eta_grid", tuple(float(e) for e in self.eta_grid))
        object.__setattr__(self, "target_acceptance", tuple(float(t) for t in self.target_acceptance))
        if self.mode not in ("mallows", "uniform"):
            raise ValueError(f"unknown chain mode {self.mode!r}")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.mode == "mallows" and self.eta is None and not self.eta_grid:
            raise ValueError("eta_grid must be non-empty in mallows mode")
        if any(e <= 0 for e in self.eta_grid) or (self.eta is not None and self.eta <= 0):
            raise ValueError("temperatures must be positive")

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self):
        d = asdict(self)
        d["eta_grid"] = list(self.eta_grid)
        d["target_acceptance"] = list(self.target_acceptance)
        return d


@dataclass(eq=False)
class ChainResult:
    config: ChainConfig
    orders: np.ndarray          # retained orderings, (n, p)
    logliks: np.ndarray         # their profile log-likelihoods
    effects: np.ndarray         # per-sample total effect matrices, (n, p, p)
    trace: np.ndarray           # log-likelihood of the chain state after each iteration
    accepted: np.ndarray        # acceptance flag per iteration
    acceptance_rate: float
    chosen_eta: float
    best_order: np.ndarray
    best_loglik: float
    best_effects: np.ndarray
    trial_rates: dict = field(default_factory=dict)

    @property
    def order_distribution(self):
        return order_distribution(self.orders)

    @property
    def posterior_effects(self):
        return self.effects.mean(axis=0)


def _stream(seed, tag):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag,)))


# stream tags inside a chain
_INIT, _PROPOSE, _ACCEPT, _UNIFORM, _TRIAL = range(5)


def order_distribution(orders):
    """``D[i, a]``: fraction of orderings placing node ``i`` at position ``a``."""
    orders = np.asarray(orders)
    n, p = orders.shape
    D = np.zeros((p, p))
    for a in range(p):
        D[:, a] = np.bincount(orders[:, a], minlength=p)
    return D / n


def _gram(data):
    S, counts, _ = kernels.gram_stack(data.values, data.intervened)
    if counts.sum() == 0:
        raise ChainError("every node is intervened in every sample; nothing to fit")
    return S, counts


def _mallows_run(S, counts, iterations, eta, seed, tag_offset=0, backend=None):
    impl = kernels.get_backend(backend)
    p = counts.size
    init = _stream(seed, _INIT + tag_offset).permutation(p).astype(np.int64)
    u_prop = _stream(seed, _PROPOSE + tag_offset).random((iterations, p))
    u_acc = _stream(seed, _ACCEPT + tag_offset).random(iterations)
    return impl.mh_chain(S, counts, init, u_prop, u_acc, -1.0 / eta)


def choose_eta(grid, rates, target=(0.3, 0.4)):
    """Grid value whose acceptance rate is nearest the target midpoint; ties go to the smaller eta."""
    if len(grid) == 0:
        raise ValueError("empty temperature grid")
    mid = 0.5 * (target[0] + target[1])
    best = None
    for eta, rate in sorted(zip(grid, rates)):
        gap = abs(rate - mid)
        if best is None or gap < best[0] - 1e-12:
            best = (gap, eta)
    return best[1]


def tune_temperature(data, config, backend=None):
    """Run a short trial chain per grid temperature and pick one by acceptance rate.

    Returns ``(eta, {eta: rate})``.
    """
    if config.mode != "mallows":
        raise ValueError("temperature tuning only applies to mallows mode")
    if not config.eta_grid:
        raise ValueError("empty temperature grid")
    S, counts = _gram(data)
    rates = {}
    for k, eta in enumerate(config.eta_grid):
        tag = 100 + k * 10
        _, _, accepted, _, _ = _mallows_run(
            S, counts, config.trial_iterations, eta, config.seed, tag_offset=tag, backend=backend
        )
        rates[eta] = float(accepted.mean())
    eta = choose_eta(list(rates), list(rates.values()), config.target_acceptance)
    return eta, rates


def retained_indices(config):
    """Indices into the per-iteration arrays of the states kept after burn-in and thinning."""
    its = np.arange(1, config.iterations + 1)
    keep = (its > config.burn_in) & ((its - config.burn_in) % config.thin == 0)
    return np.flatnonzero(keep)


def _effects_for(S, counts, order, cache, backend):
    key = tuple(int(v) for v in order)
    if key not in cache:
        p = len(key)
        W = order_weights(S, counts, np.asarray(key), backend)
        params = GbnParams.from_label_weights(np.zeros(p), np.ones(p), W, key)
        cache[key] = total_effects(params, key)
    return cache[key]


def run_chain(data, config, backend=None):
    """Sample orderings for ``data`` and collect per-sample total effects."""
    S, counts = _gram(data)
    p = data.p
    impl = kernels.get_backend(backend)
    trial_rates = {}
    if config.mode == "mallows":
        if not data.has_interventions():
            warnings.warn(
                "observation-only data: the likelihood is invariant to the ordering, "
                "so orderings are unidentifiable",
                UnidentifiableOrderingWarning,
                stacklevel=2,
            )
        eta = config.eta
        if eta is None:
            eta, trial_rates = tune_temperature(data, config, backend)
        states, trace, accepted, best, best_ll = _mallows_run(
            S, counts, config.iterations, eta, config.seed, backend=backend
        )
    else:
        eta = None
        rng = _stream(config.seed, _UNIFORM)
        states = np.argsort(rng.random((config.iterations, p)), axis=1).astype(np.int64)
        trace = impl.batch_loglik(S, counts, states)
        accepted = np.ones(config.iterations, dtype=bool)
        k = int(np.argmax(trace))
        best, best_ll = states[k].copy(), float(trace[k])

    keep = retained_indices(config)
    orders = states[keep]
    cache = {}
    effects = np.array([_effects_for(S, counts, o, cache, backend) for o in orders])
    return ChainResult(
        config=config,
        orders=orders,
        logliks=trace[keep].copy(),
        effects=effects,
        trace=np.asarray(trace),
        accepted=np.asarray(accepted),
        acceptance_rate=float(np.mean(accepted)),
        chosen_eta=eta,
        best_order=np.asarray(best),
        best_loglik=float(best_ll),
        best_effects=_effects_for(S, counts, best, cache, backend),
        trial_rates=trial_rates,
    )


def summarize(result):
    """Plain-dict summary of a chain: order heatmap, effect estimates, diagnostics."""
    if len(result.orders) == 0:
        raise ValueError("chain retained no samples")
    return {
        "order_distribution": result.order_distribution,
        "posterior_effects": result.posterior_effects,
        "best_effects": result.best_effects,
        "best_order": result.best_order,
        "best_loglik": result.best_loglik,
        "acceptance_rate": result.acceptance_rate,
        "chosen_eta": result.chosen_eta,
        "trace": result.trace,
        "n_samples": len(result.orders),
    }


# --------------------------------------------------------------------------
# serialisation
# --------------------------------------------------------------------------


def write_matrix(path, M):
    lines = ["\t".join(repr(float(v)) for v in row) for row in np.asarray(M)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix(path):
    rows = [
        [float(x) for x in line.split("\t")]
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    return np.array(rows, dtype=np.float64)


def write_chain(result, directory, trace=True):
    """Write a chain as ``order_distribution.tsv``, ``posterior_effects.tsv``,
    ``best_effects.tsv``, ``trace.tsv`` and ``meta.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(d / "order_distribution.tsv", result.order_distribution)
    write_matrix(d / "posterior_effects.tsv", result.posterior_effects)
    write_matrix(d / "best_effects.tsv", result.best_effects)
    if trace:
        lines = ["iteration\tloglik\taccepted"]
        lines += [
            f"{t + 1}\t{float(ll)!r}\t{int(a)}"
            for t, (ll, a) in enumerate(zip(result.trace, result.accepted))
        ]
        (d / "trace.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = {
        "config": result.config.to_dict(),
        "chosen_eta": result.chosen_eta,
        "acceptance_rate": result.acceptance_rate,
        "trial_acceptance": {repr(k): v for k, v in result.trial_rates.items()},
        "best_order": [int(v) + 1 for v in result.best_order],
        "best_loglik": result.best_loglik,
        "n_samples": int(len(result.orders)),
    }
    (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
