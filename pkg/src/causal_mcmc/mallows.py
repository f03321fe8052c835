"""Mallows distribution over node orderings under the Kendall distance.

The density of ``candidate`` around ``reference`` is ``phi**d / Z`` with
``phi = exp(-1/eta)``. Small ``eta`` concentrates mass on the reference;
``eta -> inf`` (``phi = 1``) is uniform. All arithmetic is in log space.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gbn import as_ordering, positions


@dataclass(frozen=True, eq=False)
class MallowsParams:
    eta: float
    reference: np.ndarray

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        object.__setattr__(self, "reference", as_ordering(self.reference))

    @property
    def log_phi(self):
        return -1.0 / self.eta

    @property
    def phi(self):
        return math.exp(self.log_phi)

    @property
    def p(self):
        return self.reference.size


def kendall_distance(a, b, backend=None):
    """Number of node pairs placed in opposite relative order by ``a`` and ``b``."""
    a = as_ordering(a)
    b = as_ordering(b)
    if a.size != b.size:
        raise ValueError(f"orderings differ in length ({a.size} vs {b.size})")
    return int(kernels.get_backend(backend).inversions(positions(b)[a]))


def log_normalizer(p, log_phi):
    """``log Z = sum_{j=1..p} log(1 + phi + ... + phi^(j-1))``."""
    if log_phi == 0.0:
        return math.lgamma(p + 1)
    total = 0.0
    for j in range(1, p + 1):
        total += math.log(-math.expm1(j * log_phi)) - math.log(-math.expm1(log_phi))
    return total


def log_density(candidate, params):
    d = kendall_distance(candidate, params.reference)
    return d * params.log_phi - log_normalizer(params.p, params.log_phi)


def sample(params, rng=None, backend=None):
    """Draw one ordering with the repeated insertion model.

    ``rng`` is a ``numpy.random.Generator`` or an integer seed.
    """
    rng = np.random.default_rng(rng)
    u = rng.random(params.p)
    return kernels.get_backend(backend).rim(params.reference, u, params.log_phi)


def sample_many(params, n, rng=None, backend=None):
    """``n`` independent draws as an ``(n, p)`` array."""
    rng = np.random.default_rng(rng)
    impl = kernels.get_backend(backend)
    u = rng.random((n, params.p))
    return np.array([impl.rim(params.reference, row, params.log_phi) for row in u], dtype=np.int64)
