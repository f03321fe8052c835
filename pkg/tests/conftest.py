import numpy as np
import pytest

from causal_mcmc.gbn import GbnParams, WeightedDag
from causal_mcmc.simulator import Experiment, InterventionDesign, simulate


def random_dag(rng, p, density=0.5):
    edges, weights = [], []
    for i in range(p):
        for j in range(i + 1, p):
            if rng.random() < density:
                edges.append((i, j))
                weights.append(rng.choice([-1, 1]) * rng.uniform(0.25, 1.0))
    # relabel so label order is not the causal order
    perm = rng.permutation(p)
    edges = [(int(perm[i]), int(perm[j])) for i, j in edges]
    return WeightedDag(p, tuple(edges), tuple(weights))


def random_params(rng, dag, sigma=None):
    order = dag.topological_order()
    sig = rng.uniform(0.5, 1.5, dag.p) if sigma is None else np.full(dag.p, sigma)
    return GbnParams.from_label_weights(rng.normal(0, 1, dag.p), sig, dag.matrix(), order), order


def random_design(rng, p, n_wt=6):
    exps = [Experiment(n_wt)]
    for j in range(p):
        if rng.random() < 0.7:
            exps.append(Experiment(int(rng.integers(1, 3)), (j,), (float(rng.normal()),)))
    if p >= 3:
        a, b = rng.choice(p, 2, replace=False)
        exps.append(Experiment(1, (int(a), int(b)), (0.0, 0.5)))
    return InterventionDesign("random", exps)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def instance(rng):
    """Random 4-node DAG, parameters, and a mixed dataset."""
    dag = random_dag(rng, 4)
    params, order = random_params(rng, dag)
    data = simulate(params, dag, random_design(rng, 4), seed=7)
    return dag, params, order, data


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
