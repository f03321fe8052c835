import numpy as np
import pytest

from causal_mcmc.gbn import GbnParams, WeightedDag, intervention_moments, standin_dag, total_effects
from causal_mcmc.simulator import (
    Dataset,
    Experiment,
    InterventionDesign,
    ParseError,
    builtin_designs,
    design_by_name,
    read_dataset,
    read_design,
    sample_parameters,
    simulate,
    write_dataset,
)

from .conftest import random_design


def test_weight_ranges_and_means():
    truth = sample_parameters(standin_dag(), sigma=0.1, seed=3)
    w = np.abs(np.array(truth.dag.weights))
    assert w.min() >= 0.25 and w.max() < 1.0
    assert np.all(truth.params.m == 0.5)
    assert np.all(truth.params.sigma == 0.1)
    signs = np.sign(truth.dag.weights)
    assert (signs > 0).any() and (signs < 0).any()


def test_parameters_deterministic():
    a = sample_parameters(standin_dag(), 0.5, seed=11)
    b = sample_parameters(standin_dag(), 0.5, seed=11)
    assert a.dag == b.dag
    np.testing.assert_array_equal(a.params.weights, b.params.weights)
    c = sample_parameters(standin_dag(), 0.5, seed=12)
    assert c.dag != a.dag


def test_zero_noise_rows_equal_mean():
    truth = sample_parameters(standin_dag(), sigma=0.0, seed=1)
    data = simulate(truth.params, truth.dag, InterventionDesign("wt", [Experiment(5)]), seed=0)
    mu = truth.params.m @ total_effects(truth.params, truth.order)
    np.testing.assert_allclose(data.values, np.tile(mu, (5, 1)), atol=1e-12)


def test_clamped_column_is_exact():
    dag = WeightedDag(2, ((0, 1),), (0.9,))
    params = GbnParams([0.5, 0.5], [0.1, 0.1], [[0, 0.9], [0, 0]])
    data = simulate(params, dag, InterventionDesign("ko", [Experiment(50, (0,), (0.0,))]), seed=4)
    assert np.all(data.values[:, 0] == 0.0)
    assert data.intervened[:, 0].all() and not data.intervened[:, 1].any()


def test_wild_type_covariance_matches_analytic():
    truth = sample_parameters(standin_dag(), sigma=0.5, seed=2)
    n = 100_000
    data = simulate(truth.params, truth.dag, InterventionDesign("wt", [Experiment(n)]), seed=5)
    _, cov = intervention_moments(truth.params, truth.order)
    emp = np.cov(data.values.T, bias=True)
    se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / n)
    assert np.all(np.abs(emp - cov) <= 3.5 * se)


def test_knockout_moments_match():
    truth = sample_parameters(standin_dag(), sigma=0.5, seed=8)
    n = 20_000
    design = InterventionDesign("ko", [Experiment(n, (2, 6), (0.0, 1.0))])
    data = simulate(truth.params, truth.dag, design, seed=6)
    mean, cov = intervention_moments(truth.params, truth.order, [2, 6], [0.0, 1.0])
    se = np.sqrt(np.diag(cov) / n)
    assert np.all(np.abs(data.values.mean(axis=0) - mean) <= 3.5 * se + 1e-15)


def test_simulation_deterministic_and_extensible(rng):
    truth = sample_parameters(standin_dag(), 0.1, seed=0)
    d1 = simulate(truth.params, truth.dag, design_by_name("mixed", 10), seed=9)
    d2 = simulate(truth.params, truth.dag, design_by_name("mixed", 10), seed=9)
    assert d1 == d2
    d4 = simulate(truth.params, truth.dag, design_by_name("multiko", 10), seed=9)
    # the multiple knock-out design extends the mixed one; earlier rows are unchanged
    np.testing.assert_array_equal(d4.values[:20], d1.values)


def test_builtin_designs():
    designs = builtin_designs(10)
    assert list(designs) == ["obs", "mixed", "partial", "multiko"]
    assert designs["obs"].n_samples == 20
    assert all(not e.targets for e in designs["obs"].experiments)
    assert designs["mixed"].n_samples == 10 + 10
    assert designs["partial"].n_samples == 15 + 5
    doubles = [e for e in designs["multiko"].experiments if len(e.targets) == 2]
    assert len(doubles) == 5 and all(e.replicates == 1 for e in doubles)
    assert {tuple(t + 1 for t in e.targets) for e in doubles} == {(1, 2), (1, 3), (4, 5), (5, 6), (3, 8)}
    assert all(v == 0.0 for e in designs["multiko"].experiments for v in e.values)


def test_design_too_small():
    with pytest.raises(ValueError):
        builtin_designs(7)
    with pytest.raises(ValueError):
        design_by_name("partial", 4)
    with pytest.raises(ValueError):
        design_by_name("bogus", 10)


def test_dataset_roundtrip(tmp_path, rng):
    truth = sample_parameters(standin_dag(), 0.1, seed=0)
    data = simulate(truth.params, truth.dag, random_design(rng, 10), seed=1)
    write_dataset(data, tmp_path / "v.tsv", tmp_path / "i.tsv")
    assert read_dataset(tmp_path / "v.tsv", tmp_path / "i.tsv") == data
    header = (tmp_path / "v.tsv").read_text().splitlines()[0]
    assert header == "\t".join(f"G{j}" for j in range(1, 11))


def test_dash_rows_are_wild_type(tmp_path):
    (tmp_path / "v.tsv").write_text("G1\tG2\n1.0\t2.0\n0.0\t1.5\n")
    (tmp_path / "i.tsv").write_text("1\t-\t-\n2\t1\t0.0\n")
    data = read_dataset(tmp_path / "v.tsv", tmp_path / "i.tsv")
    assert data.targets(0) == () and data.targets(1) == (0,)


def test_malformed_values_report_line(tmp_path):
    (tmp_path / "v.tsv").write_text("G1\tG2\n1.0\t2.0\n0.0\tabc\n")
    with pytest.raises(ParseError, match=":3:"):
        read_dataset(tmp_path / "v.tsv")
    (tmp_path / "v.tsv").write_text("G1\tG2\n1.0\t2.0\t3.0\n")
    with pytest.raises(ParseError, match=":2:"):
        read_dataset(tmp_path / "v.tsv")


def test_inconsistent_node_count(tmp_path):
    (tmp_path / "v.tsv").write_text("G1\tG2\n1.0\t2.0\n")
    (tmp_path / "i.tsv").write_text("1\t3\t0.0\n")
    with pytest.raises(ValueError):
        read_dataset(tmp_path / "v.tsv", tmp_path / "i.tsv")


def test_custom_design_file(tmp_path):
    (tmp_path / "d.json").write_text('{"experiments": [{"replicates": 3}, {"targets": [2], "values": [0.1]}]}')
    design = read_design(tmp_path / "d.json", p=3)
    assert design.n_samples == 4
    assert design.experiments[1].targets == (1,)
    with pytest.raises(ValueError):
        read_design(tmp_path / "d.json", p=1)


def test_dataset_derived_counts():
    data = Dataset([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]], [[True, False], [False, True], [False, False]])
    np.testing.assert_array_equal(data.free_counts(), [2, 2])
