"""
Tests for functionalities in _map_exact.
"""

import math

import numpy as np
import pytest

import sbmssl
from sbmssl import Assignment, MapObjectiveParams, ParameterDomainError
import test_helper
from test_helper import TestData


def test_assignment():
    a = Assignment([1, -1, 1, 1])
    assert a.n == 4
    assert list(a.c1) == [0, 2, 3]
    assert list(a.c2) == [1]
    assert -a == Assignment([-1, 1, -1, -1])
    assert a != -a
    assert not a.sigma.flags.writeable

    with pytest.raises(ValueError, match="entries -1 or \\+1"):
        _ = Assignment([1, 0, -1])


@pytest.mark.parametrize(
    "g, sigma, expected",
    [
        (test_helper.cliques(2), [1, 1, -1, -1], 0),
        (test_helper.cliques(2), [1, -1, 1, -1], 2),
        (test_helper.path(3), [1, -1, 1], 2),
        (test_helper.complete(4), [1, 1, -1, -1], 4),
        (test_helper.complete(4), [1, 1, 1, 1], 0),
    ],
)
def test_cut(g, sigma, expected):
    assert sbmssl.cut(g, sigma) == expected
    assert sbmssl.cut(g, Assignment(sigma)) == expected


def test_cut_weighted():
    g = sbmssl.SparseGraph.from_edges(3, [0, 1], [1, 2], [0.5, 2.0])
    assert sbmssl.cut(g, [1, -1, -1]) == 0.5
    assert sbmssl.cut(g, [1, 1, -1]) == 2.0


def test_disagreement_count():
    labels = sbmssl.OracleLabels.from_vector([1, 0, -1, 0])
    assert sbmssl.disagreement_count(labels, [1, 1, -1, -1]) == 0
    assert sbmssl.disagreement_count(labels, [-1, 1, 1, -1]) == 2


def test_map_objective():
    # Test without edges
    # ------------------
    g = sbmssl.SparseGraph.empty(2)
    labels = sbmssl.OracleLabels.from_vector([1, 0])
    params = MapObjectiveParams(tau=0.1, lam=1.0)
    assert sbmssl.map_objective(g, [-1, -1], labels, params) == pytest.approx(1.0)
    assert sbmssl.map_objective(g, [1, -1], labels, params) == pytest.approx(-0.1)

    # Test a balanced cut of K4
    # -------------------------
    g = test_helper.complete(4)
    no_labels = sbmssl.OracleLabels.unlabeled(4)
    params = MapObjectiveParams(tau=0.0)
    assert sbmssl.map_objective(g, [1, -1, 1, -1], no_labels, params) == 4


def test_map_objective_invalid():
    g = test_helper.path(2)
    labels = sbmssl.OracleLabels.from_vector([1, 0])
    with pytest.raises(ParameterDomainError, match="map_objective_constrained"):
        _ = sbmssl.map_objective(g, [1, 1], labels, MapObjectiveParams(0.1, math.inf))
    with pytest.raises(ValueError, match="length of assignment should be 2"):
        _ = sbmssl.map_objective(g, [1, 1, 1], labels, MapObjectiveParams(0.1))
    with pytest.raises(ParameterDomainError, match="Invalid value for lam"):
        _ = MapObjectiveParams(tau=0.1, lam=-1.0)


def test_map_objective_constrained():
    g = test_helper.path(3)
    labels = sbmssl.OracleLabels.from_vector([1, 0, -1])
    assert sbmssl.map_objective_constrained(g, [1, 1, -1], labels, 0.1) == (
        pytest.approx(1 - 0.1 * 2)
    )
    assert sbmssl.map_objective_constrained(g, [1, 1, 1], labels, 0.1) == (
        sbmssl.INFEASIBLE
    )
    assert sbmssl.INFEASIBLE == math.inf


def test_generalized_modularity():
    g, _ = sbmssl.sample_ssbm(TestData.small_model, rng_seed=1)
    labels = sbmssl.OracleLabels.unlabeled(g.n)
    tau = 0.3
    total = g.to_dense().sum()
    assignments = test_helper.all_assignments(g.n)
    objectives = np.array(
        [
            sbmssl.map_objective(g, sigma, labels, MapObjectiveParams(tau))
            for sigma in assignments
        ]
    )
    modularities = np.array(
        [sbmssl.generalized_modularity(g, sigma, tau) for sigma in assignments]
    )
    assert np.allclose(modularities, total - tau * g.n**2 - 2 * objectives)

    # Same optimal partitions
    maximizers = np.flatnonzero(modularities >= modularities.max() - 1e-9)
    minimizers = np.flatnonzero(objectives <= objectives.min() + 1e-9)
    assert np.array_equal(maximizers, minimizers)


def test_partition_identities():
    g, _ = sbmssl.sample_ssbm(TestData.small_model, rng_seed=2)
    labels = sbmssl.OracleLabels.from_vector([1, 0, 0, -1, 0, 1, 0, -1])
    adjacency = g.to_dense()
    for sigma in test_helper.all_assignments(g.n):
        a = Assignment(sigma)
        assert len(a.c1) * len(a.c2) == (g.n**2 - sigma.sum() ** 2) / 4
        assert sbmssl.cut(g, sigma) == pytest.approx(
            g.num_edges / 2 - sigma @ adjacency @ sigma / 4
        )
        projected = np.where(labels.labeled_mask, sigma, 0)
        assert sbmssl.disagreement_count(labels, sigma) == pytest.approx(
            np.sum((labels.s - projected) ** 2) / 4
        )


def test_log_posterior():
    # The log posterior is -log(p_in (1 - p_out) / (p_out (1 - p_in))) times the
    # penalized cut with the MAP parameters
    model = TestData.small_model
    g, _ = sbmssl.sample_ssbm(model, rng_seed=2)
    labels = sbmssl.OracleLabels.from_vector([1, 0, 0, -1, 0, 1, 0, -1])
    params = MapObjectiveParams.from_model(model)
    log_odds = math.log(16)
    for sigma in test_helper.all_assignments(g.n):
        posterior = sbmssl.log_posterior(g, sigma, labels, model)
        objective = sbmssl.map_objective(g, sigma, labels, params)
        assert posterior == pytest.approx(-log_odds * objective, abs=1e-9)


def test_log_posterior_perfect_oracle():
    model = sbmssl.ModelParams(n=3, p_in=0.8, p_out=0.2, eta=0.5, theta=0.0)
    g = test_helper.path(3)
    labels = sbmssl.OracleLabels.from_vector([1, 0, 0])
    assert sbmssl.log_posterior(g, [-1, 1, 1], labels, model) == -math.inf
    assert math.isfinite(sbmssl.log_posterior(g, [1, 1, 1], labels, model))


# Test the brute force minimizers
# -------------------------------


def test_brute_force_single_node():
    g = sbmssl.SparseGraph.empty(1)
    labels = sbmssl.OracleLabels.from_vector([1])
    result = sbmssl.brute_force_map(g, labels, MapObjectiveParams(tau=0.1, lam=1.0))
    assert list(result.sigma) == [1]


def test_brute_force_two_triangles():
    g = test_helper.cliques(3)
    labels = sbmssl.OracleLabels.unlabeled(6)
    params = MapObjectiveParams(tau=sbmssl.tau_of(0.5, 0.1))
    minimizers = sbmssl.brute_force_minimizers(g, labels, params)
    # Node 0 is fixed to +1 without labels, so the split is found once
    assert minimizers == [Assignment([1, 1, 1, -1, -1, -1])]


def test_brute_force_ties():
    g = sbmssl.SparseGraph.empty(2)
    labels = sbmssl.OracleLabels.from_vector([1, 0])
    params = MapObjectiveParams(tau=0.0, lam=1.0)
    minimizers = sbmssl.brute_force_minimizers(g, labels, params)
    assert minimizers == [Assignment([1, -1]), Assignment([1, 1])]
    assert sbmssl.brute_force_map(g, labels, params) == Assignment([1, -1])


def test_brute_force_perfect_oracle():
    # An infinite lambda enforces the labels even against the graph
    g = test_helper.cliques(3)
    labels = sbmssl.OracleLabels.from_vector([1, -1, 0, 0, 0, 0])
    tau = sbmssl.tau_of(0.5, 0.1)
    result = sbmssl.brute_force_map(g, labels, MapObjectiveParams(tau, math.inf))
    assert result.sigma[0] == 1
    assert result.sigma[1] == -1

    values = [
        sbmssl.map_objective_constrained(g, sigma, labels, tau)
        for sigma in test_helper.all_assignments(6)
    ]
    expected = test_helper.all_assignments(6)[int(np.argmin(values))]
    assert np.array_equal(result.sigma, expected)


@pytest.mark.parametrize("seed", range(50))
def test_brute_force_is_map(seed):
    # The minimizers of the penalized cut maximize the posterior
    model = TestData.small_model
    g, truth = sbmssl.sample_ssbm(model, rng_seed=seed)
    labels = sbmssl.sample_oracle(truth, model.eta, model.theta, rng_seed=seed + 100)
    minimizers = sbmssl.brute_force_minimizers(g, labels, model)

    assignments = test_helper.all_assignments(g.n)
    if labels.num_labeled == 0:
        assignments = [sigma for sigma in assignments if sigma[0] == 1]
    posteriors = np.array(
        [sbmssl.log_posterior(g, sigma, labels, model) for sigma in assignments]
    )
    best = posteriors.max()
    maximizers = [
        Assignment(sigma)
        for sigma, posterior in zip(assignments, posteriors)
        if posterior >= best - 1e-9 * max(1.0, abs(best))
    ]
    assert minimizers == maximizers


def test_brute_force_invalid():
    g = sbmssl.SparseGraph.empty(21)
    labels = sbmssl.OracleLabels.unlabeled(21)
    with pytest.raises(ParameterDomainError, match="limited to n <= 20, not 21"):
        _ = sbmssl.brute_force_map(g, labels, MapObjectiveParams(tau=0.1))
    with pytest.raises(ParameterDomainError, match="limited to n <= 5"):
        _ = sbmssl.brute_force_minimizers(
            g, labels, MapObjectiveParams(tau=0.1), max_n=5
        )
