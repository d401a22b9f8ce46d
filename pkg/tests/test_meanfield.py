"""
Tests for functionalities in _meanfield.
"""

import math

import numpy as np
import pytest

import sbmssl
from sbmssl import ModelParams, ParameterDomainError
import test_helper
from test_helper import TestData

MODEL_1500 = ModelParams(n=1500, p_in=0.03, p_out=0.02, eta=0.09, theta=0.01)


def test_meanfield_solution():
    solution = sbmssl.meanfield_solution(MODEL_1500, 5.285)
    assert solution.gamma1 == pytest.approx(0.0559, abs=1e-4)
    assert solution.gamma2 == pytest.approx((5.285 + 6) / (5.285 + 7.5))
    assert solution.gamma2 == pytest.approx(0.8827, abs=1e-4)
    assert solution.delta == pytest.approx(0.8)
    assert solution.alpha_mf == pytest.approx(7.5)

    perfect = sbmssl.meanfield_solution(MODEL_1500, math.inf)
    assert (perfect.gamma1, perfect.gamma2) == (-1.0, 1.0)


def test_meanfield_solution_scores():
    model = TestData.meanfield_model
    _, truth, labels = test_helper.meanfield_instance(model)
    solution = sbmssl.meanfield_solution(model, model.lam)
    scores = solution.scores(truth, labels)

    # Wrong labels first, then correct ones, in each cluster
    assert scores[0] == pytest.approx(solution.gamma1)
    assert scores[2] == pytest.approx(solution.gamma2)
    assert scores[50] == pytest.approx(solution.delta)
    assert scores[100] == pytest.approx(-solution.gamma1)
    assert scores[150] == pytest.approx(-solution.delta)


def test_meanfield_solution_solves_system():
    model = TestData.meanfield_model
    _, truth, labels = test_helper.meanfield_instance(model)
    lam = 3.0
    x_mf = sbmssl.meanfield_solution(model, lam).scores(truth, labels)
    system = test_helper.meanfield_system(model, labels, lam)
    assert np.allclose(system @ x_mf, lam * labels.s, atol=1e-9)


def test_meanfield_solution_invalid():
    with pytest.raises(ParameterDomainError, match="lam = 0"):
        _ = sbmssl.meanfield_solution(MODEL_1500, 0.0)
    with pytest.raises(ParameterDomainError, match="even number of nodes"):
        _ = sbmssl.meanfield_solution(
            ModelParams(n=11, p_in=0.5, p_out=0.1, eta=0.1), 1.0
        )


def test_classification_conditions():
    threshold = (1 - 2 * MODEL_1500.s) * MODEL_1500.alpha_mf
    report = sbmssl.classification_conditions(MODEL_1500, threshold / 2)
    assert report.unlabeled_ok
    assert report.correct_labeled_ok
    assert report.wrong_labeled_ok

    # At the threshold wrong labels are no longer corrected
    report = sbmssl.classification_conditions(MODEL_1500, threshold)
    assert not report.wrong_labeled_ok
    assert report.correct_labeled_ok

    # A misleading oracle
    model = ModelParams(n=1500, p_in=0.03, p_out=0.02, eta=0.01, theta=0.09)
    report = sbmssl.classification_conditions(model, 1.0)
    assert not report.unlabeled_ok
    assert not report.correct_labeled_ok
    assert not report.wrong_labeled_ok

    # Strong enough labels survive a misleading oracle
    report = sbmssl.classification_conditions(model, 10.0)
    assert report.correct_labeled_ok
    assert not report.unlabeled_ok


# Test the spectrum
# -----------------


def test_rank2_roots():
    plus, minus = sbmssl.rank2_roots(10.0, 2.0, 200, 200)
    assert plus == pytest.approx(8.0)
    assert minus == pytest.approx(0.0)

    # Both roots solve t (t + lam) - c (t + lam (1 - m / n))
    c, lam, m, n = 7.5, 5.0, 150, 1500
    for t in sbmssl.rank2_roots(c, lam, m, n):
        assert t * (t + lam) - c * (t + lam * (1 - m / n)) == pytest.approx(
            0.0, abs=1e-9
        )


@pytest.mark.parametrize("seed", range(20))
def test_rank2_char_poly(seed):
    rng = np.random.default_rng(seed)
    n = 2 * int(rng.integers(2, 7))
    m = 2 * int(rng.integers(1, n // 2))
    b, a = np.sort(rng.uniform(0.05, 1.0, size=2))
    lam = rng.uniform(0.1, 5.0)
    sigma0 = np.repeat([1, -1], n // 2)
    matrix = np.where(np.equal.outer(sigma0, sigma0), a, b)
    labeled = np.zeros(n)
    labeled[: m // 2] = 1
    labeled[n // 2 : n // 2 + m // 2] = 1

    for t in rng.uniform(-3.0, 3.0, size=10):
        expected = np.linalg.det(t * np.eye(n) + lam * np.diag(labeled) - matrix)
        result = sbmssl.rank2_char_poly(t, a, b, lam, m, n)
        assert result == pytest.approx(expected, rel=1e-8)


def test_mf_spectrum():
    model = TestData.meanfield_model
    _, _, labels = test_helper.meanfield_instance(model)
    lam = model.lam
    spectrum = sbmssl.mf_spectrum(model, lam)
    assert len(spectrum.eigenvalues) == model.n

    expected = np.linalg.eigvalsh(test_helper.meanfield_system(model, labels, lam))
    assert np.allclose(spectrum.eigenvalues, expected, atol=1e-8)
    assert spectrum.eigenvalues[0] == pytest.approx(
        model.alpha_mf - spectrum.t2_plus
    )


def test_mf_spectrum_all_labeled():
    model = ModelParams(n=200, p_in=0.2, p_out=0.1, eta=0.8, theta=0.2)
    spectrum = sbmssl.mf_spectrum(model, 2.0)
    assert spectrum.t2_plus == pytest.approx(model.alpha_mf - 2.0)
    assert spectrum.t2_minus == pytest.approx(0.0, abs=1e-12)
    assert len(spectrum.eigenvalues) == 200

    _, truth = sbmssl.expected_graph(model)
    labels = sbmssl.ordered_oracle(truth, model.eta, model.theta)
    expected = np.linalg.eigvalsh(test_helper.meanfield_system(model, labels, 2.0))
    assert np.allclose(spectrum.eigenvalues, expected, atol=1e-8)


def test_mf_spectrum_invalid():
    with pytest.raises(ParameterDomainError, match="finite lam"):
        _ = sbmssl.mf_spectrum(MODEL_1500, math.inf)
    with pytest.raises(ParameterDomainError, match="Invalid value for labeled_count"):
        _ = sbmssl.mf_spectrum(MODEL_1500, 1.0, labeled_count=1501)


def test_spectral_gap():
    assert sbmssl.spectral_gap(MODEL_1500, 0.0) == 0.0
    assert sbmssl.spectral_gap(MODEL_1500, math.inf) == pytest.approx(0.75)

    # All nodes labeled and lam = alpha_mf give a gap of alpha_mf
    model = ModelParams(n=200, p_in=0.2, p_out=0.1, eta=0.8, theta=0.2)
    assert sbmssl.spectral_gap(model, model.alpha_mf) == pytest.approx(
        model.alpha_mf
    )

    model = TestData.meanfield_model
    gap = sbmssl.spectral_gap(model, model.lam)
    assert gap == pytest.approx(0.148, abs=1e-3)
    assert gap == pytest.approx(sbmssl.mf_spectrum(model, model.lam).eigenvalues[0])


def test_spectral_gap_increasing():
    gaps = [sbmssl.spectral_gap(MODEL_1500, lam) for lam in [0.5, 1, 5, 50, 500]]
    assert gaps == sorted(gaps)
    assert gaps[-1] < sbmssl.spectral_gap(MODEL_1500, math.inf)


def test_spectral_gap_increasing_labeled_fraction():
    gaps = []
    for fraction in [0.05, 0.1, 0.2, 0.4, 0.8]:
        model = ModelParams(
            n=1500, p_in=0.03, p_out=0.02, eta=0.9 * fraction, theta=0.1 * fraction
        )
        gaps.append(sbmssl.spectral_gap(model, 2.0))
    assert np.all(np.diff(gaps) > 0)


# Test the bounds
# ---------------


def test_concentration_bound():
    assert sbmssl.concentration_bound(MODEL_1500, 0.0, C=1.0) == math.inf
    no_labels = ModelParams(n=1500, p_in=0.03, p_out=0.02)
    assert sbmssl.concentration_bound(no_labels, 1.0, C=1.0) == math.inf

    bound = sbmssl.concentration_bound(MODEL_1500, 5.0, C=2.0)
    expected = (
        2.0
        * math.sqrt(MODEL_1500.d)
        / (sbmssl.spectral_gap(MODEL_1500, 5.0) * 2)
    )
    # The bound is C sqrt(d) / (2 gap)
    assert bound == pytest.approx(expected)

    limit = sbmssl.concentration_bound(MODEL_1500, math.inf, C=1.0)
    assert limit == pytest.approx(math.sqrt(37.5) / (2 * 7.5 * 0.1))
    assert sbmssl.concentration_bound(MODEL_1500, 1e6, C=1.0) == pytest.approx(
        limit, rel=1e-4
    )


def test_misclassification_bound():
    bound = sbmssl.misclassification_bound(MODEL_1500, 5.0, C=1.0, clip=False)
    assert bound == pytest.approx(
        sbmssl.concentration_bound(MODEL_1500, 5.0, C=1.0) ** 2
    )
    assert sbmssl.misclassification_bound(MODEL_1500, 5.0, C=1.0) == min(bound, 1.0)
    assert sbmssl.misclassification_bound(MODEL_1500, 0.0, C=1.0) == 1.0


def test_accurate_oracle_bound():
    model = ModelParams(n=2000, p_in=0.05, p_out=0.01, eta=0.09, theta=0.01)
    limit = sbmssl.accurate_oracle_bound(model, C=1.0)
    expected = (0.06 / 0.04) ** 2 / (4 * 0.1**2 * model.d)
    assert limit == pytest.approx(expected)

    # Large lam approaches the limit
    large = sbmssl.misclassification_bound(
        model, 1e3 * model.alpha_mf, C=1.0, clip=False
    )
    assert large == pytest.approx(limit, rel=0.05)
    infinite = sbmssl.misclassification_bound(model, math.inf, C=1.0, clip=False)
    assert infinite == pytest.approx(limit)

    with pytest.raises(ParameterDomainError, match="p_in should be larger"):
        _ = sbmssl.accurate_oracle_bound(ModelParams(n=10, p_in=0.1, p_out=0.1), 1.0)


def test_snr():
    assert sbmssl.snr(4, 1) == pytest.approx(1.8)
    with pytest.raises(ParameterDomainError, match="c_in should be at least c_out"):
        _ = sbmssl.snr(1, 4)


def test_detection_threshold():
    assert sbmssl.detection_threshold(1.0, 0.1) == pytest.approx(400)
    assert sbmssl.detection_threshold(1.0, 0.0) == math.inf


def test_epsilon_bad_nodes():
    x = [0.0, 1.0, 2.0, -0.2]
    x_mf = [0.0, 0.0, 0.0, 0.0]
    assert sbmssl.epsilon_bad_nodes(x, x_mf, 0.5) == 2
    assert sbmssl.epsilon_bad_nodes(x, x_mf, 0.1) == 3
    assert sbmssl.epsilon_bad_nodes(x, x_mf, 0.1, mask=[True, True, False, True]) == 2

    with pytest.raises(ValueError, match="length of x_mf should be 4"):
        _ = sbmssl.epsilon_bad_nodes(x, [0.0], 0.1)


def test_empirical_concentration_meanfield_graph():
    # On the expected graph the solution is the mean-field one
    model = TestData.meanfield_model
    g, truth, labels = test_helper.meanfield_instance(model)
    distance = sbmssl.empirical_concentration(g, labels, truth, model, model.lam)
    assert distance < 1e-3


def test_empirical_concentration_sampled():
    model = ModelParams(n=1000, p_in=0.05, p_out=0.01, eta=0.09, theta=0.01)
    g, truth = sbmssl.sample_ssbm(model, rng_seed=3)
    labels = sbmssl.sample_oracle(truth, model.eta, model.theta, rng_seed=4)
    distance = sbmssl.empirical_concentration(g, labels, truth, model, model.lam)
    assert 0 < distance < 1


def test_empirical_concentration_invalid():
    model = ModelParams(n=6, p_in=0.5, p_out=0.1)
    g = test_helper.cliques(3)
    labels = sbmssl.OracleLabels.unlabeled(6)
    with pytest.raises(ParameterDomainError, match="undefined without labels"):
        _ = sbmssl.empirical_concentration(g, labels, np.repeat([1, -1], 3), model, 1)
