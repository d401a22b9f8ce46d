"""
Tests for functionalities in _harness.
"""

import json
import math

import numpy as np
import pandas as pd
import pytest

import sbmssl
from sbmssl import (
    Algorithm,
    ExperimentSpec,
    ParameterDomainError,
    Scope,
    SpecFormatError,
)


def _small_spec(**kwargs) -> ExperimentSpec:
    values = {
        "n": (40,),
        "p_in": (0.5,),
        "p_out": (0.1,),
        "eta": (0.2,),
        "theta": (0.05,),
        "algorithms": (
            Algorithm.ALGORITHM1,
            Algorithm.SPECTRAL,
            Algorithm.LABEL_SPREADING,
        ),
        "replications": 3,
        "base_seed": 7,
    }
    values.update(kwargs)
    return ExperimentSpec(**values)


def _row(
    accuracy: float, algorithm: str = "algorithm1", **kwargs
) -> sbmssl.ResultRow:
    values = {
        "n": 100,
        "p_in": 0.3,
        "p_out": 0.1,
        "eta": 0.1,
        "theta": 0.0,
        "tau": 0.2,
        "lam": math.inf,
        "alpha_policy": "spectral-norm",
        "algorithm": algorithm,
        "seed": 1,
        "replication": 0,
        "accuracy": accuracy,
    }
    values.update(kwargs)
    return sbmssl.ResultRow(**values)


# Test accuracy
# -------------


def test_accuracy():
    truth = sbmssl.GroundTruth(np.array([1, 1, 1, -1]))
    assert sbmssl.accuracy([1, 1, -1, -1], truth) == 0.75
    assert sbmssl.accuracy([-1, -1, -1, 1], truth) == 0.0
    assert sbmssl.accuracy([-1, -1, -1, 1], truth, allow_flip=True) == 1.0
    assert sbmssl.accuracy([1, 1, -1, -1], truth, allow_flip=True) == 0.75

    # Scope as indices or as a mask
    assert sbmssl.accuracy([1, 1, -1, -1], truth, scope=[2, 3]) == 0.5
    mask = np.array([False, False, True, True])
    assert sbmssl.accuracy([1, 1, -1, -1], truth, scope=mask) == 0.5


def test_accuracy_complement():
    rng = np.random.default_rng(3)
    truth = sbmssl.GroundTruth(np.repeat([1, -1], 50))
    labels = sbmssl.sample_oracle(truth, eta=0.2, theta=0.05, rng_seed=4)
    pred = rng.choice([-1, 1], size=100)
    scope = labels.unlabeled_mask
    total = sbmssl.accuracy(pred, truth, scope) + sbmssl.accuracy(-pred, truth, scope)
    assert total == pytest.approx(1.0)


def test_accuracy_invalid():
    with pytest.raises(ParameterDomainError, match="empty scope"):
        _ = sbmssl.accuracy([1, -1], [1, -1], scope=[False, False])
    with pytest.raises(ValueError, match="should have the same length"):
        _ = sbmssl.accuracy([1, -1, 1], [1, -1])


def test_derive_seed():
    seed = sbmssl.derive_seed(0, 1500, 0.03, "oracle")
    assert seed == sbmssl.derive_seed(0, 1500, 0.03, "oracle")
    assert seed != sbmssl.derive_seed(1, 1500, 0.03, "oracle")
    assert seed != sbmssl.derive_seed(0, 1500, 0.03)
    assert 0 <= seed < 2**63


# Test ExperimentSpec
# -------------------


def test_experimentspec_grid():
    spec = ExperimentSpec(
        n=(100, 200),
        p_in=(0.3,),
        p_out=(0.1, 0.2),
        eta=(0.1,),
        theta=(0.0, 0.05),
    )
    grid = spec.grid()
    assert len(grid) == 8
    assert grid[0] == sbmssl.GridPoint(n=100, p_in=0.3, p_out=0.1, eta=0.1, theta=0.0)
    assert grid[-1] == sbmssl.GridPoint(
        n=200, p_in=0.3, p_out=0.2, eta=0.1, theta=0.05
    )
    assert spec.overrides() == {}


def test_experimentspec_grid_derived():
    spec = ExperimentSpec(
        n=(1000,),
        degree_log_factor=(5.0,),
        degree_ratio=(0.2,),
        labeled_fraction=(0.1,),
        error_rate=(0.1,),
    )
    (point,) = spec.grid()
    model = point.model()
    assert model.d == pytest.approx(5 * math.log(1000))
    assert (point.p_in - point.p_out) / (point.p_in + point.p_out) == pytest.approx(0.2)
    assert point.eta == pytest.approx(0.09)
    assert point.theta == pytest.approx(0.01)


@pytest.mark.parametrize(
    "kwargs, expected_error",
    [
        ({"n": ()}, "at least one value for n"),
        ({"degree_log_factor": (5.0,)}, "give either p_in and p_out"),
        ({"p_out": ()}, "p_in and p_out must both be given"),
        ({"labeled_fraction": (0.1,)}, "give either eta and theta"),
        ({"theta": ()}, "eta and theta must both be given"),
        ({"algorithms": ()}, "at least one algorithm"),
        ({"replications": 0}, "replications should be at least 1"),
        ({"threads": 0}, "threads should be at least 1"),
        ({"algorithms": (Algorithm.BRUTE_MAP,)}, "brute-map is only available"),
    ],
)
def test_experimentspec_invalid(kwargs, expected_error):
    with pytest.raises(SpecFormatError, match=expected_error):
        _ = _small_spec(**kwargs)


def test_experimentspec_from_dict():
    spec = ExperimentSpec.from_dict(
        {
            "n": 20,
            "p_in": [0.3],
            "p_out": 0.1,
            "eta": [0.1, 0.2],
            "theta": 0.0,
            "algorithms": ["algorithm1", "Spectral"],
            "lambda": "inf",
            "alpha_policy": "mean-field",
            "scope": "all-nodes",
            "balanced": False,
        }
    )
    assert spec.n == (20,)
    assert spec.eta == (0.1, 0.2)
    assert spec.algorithms == (Algorithm.ALGORITHM1, Algorithm.SPECTRAL)
    assert spec.lam == math.inf
    assert spec.alpha_policy is sbmssl.AlphaPolicy.MEAN_FIELD
    assert spec.scope is Scope.ALL
    assert not spec.balanced
    assert spec.overrides() == {"lambda": math.inf}
    assert len(spec.grid()) == 2


@pytest.mark.parametrize(
    "values, expected_error",
    [
        ({"n": 20, "p_in": 0.3, "p_out": 0.1, "nu": 1}, "unknown keys"),
        ({"p_in": 0.3, "p_out": 0.1, "eta": 0.1, "theta": 0.0}, "needs an n key"),
        ({"n": 1.5, "p_in": 0.3, "p_out": 0.1}, "invalid value"),
        ({"n": 20, "p_in": "x", "p_out": 0.1}, "invalid value"),
        ({"n": 20, "algorithms": ["pagerank"]}, "invalid value"),
        ({"n": 20, "balanced": "yes"}, "balanced should be true or false"),
    ],
)
def test_experimentspec_from_dict_invalid(values, expected_error):
    with pytest.raises(SpecFormatError, match=expected_error):
        _ = ExperimentSpec.from_dict(values)


def test_experimentspec_from_json(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(
        json.dumps(
            {
                "n": [100],
                "p_in": 0.3,
                "p_out": 0.1,
                "labeled_fraction": 0.1,
                "error_rate": 0.0,
                "replications": 2,
            }
        )
    )
    spec = ExperimentSpec.from_json(path)
    assert spec.replications == 2
    assert spec.labeled_fraction == (0.1,)

    path.write_text("[1, 2]")
    with pytest.raises(SpecFormatError, match="should contain a JSON object"):
        _ = ExperimentSpec.from_json(path)
    path.write_text("{n: 1")
    with pytest.raises(SpecFormatError, match="is not valid JSON"):
        _ = ExperimentSpec.from_json(path)


def test_presets():
    sweep = sbmssl.PRESETS["labeled-fraction"]()
    assert len(sweep.grid()) == 7
    assert all(point.theta == 0 for point in sweep.grid())
    recovery = sbmssl.PRESETS["recovery"]()
    assert recovery.scope is Scope.ALL
    assert [point.n for point in recovery.grid()] == [500, 2000, 8000]


# Test run_experiment
# -------------------


def test_run_experiment():
    spec = _small_spec()
    rows = sbmssl.run_experiment(spec)
    assert len(rows) == 9
    assert [row.algorithm for row in rows[:3]] == [
        "algorithm1",
        "spectral",
        "label-spreading",
    ]
    assert [row.replication for row in rows] == [0, 0, 0, 1, 1, 1, 2, 2, 2]
    for row in rows:
        assert not row.failed
        assert 0 <= row.accuracy <= 1
        assert row.scope == "unlabeled-only"
        assert row.tau == pytest.approx(sbmssl.tau_of(0.5, 0.1))
    # Rows of one replication share the sample
    assert rows[0].seed == rows[1].seed == rows[2].seed
    assert rows[0].seed != rows[3].seed
    assert rows[0].labeled_frac_realized == rows[2].labeled_frac_realized


def test_run_experiment_deterministic():
    spec = _small_spec()
    rows1 = sbmssl.run_experiment(spec, threads=1)
    rows2 = sbmssl.run_experiment(spec, threads=4)
    for row1, row2 in zip(rows1, rows2):
        assert row1.seed == row2.seed
        assert row1.accuracy == row2.accuracy
        assert row1.iterations == row2.iterations
        assert row1.flags == row2.flags


def test_run_experiment_subgrid():
    # A grid point run on its own gives the same rows
    spec = _small_spec(n=(40, 60), replications=1)
    rows = sbmssl.run_experiment(spec)
    single = sbmssl.run_experiment(_small_spec(n=(60,), replications=1))
    assert [row.accuracy for row in rows[3:]] == [row.accuracy for row in single]


def test_run_experiment_brute_map():
    spec = _small_spec(
        n=(12,),
        p_in=(0.8,),
        p_out=(0.2,),
        eta=(0.5,),
        theta=(0.1,),
        algorithms=(Algorithm.BRUTE_MAP, Algorithm.ALGORITHM1_PERFECT),
        scope=Scope.ALL,
        replications=2,
    )
    rows = sbmssl.run_experiment(spec)
    assert len(rows) == 4
    assert rows[1].lam == math.inf
    for row in rows:
        assert not row.failed
        assert row.scope == "all-nodes"


def test_run_experiment_failures():
    # tau is undefined for p_in = p_out: Algorithm 1 fails, spectral clustering runs
    spec = _small_spec(
        p_in=(0.2,), p_out=(0.2,), algorithms=(Algorithm.ALGORITHM1, "spectral")
    )
    rows = sbmssl.run_experiment(spec)
    assert len(rows) == 6
    for algorithm1_row, spectral_row in zip(rows[::2], rows[1::2]):
        assert algorithm1_row.failed
        assert algorithm1_row.flags == ["error:ParameterDomainError"]
        assert math.isnan(algorithm1_row.accuracy)
        assert math.isnan(algorithm1_row.tau)
        assert not spectral_row.failed
        assert not math.isnan(spectral_row.accuracy)


# Test results files
# ------------------


def test_write_read_results(tmp_path):
    rows = sbmssl.run_experiment(_small_spec(replications=1, dump_labels=True))
    path = tmp_path / "out" / "results.csv"
    sbmssl.write_results(rows, path, dump_labels=True)
    assert path.read_text().splitlines()[0] == sbmssl.RESULTS_HEADER

    results_df = sbmssl.read_results(path)
    assert len(results_df) == 3
    assert list(results_df.columns) == sbmssl.RESULT_COLUMNS + ["oracle_labels"]
    algorithms = ["algorithm1", "spectral", "label-spreading"]
    assert list(results_df["algorithm"]) == algorithms
    assert np.allclose(results_df["accuracy"], [row.accuracy for row in rows])
    labels = results_df["oracle_labels"][0].split(";")
    assert len(labels) == 40
    assert set(labels) <= {"-1", "0", "1"}


def test_read_results_invalid(tmp_path):
    path = tmp_path / "results.csv"
    path.write_text("n,p_in\n1,0.5\n")
    with pytest.raises(SpecFormatError, match="is not a results file"):
        _ = sbmssl.read_results(path)

    path.write_text(f"{sbmssl.RESULTS_HEADER}\nn,p_in\n1,0.5\n")
    with pytest.raises(SpecFormatError, match="missing result columns"):
        _ = sbmssl.read_results(path)


def test_summarize():
    rows = [
        _row(0.4),
        _row(0.6, replication=1),
        _row(0.9, algorithm="spectral"),
        _row(math.nan, algorithm="label-spreading", flags=["error:ValueError"]),
    ]
    results_df = pd.DataFrame(
        [row.to_record() for row in rows], columns=sbmssl.RESULT_COLUMNS
    )
    with pytest.warns(UserWarning, match="1 groups without results omitted"):
        summary_df = sbmssl.summarize(results_df)

    assert len(summary_df) == 2
    algorithm1 = summary_df[summary_df["algorithm"] == "algorithm1"].iloc[0]
    assert algorithm1["accuracy_mean"] == pytest.approx(0.5)
    assert algorithm1["accuracy_sem"] == pytest.approx(0.1)
    assert algorithm1["count"] == 2
    spectral = summary_df[summary_df["algorithm"] == "spectral"].iloc[0]
    assert spectral["accuracy_mean"] == pytest.approx(0.9)

    records = json.loads(sbmssl.summary_to_json(summary_df))
    assert {record["algorithm"] for record in records} == {"algorithm1", "spectral"}


def test_summarize_file(tmp_path):
    rows = sbmssl.run_experiment(_small_spec())
    path = tmp_path / "results.csv"
    sbmssl.write_results(rows, path)
    summary_df = sbmssl.summarize(path)
    assert len(summary_df) == 3
    assert list(summary_df["count"]) == [3, 3, 3]

    with pytest.raises(SpecFormatError, match="missing columns"):
        _ = sbmssl.summarize(pd.DataFrame({"n": [1]}))


def test_write_results_deterministic(tmp_path):
    spec = _small_spec(replications=2)
    paths = [tmp_path / "results1.csv", tmp_path / "results2.csv"]
    for path, threads in zip(paths, [1, 3]):
        sbmssl.write_results(sbmssl.run_experiment(spec, threads=threads), path)

    results1_df, results2_df = (
        sbmssl.read_results(path).drop(columns="runtime_ms") for path in paths
    )
    pd.testing.assert_frame_equal(results1_df, results2_df)
