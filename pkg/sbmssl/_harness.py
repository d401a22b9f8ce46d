"""
Experiment orchestration: accuracy, grids of SSBM experiments and their results.
"""

from collections.abc import Iterable, Mapping
import concurrent.futures
from dataclasses import asdict, dataclass, field
import hashlib
import itertools
import json
import logging
import math
from pathlib import Path
import time
from typing import Any, Optional, Union
import warnings

import numpy as np
from numpy.typing import ArrayLike, NDArray
import pandas as pd

from sbmssl._baselines import NOT_CONVERGED, label_spreading, spectral_clustering
from sbmssl._errors import ParameterDomainError, SpecFormatError
from sbmssl._graph import (
    GroundTruth,
    ModelParams,
    SparseGraph,
    params_from_degree,
    sample_ssbm,
)
from sbmssl._linalg import SolverOptions
from sbmssl._map_exact import MapObjectiveParams, brute_force_map
from sbmssl._oracle import (
    OracleLabels,
    labeled_fraction,
    oracle_from_rates,
    realized_error_rate,
    sample_oracle,
)
from sbmssl._ssl import run_algorithm1
from sbmssl._types import Algorithm, AlphaPolicy, Scope

logger = logging.getLogger(__name__)

RESULTS_HEADER = "# sbmssl results schema=1"
RESULT_COLUMNS = [
    "n",
    "p_in",
    "p_out",
    "eta",
    "theta",
    "tau",
    "lambda",
    "alpha_policy",
    "algorithm",
    "seed",
    "replication",
    "labeled_frac_realized",
    "error_rate_realized",
    "accuracy",
    "misclassified",
    "scope",
    "runtime_ms",
    "flags",
    "iterations",
    "beta",
    "balanced",
]
LABELS_COLUMN = "oracle_labels"
GROUP_COLUMNS = ["n", "p_in", "p_out", "eta", "theta", "algorithm", "scope"]
BRUTE_FORCE_MAX_N = 20


def accuracy(
    pred: ArrayLike,
    truth: Union[GroundTruth, ArrayLike],
    scope: Optional[ArrayLike] = None,
    allow_flip: bool = False,
) -> float:
    """
    The fraction of nodes in scope whose predicted cluster is the true one.

    Args:
        pred (arraylike): the predicted labels, -1 or +1.
        truth (GroundTruth or arraylike): the true clusters.
        scope (arraylike, optional): the indices, or a boolean mask, of the nodes
            to evaluate. Defaults to None, all nodes.
        allow_flip (bool, optional): True to also count the globally flipped
            prediction and keep the best, for methods that ignore the oracle and so
            can't know which cluster is +1. Defaults to False.

    Raises:
        ParameterDomainError: the scope is empty.

    Returns:
        float: the accuracy, in [0, 1].
    """
    matches, size = _count_matches(pred, truth, scope, allow_flip)
    return matches / size


def derive_seed(*parts: Any) -> int:
    """
    Derive a 63 bit seed from a sequence of values.

    The same values always give the same seed, on any platform.

    Args:
        parts (Any): the values, typically a base seed and experiment coordinates.

    Returns:
        int: the seed.
    """
    key = "|".join(repr(part) for part in parts)
    digest = hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]
    return int(digest, 16) & 0x7FFFFFFFFFFFFFFF


@dataclass(frozen=True)
class GridPoint:
    """One combination of model parameters in an experiment grid."""

    n: int
    p_in: float
    p_out: float
    eta: float
    theta: float

    def model(self) -> ModelParams:
        return ModelParams(
            n=self.n, p_in=self.p_in, p_out=self.p_out, eta=self.eta, theta=self.theta
        )


@dataclass(frozen=True)
class ExperimentSpec:
    """
    An experiment: a grid of models, the algorithms to run and how often.

    The edge probabilities are given either directly (p_in, p_out) or as an average
    degree degree_log_factor * log(n) with ratio (p_in - p_out) / (p_in + p_out) =
    degree_ratio. The oracle is given either directly (eta, theta) or as a labeled
    fraction eta + theta and an error rate theta / (eta + theta). The grid is the
    cartesian product of all lists.

    Attributes:
        n (tuple[int, ...]): the graph sizes.
        p_in (tuple[float, ...]): the intra-cluster edge probabilities.
        p_out (tuple[float, ...]): the inter-cluster edge probabilities.
        degree_log_factor (tuple[float, ...]): average degree over log(n).
        degree_ratio (tuple[float, ...]): (p_in - p_out) / (p_in + p_out).
        eta (tuple[float, ...]): probabilities of a correct label.
        theta (tuple[float, ...]): probabilities of a wrong label.
        labeled_fraction (tuple[float, ...]): expected fractions of labeled nodes.
        error_rate (tuple[float, ...]): fractions of wrong labels.
        algorithms (tuple[Algorithm, ...]): the algorithms to run on every sample.
        replications (int): the number of samples per grid point.
        base_seed (int): the seed all sample seeds are derived from.
        tau (float, optional): overrides the MAP value of tau.
        lam (float, optional): overrides the MAP value of lambda.
        alpha (float, optional): overrides alpha, implying the explicit policy.
        alpha_policy (AlphaPolicy): how alpha is chosen.
        beta (float): the diffusion weight of label spreading.
        scope (Scope): the nodes accuracy is evaluated on.
        balanced (bool): True to sample clusters of equal size.
        self_loops (bool): True to sample self-loops with probability p_in.
        threads (int): the number of worker threads.
        dump_labels (bool): True to add the oracle labels to every result row.
        output (str, optional): the CSV file to write the results to.
    """

    n: tuple[int, ...]
    p_in: tuple[float, ...] = ()
    p_out: tuple[float, ...] = ()
    degree_log_factor: tuple[float, ...] = ()
    degree_ratio: tuple[float, ...] = ()
    eta: tuple[float, ...] = ()
    theta: tuple[float, ...] = ()
    labeled_fraction: tuple[float, ...] = ()
    error_rate: tuple[float, ...] = ()
    algorithms: tuple[Algorithm, ...] = (Algorithm.ALGORITHM1,)
    replications: int = 1
    base_seed: int = 0
    tau: Optional[float] = None
    lam: Optional[float] = None
    alpha: Optional[float] = None
    alpha_policy: AlphaPolicy = AlphaPolicy.SPECTRAL_NORM
    beta: float = 0.9
    scope: Scope = Scope.UNLABELED
    balanced: bool = True
    self_loops: bool = False
    threads: int = 1
    dump_labels: bool = False
    output: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(
            self, "algorithms", tuple(Algorithm(item) for item in self.algorithms)
        )
        object.__setattr__(self, "alpha_policy", AlphaPolicy(self.alpha_policy))
        object.__setattr__(self, "scope", Scope(self.scope))
        if len(self.n) == 0:
            raise SpecFormatError("the grid needs at least one value for n")
        has_probabilities = bool(self.p_in or self.p_out)
        has_degrees = bool(self.degree_log_factor or self.degree_ratio)
        if has_probabilities == has_degrees:
            raise SpecFormatError(
                "give either p_in and p_out, or degree_log_factor and degree_ratio"
            )
        if has_probabilities and not (self.p_in and self.p_out):
            raise SpecFormatError("p_in and p_out must both be given")
        if has_degrees and not (self.degree_log_factor and self.degree_ratio):
            raise SpecFormatError(
                "degree_log_factor and degree_ratio must both be given"
            )
        has_rates = bool(self.eta or self.theta)
        has_fractions = bool(self.labeled_fraction or self.error_rate)
        if has_rates == has_fractions:
            raise SpecFormatError(
                "give either eta and theta, or labeled_fraction and error_rate"
            )
        if has_rates and not (self.eta and self.theta):
            raise SpecFormatError("eta and theta must both be given")
        if has_fractions and not (self.labeled_fraction and self.error_rate):
            raise SpecFormatError("labeled_fraction and error_rate must both be given")
        if len(self.algorithms) == 0:
            raise SpecFormatError("at least one algorithm must be given")
        if self.replications < 1:
            raise SpecFormatError(
                f"replications should be at least 1, not {self.replications}"
            )
        if self.threads < 1:
            raise SpecFormatError(f"threads should be at least 1, not {self.threads}")
        if Algorithm.BRUTE_MAP in self.algorithms and max(self.n) > BRUTE_FORCE_MAX_N:
            raise SpecFormatError(
                f"brute-map is only available for n <= {BRUTE_FORCE_MAX_N}"
            )

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "ExperimentSpec":
        """
        Create a spec from a flat mapping, e.g. a parsed JSON spec file.

        List valued keys also accept a single value. The key "lambda" holds lam; it
        and the other real valued keys accept the string "inf".

        Args:
            values (Mapping[str, Any]): the spec keys and their values.

        Raises:
            SpecFormatError: unknown keys, or values of the wrong type.

        Returns:
            ExperimentSpec: the spec.
        """
        unknown = set(values) - _SPEC_KEYS
        if unknown:
            raise SpecFormatError(f"unknown keys in experiment spec: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        try:
            for key, value in values.items():
                if key in _GRID_KEYS:
                    convert = _as_int if key == "n" else _as_float
                    kwargs[key] = tuple(convert(item) for item in _sequence(value))
                elif key == "algorithms":
                    kwargs[key] = tuple(Algorithm(item) for item in _sequence(value))
                elif key in ("tau", "lambda", "alpha"):
                    name = "lam" if key == "lambda" else key
                    kwargs[name] = None if value is None else _as_float(value)
                elif key == "alpha_policy":
                    kwargs[key] = AlphaPolicy(value)
                elif key == "scope":
                    kwargs[key] = Scope(value)
                elif key in ("replications", "base_seed", "threads"):
                    kwargs[key] = _as_int(value)
                elif key == "beta":
                    kwargs[key] = _as_float(value)
                elif key in ("balanced", "self_loops", "dump_labels"):
                    kwargs[key] = _as_bool(key, value)
                else:
                    kwargs[key] = None if value is None else str(value)
        except (TypeError, ValueError) as ex:
            if isinstance(ex, SpecFormatError):
                raise
            raise SpecFormatError(f"invalid value in experiment spec: {ex}") from ex
        if "n" not in kwargs:
            raise SpecFormatError("the experiment spec needs an n key")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "ExperimentSpec":
        """
        Read a spec from a JSON file holding one flat object.

        Args:
            path (str or Path): the spec file.

        Raises:
            SpecFormatError: the file is not a JSON object or has invalid keys.

        Returns:
            ExperimentSpec: the spec.
        """
        with open(path, encoding="utf-8") as file:
            try:
                values = json.load(file)
            except json.JSONDecodeError as ex:
                raise SpecFormatError(f"{path} is not valid JSON: {ex}") from ex
        if not isinstance(values, dict):
            raise SpecFormatError(f"{path} should contain a JSON object")
        return cls.from_dict(values)

    def grid(self) -> list[GridPoint]:
        """The grid points, in a fixed order."""
        probabilities: list[tuple[int, float, float]] = []
        for n in self.n:
            if self.p_in:
                for p_in, p_out in itertools.product(self.p_in, self.p_out):
                    probabilities.append((n, p_in, p_out))
            else:
                for factor, ratio in itertools.product(
                    self.degree_log_factor, self.degree_ratio
                ):
                    p_in, p_out = params_from_degree(n, factor * math.log(n), ratio)
                    probabilities.append((n, p_in, p_out))

        if self.eta:
            oracles = list(itertools.product(self.eta, self.theta))
        else:
            oracles = [
                oracle_from_rates(fraction, rate)
                for fraction, rate in itertools.product(
                    self.labeled_fraction, self.error_rate
                )
            ]

        return [
            GridPoint(n=n, p_in=p_in, p_out=p_out, eta=eta, theta=theta)
            for (n, p_in, p_out), (eta, theta) in itertools.product(
                probabilities, oracles
            )
        ]

    def overrides(self) -> dict[str, float]:
        """The tau, lambda and alpha values that replace the derived ones."""
        values = {"tau": self.tau, "lambda": self.lam, "alpha": self.alpha}
        return {key: value for key, value in values.items() if value is not None}


_GRID_KEYS = {
    "n",
    "p_in",
    "p_out",
    "degree_log_factor",
    "degree_ratio",
    "eta",
    "theta",
    "labeled_fraction",
    "error_rate",
}
_SPEC_KEYS = _GRID_KEYS | {
    "algorithms",
    "replications",
    "base_seed",
    "tau",
    "lambda",
    "alpha",
    "alpha_policy",
    "beta",
    "scope",
    "balanced",
    "self_loops",
    "threads",
    "dump_labels",
    "output",
}


@dataclass
class ResultRow:
    """
    The outcome of one algorithm on one sampled graph.

    A row that failed has NaN metrics and a flag "error:<exception type>".
    """

    n: int
    p_in: float
    p_out: float
    eta: float
    theta: float
    tau: float
    lam: float
    alpha_policy: str
    algorithm: str
    seed: int
    replication: int
    labeled_frac_realized: float = math.nan
    error_rate_realized: float = math.nan
    accuracy: float = math.nan
    misclassified: float = math.nan
    scope: str = str(Scope.UNLABELED)
    runtime_ms: float = math.nan
    flags: list[str] = field(default_factory=list)
    iterations: int = 0
    beta: float = math.nan
    balanced: bool = True
    oracle_labels: Optional[str] = None

    @property
    def failed(self) -> bool:
        return any(flag.startswith("error:") for flag in self.flags)

    def to_record(self) -> dict[str, Any]:
        """The row as a mapping from CSV column to value."""
        record = asdict(self)
        record["lambda"] = record.pop("lam")
        record["flags"] = ";".join(self.flags)
        return record


def run_experiment(
    spec: ExperimentSpec,
    threads: Optional[int] = None,
    options: Optional[SolverOptions] = None,
) -> list[ResultRow]:
    """
    Run every algorithm on every replication of every grid point.

    Every replication samples its graph and oracle with seeds derived from the base
    seed, the grid point and the replication number, so a grid point run on its own
    gives the same rows. Failures are recorded as flagged rows and the run goes on.

    Args:
        spec (ExperimentSpec): the experiment.
        threads (int, optional): the number of worker threads. Defaults to None,
            spec.threads.
        options (SolverOptions, optional): solver options. Defaults to None.

    Returns:
        list[ResultRow]: the rows, ordered by grid point, replication and
            algorithm.
    """
    if threads is None:
        threads = spec.threads
    tasks = [
        (point, replication)
        for point in spec.grid()
        for replication in range(spec.replications)
    ]
    logger.info(
        f"run_experiment: {len(tasks)} samples x {len(spec.algorithms)} algorithms, "
        f"{threads} threads"
    )

    results: list[list[ResultRow]] = [[] for _ in tasks]
    if threads > 1 and len(tasks) > 1:
        futures = {}
        with concurrent.futures.ThreadPoolExecutor(min(threads, len(tasks))) as pool:
            for idx, (point, replication) in enumerate(tasks):
                future = pool.submit(
                    _run_replication, spec, point, replication, options
                )
                futures[future] = idx

            for future in concurrent.futures.as_completed(futures):
                results[futures[future]] = future.result()
    else:
        for idx, (point, replication) in enumerate(tasks):
            results[idx] = _run_replication(spec, point, replication, options)

    rows = [row for rows in results for row in rows]
    nb_failed = sum(row.failed for row in rows)
    if nb_failed > 0:
        logger.warning(f"run_experiment: {nb_failed} of {len(rows)} rows failed")
    return rows


def write_results(
    rows: Iterable[ResultRow], path: Union[str, Path], dump_labels: bool = False
):
    """
    Write result rows to a CSV file, preceded by the schema comment line.

    Args:
        rows (Iterable[ResultRow]): the rows.
        path (str or Path): the output file.
        dump_labels (bool, optional): True to add the oracle_labels column.
            Defaults to False.
    """
    columns = RESULT_COLUMNS + ([LABELS_COLUMN] if dump_labels else [])
    results_df = pd.DataFrame([row.to_record() for row in rows], columns=columns)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as file:
        file.write(f"{RESULTS_HEADER}\n")
        results_df.to_csv(file, index=False)
    logger.info(f"write_results: {len(results_df)} rows written to {path}")


def read_results(path: Union[str, Path]) -> pd.DataFrame:
    """
    Read a results CSV file written by write_results.

    Args:
        path (str or Path): the file.

    Raises:
        SpecFormatError: the file doesn't have the results schema.

    Returns:
        pd.DataFrame: the rows, flags as strings.
    """
    with open(path, encoding="utf-8") as file:
        header = file.readline().strip()
    if header != RESULTS_HEADER:
        raise SpecFormatError(
            f"{path} is not a results file: expected '{RESULTS_HEADER}', got "
            f"'{header}'"
        )
    results_df = pd.read_csv(
        path, skiprows=1, dtype={"flags": str, "algorithm": str, "scope": str}
    )
    missing = [column for column in RESULT_COLUMNS if column not in results_df.columns]
    if missing:
        raise SpecFormatError(f"{path} is missing result columns: {missing}")
    results_df["flags"] = results_df["flags"].fillna("")
    return results_df


def summarize(results: Union[str, Path, pd.DataFrame]) -> pd.DataFrame:
    """
    Mean and standard error of the accuracy per grid point, algorithm and scope.

    Failed rows, with a NaN accuracy, are left out. Groups without any accuracy are
    omitted with a warning.

    Args:
        results (str, Path or pd.DataFrame): a results file or its rows.

    Returns:
        pd.DataFrame: one row per group with columns accuracy_mean, accuracy_sem,
            misclassified_mean, runtime_ms_mean and count.
    """
    if isinstance(results, pd.DataFrame):
        results_df = results
        missing = [col for col in RESULT_COLUMNS if col not in results_df.columns]
        if missing:
            raise SpecFormatError(f"results are missing columns: {missing}")
    else:
        results_df = read_results(results)

    grouped = results_df.groupby(GROUP_COLUMNS, dropna=False, sort=True)
    summary_df = grouped.agg(
        accuracy_mean=("accuracy", "mean"),
        accuracy_sem=("accuracy", "sem"),
        misclassified_mean=("misclassified", "mean"),
        runtime_ms_mean=("runtime_ms", "mean"),
        count=("accuracy", "count"),
    ).reset_index()

    empty = summary_df["count"] == 0
    if empty.any():
        omitted = summary_df.loc[empty, GROUP_COLUMNS].to_dict(orient="records")
        message = f"summarize: {len(omitted)} groups without results omitted: {omitted}"
        logger.warning(message)
        warnings.warn(message, stacklevel=2)
        summary_df = summary_df.loc[~empty].reset_index(drop=True)
    return summary_df


def summary_to_json(summary_df: pd.DataFrame) -> str:
    """The summary as a JSON list of records."""
    return summary_df.to_json(orient="records")


def labeled_fraction_spec() -> ExperimentSpec:
    """
    Accuracy on the unlabeled nodes as a function of the fraction of labeled nodes.

    50 graphs of 1500 nodes with p_in = 0.03, p_out = 0.02 and a perfect oracle,
    comparing Algorithm 1 with spectral clustering and label spreading.
    """
    return ExperimentSpec(
        n=(1500,),
        p_in=(0.03,),
        p_out=(0.02,),
        eta=(0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.10),
        theta=(0.0,),
        algorithms=(
            Algorithm.ALGORITHM1,
            Algorithm.SPECTRAL,
            Algorithm.LABEL_SPREADING,
        ),
        replications=50,
        base_seed=0,
    )


def recovery_spec() -> ExperimentSpec:
    """
    Misclassification of Algorithm 1 as n grows with average degree 5 log(n).

    (p_in - p_out) / (p_in + p_out) = 1/5, 10% of the nodes labeled of which 10%
    wrongly, 20 graphs per size.
    """
    return ExperimentSpec(
        n=(500, 2000, 8000),
        degree_log_factor=(5.0,),
        degree_ratio=(0.2,),
        labeled_fraction=(0.1,),
        error_rate=(0.1,),
        algorithms=(Algorithm.ALGORITHM1,),
        replications=20,
        base_seed=0,
        scope=Scope.ALL,
    )


PRESETS = {"labeled-fraction": labeled_fraction_spec, "recovery": recovery_spec}


def _run_replication(
    spec: ExperimentSpec,
    point: GridPoint,
    replication: int,
    options: Optional[SolverOptions],
) -> list[ResultRow]:
    seed = derive_seed(
        spec.base_seed,
        point.n,
        point.p_in,
        point.p_out,
        point.eta,
        point.theta,
        replication,
    )
    tau, lam = _row_parameters(spec, point)
    policy = AlphaPolicy.EXPLICIT if spec.alpha is not None else spec.alpha_policy
    rows = [
        ResultRow(
            n=point.n,
            p_in=point.p_in,
            p_out=point.p_out,
            eta=point.eta,
            theta=point.theta,
            tau=tau,
            lam=math.inf if algorithm is Algorithm.ALGORITHM1_PERFECT else lam,
            alpha_policy=str(policy),
            algorithm=str(algorithm),
            seed=seed,
            replication=replication,
            scope=str(spec.scope),
            beta=spec.beta,
            balanced=spec.balanced,
        )
        for algorithm in spec.algorithms
    ]

    try:
        model = point.model()
        g, truth = sample_ssbm(
            model, seed, balanced=spec.balanced, self_loops=spec.self_loops
        )
        oracle_seed = derive_seed(seed, "oracle")
        labels = sample_oracle(truth, point.eta, point.theta, oracle_seed)
    except (ValueError, ArithmeticError, RuntimeError) as ex:
        logger.warning(f"sampling failed for {point}, replication {replication}: {ex}")
        for row in rows:
            row.flags.append(f"error:{type(ex).__name__}")
        return rows

    fraction = labeled_fraction(labels)
    error_rate = realized_error_rate(labels, truth)
    if spec.scope is Scope.UNLABELED:
        scope_idx = np.flatnonzero(labels.unlabeled_mask)
    else:
        scope_idx = np.arange(g.n)
    dumped = ";".join(str(v) for v in labels.s) if spec.dump_labels else None

    for algorithm, row in zip(spec.algorithms, rows):
        row.labeled_frac_realized = fraction
        row.error_rate_realized = error_rate
        row.oracle_labels = dumped
        start = time.perf_counter()
        try:
            pred, iterations, flags = _run_algorithm(
                algorithm, spec, g, labels, model, seed, options
            )
            allow_flip = algorithm.is_unsupervised or (
                algorithm is Algorithm.BRUTE_MAP and labels.num_labeled == 0
            )
            matches, size = _count_matches(pred, truth, scope_idx, allow_flip)
        except (ValueError, ArithmeticError, RuntimeError) as ex:
            logger.warning(
                f"{algorithm} failed for {point}, replication {replication}: {ex}"
            )
            row.flags.append(f"error:{type(ex).__name__}")
            continue
        finally:
            row.runtime_ms = (time.perf_counter() - start) * 1000

        row.accuracy = matches / size
        row.misclassified = size - matches
        row.iterations = iterations
        row.flags.extend(flags)

    return rows


def _run_algorithm(
    algorithm: Algorithm,
    spec: ExperimentSpec,
    g: SparseGraph,
    labels: OracleLabels,
    model: ModelParams,
    seed: int,
    options: Optional[SolverOptions],
) -> tuple[NDArray[np.int8], int, list[str]]:
    if algorithm is Algorithm.BRUTE_MAP:
        overrides = spec.overrides()
        params = MapObjectiveParams(
            tau=overrides.get("tau", model.tau), lam=overrides.get("lambda", model.lam)
        )
        return brute_force_map(g, labels, params, BRUTE_FORCE_MAX_N).sigma, 0, []

    if algorithm in (Algorithm.ALGORITHM1, Algorithm.ALGORITHM1_PERFECT):
        overrides = spec.overrides()
        if algorithm is Algorithm.ALGORITHM1_PERFECT:
            overrides["lambda"] = math.inf
        score = run_algorithm1(
            g, labels, model, overrides, options, alpha_policy=spec.alpha_policy
        )
    elif algorithm is Algorithm.SPECTRAL:
        score = spectral_clustering(g, rng_seed=derive_seed(seed, "spectral"))
    else:
        score = label_spreading(g, labels, beta=spec.beta)

    flags = list(score.flags)
    if score.report is not None and not score.report.converged:
        if NOT_CONVERGED not in flags:
            flags.append(NOT_CONVERGED)
    iterations = score.report.iterations if score.report is not None else 0
    return score.labels, iterations, flags


def _row_parameters(spec: ExperimentSpec, point: GridPoint) -> tuple[float, float]:
    """The tau and lambda of a grid point, NaN where they are undefined."""
    try:
        tau = spec.tau if spec.tau is not None else point.model().tau
    except ValueError:
        tau = math.nan
    try:
        lam = spec.lam if spec.lam is not None else point.model().lam
    except ValueError:
        lam = math.nan
    return tau, lam


def _count_matches(
    pred: ArrayLike,
    truth: Union[GroundTruth, ArrayLike],
    scope: Optional[ArrayLike],
    allow_flip: bool,
) -> tuple[int, int]:
    pred = np.asarray(pred)
    truth = truth.sigma0 if isinstance(truth, GroundTruth) else np.asarray(truth)
    if len(pred) != len(truth):
        raise ValueError(
            f"pred and truth should have the same length, not {len(pred)} and "
            f"{len(truth)}"
        )
    if scope is None:
        idx = np.arange(len(truth))
    else:
        scope = np.asarray(scope)
        idx = np.flatnonzero(scope) if scope.dtype == bool else scope.astype(np.int64)
    if len(idx) == 0:
        raise ParameterDomainError("accuracy is undefined on an empty scope")
    matches = int(np.count_nonzero(pred[idx] == truth[idx]))
    if allow_flip:
        matches = max(matches, len(idx) - matches)
    return matches, len(idx)


def _as_float(value: Any) -> float:
    if isinstance(value, bool):
        raise TypeError(f"expected a number, got {value!r}")
    if isinstance(value, str):
        return float(value.strip())
    return float(value)


def _as_int(value: Any) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise TypeError(f"expected an integer, got {value!r}")
    return int(value)


def _as_bool(key: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise SpecFormatError(f"{key} should be true or false, not {value!r}")
    return value


def _sequence(values: Any) -> list:
    return list(values) if isinstance(values, (list, tuple)) else [values]
