"""
Module to benchmark sbmssl operations on sampled SSBM graphs.
"""

from datetime import datetime
from functools import lru_cache
import inspect
import logging
from pathlib import Path
from typing import Optional

import sbmssl
from benchmark.benchmarker import RunResult

logger = logging.getLogger(__name__)

nb_nodes = 20_000
model = sbmssl.ModelParams(
    n=nb_nodes, p_in=0.0015, p_out=0.0005, eta=0.09, theta=0.01
)


@lru_cache
def _sample() -> tuple[sbmssl.SparseGraph, sbmssl.GroundTruth, sbmssl.OracleLabels]:
    g, truth = sbmssl.sample_ssbm(model, rng_seed=0)
    labels = sbmssl.sample_oracle(truth, model.eta, model.theta, rng_seed=1)
    return g, truth, labels


def _result(
    function_name: str, start_time: datetime, descr: str, details: Optional[dict]
) -> RunResult:
    return RunResult(
        package_version=sbmssl.__version__,
        operation=function_name,
        operation_descr=descr,
        secs_taken=(datetime.now() - start_time).total_seconds(),
        n=nb_nodes,
        run_details=details,
    )


def sample_ssbm(tmp_dir: Path) -> RunResult:
    function_name = inspect.currentframe().f_code.co_name  # type: ignore[union-attr]

    start_time = datetime.now()
    g, _ = sbmssl.sample_ssbm(model, rng_seed=0)
    return _result(
        function_name,
        start_time,
        f"{function_name} with {nb_nodes} nodes, average degree {model.d:.0f}",
        {"num_edges": g.num_edges},
    )


def algorithm1(tmp_dir: Path) -> RunResult:
    function_name = inspect.currentframe().f_code.co_name  # type: ignore[union-attr]
    g, truth, labels = _sample()

    start_time = datetime.now()
    score = sbmssl.run_algorithm1(g, labels, model)
    result = _result(
        function_name,
        start_time,
        f"{function_name} with a noisy oracle, spectral-norm alpha",
        {"iterations": score.report.iterations if score.report else None},
    )
    logger.info(
        f"accuracy: {sbmssl.accuracy(score.labels, truth, labels.unlabeled_mask):.3f}"
    )
    return result


def algorithm1_perfect(tmp_dir: Path) -> RunResult:
    function_name = inspect.currentframe().f_code.co_name  # type: ignore[union-attr]
    g, _, labels = _sample()

    start_time = datetime.now()
    score = sbmssl.run_algorithm1(g, labels, model, overrides={"lambda": float("inf")})
    return _result(
        function_name,
        start_time,
        f"{function_name}: labeled nodes clamped, spectral-norm alpha",
        {"iterations": score.report.iterations if score.report else None},
    )


def spectral_clustering(tmp_dir: Path) -> RunResult:
    function_name = inspect.currentframe().f_code.co_name  # type: ignore[union-attr]
    g, _, _ = _sample()

    start_time = datetime.now()
    score = sbmssl.spectral_clustering(g)
    return _result(
        function_name,
        start_time,
        f"{function_name} by power iteration",
        {"iterations": score.report.iterations if score.report else None},
    )


def label_spreading(tmp_dir: Path) -> RunResult:
    function_name = inspect.currentframe().f_code.co_name  # type: ignore[union-attr]
    g, _, labels = _sample()

    start_time = datetime.now()
    score = sbmssl.label_spreading(g, labels)
    return _result(
        function_name,
        start_time,
        f"{function_name} with beta 0.9",
        {"iterations": score.report.iterations if score.report else None},
    )


def edge_list_io(tmp_dir: Path) -> RunResult:
    function_name = inspect.currentframe().f_code.co_name  # type: ignore[union-attr]
    g, _, _ = _sample()
    path = tmp_dir / f"{function_name}.txt"

    start_time = datetime.now()
    sbmssl.save_edge_list(g, path)
    sbmssl.load_edge_list(path)
    return _result(
        function_name,
        start_time,
        f"{function_name}: write and read back {g.num_edges} edges",
        None,
    )
