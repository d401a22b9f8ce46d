"""
Module to time sbmssl operations and keep track of the results.
"""

import datetime
import importlib
import inspect
import logging
import os
from pathlib import Path
import tempfile
from typing import Optional

import pandas as pd

logger = logging.getLogger(__name__)


class RunResult:
    """The timing of one benchmarked operation."""

    def __init__(
        self,
        package_version: str,
        operation: str,
        operation_descr: str,
        secs_taken: float,
        n: int,
        run_details: Optional[dict] = None,
    ):
        """
        Constructor for a RunResult.

        Args:
            package_version (str): version of sbmssl.
            operation (str): name of the operation.
            operation_descr (str): description of the operation.
            secs_taken (float): seconds the operation took.
            n (int): number of nodes of the graph the operation ran on.
            run_details (dict, optional): details of the run that influence the
                timing, e.g. the number of iterations. Defaults to None.
        """
        self.run_datetime = datetime.datetime.now()
        self.package = "sbmssl"
        self.package_version = package_version
        self.operation = operation
        self.operation_descr = operation_descr
        self.secs_taken = secs_taken
        self.n = n
        self.nb_cpu = os.cpu_count()
        self.run_details = run_details

    def __repr__(self):
        return f"{self.__class__}({self.__dict__})"


def run_benchmarks(
    modules_to_run: Optional[list[str]] = None,
    functions_to_run: Optional[list[str]] = None,
    results_path: Optional[Path] = None,
) -> list[RunResult]:
    """
    Run the benchmark functions found in the benchmarks_*.py modules.

    Every public function of such a module gets a temporary directory and must
    return a RunResult. The results are appended to a CSV file.

    Args:
        modules_to_run (list[str], optional): only run these modules. Defaults to
            None, all modules.
        functions_to_run (list[str], optional): only run these functions. Defaults
            to None, all functions.
        results_path (Path, optional): the CSV file to append the results to.
            Defaults to None, results/benchmark_results.csv next to this module.

    Returns:
        list[RunResult]: the results of this run.
    """
    logging.basicConfig(
        format="%(asctime)s.%(msecs)03d|%(levelname)s|%(name)s|%(message)s",
        datefmt="%H:%M:%S",
        level=logging.INFO,
    )

    tmp_dir = Path(tempfile.gettempdir()) / "sbmssl_benchmark"
    tmp_dir.mkdir(parents=True, exist_ok=True)
    logger.info(f"tmpdir: {tmp_dir}")

    benchmarks_dir = Path(__file__).parent / "benchmarks"
    results: list[RunResult] = []
    for file in sorted(benchmarks_dir.glob("benchmarks_*.py")):
        module_name = file.stem
        if modules_to_run is not None and module_name not in modules_to_run:
            logger.info(f"module {module_name} skipped, not in {modules_to_run}")
            continue

        module = importlib.import_module(f"benchmark.benchmarks.{module_name}")
        for function_name, function in inspect.getmembers(module, inspect.isfunction):
            if function_name.startswith("_") or function.__module__ != module.__name__:
                continue
            if functions_to_run is not None and function_name not in functions_to_run:
                logger.info(f"{function_name} skipped, not in {functions_to_run}")
                continue

            logger.info(f"{module_name}.{function_name} start")
            result = function(tmp_dir=tmp_dir)
            if isinstance(result, RunResult):
                logger.info(
                    f"{module_name}.{function_name} ready in {result.secs_taken:.2f} s"
                )
                results.append(result)
            else:
                logger.warning(
                    f"{module_name}.{function_name} ignored: instead of a RunResult "
                    f"it returned {result}"
                )

    if results_path is None:
        results_path = Path(__file__).resolve().parent / "results/benchmark_results.csv"
    results_path.parent.mkdir(parents=True, exist_ok=True)
    results_df = pd.DataFrame([vars(result) for result in results])
    if not results_path.exists():
        results_df.to_csv(results_path, index=False)
    else:
        results_df.to_csv(results_path, index=False, mode="a", header=False)
    logger.info(f"{len(results)} results added to {results_path}")
    return results


if __name__ == "__main__":
    run_benchmarks()
