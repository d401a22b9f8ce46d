import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import NDArray
import scipy.sparse as sp

from sbmssl import _paramvalidation as valid
from sbmssl._errors import ConvergenceError, ParameterDomainError
from sbmssl._graph import SparseGraph
from sbmssl._linalg import SolveReport
from sbmssl._oracle import OracleLabels
from sbmssl._ssl import ScoreVector
from sbmssl._types import BaselineMethod

logger = logging.getLogger(__name__)

DEGENERATE_SPECTRUM = "degenerate-spectrum"
NOT_CONVERGED = "not-converged"

_THIRD_EIGENVALUE_ITERATIONS = 50


@dataclass(frozen=True)
class BaselineConfig:
    """
    Configuration of a reference algorithm.

    Attributes:
        method (BaselineMethod): the algorithm.
        beta (float): the diffusion weight of label spreading, in (0, 1).
            Defaults to 0.9.
        tol (float): relative tolerance of the label spreading iteration.
            Defaults to 1e-8.
        eig_tol (float): residual tolerance of the eigenvector iteration.
            Defaults to 1e-6.
        max_iter (int): iteration cap of both iterations. Defaults to 10000.
        rng_seed (int): seed of the start vector of the eigenvector iteration.
            Defaults to 0.
        strict (bool): True to raise ConvergenceError when an iteration hits its
            cap. Defaults to False.
    """

    method: Union[BaselineMethod, str] = BaselineMethod.SPECTRAL
    beta: float = 0.9
    tol: float = 1e-8
    eig_tol: float = 1e-6
    max_iter: int = 10_000
    rng_seed: int = 0
    strict: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", BaselineMethod(self.method))
        _check_beta(self.beta)
        valid.check_positive("tol", self.tol)
        valid.check_positive("eig_tol", self.eig_tol)
        if self.max_iter < 1:
            raise ParameterDomainError(f"Invalid value for max_iter: {self.max_iter}")


def normalized_adjacency(g: SparseGraph) -> sp.csr_matrix:
    """
    D^-1/2 A D^-1/2, with D^-1/2 = 0 at isolated nodes.

    The normalized Laplacian is I minus this matrix.

    Args:
        g (SparseGraph): the graph.

    Returns:
        sp.csr_matrix: the normalized adjacency matrix.
    """
    degrees = g.degrees
    inv_sqrt = np.zeros(g.n)
    connected = degrees > 0
    inv_sqrt[connected] = 1.0 / np.sqrt(degrees[connected])
    scaling = sp.diags(inv_sqrt, format="csr")
    return sp.csr_matrix(scaling @ g.adjacency @ scaling)


def spectral_clustering(
    g: SparseGraph,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    rng_seed: int = 0,
    strict: bool = False,
) -> ScoreVector:
    """
    Split a graph in two with the second eigenvector of the normalized Laplacian.

    The eigenvector is found by power iteration on (I + N) / 2, with
    N = D^-1/2 A D^-1/2, after removing the known top eigenvector D^1/2 1. Isolated
    nodes get score 0, so label -1. If the third eigenvalue can't be told apart from
    the second, the split is arbitrary: a warning is given and the scores are flagged
    "degenerate-spectrum".

    Args:
        g (SparseGraph): the graph.
        tol (float, optional): residual tolerance. Defaults to 1e-6.
        max_iter (int, optional): iteration cap. Defaults to 10000.
        rng_seed (int, optional): seed of the start vector. Defaults to 0.
        strict (bool, optional): True to raise ConvergenceError when the iteration
            doesn't converge. Defaults to False.

    Returns:
        ScoreVector: the eigenvector, oriented so its largest entry is positive.
    """
    valid.check_positive("tol", tol)
    n = g.n
    connected = g.degrees > 0
    if np.count_nonzero(connected) < 2:
        message = "spectral_clustering: no edges between distinct nodes to split on"
        logger.warning(message)
        warnings.warn(message, stacklevel=2)
        return ScoreVector(
            np.zeros(n), report=SolveReport(0, 0.0, True), flags=(DEGENERATE_SPECTRUM,)
        )

    normalized = normalized_adjacency(g)

    def lazy_walk(x: NDArray[np.float64]) -> NDArray[np.float64]:
        y = (x + normalized @ x) / 2
        y[~connected] = 0.0
        return y

    top = np.sqrt(g.degrees)
    top /= np.linalg.norm(top)
    rng = np.random.default_rng(rng_seed)
    x, mu, report = _deflated_power_iteration(
        lazy_walk, [top], rng.standard_normal(n), connected, tol, max_iter
    )
    flags: list[str] = []
    if not report.converged:
        message = (
            f"spectral_clustering: no convergence after {report.iterations} "
            f"iterations, residual {report.residual:.3g}"
        )
        if strict:
            raise ConvergenceError(message)
        logger.warning(message)
        flags.append(NOT_CONVERGED)

    # A third eigenvalue as large as the second makes the split arbitrary
    _, mu3, _ = _deflated_power_iteration(
        lazy_walk,
        [top, x],
        rng.standard_normal(n),
        connected,
        tol,
        _THIRD_EIGENVALUE_ITERATIONS,
    )
    if mu3 >= mu - 1e-6 * max(1.0, abs(mu)):
        message = (
            f"spectral_clustering: degenerate spectrum, second eigenvalue {mu:.6g} "
            f"is not separated from the third {mu3:.6g}"
        )
        logger.warning(message)
        warnings.warn(message, stacklevel=2)
        flags.append(DEGENERATE_SPECTRUM)

    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    logger.debug(f"spectral_clustering: eigenvalue {2 * mu - 1:.6g}, {report}")
    return ScoreVector(x, report=report, flags=tuple(flags))


def label_spreading(
    g: SparseGraph,
    s: OracleLabels,
    beta: float = 0.9,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    strict: bool = False,
) -> ScoreVector:
    """
    Classify nodes by spreading the oracle labels over the normalized adjacency.

    Iterates X <- beta N X + (1 - beta) S, N = D^-1/2 A D^-1/2, from X = (1 - beta) S
    until the relative change is at most tol. The fixed point is
    (1 - beta) (I - beta N)^-1 S.

    Args:
        g (SparseGraph): the graph.
        s (OracleLabels): the oracle labels.
        beta (float, optional): the diffusion weight, in (0, 1). Defaults to 0.9.
        tol (float, optional): relative tolerance. Defaults to 1e-8.
        max_iter (int, optional): iteration cap. Defaults to 10000.
        strict (bool, optional): True to raise ConvergenceError when the iteration
            doesn't converge. Defaults to False.

    Returns:
        ScoreVector: the scores. Zero if no node is labeled.
    """
    _check_beta(beta)
    valid.check_positive("tol", tol)
    valid.check_length("s", s.s, g.n)
    if s.num_labeled == 0:
        message = "label_spreading: no labeled node, all scores are 0"
        logger.warning(message)
        warnings.warn(message, stacklevel=2)
        return ScoreVector(np.zeros(g.n), report=SolveReport(0, 0.0, True))

    normalized = normalized_adjacency(g)
    anchor = (1 - beta) * s.s.astype(np.float64)
    x = anchor.copy()
    change = np.inf
    iterations = 0
    while iterations < max_iter:
        x_next = beta * (normalized @ x) + anchor
        iterations += 1
        change = float(np.linalg.norm(x_next - x) / np.linalg.norm(x_next))
        x = x_next
        if change <= tol:
            break

    report = SolveReport(iterations, change, change <= tol)
    flags: tuple[str, ...] = ()
    if not report.converged:
        message = (
            f"label_spreading: no convergence after {iterations} iterations, "
            f"relative change {change:.3g}"
        )
        if strict:
            raise ConvergenceError(message)
        logger.warning(message)
        flags = (NOT_CONVERGED,)
    logger.debug(f"label_spreading: {report}")
    return ScoreVector(x, report=report, flags=flags)


def run_baseline(
    g: SparseGraph, s: Optional[OracleLabels], config: BaselineConfig
) -> ScoreVector:
    """
    Run the reference algorithm a configuration describes.

    Args:
        g (SparseGraph): the graph.
        s (OracleLabels, optional): the oracle labels, not used by spectral
            clustering.
        config (BaselineConfig): the algorithm and its parameters.

    Returns:
        ScoreVector: the scores.
    """
    if config.method is BaselineMethod.SPECTRAL:
        return spectral_clustering(
            g,
            tol=config.eig_tol,
            max_iter=config.max_iter,
            rng_seed=config.rng_seed,
            strict=config.strict,
        )
    if s is None:
        raise ValueError("label spreading needs oracle labels")
    return label_spreading(
        g,
        s,
        beta=config.beta,
        tol=config.tol,
        max_iter=config.max_iter,
        strict=config.strict,
    )


def _check_beta(beta: float):
    if not 0 < beta < 1:
        raise ParameterDomainError(f"Invalid value for beta: {beta}, must be in (0, 1)")


def _deflated_power_iteration(
    apply,
    known: list[NDArray[np.float64]],
    start: NDArray[np.float64],
    support: NDArray[np.bool_],
    tol: float,
    max_iter: int,
) -> tuple[NDArray[np.float64], float, SolveReport]:
    """
    The dominant eigenpair of a symmetric operator, orthogonal to known eigenvectors.

    Returns:
        the unit eigenvector, its eigenvalue and the iteration report.
    """

    def deflate(v: NDArray[np.float64]) -> NDArray[np.float64]:
        v[~support] = 0.0
        for u in known:
            v -= (u @ v) / (u @ u) * u
        return v

    x = deflate(start.astype(np.float64))
    norm = np.linalg.norm(x)
    if norm == 0:
        return x, 0.0, SolveReport(0, 0.0, True)
    x /= norm

    mu = 0.0
    residual = np.inf
    iterations = 0
    while iterations < max_iter:
        y = deflate(apply(x))
        iterations += 1
        mu = float(x @ y)
        residual = float(np.linalg.norm(y - mu * x))
        norm = np.linalg.norm(y)
        if norm == 0:
            return x, 0.0, SolveReport(iterations, 0.0, True)
        x = y / norm
        if residual <= tol:
            break

    return x, mu, SolveReport(iterations, residual, residual <= tol)
