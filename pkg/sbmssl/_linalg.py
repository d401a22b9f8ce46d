"""
Matrix-free linear algebra on regularized adjacency matrices.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from sbmssl import _paramvalidation as valid
from sbmssl._errors import (
    ConvergenceError,
    IndefiniteOperatorError,
    ParameterDomainError,
)
from sbmssl._graph import SparseGraph

logger = logging.getLogger(__name__)

OperatorLike = Union[LinearOperator, sp.spmatrix, NDArray[np.float64]]


@dataclass(frozen=True)
class SolveReport:
    """
    Outcome of an iterative method.

    Attributes:
        iterations (int): the number of iterations done.
        residual (float): the final residual norm.
        converged (bool): True if the requested tolerance was reached.
    """

    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class SolverOptions:
    """
    Tolerances and budgets of the iterative solvers.

    Attributes:
        cg_tol (float): relative residual tolerance of conjugate gradient.
            Defaults to 1e-8.
        norm_tol (float): relative tolerance of the spectral norm estimate.
            Defaults to 1e-6.
        max_iter (int, optional): iteration cap. Defaults to None, which means 10 * n.
        norm_seed (int): seed of the random start vector of the power iteration.
            Defaults to 0.
        strict (bool): True to raise ConvergenceError when a method doesn't converge,
            False to only report it. Defaults to False.
    """

    cg_tol: float = 1e-8
    norm_tol: float = 1e-6
    max_iter: Optional[int] = None
    norm_seed: int = 0
    strict: bool = False

    def __post_init__(self):
        valid.check_positive("cg_tol", self.cg_tol)
        valid.check_positive("norm_tol", self.norm_tol)
        if self.max_iter is not None and self.max_iter < 1:
            raise ParameterDomainError(f"Invalid value for max_iter: {self.max_iter}")

    def iterations_for(self, n: int) -> int:
        """The iteration cap to use for an operator of size n."""
        return _default_max_iter(n) if self.max_iter is None else self.max_iter


class RegularizedOperator(LinearOperator):
    """
    The operator x -> (alpha I - A + tau 1 1^T + lam P) x, applied matrix-free.

    A is the adjacency matrix of the graph, 1 the all-ones vector and P the diagonal
    projection on the labeled nodes. The rank-1 term is applied as tau * sum(x), so
    one application costs O(|E| + n).
    """

    def __init__(
        self,
        graph: SparseGraph,
        tau: float,
        lam: float = 0.0,
        labeled_mask: Optional[ArrayLike] = None,
        alpha: float = 0.0,
    ):
        """
        Constructor for a RegularizedOperator.

        Args:
            graph (SparseGraph): the graph.
            tau (float): weight of the complete graph subtracted from A.
            lam (float, optional): weight of the labeled nodes. Must be finite.
                Defaults to 0.0.
            labeled_mask (arraylike, optional): boolean mask of the labeled nodes.
                Defaults to None, meaning no node is labeled.
            alpha (float, optional): the diagonal shift. Defaults to 0.0.
        """
        if not math.isfinite(lam) or lam < 0:
            raise ParameterDomainError(
                f"lam should be finite and >= 0, not {lam}: for an infinite lam, "
                "restrict the operator to the unlabeled nodes"
            )
        super().__init__(dtype=np.float64, shape=(graph.n, graph.n))
        self.graph = graph
        self.tau = float(tau)
        self.lam = float(lam)
        self.alpha = float(alpha)
        if labeled_mask is None:
            self.labeled_mask = np.zeros(graph.n, dtype=bool)
        else:
            self.labeled_mask = np.asarray(labeled_mask, dtype=bool)
            valid.check_length("labeled_mask", self.labeled_mask, graph.n)

    def apply(self, x: ArrayLike) -> NDArray[np.float64]:
        """Apply the operator to a vector."""
        return self._matvec(x)

    def _matvec(self, x):
        x = np.asarray(x, dtype=np.float64).ravel()
        result = self.alpha * x - self.graph.adjacency @ x + self.tau * x.sum()
        if self.lam != 0.0:
            result += self.lam * np.where(self.labeled_mask, x, 0.0)
        return result

    def _rmatvec(self, x):
        return self._matvec(x)

    def _adjoint(self):
        return self

    def restrict(self, mask: ArrayLike) -> LinearOperator:
        """
        The principal sub-operator on the nodes in mask.

        Args:
            mask (arraylike): boolean mask of the nodes to keep.

        Returns:
            LinearOperator: the operator y -> (M x)[mask] with x = y on mask and 0
                elsewhere.
        """
        idx = np.flatnonzero(np.asarray(mask, dtype=bool))
        n = self.shape[0]

        def matvec(y):
            x = np.zeros(n, dtype=np.float64)
            x[idx] = np.asarray(y, dtype=np.float64).ravel()
            return self._matvec(x)[idx]

        return LinearOperator(
            shape=(len(idx), len(idx)), matvec=matvec, rmatvec=matvec, dtype=np.float64
        )


def regularized_adjacency(g: SparseGraph, tau: float) -> LinearOperator:
    """
    The regularized adjacency A - tau 1 1^T as a matrix-free operator.

    Args:
        g (SparseGraph): the graph.
        tau (float): the weight subtracted from every entry.

    Returns:
        LinearOperator: the operator.
    """

    def matvec(x):
        x = np.asarray(x, dtype=np.float64).ravel()
        return g.adjacency @ x - tau * x.sum()

    return LinearOperator(
        shape=(g.n, g.n), matvec=matvec, rmatvec=matvec, dtype=np.float64
    )


def estimate_spectral_norm(
    op: OperatorLike,
    tol: float = 1e-6,
    max_iter: Optional[int] = None,
    rng_seed: int = 0,
    strict: bool = False,
) -> tuple[float, SolveReport]:
    """
    Estimate the spectral norm of a symmetric operator by power iteration.

    The iteration runs on the square of the operator, whose dominant eigenvalue is
    the squared norm whatever the sign of the extreme eigenvalues. With mu the
    Rayleigh quotient of the current vector, it stops as soon as one of these holds:

        - the eigen-residual ||M^2 v - mu v|| is at most tol * mu.
        - the error of mu, extrapolated from its last increments, is at most
          tol * mu, the ratio of successive increments has settled and the
          eigen-residual is at most sqrt(tol) * mu.

    The second rule ends the iteration on graphs whose top eigenvalues are close
    together, where mu is accurate long before the eigenvector is.

    Args:
        op (LinearOperator, sparse matrix or ndarray): the symmetric operator.
        tol (float, optional): relative tolerance. Defaults to 1e-6.
        max_iter (int, optional): iteration cap. Defaults to None, which means
            10 * n with a minimum of 100.
        rng_seed (int, optional): seed of the random start vector. Defaults to 0.
        strict (bool, optional): True to raise when not converged. Defaults to False.

    Raises:
        ConvergenceError: not converged and strict is True.

    Returns:
        tuple[float, SolveReport]: the estimate and how it was obtained. The
            residual of the report is the eigen-residual, or the extrapolated error
            of mu when the second rule stopped the iteration.
    """
    valid.check_positive("tol", tol)
    op = aslinearoperator(op)
    n = op.shape[0]
    if n == 0:
        return 0.0, SolveReport(0, 0.0, True)
    if max_iter is None:
        max_iter = _default_max_iter(n)

    rng = np.random.default_rng(rng_seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    mu = 0.0
    residual = math.inf
    iteration = 0
    converged = False
    increments: list[float] = []
    ratios: list[float] = []
    for iteration in range(1, max_iter + 1):
        w = op.matvec(v)
        u = op.matvec(w)
        mu_prev = mu
        mu = float(w @ w)
        if mu == 0.0:
            # A random start vector is almost surely outside the null space of a
            # nonzero operator
            residual = 0.0
            converged = True
            break
        residual = float(np.linalg.norm(u - mu * v))
        if residual <= tol * mu:
            converged = True
            break

        if iteration > 1:
            increments.append(mu - mu_prev)
        if len(increments) >= 2:
            previous = increments[-2]
            ratios.append(increments[-1] / previous if previous > 0 else math.nan)
        if len(ratios) >= 2 and residual <= math.sqrt(tol) * mu:
            ratio = ratios[-1]
            if increments[-1] <= 0:
                # mu stalled at rounding level
                error = 0.0
            elif ratio < 1 and abs(ratio - ratios[-2]) <= 1e-3:
                error = increments[-1] * ratio / (1 - ratio)
            else:
                error = math.inf
            if error <= tol * mu:
                residual = error
                converged = True
                break
        v = u / np.linalg.norm(u)

    report = SolveReport(iteration, residual, converged)
    estimate = math.sqrt(mu)
    if not converged:
        message = (
            f"spectral norm estimate {estimate} not converged after {iteration} "
            f"iterations, residual {residual}"
        )
        if strict:
            raise ConvergenceError(message)
        logger.warning(message)
    return estimate, report


def spectral_norm(
    op: OperatorLike,
    tol: float = 1e-6,
    max_iter: Optional[int] = None,
    rng_seed: int = 0,
) -> float:
    """
    The spectral norm of a symmetric operator, estimated by power iteration.

    See estimate_spectral_norm for the details, this function only returns the
    estimate.

    Args:
        op (LinearOperator, sparse matrix or ndarray): the symmetric operator.
        tol (float, optional): relative tolerance. Defaults to 1e-6.
        max_iter (int, optional): iteration cap. Defaults to None.
        rng_seed (int, optional): seed of the random start vector. Defaults to 0.

    Returns:
        float: the largest absolute eigenvalue.
    """
    estimate, _ = estimate_spectral_norm(op, tol, max_iter, rng_seed)
    return estimate


def solve_spd(
    op: OperatorLike,
    b: ArrayLike,
    tol: float = 1e-8,
    max_iter: Optional[int] = None,
    x0: Optional[ArrayLike] = None,
    strict: bool = False,
) -> tuple[NDArray[np.float64], SolveReport]:
    """
    Solve op(x) = b with the conjugate gradient method.

    The operator must be symmetric positive definite, or positive semidefinite with b
    in its range. A direction of negative curvature proves it is not, and raises
    IndefiniteOperatorError.

    Args:
        op (LinearOperator, sparse matrix or ndarray): the symmetric operator.
        b (arraylike): the right-hand side.
        tol (float, optional): the solve stops when ||op(x) - b|| <= tol * ||b||.
            Defaults to 1e-8.
        max_iter (int, optional): iteration cap. Defaults to None, which means
            10 * n with a minimum of 100.
        x0 (arraylike, optional): start vector. Defaults to None, meaning 0.
        strict (bool, optional): True to raise when not converged. Defaults to False.

    Raises:
        IndefiniteOperatorError: negative curvature found.
        ConvergenceError: not converged and strict is True.

    Returns:
        tuple[ndarray, SolveReport]: the solution and how it was obtained.
    """
    valid.check_positive("tol", tol)
    op = aslinearoperator(op)
    b = np.asarray(b, dtype=np.float64).ravel()
    n = len(b)
    if op.shape != (n, n):
        raise ValueError(f"operator shape {op.shape} doesn't match b of length {n}")
    if max_iter is None:
        max_iter = _default_max_iter(n)

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n, dtype=np.float64), SolveReport(0, 0.0, True)
    threshold = tol * b_norm

    if x0 is None:
        x = np.zeros(n, dtype=np.float64)
        r = b.copy()
    else:
        x = np.array(x0, dtype=np.float64).ravel()
        r = b - op.matvec(x)
    rr = float(r @ r)
    if math.sqrt(rr) <= threshold:
        return x, SolveReport(0, math.sqrt(rr), True)

    p = r.copy()
    iteration = 0
    converged = False
    for iteration in range(1, max_iter + 1):
        ap = op.matvec(p)
        curvature = float(p @ ap)
        if curvature <= 0.0:
            scale = float(np.linalg.norm(p) * np.linalg.norm(ap))
            if curvature < -1e-12 * scale or scale == 0.0:
                raise IndefiniteOperatorError(
                    f"negative curvature {curvature} at iteration {iteration}: the "
                    "operator is not positive definite, is alpha below ||A_tau||?"
                )
            # Breakdown on the null space of a semidefinite operator
            logger.warning(f"cg breakdown at iteration {iteration}")
            break
        step = rr / curvature
        x += step * p
        r -= step * ap
        rr_new = float(r @ r)
        if math.sqrt(rr_new) <= threshold:
            rr = rr_new
            converged = True
            break
        p = r + (rr_new / rr) * p
        rr = rr_new

    report = SolveReport(iteration, math.sqrt(rr), converged)
    if not converged:
        message = (
            f"cg not converged after {iteration} iterations, relative residual "
            f"{report.residual / b_norm}"
        )
        if strict:
            raise ConvergenceError(message)
        logger.warning(message)
    return x, report


def dense_sym_eigen(
    m: ArrayLike, max_n: int = 2000
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    The full spectrum of a small dense symmetric matrix.

    Args:
        m (arraylike): the symmetric matrix.
        max_n (int, optional): the largest size accepted. Defaults to 2000.

    Raises:
        ValueError: the matrix is not square or not symmetric within 1e-10.
        ParameterDomainError: the matrix is larger than max_n.

    Returns:
        tuple[ndarray, ndarray]: the eigenvalues in ascending order and the matching
            orthonormal eigenvectors as columns.
    """
    matrix = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"matrix should be square, not {matrix.shape}")
    if matrix.shape[0] > max_n:
        raise ParameterDomainError(
            f"dense eigensolver limited to n <= {max_n}, not {matrix.shape[0]}"
        )
    if matrix.size > 0:
        asymmetry = np.abs(matrix - matrix.T).max()
        if asymmetry > 1e-10 * max(1.0, np.abs(matrix).max()):
            raise ValueError(f"matrix is not symmetric, max asymmetry {asymmetry}")

    eigenvalues, eigenvectors = np.linalg.eigh((matrix + matrix.T) / 2)
    return eigenvalues, eigenvectors


def _default_max_iter(n: int) -> int:
    return max(10 * n, 100)
