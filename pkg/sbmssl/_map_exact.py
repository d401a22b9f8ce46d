import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sbmssl import _paramvalidation as valid
from sbmssl._errors import ParameterDomainError
from sbmssl._graph import ModelParams, SparseGraph
from sbmssl._oracle import OracleLabels

logger = logging.getLogger(__name__)

INFEASIBLE = math.inf
"""Value of an objective at an assignment that violates its constraints."""

_TIE_TOL = 1e-9
_CHUNK_SIZE = 1 << 15


@dataclass(frozen=True, eq=False)
class Assignment:
    """A partition of the nodes in two clusters, as a vector in {-1, +1}^n."""

    sigma: NDArray[np.int8]

    def __post_init__(self):
        sigma = np.asarray(self.sigma)
        if sigma.ndim != 1 or not np.all(np.isin(sigma, (-1, 1))):
            raise ValueError("an assignment should be a vector with entries -1 or +1")
        sigma = sigma.astype(np.int8)
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return len(self.sigma)

    @property
    def c1(self) -> NDArray[np.int64]:
        """The nodes in cluster +1."""
        return np.flatnonzero(self.sigma == 1)

    @property
    def c2(self) -> NDArray[np.int64]:
        """The nodes in cluster -1."""
        return np.flatnonzero(self.sigma == -1)

    def __neg__(self) -> "Assignment":
        return Assignment(-self.sigma)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Assignment):
            return NotImplemented
        return bool(np.array_equal(self.sigma, other.sigma))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class MapObjectiveParams:
    """
    The parameters of the penalized cut objective.

    Attributes:
        tau (float): penalty on unbalanced partitions.
        lam (float): weight of disagreeing with an oracle label, math.inf to
            enforce agreement.
    """

    tau: float
    lam: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.tau):
            raise ParameterDomainError(f"Invalid value for tau: {self.tau}")
        if math.isnan(self.lam) or self.lam < 0:
            raise ParameterDomainError(f"Invalid value for lam: {self.lam}")

    @classmethod
    def from_model(cls, model: ModelParams) -> "MapObjectiveParams":
        """The tau and lambda under which the objective's minimizer is the MAP."""
        return cls(tau=model.tau, lam=model.lam)

    @property
    def is_perfect(self) -> bool:
        return math.isinf(self.lam)


AssignmentLike = Union[Assignment, ArrayLike]


def cut(g: SparseGraph, a: AssignmentLike) -> float:
    """
    The total weight of the edges between the two clusters.

    Args:
        g (SparseGraph): the graph.
        a (Assignment or arraylike): the partition.

    Returns:
        float: the cut weight.
    """
    sigma = _as_sigma(a, g.n)
    in_c1 = (sigma == 1).astype(np.float64)
    return float(in_c1 @ (g.adjacency @ (1.0 - in_c1)))


def disagreement_count(s: OracleLabels, a: AssignmentLike) -> int:
    """The number of labeled nodes whose label differs from the assignment."""
    sigma = _as_sigma(a, s.n)
    idx = s.labeled_set
    return int(np.count_nonzero(sigma[idx] != s.s[idx]))


def map_objective(
    g: SparseGraph, a: AssignmentLike, s: OracleLabels, p: MapObjectiveParams
) -> float:
    """
    The penalized cut: cut - tau |C1| (n - |C1|) + lam * #disagreements.

    Args:
        g (SparseGraph): the graph.
        a (Assignment or arraylike): the partition.
        s (OracleLabels): the oracle labels.
        p (MapObjectiveParams): tau and a finite lambda.

    Raises:
        ParameterDomainError: lambda is infinite, use map_objective_constrained.

    Returns:
        float: the objective value.
    """
    if p.is_perfect:
        raise ParameterDomainError(
            "lam is infinite: use map_objective_constrained for a perfect oracle"
        )
    sigma = _as_sigma(a, g.n)
    size_c1 = int(np.count_nonzero(sigma == 1))
    value = cut(g, sigma) - p.tau * size_c1 * (g.n - size_c1)
    if p.lam != 0:
        value += p.lam * disagreement_count(s, sigma)
    return value


def map_objective_constrained(
    g: SparseGraph, a: AssignmentLike, s: OracleLabels, tau: float
) -> float:
    """
    The penalized cut, restricted to assignments that agree with every label.

    Args:
        g (SparseGraph): the graph.
        a (Assignment or arraylike): the partition.
        s (OracleLabels): the oracle labels.
        tau (float): penalty on unbalanced partitions.

    Returns:
        float: cut - tau |C1| (n - |C1|), or INFEASIBLE if a labeled node disagrees.
    """
    sigma = _as_sigma(a, g.n)
    if disagreement_count(s, sigma) > 0:
        return INFEASIBLE
    return map_objective(g, sigma, s, MapObjectiveParams(tau=tau, lam=0.0))


def log_posterior(
    g: SparseGraph, a: AssignmentLike, s: OracleLabels, params: ModelParams
) -> float:
    """
    The log posterior of an assignment, up to a constant independent of it.

    N_out log(p_out (1 - p_in) / (p_in (1 - p_out)))
    + |C1| |C2| log((1 - p_out) / (1 - p_in))
    + #disagreements log(theta / eta)

    with N_out the number of edges between the clusters. An assignment the oracle
    can't produce, e.g. one disagreeing with a label while theta = 0, gets -inf.

    Args:
        g (SparseGraph): the graph.
        a (Assignment or arraylike): the partition.
        s (OracleLabels): the oracle labels.
        params (ModelParams): the model, with 0 < p_out < p_in < 1.

    Returns:
        float: the log posterior.
    """
    params.check_map_domain()
    sigma = _as_sigma(a, g.n)
    p_in, p_out = params.p_in, params.p_out
    size_c1 = int(np.count_nonzero(sigma == 1))
    value = cut(g, sigma) * (
        math.log(p_out) + math.log1p(-p_in) - math.log(p_in) - math.log1p(-p_out)
    )
    value += size_c1 * (g.n - size_c1) * (math.log1p(-p_out) - math.log1p(-p_in))

    # Prior of the labels, with the convention 0^0 = 1
    disagreements = disagreement_count(s, sigma)
    agreements = s.num_labeled - disagreements
    if (disagreements > 0 and params.theta == 0) or (
        agreements > 0 and params.eta == 0
    ):
        return -math.inf
    if disagreements > 0 and params.eta > 0:
        value += disagreements * math.log(params.theta / params.eta)
    return value


def brute_force_minimizers(
    g: SparseGraph,
    s: OracleLabels,
    params: Union[ModelParams, MapObjectiveParams],
    max_n: int = 20,
) -> list[Assignment]:
    """
    All minimizers of the penalized cut, found by enumeration.

    Every assignment is evaluated; with no labeled node only those with
    sigma_0 = +1 are, as the objective is then invariant under a global sign flip.
    Values within 1e-9 (relative) of the minimum count as ties.

    Args:
        g (SparseGraph): the graph.
        s (OracleLabels): the oracle labels.
        params (ModelParams or MapObjectiveParams): the objective parameters, or a
            model to derive them from. An infinite lambda enforces the labels.
        max_n (int, optional): the largest graph accepted. Defaults to 20.

    Raises:
        ParameterDomainError: more than max_n nodes.

    Returns:
        list[Assignment]: the minimizers in lexicographic order, -1 before +1.
    """
    codes, values = _enumerate_objective(g, s, params, max_n)
    best = values.min()
    ties = values <= best + _TIE_TOL * max(1.0, abs(best))
    return [Assignment(_decode(code, g.n)) for code in codes[ties]]


def brute_force_map(
    g: SparseGraph,
    s: OracleLabels,
    params: Union[ModelParams, MapObjectiveParams],
    max_n: int = 20,
) -> Assignment:
    """
    The MAP assignment of a small graph, by enumeration.

    Ties are broken by lexicographic order of sigma, -1 before +1.

    Args:
        g (SparseGraph): the graph.
        s (OracleLabels): the oracle labels.
        params (ModelParams or MapObjectiveParams): the objective parameters, or a
            model to derive them from.
        max_n (int, optional): the largest graph accepted. Defaults to 20.

    Raises:
        ParameterDomainError: more than max_n nodes.

    Returns:
        Assignment: the minimizer of the penalized cut.
    """
    return brute_force_minimizers(g, s, params, max_n)[0]


def generalized_modularity(g: SparseGraph, a: AssignmentLike, tau: float) -> float:
    """
    The modularity with a constant null model: sum_ij (A_ij - tau) [sigma_i = sigma_j].

    The sum runs over all ordered pairs, the diagonal included.

    Args:
        g (SparseGraph): the graph.
        a (Assignment or arraylike): the partition.
        tau (float): the null model weight of every pair.

    Returns:
        float: the modularity.
    """
    sigma = _as_sigma(a, g.n)
    in_c1 = (sigma == 1).astype(np.float64)
    in_c2 = 1.0 - in_c1
    adjacency = g.adjacency
    within = float(in_c1 @ (adjacency @ in_c1) + in_c2 @ (adjacency @ in_c2))
    size_c1 = in_c1.sum()
    return within - tau * (size_c1**2 + (g.n - size_c1) ** 2)


def _enumerate_objective(
    g: SparseGraph,
    s: OracleLabels,
    params: Union[ModelParams, MapObjectiveParams],
    max_n: int,
) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
    """
    Evaluate the penalized cut on every assignment.

    Assignment code k has sigma_i = +1 iff bit (n - 1 - i) of k is set, so ascending
    codes are assignments in lexicographic order.
    """
    n = g.n
    if n > max_n:
        raise ParameterDomainError(f"brute force limited to n <= {max_n}, not {n}")
    if n < 1:
        raise ParameterDomainError("brute force needs at least one node")
    valid.check_length("s", s.s, n)
    if isinstance(params, ModelParams):
        params = MapObjectiveParams.from_model(params)

    # Without labels, fix node 0 in cluster +1
    first = (1 << (n - 1)) if s.num_labeled == 0 else 0
    codes = np.arange(first, 1 << n, dtype=np.int64)
    values = np.empty(len(codes), dtype=np.float64)

    dense = g.to_dense()
    total = dense.sum()
    labeled = s.labeled_set
    for start in range(0, len(codes), _CHUNK_SIZE):
        chunk = codes[start : start + _CHUNK_SIZE]
        sigmas = _decode(chunk, n).astype(np.float64)
        quadratic = np.einsum("ki,ki->k", sigmas @ dense, sigmas)
        # Each crossing pair contributes 2 * weight to total - sigma^T A sigma
        cuts = (total - quadratic) / 4
        sizes_c1 = np.count_nonzero(sigmas > 0, axis=1)
        chunk_values = cuts - params.tau * sizes_c1 * (n - sizes_c1)
        if len(labeled) > 0 and params.lam != 0:
            disagreements = np.count_nonzero(
                sigmas[:, labeled] != s.s[labeled], axis=1
            )
            if params.is_perfect:
                chunk_values[disagreements > 0] = INFEASIBLE
            else:
                chunk_values += params.lam * disagreements
        values[start : start + len(chunk)] = chunk_values

    return codes, values


def _decode(codes, n: int) -> NDArray[np.int8]:
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (np.asarray(codes, dtype=np.int64)[..., None] >> shifts) & 1
    return (2 * bits - 1).astype(np.int8)


def _as_sigma(a: AssignmentLike, n: int) -> NDArray[np.int8]:
    sigma = a.sigma if isinstance(a, Assignment) else Assignment(np.asarray(a)).sigma
    valid.check_length("assignment", sigma, n)
    return sigma
