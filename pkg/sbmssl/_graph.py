import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union
import warnings

import numpy as np
from numpy.typing import ArrayLike, NDArray
import scipy.sparse as sp

import sbmssl
from sbmssl import _paramvalidation as valid
from sbmssl._errors import EdgeListFormatError, ParameterDomainError

logger = logging.getLogger(__name__)


class SparseGraph:
    """
    Undirected weighted graph, stored as a symmetric CSR adjacency matrix.

    The graph is immutable after construction. A self-loop on node i is stored once,
    as the diagonal entry A_ii, and counts once in the degree of i.
    """

    def __init__(self, adjacency: Union[sp.spmatrix, ArrayLike]):
        """
        Constructor for a SparseGraph.

        Args:
            adjacency (sparse matrix or arraylike): square, symmetric matrix with
                nonnegative edge weights.

        Raises:
            ValueError: the matrix is not square, not symmetric or has negative
                weights.
        """
        matrix = sp.csr_matrix(adjacency, dtype=np.float64)
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"adjacency should be square, not {matrix.shape}")
        matrix.sum_duplicates()
        matrix.eliminate_zeros()
        matrix.sort_indices()
        if matrix.nnz > 0:
            if not np.all(np.isfinite(matrix.data)):
                raise ValueError("adjacency contains non-finite weights")
            if matrix.data.min() < 0:
                raise ValueError("adjacency contains negative weights")
        if (matrix != matrix.T).nnz > 0:
            raise ValueError("adjacency is not symmetric")

        self._adjacency = matrix
        self._degrees = np.asarray(matrix.sum(axis=1)).ravel()
        self._degrees.setflags(write=False)

    @classmethod
    def from_edges(
        cls,
        n: int,
        rows: ArrayLike,
        cols: ArrayLike,
        weights: Optional[ArrayLike] = None,
    ) -> "SparseGraph":
        """
        Create a graph from a list of undirected edges.

        Each (rows[k], cols[k]) pair is one undirected edge; repeated pairs are summed.

        Args:
            n (int): number of nodes.
            rows (arraylike): first endpoint of each edge.
            cols (arraylike): second endpoint of each edge.
            weights (arraylike, optional): weight of each edge. Defaults to None,
                which means weight 1.

        Returns:
            SparseGraph: the graph.
        """
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if weights is None:
            weights = np.ones(len(rows), dtype=np.float64)
        else:
            weights = np.asarray(weights, dtype=np.float64).ravel()
        if len(rows) != len(cols) or len(rows) != len(weights):
            raise ValueError("rows, cols and weights should have the same length")
        if len(rows) > 0 and (
            min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n
        ):
            raise ValueError(f"edge endpoints should be in [0, {n})")

        # Mirror the off-diagonal entries, loops are stored once
        off_diag = rows != cols
        all_rows = np.concatenate([rows, cols[off_diag]])
        all_cols = np.concatenate([cols, rows[off_diag]])
        all_weights = np.concatenate([weights, weights[off_diag]])
        adjacency = sp.coo_matrix((all_weights, (all_rows, all_cols)), shape=(n, n))
        return cls(adjacency.tocsr())

    @classmethod
    def empty(cls, n: int) -> "SparseGraph":
        """Create a graph with n nodes and no edges."""
        return cls(sp.csr_matrix((n, n), dtype=np.float64))

    @property
    def n(self) -> int:
        """The number of nodes."""
        return self._adjacency.shape[0]

    @property
    def adjacency(self) -> sp.csr_matrix:
        """The symmetric adjacency matrix. Don't modify it."""
        return self._adjacency

    @property
    def degrees(self) -> NDArray[np.float64]:
        """The weighted degree of every node."""
        return self._degrees

    @property
    def num_edges(self) -> int:
        """The number of distinct undirected edges, self-loops included."""
        return int(sp.triu(self._adjacency).nnz)

    @property
    def total_weight(self) -> float:
        """The sum of the weights of all undirected edges, self-loops included."""
        return float(sp.triu(self._adjacency).sum())

    def to_dense(self) -> NDArray[np.float64]:
        """The adjacency as a dense array."""
        return self._adjacency.toarray()

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseGraph):
            return NotImplemented
        return self.n == other.n and (self._adjacency != other._adjacency).nnz == 0

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(n={self.n}, num_edges={self.num_edges})"


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """The true community of every node, as a vector in {-1, +1}^n."""

    sigma0: NDArray[np.int8]

    def __post_init__(self):
        sigma0 = np.asarray(self.sigma0)
        if sigma0.ndim != 1 or not np.all(np.isin(sigma0, (-1, 1))):
            raise ValueError("sigma0 should be a vector with entries -1 or +1")
        sigma0 = sigma0.astype(np.int8)
        sigma0.setflags(write=False)
        object.__setattr__(self, "sigma0", sigma0)

    @property
    def n(self) -> int:
        return len(self.sigma0)

    @property
    def cluster_sizes(self) -> tuple[int, int]:
        """The number of nodes labeled +1 and -1."""
        size_plus = int(np.count_nonzero(self.sigma0 == 1))
        return size_plus, self.n - size_plus


@dataclass(frozen=True)
class ModelParams:
    """
    The parameters of a two block SSBM with a noisy oracle.

    Attributes:
        n (int): number of nodes.
        p_in (float): intra-cluster edge probability.
        p_out (float): inter-cluster edge probability.
        eta (float): probability the oracle reveals the true label of a node.
        theta (float): probability the oracle reveals the wrong label of a node.
    """

    n: int
    p_in: float
    p_out: float
    eta: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterDomainError(f"Invalid value for n: {self.n}")
        valid.check_probability("p_in", self.p_in)
        valid.check_probability("p_out", self.p_out)
        valid.check_oracle_rates(self.eta, self.theta)

    def check_map_domain(self):
        """
        Check 0 < p_out < p_in < 1, needed for the MAP parameters tau and lambda.

        Raises:
            ParameterDomainError: the probabilities are outside this domain.
        """
        valid.check_map_domain(self.p_in, self.p_out)

    @property
    def d(self) -> float:
        """The average degree n (p_in + p_out) / 2."""
        return self.n * (self.p_in + self.p_out) / 2

    @property
    def alpha_mf(self) -> float:
        """The mean-field shift n (p_in - p_out) / 2."""
        return self.n * (self.p_in - self.p_out) / 2

    @property
    def labeled_fraction(self) -> float:
        """The expected fraction of labeled nodes, eta + theta."""
        return self.eta + self.theta

    @property
    def s(self) -> float:
        """The oracle error rate theta / (eta + theta)."""
        return sbmssl.error_rate(self.eta, self.theta)

    @property
    def is_informative(self) -> bool:
        return self.eta > self.theta

    @property
    def tau(self) -> float:
        """The MAP penalty on unbalanced partitions."""
        return sbmssl.tau_of(self.p_in, self.p_out)

    @property
    def lam(self) -> float:
        """The MAP weight of the oracle labels, math.inf for a perfect oracle."""
        return sbmssl.lambda_of(self.eta, self.theta, self.p_in, self.p_out)


def sample_ssbm(
    params: ModelParams,
    rng_seed: int,
    balanced: bool = True,
    self_loops: bool = False,
) -> tuple[SparseGraph, GroundTruth]:
    """
    Sample a graph from a symmetric two block stochastic block model.

    Each unordered pair of distinct nodes gets an edge independently, with
    probability p_in if both nodes are in the same cluster and p_out otherwise.

    Args:
        params (ModelParams): the model parameters. Only n, p_in and p_out are used.
        rng_seed (int): seed for the random generator. The same seed gives the same
            graph.
        balanced (bool, optional): True to put the first n // 2 nodes in cluster +1
            and the others in cluster -1. False to draw every label uniformly.
            Defaults to True.
        self_loops (bool, optional): True to add a self-loop to each node with
            probability p_in. Defaults to False.

    Raises:
        ParameterDomainError: less than 2 nodes.

    Returns:
        tuple[SparseGraph, GroundTruth]: the graph and the true clusters.
    """
    n = params.n
    if n < 2:
        raise ParameterDomainError(f"sampling an SSBM needs at least 2 nodes, not {n}")
    rng = np.random.default_rng(rng_seed)

    if balanced:
        sigma0 = np.full(n, -1, dtype=np.int8)
        sigma0[: n // 2] = 1
    else:
        sigma0 = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
    blocks = [np.flatnonzero(sigma0 == 1), np.flatnonzero(sigma0 == -1)]

    rows = []
    cols = []
    for block in blocks:
        first, second = _sample_within_block(len(block), params.p_in, rng)
        rows.append(block[first])
        cols.append(block[second])
    first, second = _sample_between_blocks(
        len(blocks[0]), len(blocks[1]), params.p_out, rng
    )
    rows.append(blocks[0][first])
    cols.append(blocks[1][second])
    if self_loops:
        loops = np.flatnonzero(rng.random(n) < params.p_in)
        rows.append(loops)
        cols.append(loops)

    graph = SparseGraph.from_edges(n, np.concatenate(rows), np.concatenate(cols))
    logger.debug(f"sampled SSBM with {n} nodes and {graph.num_edges} edges")
    return graph, GroundTruth(sigma0)


def _sample_pair_indices(
    num_pairs: int, p: float, rng: np.random.Generator
) -> NDArray[np.int64]:
    """
    Draw each of num_pairs candidate pairs independently with probability p.

    The number of successes is binomial, and given that number every subset of that
    size is equally likely, so both are sampled directly.
    """
    if num_pairs == 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    count = int(rng.binomial(num_pairs, p))
    if count == 0:
        return np.empty(0, dtype=np.int64)
    indices = rng.choice(num_pairs, size=count, replace=False)
    return np.sort(indices.astype(np.int64))


def _sample_within_block(
    size: int, p: float, rng: np.random.Generator
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    num_pairs = size * (size - 1) // 2
    indices = _sample_pair_indices(num_pairs, p, rng)

    # Pairs (i, j), i < j, are numbered row by row; row i starts at offsets[i]
    row_ids = np.arange(size, dtype=np.int64)
    offsets = row_ids * size - row_ids * (row_ids + 1) // 2
    first = np.searchsorted(offsets, indices, side="right") - 1
    second = first + 1 + (indices - offsets[first])
    return first, second


def _sample_between_blocks(
    size1: int, size2: int, p: float, rng: np.random.Generator
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    indices = _sample_pair_indices(size1 * size2, p, rng)
    return indices // size2, indices % size2


def expected_graph(params: ModelParams) -> tuple[SparseGraph, GroundTruth]:
    """
    The mean-field graph: the expected adjacency matrix of a balanced SSBM.

    All pairs are connected, with weight p_in inside a cluster and p_out across.
    The diagonal gets weight p_in, so the weight matrix is exactly the block matrix
    used in the mean-field analysis. The first n/2 nodes form cluster +1.

    Args:
        params (ModelParams): the model parameters.

    Raises:
        ParameterDomainError: n is odd.

    Returns:
        tuple[SparseGraph, GroundTruth]: the weighted graph and the true clusters.
    """
    valid.check_even(params.n, "the mean-field graph")
    half = params.n // 2
    sigma0 = np.concatenate(
        [np.ones(half, dtype=np.int8), -np.ones(half, dtype=np.int8)]
    )
    same_block = np.equal.outer(sigma0, sigma0)
    dense = np.where(same_block, params.p_in, params.p_out)
    return SparseGraph(sp.csr_matrix(dense)), GroundTruth(sigma0)


def params_from_degree(n: int, avg_degree: float, ratio: float) -> tuple[float, float]:
    """
    Edge probabilities for a given average degree and contrast.

    Args:
        n (int): number of nodes.
        avg_degree (float): the average degree d = n (p_in + p_out) / 2.
        ratio (float): the contrast (p_in - p_out) / (p_in + p_out), in [0, 1].

    Raises:
        ParameterDomainError: the resulting probabilities are not in [0, 1].

    Returns:
        tuple[float, float]: p_in and p_out.
    """
    if not (0.0 <= ratio <= 1.0):
        raise ParameterDomainError(f"Invalid value for ratio: {ratio}")
    p_in = (1 + ratio) * avg_degree / n
    p_out = (1 - ratio) * avg_degree / n
    valid.check_probability("p_in", p_in)
    valid.check_probability("p_out", p_out)
    return p_in, p_out


def degree_regularize(g: SparseGraph, d_max: float) -> SparseGraph:
    """
    Cap the degrees of a graph by scaling down the edges of high degree nodes.

    Every node with degree above d_max gets scale factor d_max / degree, every other
    node factor 1. An edge is scaled by the smaller factor of its two endpoints, so
    the result stays symmetric and every degree ends up <= d_max.

    Args:
        g (SparseGraph): the input graph.
        d_max (float): the maximum degree.

    Returns:
        SparseGraph: the regularized graph. If no degree exceeds d_max, g itself.
    """
    valid.check_positive("d_max", d_max)
    degrees = g.degrees
    # Relative slack so a second pass doesn't rescale rounding noise
    too_high = degrees > d_max * (1 + 1e-12)
    if not np.any(too_high):
        return g

    scale = np.ones(g.n, dtype=np.float64)
    scale[too_high] = d_max / degrees[too_high]
    edges = g.adjacency.tocoo()
    factors = np.minimum(scale[edges.row], scale[edges.col])
    logger.info(f"degree_regularize: {np.count_nonzero(too_high)} nodes capped")
    return SparseGraph(
        sp.csr_matrix((edges.data * factors, (edges.row, edges.col)), shape=(g.n, g.n))
    )


def save_edge_list(g: SparseGraph, path: Union[str, Path]):
    """
    Write a graph as an edge list text file.

    The first line is the header ``# n=<n>``, then one ``i j [w]`` line per undirected
    edge with i <= j. The weight is omitted when it is 1.

    Args:
        g (SparseGraph): the graph to write.
        path (str or Path): the output file.
    """
    upper = sp.triu(g.adjacency).tocoo()
    order = np.lexsort((upper.col, upper.row))
    with open(path, "w") as file:
        file.write(f"# n={g.n}\n")
        for row, col, weight in zip(
            upper.row[order], upper.col[order], upper.data[order]
        ):
            if weight == 1.0:
                file.write(f"{row} {col}\n")
            else:
                file.write(f"{row} {col} {float(weight)!r}\n")


def load_edge_list(path: Union[str, Path]) -> SparseGraph:
    """
    Read a graph from an edge list text file.

    The file needs a header line ``# n=<n>`` before any edge. Every other line is a
    comment (starts with #), empty, or an undirected edge ``i j [w]`` with 0-based
    node ids and an optional nonnegative weight. An edge listed more than once, in
    either direction, gets the sum of the weights.

    Args:
        path (str or Path): the file to read.

    Raises:
        EdgeListFormatError: the file is malformed.

    Returns:
        SparseGraph: the graph.
    """
    n = None
    edges: dict[tuple[int, int], float] = {}
    duplicates = 0
    with open(path) as file:
        for line_number, line in enumerate(file, start=1):
            line = line.strip()
            if n is None:
                if line.startswith("#") and line[1:].strip().startswith("n="):
                    try:
                        n = int(line[1:].strip()[2:])
                    except ValueError:
                        raise EdgeListFormatError(
                            f"invalid header: {line}", path, line_number
                        )
                    if n < 0:
                        raise EdgeListFormatError(
                            f"invalid node count: {n}", path, line_number
                        )
                    continue
                if line == "" or line.startswith("#"):
                    continue
                raise EdgeListFormatError(
                    "header '# n=<n>' expected before the first edge", path, line_number
                )
            if line == "" or line.startswith("#"):
                continue

            # Parse the edge
            parts = line.split()
            if len(parts) not in (2, 3):
                raise EdgeListFormatError(
                    f"expected 'i j [w]', not: {line}", path, line_number
                )
            try:
                first, second = int(parts[0]), int(parts[1])
                weight = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise EdgeListFormatError(f"malformed line: {line}", path, line_number)
            if not (0 <= first < n and 0 <= second < n):
                raise EdgeListFormatError(
                    f"node id out of range [0, {n}): {line}", path, line_number
                )
            if not math.isfinite(weight) or weight < 0:
                raise EdgeListFormatError(
                    f"invalid weight: {line}", path, line_number
                )
            key = (min(first, second), max(first, second))
            if key in edges:
                duplicates += 1
                edges[key] += weight
            else:
                edges[key] = weight

    if n is None:
        raise EdgeListFormatError("header '# n=<n>' not found", path)
    if duplicates > 0:
        message = f"{path}: {duplicates} duplicate edges merged by summing weights"
        logger.warning(message)
        warnings.warn(message, stacklevel=2)

    keys = np.array(list(edges.keys()), dtype=np.int64).reshape(-1, 2)
    weights = np.fromiter(edges.values(), dtype=np.float64, count=len(edges))
    return SparseGraph.from_edges(n, keys[:, 0], keys[:, 1], weights)
