import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sbmssl import _paramvalidation as valid
from sbmssl._errors import ParameterDomainError
from sbmssl._graph import GroundTruth

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OracleLabels:
    """
    The side information revealed by the oracle.

    ``s[i]`` is +1 or -1 if the oracle labeled node i, 0 otherwise.
    """

    s: NDArray[np.int8]

    def __post_init__(self):
        s = np.asarray(self.s)
        if s.ndim != 1 or not np.all(np.isin(s, (-1, 0, 1))):
            raise ValueError("oracle labels should be a vector with entries -1, 0, +1")
        s = s.astype(np.int8)
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @classmethod
    def from_vector(cls, values: ArrayLike) -> "OracleLabels":
        """
        Create oracle labels from a vector of -1, 0, +1 values.

        Args:
            values (arraylike): the labels; numeric values must be integral.

        Raises:
            ValueError: values other than -1, 0 and +1 found.

        Returns:
            OracleLabels: the labels.
        """
        return cls(np.asarray(values))

    @classmethod
    def unlabeled(cls, n: int) -> "OracleLabels":
        """Oracle labels where no node is labeled."""
        return cls(np.zeros(n, dtype=np.int8))

    @property
    def n(self) -> int:
        return len(self.s)

    @cached_property
    def labeled_set(self) -> NDArray[np.int64]:
        """The indices of the labeled nodes, ascending."""
        return np.flatnonzero(self.s)

    @cached_property
    def labeled_mask(self) -> NDArray[np.bool_]:
        return self.s != 0

    @property
    def unlabeled_mask(self) -> NDArray[np.bool_]:
        return ~self.labeled_mask

    @property
    def num_labeled(self) -> int:
        return len(self.labeled_set)


def error_rate(eta: float, theta: float) -> float:
    """
    The rate of mistakes of the oracle among the labeled nodes.

    Args:
        eta (float): probability the oracle reveals the true label of a node.
        theta (float): probability the oracle reveals the wrong label of a node.

    Raises:
        ParameterDomainError: eta + theta = 0, so the rate is undefined.

    Returns:
        float: theta / (eta + theta).
    """
    valid.check_oracle_rates(eta, theta)
    if eta + theta == 0:
        raise ParameterDomainError(
            "error rate is undefined when the oracle labels no node (eta + theta = 0)"
        )
    return theta / (eta + theta)


def oracle_from_rates(
    labeled_fraction: float, error_rate: float
) -> tuple[float, float]:
    """
    Convert a (labeled fraction, error rate) pair to the oracle probabilities.

    Args:
        labeled_fraction (float): the expected fraction of labeled nodes, eta + theta.
        error_rate (float): the fraction of wrong labels, theta / (eta + theta).

    Returns:
        tuple[float, float]: eta and theta.
    """
    valid.check_probability("labeled_fraction", labeled_fraction)
    valid.check_probability("error_rate", error_rate)
    return labeled_fraction * (1 - error_rate), labeled_fraction * error_rate


def sample_oracle(
    sigma0: Union[GroundTruth, ArrayLike],
    eta: float,
    theta: float,
    rng_seed: int,
) -> OracleLabels:
    """
    Sample the oracle labels.

    Independently for every node j: S_j = sigma0_j with probability eta,
    S_j = -sigma0_j with probability theta and S_j = 0 otherwise.

    Args:
        sigma0 (GroundTruth or arraylike): the true clusters.
        eta (float): probability of revealing the true label.
        theta (float): probability of revealing the wrong label.
        rng_seed (int): seed for the random generator.

    Returns:
        OracleLabels: the sampled labels.
    """
    valid.check_oracle_rates(eta, theta)
    truth = _as_sigma0(sigma0)
    rng = np.random.default_rng(rng_seed)
    draws = rng.random(len(truth))
    s = np.zeros(len(truth), dtype=np.int8)
    correct = draws < eta
    wrong = (draws >= eta) & (draws < eta + theta)
    s[correct] = truth[correct]
    s[wrong] = -truth[wrong]
    return OracleLabels(s)


def ordered_oracle(
    sigma0: Union[GroundTruth, ArrayLike], eta: float, theta: float
) -> OracleLabels:
    """
    Deterministic oracle labels with exactly balanced counts.

    Within each cluster, the first theta * size nodes get the wrong label, the next
    eta * size nodes the correct one, the rest stays unlabeled. Both counts are
    rounded to the nearest integer. This is the layout under which the mean-field
    solution is exact.

    Args:
        sigma0 (GroundTruth or arraylike): the true clusters.
        eta (float): fraction of nodes labeled correctly.
        theta (float): fraction of nodes labeled wrongly.

    Returns:
        OracleLabels: the labels.
    """
    valid.check_oracle_rates(eta, theta)
    truth = _as_sigma0(sigma0)
    s = np.zeros(len(truth), dtype=np.int8)
    for label in (1, -1):
        members = np.flatnonzero(truth == label)
        num_wrong = int(round(theta * len(members)))
        num_correct = int(round(eta * len(members)))
        s[members[:num_wrong]] = -label
        s[members[num_wrong : num_wrong + num_correct]] = label
    return OracleLabels(s)


def labeled_fraction(labels: OracleLabels) -> float:
    """The realized fraction of labeled nodes."""
    return labels.num_labeled / labels.n if labels.n > 0 else math.nan


def realized_error_rate(
    labels: OracleLabels, sigma0: Union[GroundTruth, ArrayLike]
) -> float:
    """
    The realized fraction of wrong labels among the labeled nodes.

    Args:
        labels (OracleLabels): the oracle labels.
        sigma0 (GroundTruth or arraylike): the true clusters.

    Returns:
        float: the error rate, NaN if no node is labeled.
    """
    truth = _as_sigma0(sigma0)
    valid.check_length("sigma0", truth, labels.n)
    if labels.num_labeled == 0:
        return math.nan
    idx = labels.labeled_set
    return float(np.count_nonzero(labels.s[idx] != truth[idx]) / len(idx))


def save_labels(labels: OracleLabels, path: Union[str, Path]):
    """
    Write oracle labels to a text file, one value in {-1, 0, 1} per line.

    Args:
        labels (OracleLabels): the labels to write.
        path (str or Path): the output file.
    """
    np.savetxt(path, labels.s, fmt="%d", header=f"n={labels.n}")


def load_labels(path: Union[str, Path]) -> OracleLabels:
    """
    Read oracle labels from a text file, one value in {-1, 0, 1} per line.

    Lines starting with # are ignored.

    Args:
        path (str or Path): the file to read.

    Raises:
        ValueError: the file contains other values.

    Returns:
        OracleLabels: the labels.
    """
    values = np.loadtxt(path, dtype=np.int64, comments="#", ndmin=1)
    return OracleLabels.from_vector(values)


def _as_sigma0(sigma0: Union[GroundTruth, ArrayLike]) -> NDArray[np.int8]:
    if isinstance(sigma0, GroundTruth):
        return sigma0.sigma0
    return GroundTruth(np.asarray(sigma0)).sigma0
