"""
Closed forms of the mean-field model, where the adjacency matrix is replaced by its
expectation, and the bounds derived from them.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sbmssl import _paramvalidation as valid
from sbmssl._errors import ParameterDomainError
from sbmssl._graph import GroundTruth, ModelParams, SparseGraph
from sbmssl._linalg import SolverOptions
from sbmssl._oracle import OracleLabels
from sbmssl._ssl import SslParams, solve_noisy, solve_perfect
from sbmssl._types import AlphaPolicy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeanFieldSolution:
    """
    The mean-field scores, per kind of node, of a node in cluster +1.

    A node of cluster -1 gets the opposite score.

    Attributes:
        gamma1 (float): score of a node with a wrong label.
        gamma2 (float): score of a node with a correct label.
        delta (float): score of an unlabeled node, 1 - 2s.
        alpha_mf (float): the mean-field shift n (p_in - p_out) / 2.
        s (float): the oracle error rate.
    """

    gamma1: float
    gamma2: float
    delta: float
    alpha_mf: float
    s: float

    def scores(
        self, sigma0: Union[GroundTruth, ArrayLike], labels: OracleLabels
    ) -> NDArray[np.float64]:
        """
        Place the mean-field scores on the nodes, following their oracle status.

        Args:
            sigma0 (GroundTruth or arraylike): the true clusters.
            labels (OracleLabels): the oracle labels.

        Returns:
            ndarray: gamma1 sigma0_i for wrongly labeled nodes, gamma2 sigma0_i for
                correctly labeled ones and delta sigma0_i for the others.
        """
        truth = sigma0.sigma0 if isinstance(sigma0, GroundTruth) else np.asarray(sigma0)
        valid.check_length("sigma0", truth, labels.n)
        per_node = np.full(labels.n, self.delta)
        per_node[labels.s == truth] = self.gamma2
        per_node[labels.labeled_mask & (labels.s != truth)] = self.gamma1
        return per_node * truth


@dataclass(frozen=True)
class ClassificationReport:
    """
    Which kinds of nodes the mean-field solution classifies correctly.

    Attributes:
        unlabeled_ok (bool): unlabeled nodes, delta > 0.
        correct_labeled_ok (bool): correctly labeled nodes, gamma2 > 0.
        wrong_labeled_ok (bool): wrongly labeled nodes are corrected, gamma1 > 0.
    """

    unlabeled_ok: bool
    correct_labeled_ok: bool
    wrong_labeled_ok: bool


@dataclass(frozen=True)
class Spectrum:
    """
    The eigenvalues of alpha_mf I - E A_tau + lam P.

    Attributes:
        t1_plus (float): larger root of the characteristic factor along 1.
        t1_minus (float): smaller root of the characteristic factor along 1.
        t2_plus (float): larger root of the characteristic factor along sigma0.
        t2_minus (float): smaller root of the characteristic factor along sigma0.
        eigenvalues (ndarray): all n eigenvalues, ascending, with multiplicities.
    """

    t1_plus: float
    t1_minus: float
    t2_plus: float
    t2_minus: float
    eigenvalues: NDArray[np.float64]


def meanfield_solution(model: ModelParams, lam: float) -> MeanFieldSolution:
    """
    The mean-field solution of the noisy system with alpha = alpha_mf.

    gamma1 = (-lam + (1 - 2s) alpha_mf) / (lam + alpha_mf)
    gamma2 = (lam + (1 - 2s) alpha_mf) / (lam + alpha_mf)
    delta = 1 - 2s

    Args:
        model (ModelParams): the model, with an even n and eta + theta > 0.
        lam (float): the weight of the oracle labels, > 0. math.inf clamps labeled
            nodes to their label.

    Raises:
        ParameterDomainError: lam is 0, n is odd, or no node is labeled.

    Returns:
        MeanFieldSolution: the scores.
    """
    valid.check_even(model.n)
    if math.isnan(lam) or lam < 0:
        raise ParameterDomainError(f"Invalid value for lam: {lam}")
    if lam == 0:
        raise ParameterDomainError(
            "lam = 0: the mean-field solution is then proportional to sigma0, as "
            "found by spectral clustering"
        )
    s = model.s
    alpha = model.alpha_mf
    informative = (1 - 2 * s) * alpha
    if math.isinf(lam):
        gamma1, gamma2 = -1.0, 1.0
    else:
        gamma1 = (-lam + informative) / (lam + alpha)
        gamma2 = (lam + informative) / (lam + alpha)
    return MeanFieldSolution(
        gamma1=gamma1, gamma2=gamma2, delta=1 - 2 * s, alpha_mf=alpha, s=s
    )


def classification_conditions(model: ModelParams, lam: float) -> ClassificationReport:
    """
    Check which nodes the mean-field solution classifies correctly.

    For an informative oracle (s < 1/2), unlabeled and correctly labeled nodes are
    always classified correctly, and wrong labels are corrected iff
    lam < (1 - 2s) alpha_mf. For s > 1/2, unlabeled nodes are misclassified and
    correct labels survive iff lam > (2s - 1) alpha_mf.

    Args:
        model (ModelParams): the model.
        lam (float): the weight of the oracle labels.

    Returns:
        ClassificationReport: the classification per kind of node.
    """
    sol = meanfield_solution(model, lam)
    return ClassificationReport(
        unlabeled_ok=sol.delta > 0,
        correct_labeled_ok=sol.gamma2 > 0,
        wrong_labeled_ok=sol.gamma1 > 0,
    )


def rank2_roots(c: float, lam: float, m: float, n: float) -> tuple[float, float]:
    """
    The roots of t (t + lam) - c (t + lam (1 - m / n)).

    Args:
        c (float): the eigenvalue of the rank 2 model along the direction.
        lam (float): the weight of the oracle labels.
        m (float): the number of labeled nodes.
        n (float): the number of nodes.

    Returns:
        tuple[float, float]: the larger and the smaller root.
    """
    discriminant = (lam + c) ** 2 - 4 * c * lam * m / n
    if discriminant < 0:
        # Only rounding can bring it below 0 for 0 <= m <= n
        if discriminant < -1e-12 * (lam + abs(c)) ** 2:
            raise ParameterDomainError(f"complex roots for c={c}, lam={lam}, m={m}")
        discriminant = 0.0
    root = math.sqrt(discriminant)
    return (c - lam + root) / 2, (c - lam - root) / 2


def rank2_char_poly(t: float, a: float, b: float, lam: float, m: int, n: int) -> float:
    """
    det(t I + lam P - M) for the rank 2 block matrix M and a balanced labeled set.

    M has entries a within the blocks of size n / 2 and b across them; P is the
    diagonal projection on m labeled nodes, m / 2 in each block. The determinant
    factors as t^(n - m - 2) (t + lam)^(m - 2) P1(t) P2(t) with
    Pk(t) = t (t + lam) - ck (t + lam (1 - m / n)), c1 = n (a + b) / 2 and
    c2 = n (a - b) / 2.

    Args:
        t (float): where to evaluate the polynomial.
        a (float): the entry within the blocks.
        b (float): the entry across the blocks.
        lam (float): the weight of the labeled nodes.
        m (int): the number of labeled nodes, even.
        n (int): the number of nodes, even.

    Returns:
        float: the determinant.
    """
    valid.check_even(n, "the rank 2 characteristic polynomial")
    valid.check_even(m, "the rank 2 characteristic polynomial")

    def factor(c: float) -> float:
        return t * (t + lam) - c * (t + lam * (1 - m / n))

    return (
        t ** (n - m - 2)
        * (t + lam) ** (m - 2)
        * factor(n * (a + b) / 2)
        * factor(n * (a - b) / 2)
    )


def mf_spectrum(
    model: ModelParams,
    lam: float,
    tau: Optional[float] = None,
    labeled_count: Optional[int] = None,
) -> Spectrum:
    """
    The spectrum of alpha_mf I - E A_tau + lam P, with a balanced labeled set.

    The eigenvalues are alpha_mf - t for the four roots t1+-, t2+-, alpha_mf with
    multiplicity n - m - 2 and alpha_mf + lam with multiplicity m - 2. t1 and t2 are
    the roots for c1 = d - n tau and c2 = alpha_mf. When m or n - m is below 2, the
    negative multiplicity cancels the roots equal to the repeated eigenvalue.

    Args:
        model (ModelParams): the model, with an even n.
        lam (float): the weight of the oracle labels, finite.
        tau (float, optional): the regularization. Defaults to None, the MAP value.
        labeled_count (int, optional): m, the number of labeled nodes. Defaults to
            None, (eta + theta) n rounded to the nearest integer.

    Returns:
        Spectrum: the roots and the n eigenvalues.
    """
    valid.check_even(model.n)
    valid.check_positive("lam", lam, allow_zero=True)
    if math.isinf(lam):
        raise ParameterDomainError("the spectrum is defined for a finite lam only")
    n = model.n
    if tau is None:
        tau = model.tau
    m = round(model.labeled_fraction * n) if labeled_count is None else labeled_count
    if not 0 <= m <= n:
        raise ParameterDomainError(f"Invalid value for labeled_count: {m}")

    alpha = model.alpha_mf
    c1 = model.d - n * tau
    t1_plus, t1_minus = rank2_roots(c1, lam, m, n)
    t2_plus, t2_minus = rank2_roots(alpha, lam, m, n)

    roots = [alpha - t for t in (t1_plus, t1_minus, t2_plus, t2_minus)]
    for value, multiplicity in ((alpha, n - m - 2), (alpha + lam, m - 2)):
        if multiplicity >= 0:
            roots.extend([value] * multiplicity)
            continue
        for _ in range(-multiplicity):
            closest = int(np.argmin([abs(root - value) for root in roots]))
            roots.pop(closest)

    eigenvalues = np.sort(np.asarray(roots, dtype=np.float64))
    return Spectrum(
        t1_plus=t1_plus,
        t1_minus=t1_minus,
        t2_plus=t2_plus,
        t2_minus=t2_minus,
        eigenvalues=eigenvalues,
    )


def spectral_gap(model: ModelParams, lam: float) -> float:
    """
    The smallest eigenvalue of the mean-field system, alpha_mf - t2+.

    (alpha_mf + lam) / 2 (1 - sqrt(1 - x))
    with x = 4 lam alpha_mf (eta + theta) / (lam + alpha_mf)^2

    Args:
        model (ModelParams): the model.
        lam (float): the weight of the oracle labels.

    Returns:
        float: the gap; 0 for lam = 0 and alpha_mf (eta + theta) for lam = inf.
    """
    valid.check_positive("lam", lam, allow_zero=True)
    alpha = model.alpha_mf
    fraction = model.labeled_fraction
    if math.isinf(lam):
        return alpha * fraction
    if lam == 0 or fraction == 0:
        return 0.0
    x = _gap_argument(alpha, lam, fraction)
    # 1 - sqrt(1 - x), without cancellation for small x
    return (alpha + lam) / 2 * x / (1 + math.sqrt(max(0.0, 1 - x)))


def concentration_bound(model: ModelParams, lam: float, C: float) -> float:
    """
    Bound on the relative distance between the solution and its mean-field value.

    C / (1 - sqrt(1 - 4 (eta + theta) lam alpha_mf / (lam + alpha_mf)^2))
    * sqrt(d) / (alpha_mf + lam)

    The constant C comes from the concentration of the adjacency matrix and is not
    known, so it must be given.

    Args:
        model (ModelParams): the model.
        lam (float): the weight of the oracle labels.
        C (float): the concentration constant, > 0.

    Returns:
        float: the bound; math.inf if lam = 0 or no node is labeled. For
            lam = inf, the limit C sqrt(d) / (2 alpha_mf (eta + theta)).
    """
    valid.check_positive("C", C)
    valid.check_positive("lam", lam, allow_zero=True)
    alpha = model.alpha_mf
    fraction = model.labeled_fraction
    if lam == 0 or fraction == 0 or alpha <= 0:
        return math.inf
    if math.isinf(lam):
        return C * math.sqrt(model.d) / (2 * alpha * fraction)
    x = _gap_argument(alpha, lam, fraction)
    denominator = x / (1 + math.sqrt(max(0.0, 1 - x)))
    return C / denominator * math.sqrt(model.d) / (alpha + lam)


def misclassification_bound(
    model: ModelParams, lam: float, C: float, clip: bool = True
) -> float:
    """
    Bound on the fraction of nodes misclassified by Algorithm 1.

    It is C times the square of the concentration bound taken with C = 1.

    Args:
        model (ModelParams): the model.
        lam (float): the weight of the oracle labels.
        C (float): the constant, > 0.
        clip (bool, optional): True to clip the bound to [0, 1]. Defaults to True.

    Returns:
        float: the bound.
    """
    valid.check_positive("C", C)
    bound = C * concentration_bound(model, lam, 1.0) ** 2
    return min(bound, 1.0) if clip else bound


def accurate_oracle_bound(model: ModelParams, C: float) -> float:
    """
    The misclassification bound when lam is large compared to alpha_mf.

    C ((p_in + p_out) / (p_in - p_out))^2 / (4 (eta + theta)^2 d), the limit of
    misclassification_bound(model, lam, C, clip=False) for lam -> inf.

    Args:
        model (ModelParams): the model, with p_in > p_out.
        C (float): the constant, > 0.

    Returns:
        float: the bound, math.inf if no node is labeled.
    """
    valid.check_positive("C", C)
    if model.p_in <= model.p_out:
        raise ParameterDomainError(
            f"p_in should be larger than p_out, not {model.p_in} <= {model.p_out}"
        )
    fraction = model.labeled_fraction
    if fraction == 0:
        return math.inf
    ratio = (model.p_in + model.p_out) / (model.p_in - model.p_out)
    return C * ratio**2 / (4 * fraction**2 * model.d)


def snr(c_in: float, c_out: float) -> float:
    """
    The signal-to-noise ratio (c_in - c_out)^2 / (c_in + c_out).

    Args:
        c_in (float): the scaled intra-cluster probability n p_in.
        c_out (float): the scaled inter-cluster probability n p_out, > 0.

    Returns:
        float: the ratio.
    """
    valid.check_positive("c_out", c_out)
    if c_in < c_out:
        raise ParameterDomainError(
            f"c_in should be at least c_out, not {c_in} < {c_out}"
        )
    return (c_in - c_out) ** 2 / (c_in + c_out)


def detection_threshold(C: float, labeled_fraction: float) -> float:
    """
    The SNR above which Algorithm 1 is guaranteed to beat a random guess.

    Args:
        C (float): the constant, > 0.
        labeled_fraction (float): eta + theta, > 0.

    Returns:
        float: 4 C / (eta + theta)^2.
    """
    valid.check_positive("C", C)
    valid.check_probability("labeled_fraction", labeled_fraction)
    if labeled_fraction == 0:
        return math.inf
    return 4 * C / labeled_fraction**2


def epsilon_bad_nodes(
    x: ArrayLike,
    x_mf: ArrayLike,
    eps: float,
    mask: Optional[ArrayLike] = None,
) -> int:
    """
    Count the nodes whose score is farther than eps from its mean-field value.

    Nodes that are not (1 - 2s) / 2 bad are classified correctly.

    Args:
        x (arraylike): the scores, normalized like x_mf.
        x_mf (arraylike): the mean-field scores.
        eps (float): the distance, >= 0.
        mask (arraylike, optional): the nodes to count, e.g. the unlabeled ones.
            Defaults to None, all nodes.

    Returns:
        int: the number of nodes i with |x_i - x_mf_i| > eps.
    """
    valid.check_positive("eps", eps, allow_zero=True)
    x = np.asarray(x, dtype=np.float64)
    x_mf = np.asarray(x_mf, dtype=np.float64)
    valid.check_length("x_mf", x_mf, len(x))
    bad = np.abs(x - x_mf) > eps
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        valid.check_length("mask", mask, len(x))
        bad &= mask
    return int(np.count_nonzero(bad))


def empirical_concentration(
    g: SparseGraph,
    s: OracleLabels,
    sigma0: Union[GroundTruth, ArrayLike],
    model: ModelParams,
    lam: float,
    options: Optional[SolverOptions] = None,
) -> float:
    """
    The relative distance between the solution on a graph and the mean-field scores.

    The graph is solved with alpha = ||A_tau||. The solution is rescaled to the norm
    of the mean-field scores before comparing, as only its signs matter.

    Args:
        g (SparseGraph): the graph.
        s (OracleLabels): the oracle labels.
        sigma0 (GroundTruth or arraylike): the true clusters.
        model (ModelParams): the model the graph was sampled from, with an even n.
        lam (float): the weight of the oracle labels, > 0.
        options (SolverOptions, optional): solver options. Defaults to None.

    Raises:
        ParameterDomainError: no labeled node, lam = 0 or n odd.

    Returns:
        float: ||x - x_mf|| / ||x_mf||.
    """
    valid.check_length("s", s.s, g.n)
    if model.labeled_fraction == 0:
        raise ParameterDomainError(
            "the mean-field solution is undefined without labels (eta + theta = 0)"
        )
    x_mf = meanfield_solution(model, lam).scores(sigma0, s)

    params = SslParams(
        tau=model.tau, lam=lam, alpha_policy=AlphaPolicy.SPECTRAL_NORM
    )
    if params.is_perfect:
        score, _ = solve_perfect(g, s, params, options)
    else:
        score, _ = solve_noisy(g, s, params, options)

    norm_mf = float(np.linalg.norm(x_mf))
    norm_x = float(np.linalg.norm(score.x))
    if norm_x == 0:
        return 1.0
    x = score.x * (norm_mf / norm_x)
    distance = float(np.linalg.norm(x - x_mf) / norm_mf)
    logger.debug(f"empirical_concentration: n={g.n}, lam={lam}, distance={distance}")
    return distance


def _gap_argument(alpha: float, lam: float, fraction: float) -> float:
    return 4 * lam * alpha * fraction / (lam + alpha) ** 2
