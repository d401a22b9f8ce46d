import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sbmssl import _paramvalidation as valid
from sbmssl._errors import ParameterDomainError
from sbmssl._graph import ModelParams, SparseGraph
from sbmssl._linalg import (
    RegularizedOperator,
    SolverOptions,
    SolveReport,
    estimate_spectral_norm,
    regularized_adjacency,
    solve_spd,
)
from sbmssl._oracle import OracleLabels
from sbmssl._types import AlphaPolicy

logger = logging.getLogger(__name__)


def tau_of(p_in: float, p_out: float) -> float:
    """
    The MAP penalty on unbalanced partitions.

    tau = log((1 - p_out) / (1 - p_in)) / log(p_in (1 - p_out) / (p_out (1 - p_in)))

    Args:
        p_in (float): intra-cluster edge probability.
        p_out (float): inter-cluster edge probability.

    Raises:
        ParameterDomainError: not 0 < p_out < p_in < 1.

    Returns:
        float: tau, which lies in (p_out, p_in).
    """
    valid.check_map_domain(p_in, p_out)
    numerator = math.log1p(-p_out) - math.log1p(-p_in)
    return numerator / _log_odds_ratio(p_in, p_out)


def lambda_of(eta: float, theta: float, p_in: float, p_out: float) -> float:
    """
    The MAP weight of the oracle labels.

    lambda = log(eta / theta) / log(p_in (1 - p_out) / (p_out (1 - p_in)))

    Args:
        eta (float): probability the oracle reveals the true label.
        theta (float): probability the oracle reveals the wrong label.
        p_in (float): intra-cluster edge probability.
        p_out (float): inter-cluster edge probability.

    Raises:
        ParameterDomainError: eta < theta, eta = 0 or p_in, p_out invalid.

    Returns:
        float: lambda; math.inf for a perfect oracle (theta = 0), 0 for an
            uninformative one (eta = theta).
    """
    valid.check_map_domain(p_in, p_out)
    valid.check_oracle_rates(eta, theta)
    if eta <= 0 or eta < theta:
        raise ParameterDomainError(
            f"lambda needs an oracle with eta >= theta and eta > 0, not {eta=}, "
            f"{theta=}"
        )
    if theta == 0:
        return math.inf
    if eta == theta:
        return 0.0
    return math.log(eta / theta) / _log_odds_ratio(p_in, p_out)


def tau_heuristic(c_in: float, c_out: float, p: float) -> float:
    """
    Small-p approximation of tau for p_in = c_in p and p_out = c_out p.

    Args:
        c_in (float): intra-cluster scale.
        c_out (float): inter-cluster scale.
        p (float): the common probability scale.

    Returns:
        float: (c_in - c_out) / log(c_in / c_out) * p.
    """
    _check_scales(c_in, c_out)
    return (c_in - c_out) / math.log(c_in / c_out) * p


def lambda_heuristic(eta: float, theta: float, c_in: float, c_out: float) -> float:
    """
    Small-p approximation of lambda for p_in = c_in p and p_out = c_out p.

    Args:
        eta (float): probability the oracle reveals the true label.
        theta (float): probability the oracle reveals the wrong label, > 0.
        c_in (float): intra-cluster scale.
        c_out (float): inter-cluster scale.

    Returns:
        float: log(eta / theta) / log(c_in / c_out).
    """
    _check_scales(c_in, c_out)
    valid.check_positive("theta", theta)
    valid.check_positive("eta", eta)
    return math.log(eta / theta) / math.log(c_in / c_out)


def _check_scales(c_in: float, c_out: float):
    if not (0 < c_out < c_in):
        raise ParameterDomainError(f"need 0 < c_out < c_in, not {c_in=}, {c_out=}")


def _log_odds_ratio(p_in: float, p_out: float) -> float:
    return (
        math.log(p_in) - math.log(p_out) + math.log1p(-p_out) - math.log1p(-p_in)
    )


@dataclass(frozen=True)
class SslParams:
    """
    Parameters of the regularized linear system.

    Attributes:
        tau (float): weight of the complete graph subtracted from the adjacency.
        lam (float): weight of the oracle labels, math.inf for a perfect oracle.
        alpha_policy (AlphaPolicy): how the diagonal shift alpha is chosen.
            Defaults to AlphaPolicy.SPECTRAL_NORM.
        alpha (float, optional): the shift for the MEAN_FIELD and EXPLICIT policies.
    """

    tau: float
    lam: float
    alpha_policy: AlphaPolicy = AlphaPolicy.SPECTRAL_NORM
    alpha: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "alpha_policy", AlphaPolicy(self.alpha_policy))
        if not math.isfinite(self.tau):
            raise ParameterDomainError(f"Invalid value for tau: {self.tau}")
        if math.isnan(self.lam) or self.lam < 0:
            raise ParameterDomainError(f"Invalid value for lam: {self.lam}")
        if self.alpha_policy is AlphaPolicy.SPECTRAL_NORM:
            if self.alpha is not None:
                raise ValueError("alpha can't be given with the spectral-norm policy")
        elif self.alpha is None or not (0 < self.alpha < math.inf):
            raise ParameterDomainError(
                f"alpha policy {self.alpha_policy} needs alpha > 0, not {self.alpha}"
            )

    @classmethod
    def from_model(
        cls,
        model: ModelParams,
        alpha_policy: Union[AlphaPolicy, str] = AlphaPolicy.SPECTRAL_NORM,
        tau: Optional[float] = None,
        lam: Optional[float] = None,
        alpha: Optional[float] = None,
    ) -> "SslParams":
        """
        The MAP parameters of a model, with optional overrides.

        Args:
            model (ModelParams): the model.
            alpha_policy (AlphaPolicy or str, optional): the alpha policy.
                Defaults to AlphaPolicy.SPECTRAL_NORM.
            tau (float, optional): use this tau instead of the model's.
            lam (float, optional): use this lambda instead of the model's.
            alpha (float, optional): explicit alpha; implies the EXPLICIT policy.

        Returns:
            SslParams: the parameters.
        """
        alpha_policy = AlphaPolicy(alpha_policy)
        if tau is None:
            tau = model.tau
        if lam is None:
            lam = model.lam
        if alpha is not None:
            alpha_policy = AlphaPolicy.EXPLICIT
        elif alpha_policy is AlphaPolicy.MEAN_FIELD:
            alpha = model.alpha_mf
        elif alpha_policy is AlphaPolicy.EXPLICIT:
            raise ValueError("the explicit alpha policy needs a value for alpha")
        return cls(tau=tau, lam=lam, alpha_policy=alpha_policy, alpha=alpha)

    @property
    def is_perfect(self) -> bool:
        """True if the labels are treated as exact."""
        return math.isinf(self.lam)


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """
    A real-valued score per node, classified by its sign.

    Attributes:
        x (ndarray): the scores.
        report (SolveReport, optional): how the scores were computed.
        params (SslParams, optional): the system parameters, if any.
        alpha (float, optional): the diagonal shift actually used, if any.
        flags (tuple[str, ...]): remarks on the computation, e.g. a degenerate
            spectrum.
    """

    x: NDArray[np.float64]
    report: Optional[SolveReport] = None
    params: Optional[SslParams] = None
    alpha: Optional[float] = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.float64).ravel())

    @property
    def labels(self) -> NDArray[np.int8]:
        """+1 where the score is positive, -1 elsewhere, zero included."""
        return np.where(self.x > 0, 1, -1).astype(np.int8)

    @property
    def scale(self) -> float:
        """The factor that rescales x to norm sqrt(n), NaN if x is 0."""
        norm = float(np.linalg.norm(self.x))
        return math.sqrt(len(self.x)) / norm if norm > 0 else math.nan

    def normalized(self) -> NDArray[np.float64]:
        """The scores rescaled to norm sqrt(n)."""
        return self.x * self.scale


def relaxation_objective(
    g: SparseGraph,
    x: ArrayLike,
    s: OracleLabels,
    params: SslParams,
    check_norm: bool = True,
) -> float:
    """
    The relaxed MAP objective -x^T A_tau x + lam ||S - P x||^2.

    With an infinite lambda the perfect-oracle form is evaluated: -x^T A_tau x when x
    equals S on the labeled nodes, math.inf otherwise.

    Args:
        g (SparseGraph): the graph.
        x (arraylike): the real-valued assignment.
        s (OracleLabels): the oracle labels.
        params (SslParams): tau and lambda.
        check_norm (bool, optional): True to require ||x|| = sqrt(n) within 1e-6.
            Defaults to True.

    Raises:
        ValueError: the norm constraint is violated.

    Returns:
        float: the objective value.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    valid.check_length("x", x, g.n)
    valid.check_length("s", s.s, g.n)
    if check_norm and abs(np.linalg.norm(x) - math.sqrt(g.n)) > 1e-6:
        raise ValueError(f"x should have norm sqrt(n) = {math.sqrt(g.n)}")

    value = -float(x @ regularized_adjacency(g, params.tau).matvec(x))
    if params.lam == 0:
        return value
    mask = s.labeled_mask
    if params.is_perfect:
        if np.allclose(x[mask], s.s[mask], rtol=0.0, atol=1e-9):
            return value
        return math.inf
    residual = s.s - np.where(mask, x, 0.0)
    return value + params.lam * float(residual @ residual)


def resolve_alpha(
    g: SparseGraph, params: SslParams, options: Optional[SolverOptions] = None
) -> tuple[float, Optional[SolveReport]]:
    """
    The diagonal shift alpha for a graph, following the alpha policy.

    With the spectral-norm policy the estimate is raised by its relative tolerance,
    so the shifted system stays positive semidefinite.

    Args:
        g (SparseGraph): the graph.
        params (SslParams): the system parameters.
        options (SolverOptions, optional): solver options. Defaults to None.

    Returns:
        tuple[float, SolveReport]: alpha, and the power iteration report if one ran.
    """
    if params.alpha_policy is not AlphaPolicy.SPECTRAL_NORM:
        assert params.alpha is not None
        return params.alpha, None

    if options is None:
        options = SolverOptions()
    estimate, report = estimate_spectral_norm(
        regularized_adjacency(g, params.tau),
        tol=options.norm_tol,
        max_iter=options.max_iter,
        rng_seed=options.norm_seed,
        strict=options.strict,
    )
    return estimate * (1 + options.norm_tol), report


def solve_noisy(
    g: SparseGraph,
    s: OracleLabels,
    params: SslParams,
    options: Optional[SolverOptions] = None,
) -> tuple[ScoreVector, SolveReport]:
    """
    Solve (alpha I - A_tau + lam P) x = lam S for a noisy oracle.

    The returned scores are the raw solution: rescaling to norm sqrt(n) is a positive
    factor, reported as ScoreVector.scale, and can't change any label.

    Args:
        g (SparseGraph): the graph.
        s (OracleLabels): the oracle labels.
        params (SslParams): the system parameters, with 0 < lam < inf.
        options (SolverOptions, optional): solver options. Defaults to None.

    Raises:
        ParameterDomainError: lam is 0 or infinite.
        IndefiniteOperatorError: alpha is too small for the system to be definite.

    Returns:
        tuple[ScoreVector, SolveReport]: the scores and the solver report.
    """
    valid.check_length("s", s.s, g.n)
    if params.lam == 0:
        raise ParameterDomainError(
            "lam = 0 leaves the oracle unused and the system singular: use "
            "spectral_clustering for the unsupervised problem"
        )
    if params.is_perfect:
        raise ParameterDomainError("lam is infinite: use solve_perfect")
    if options is None:
        options = SolverOptions()

    alpha, _ = resolve_alpha(g, params, options)
    op = RegularizedOperator(g, params.tau, params.lam, s.labeled_mask, alpha)
    x, report = solve_spd(
        op,
        params.lam * s.s.astype(np.float64),
        tol=options.cg_tol,
        max_iter=options.iterations_for(g.n),
        strict=options.strict,
    )
    logger.debug(f"solve_noisy: {report}")
    return ScoreVector(x, report=report, params=params, alpha=alpha), report


def solve_perfect(
    g: SparseGraph,
    s: OracleLabels,
    params: SslParams,
    options: Optional[SolverOptions] = None,
) -> tuple[ScoreVector, SolveReport]:
    """
    Solve the perfect-oracle system: clamp x to S on the labeled nodes and solve
    (alpha I - A_tau)_uu x_u = (A_tau)_ul S_l on the unlabeled ones.

    The lambda in params is not used: every label is treated as exact.

    Args:
        g (SparseGraph): the graph.
        s (OracleLabels): the oracle labels, at least one node labeled.
        params (SslParams): the system parameters.
        options (SolverOptions, optional): solver options. Defaults to None.

    Raises:
        ParameterDomainError: no labeled node.
        IndefiniteOperatorError: the unlabeled block is not definite.

    Returns:
        tuple[ScoreVector, SolveReport]: the scores and the solver report.
    """
    valid.check_length("s", s.s, g.n)
    if s.num_labeled == 0:
        raise ParameterDomainError("the perfect-oracle system needs a labeled node")
    if options is None:
        options = SolverOptions()

    clamped = s.s.astype(np.float64)
    unlabeled = s.unlabeled_mask
    if not np.any(unlabeled):
        report = SolveReport(0, 0.0, True)
        return ScoreVector(clamped, report=report, params=params), report

    alpha, _ = resolve_alpha(g, params, options)
    op = RegularizedOperator(g, params.tau, alpha=alpha)
    rhs = regularized_adjacency(g, params.tau).matvec(clamped)[unlabeled]
    x_unlabeled, report = solve_spd(
        op.restrict(unlabeled),
        rhs,
        tol=options.cg_tol,
        max_iter=options.iterations_for(int(np.count_nonzero(unlabeled))),
        strict=options.strict,
    )
    x = clamped
    x[unlabeled] = x_unlabeled
    logger.debug(f"solve_perfect: {report}")
    return ScoreVector(x, report=report, params=params, alpha=alpha), report


def run_algorithm1(
    g: SparseGraph,
    s: OracleLabels,
    model: ModelParams,
    overrides: Optional[Mapping[str, float]] = None,
    options: Optional[SolverOptions] = None,
    alpha_policy: Union[AlphaPolicy, str] = AlphaPolicy.SPECTRAL_NORM,
) -> ScoreVector:
    """
    Semi-supervised classification with the regularized adjacency matrix.

    Derives tau and lambda from the model unless overridden, picks alpha following
    the policy, then solves the noisy system for a finite lambda or the
    perfect-oracle system for an infinite one. Nodes are classified by the sign of
    their score.

    Args:
        g (SparseGraph): the graph.
        s (OracleLabels): the oracle labels.
        model (ModelParams): the model the parameters are derived from.
        overrides (Mapping[str, float], optional): values replacing the derived
            ones, with keys "tau", "lambda" and "alpha". Defaults to None.
        options (SolverOptions, optional): solver options. Defaults to None.
        alpha_policy (AlphaPolicy or str, optional): the alpha policy, ignored when
            alpha is overridden. Defaults to AlphaPolicy.SPECTRAL_NORM.

    Raises:
        ParameterDomainError: lambda is 0, or an override key is unknown.

    Returns:
        ScoreVector: the scores, with the parameters and solver report used.
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - {"tau", "lambda", "alpha"}
    if unknown:
        raise ParameterDomainError(f"unknown overrides: {sorted(unknown)}")
    params = SslParams.from_model(
        model,
        alpha_policy=alpha_policy,
        tau=overrides.get("tau"),
        lam=overrides.get("lambda"),
        alpha=overrides.get("alpha"),
    )
    if params.lam == 0:
        raise ParameterDomainError(
            "lambda = 0 (uninformative oracle): use spectral_clustering instead"
        )
    if params.is_perfect:
        score, _ = solve_perfect(g, s, params, options)
    else:
        score, _ = solve_noisy(g, s, params, options)
    return score
