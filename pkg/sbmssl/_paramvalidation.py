import math
from typing import Union

import numpy as np

from sbmssl._errors import ParameterDomainError


def check_probability(name: str, value: float) -> float:
    """
    Check that a value is a probability.

    Args:
        name (str): name of the parameter, used in the error message.
        value (float): value to check.

    Raises:
        ParameterDomainError: the value is not a number in [0, 1].

    Returns:
        float: the value as float.
    """
    if not isinstance(value, (int, float, np.integer, np.floating)) or not (
        0.0 <= value <= 1.0
    ):
        raise ParameterDomainError(
            f"Invalid value for {name}: {value}, must be in [0, 1]"
        )
    return float(value)


def check_positive(name: str, value: float, allow_zero: bool = False) -> float:
    """
    Check that a value is a positive number.

    Args:
        name (str): name of the parameter, used in the error message.
        value (float): value to check.
        allow_zero (bool, optional): True to accept 0 as well. Defaults to False.

    Raises:
        ParameterDomainError: the value is not positive.

    Returns:
        float: the value as float.
    """
    if value is None or math.isnan(value) or value < 0:
        raise ParameterDomainError(f"Invalid value for {name}: {value}")
    if value == 0 and not allow_zero:
        raise ParameterDomainError(f"Invalid value for {name}: {value}")
    return float(value)


def check_oracle_rates(eta: float, theta: float):
    """
    Check the oracle probabilities: both in [0, 1] and eta + theta <= 1.

    Args:
        eta (float): probability a node reveals its true label.
        theta (float): probability a node reveals the wrong label.

    Raises:
        ParameterDomainError: invalid combination.
    """
    check_probability("eta", eta)
    check_probability("theta", theta)
    # Small slack so eta, theta derived from (labeled fraction, error rate) pass
    if eta + theta > 1.0 + 1e-12:
        raise ParameterDomainError(
            f"Invalid oracle: eta + theta must be <= 1, not {eta} + {theta}"
        )


def check_map_domain(p_in: float, p_out: float):
    """
    Check 0 < p_out < p_in < 1, the domain of the MAP parameter formulas.

    Args:
        p_in (float): intra-cluster edge probability.
        p_out (float): inter-cluster edge probability.

    Raises:
        ParameterDomainError: p_in, p_out outside the domain.
    """
    if not (0.0 < p_out < p_in < 1.0):
        raise ParameterDomainError(
            f"p_in, p_out must satisfy 0 < p_out < p_in < 1, not {p_in=}, {p_out=}"
        )


def check_even(n: int, what: str = "mean-field operations"):
    if n % 2 != 0:
        raise ParameterDomainError(f"{what} need an even number of nodes, not {n}")


def check_length(name: str, values: Union[np.ndarray, list], n: int):
    if len(values) != n:
        raise ValueError(f"length of {name} should be {n}, not {len(values)}")
