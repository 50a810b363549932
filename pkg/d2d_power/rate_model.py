"""
Rates, normalized interference and the linearization terms of the sum rate.

All functions are pure and work on a read-only `Scenario` and a K x N power
profile `p` (W). Rates are in bit/s/Hz (log2); derivatives carry the 1/ln2
factor explicitly.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from d2d_power.scenario import Scenario

LN2: float = math.log(2.0)


@dataclass(frozen=True, eq=False)
class RateReport:
    """
    Rates of a power profile.

    Attributes:
        per_user_rate: K-vector, rate of each couple summed over subcarriers.
        sum_rate: Sum of the per-user rates.
        per_subcarrier_sinr: K x N signal-to-interference-plus-noise ratios.
    """

    per_user_rate: np.ndarray
    sum_rate: float
    per_subcarrier_sinr: np.ndarray


def interference_plus_noise(p: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Received interference plus noise at every D2D receiver

    Args:
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: K x N, sum over j != k of G[j, k, n] p[j, n] plus sigma2[k, n]
    """
    return np.einsum("jkn,jn->kn", scenario.cross_gains, p) + scenario.noise


def normalized_interference(k: int, p: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Interference plus noise of couple k normalized by its direct gain

    Args:
        k (int): Couple index
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: N-vector i_k, strictly positive
    """
    received = np.einsum("jn,jn->n", scenario.cross_gains[:, k, :], p)
    return (received + scenario.noise[k]) / scenario.direct_gains[k]


def sinr(p: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Signal-to-interference-plus-noise ratio of every couple and subcarrier

    Args:
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: K x N ratios
    """
    return scenario.direct_gains * p / interference_plus_noise(p, scenario)


def user_rate(k: int, p: np.ndarray, scenario: Scenario) -> float:
    """
    Shannon rate of couple k summed over subcarriers

    Args:
        k (int): Couple index
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        float: Rate in bit/s/Hz
    """
    return float(np.sum(np.log2(1.0 + p[k] / normalized_interference(k, p, scenario))))


def rate_report(p: np.ndarray, scenario: Scenario) -> RateReport:
    """
    Per-user rates, sum rate and SINRs of a profile

    Args:
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        RateReport: Rates of the profile
    """
    ratios = sinr(p, scenario)
    per_user = np.sum(np.log2(1.0 + ratios), axis=1)
    return RateReport(
        per_user_rate=per_user,
        sum_rate=float(np.sum(per_user)),
        per_subcarrier_sinr=ratios,
    )


def sum_rate(p: np.ndarray, scenario: Scenario) -> float:
    """
    System sum rate R(p)

    Args:
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        float: Sum of all user rates in bit/s/Hz
    """
    return rate_report(p, scenario).sum_rate


def alpha(k: int, p: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Sensitivity of the other users' rates to the power of couple k.

    This is the gradient with respect to p_k of the rates of all couples l != k,
    evaluated at p. Each summand is non-positive; the vector is zero for K = 1 or
    when no other couple transmits.

    Args:
        k (int): Couple index
        p (np.ndarray): K x N joint profile, row k is the expansion point
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: N-vector alpha_k
    """
    others = np.arange(scenario.num_couples) != k
    if not np.any(others):
        return np.zeros(scenario.num_subcarriers)

    p_without_k = np.array(p, dtype=float)
    p_without_k[k] = 0.0
    # interference at every receiver l from everybody except l and k
    residual = interference_plus_noise(p_without_k, scenario)[others]
    direct = scenario.direct_gains[others]
    coupling = scenario.gains[k, others, :]
    own = p[others]
    from_k = coupling * p[k]
    numerator = direct * coupling * own
    denominator = LN2 * (residual + from_k) * (residual + from_k + direct * own)
    return -np.sum(numerator / denominator, axis=0)


def delta_matrix(p: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Receiver-side factors delta for every couple

    delta[l, n] only depends on quantities measurable at receiver l, and
    alpha[k, n] = -sum over l != k of G[k, l, n] * delta[l, n].

    Args:
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: K x N non-negative factors
    """
    interference = interference_plus_noise(p, scenario)
    signal = scenario.direct_gains * p
    return signal / (LN2 * interference * (interference + signal))


def delta(k: int, p: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Receiver-side factor delta of couple k

    Args:
        k (int): Couple index
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: N-vector delta_k
    """
    return delta_matrix(p, scenario)[k]


def alpha_from_delta(k: int, deltas: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Rebuild alpha_k from the receiver-side factors

    Args:
        k (int): Couple index
        deltas (np.ndarray): K x N factors from `delta_matrix`
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: N-vector alpha_k
    """
    others = np.arange(scenario.num_couples) != k
    return -np.sum(scenario.gains[k, others, :] * deltas[others], axis=0)


def interference_penalty(
    k: int, nu: Optional[np.ndarray], scenario: Scenario
) -> np.ndarray:
    """
    Marginal interference price of couple k at the eNBs

    Args:
        k (int): Couple index
        nu (Optional[np.ndarray]): B x N multipliers, None for no constraints
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: N-vector sum over b of nu[b, n] * A[k, b, n]
    """
    if nu is None:
        return np.zeros(scenario.num_subcarriers)
    return np.sum(nu * scenario.enb_gains[k], axis=0)


def surrogate_rate(
    k: int,
    x_k: np.ndarray,
    p: np.ndarray,
    p0_k: np.ndarray,
    scenario: Scenario,
) -> float:
    """
    Sum rate with the other users' part linearized around p0_k.

    Evaluates the own-rate term at x_k exactly, the other users' rates at the
    expansion point and adds alpha_k(p0) . (x_k - p0_k). Equals R at x_k = p0_k and
    lower-bounds R(x_k, p_-k) everywhere since the other users' rates are convex
    in p_k.

    Args:
        k (int): Couple index
        x_k (np.ndarray): N-vector candidate powers of couple k
        p (np.ndarray): K x N joint profile, only rows l != k are used
        p0_k (np.ndarray): N-vector expansion point
        scenario (Scenario): Problem instance

    Returns:
        float: Surrogate value in bit/s/Hz
    """
    expansion = np.array(p, dtype=float)
    expansion[k] = p0_k
    own_interference = normalized_interference(k, expansion, scenario)
    own_at_x = np.sum(np.log2(1.0 + np.asarray(x_k) / own_interference))
    per_user = rate_report(expansion, scenario).per_user_rate
    others = float(np.sum(np.delete(per_user, k)))
    linear = float(np.dot(alpha(k, expansion, scenario), np.asarray(x_k) - p0_k))
    return float(own_at_x) + others + linear


def enb_interference(p: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Aggregate D2D interference received at every eNB

    Args:
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: B x N, sum over k of A[k, b, n] p[k, n]
    """
    return np.einsum("kbn,kn->bn", scenario.enb_gains, p)
