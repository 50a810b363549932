"""
Per-user linearized allocation: maximize sum_n log2(1 + p_n / i_n) + alpha_n p_n
subject to 0 <= p_n <= mask_n and sum_n p_n <= budget.

The problem is convex; its KKT conditions give a waterfilling whose level is
shifted per subcarrier by the penalty alpha_n. The total-power multiplier mu is
zero when the unconstrained-budget solution already fits, otherwise it is found
by bisection since the allocated power is non-increasing in mu.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from d2d_power.errors import InputError, NumericalError
from d2d_power.rate_model import LN2

logger = logging.getLogger(__name__)

RELATIVE_POWER_TOLERANCE: float = 1e-10
"""Bisection stops once |sum p - budget| <= this * budget"""

MAX_ITERATIONS: int = 200


@dataclass(frozen=True, eq=False)
class SubproblemInstance:
    """
    One user's linearized allocation problem.

    Attributes:
        interference: N-vector normalized interference i_n (W), strictly positive.
        alpha: N-vector penalty coefficients, non-positive.
        budget: Total power budget (W), strictly positive.
        masks: N-vector per-subcarrier caps (W), non-negative, may be +inf.
    """

    interference: np.ndarray
    alpha: np.ndarray
    budget: float
    masks: np.ndarray

    def __post_init__(self) -> None:
        for name in ("interference", "alpha", "masks"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (
            np.all(np.isfinite(self.interference))
            and np.all(np.isfinite(self.alpha))
            and np.isfinite(self.budget)
            and not np.any(np.isnan(self.masks))
        ):
            raise InputError("Subproblem contains non-finite values")
        if np.any(self.interference <= 0):
            raise InputError("Normalized interference must be strictly positive")
        if np.any(self.alpha > 0):
            raise InputError("Penalty coefficients must be non-positive")
        if self.budget <= 0:
            raise InputError("Power budget must be strictly positive")
        if np.any(self.masks < 0):
            raise InputError("Power masks must be non-negative")


@dataclass(frozen=True, eq=False)
class SubproblemSolution:
    """
    Optimal allocation of a subproblem.

    Attributes:
        powers: N-vector allocation (W).
        mu: Multiplier of the total-power constraint, zero when the budget is slack.
        objective: Objective value at `powers`.
        kkt_residual: Normalized KKT violation, see `kkt_residual`.
        iterations: Bisection steps spent on mu.
    """

    powers: np.ndarray
    mu: float
    objective: float = 0.0
    kkt_residual: float = field(default=0.0)
    iterations: int = 0


def objective(instance: SubproblemInstance, powers: np.ndarray) -> float:
    """
    Objective value of an allocation

    Args:
        instance (SubproblemInstance): Problem data
        powers (np.ndarray): N-vector allocation

    Returns:
        float: sum log2(1 + p / i) + alpha . p
    """
    return float(
        np.sum(np.log2(1.0 + powers / instance.interference))
        + np.dot(instance.alpha, powers)
    )


def _powers_at(instance: SubproblemInstance, mu: float) -> np.ndarray:
    shift = mu - instance.alpha
    with np.errstate(divide="ignore"):
        level = np.where(shift > 0, 1.0 / (LN2 * np.where(shift > 0, shift, 1.0)), np.inf)
    return np.clip(level - instance.interference, 0.0, instance.masks)


def solve(
    instance: SubproblemInstance,
    relative_tolerance: float = RELATIVE_POWER_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
) -> SubproblemSolution:
    """
    Solve the linearized allocation from its KKT conditions

    Args:
        instance (SubproblemInstance): Problem data
        relative_tolerance (float): Budget tolerance relative to the budget
        max_iterations (int): Bisection cap

    Returns:
        SubproblemSolution: Allocation within box and budget

    Raises:
        NumericalError: If bisection on mu does not converge within max_iterations.
    """
    budget = instance.budget
    if not np.any(instance.masks > 0):
        powers = np.zeros_like(instance.masks)
        return _finish(instance, powers, 0.0, 0)

    # alpha_n = 0 with mu = 0 drives p_n to its cap
    powers = _powers_at(instance, 0.0)
    if np.sum(powers) <= budget:
        return _finish(instance, powers, 0.0, 0)

    tolerance = relative_tolerance * budget
    low, high = 0.0, float(np.max(1.0 / (LN2 * instance.interference)))
    mu = high
    for iteration in range(1, max_iterations + 1):
        middle = 0.5 * (low + high)
        if not low < middle < high:
            logger.debug(
                "mu bracket collapsed at [%r, %r] after %d steps", low, high, iteration
            )
            mu = high
            break
        excess = float(np.sum(_powers_at(instance, middle))) - budget
        if abs(excess) <= tolerance:
            mu = middle
            break
        if excess > 0:
            low = middle
        else:
            high = middle
    else:
        raise NumericalError(
            "Bisection on the total-power multiplier did not converge",
            {
                "bracket": (low, high),
                "excess": float(np.sum(_powers_at(instance, high))) - budget,
                "iterations": max_iterations,
            },
        )
    return _finish(instance, _powers_at(instance, mu), mu, iteration)


def _finish(
    instance: SubproblemInstance, powers: np.ndarray, mu: float, iterations: int
) -> SubproblemSolution:
    solution = SubproblemSolution(powers=powers, mu=mu, iterations=iterations)
    return SubproblemSolution(
        powers=powers,
        mu=mu,
        objective=objective(instance, powers),
        kkt_residual=kkt_residual(instance, solution),
        iterations=iterations,
    )


def kkt_residual(instance: SubproblemInstance, solution: SubproblemSolution) -> float:
    """
    Largest normalized violation of the KKT conditions.

    Stationarity 1/(ln2 (i_n + p_n)) + alpha_n - mu = 0 is checked on interior
    coordinates, its sign on coordinates at a bound (<= 0 at zero, >= 0 at the cap),
    each divided by the magnitude of its terms. Complementary slackness, budget and
    box feasibility are measured relative to the budget.

    Args:
        instance (SubproblemInstance): Problem data
        solution (SubproblemSolution): Candidate allocation and multiplier

    Returns:
        float: Zero at an exact KKT point
    """
    powers = np.asarray(solution.powers, dtype=float)
    mu = solution.mu
    budget = instance.budget
    marginal = 1.0 / (LN2 * (instance.interference + powers))
    gradient = marginal + instance.alpha - mu
    scale = marginal + np.abs(instance.alpha) + abs(mu)

    usable = instance.masks > 0
    at_zero = usable & (powers <= 0.0)
    at_cap = usable & (powers >= instance.masks)
    interior = usable & ~at_zero & ~at_cap
    violation = np.zeros_like(powers)
    violation[interior] = np.abs(gradient[interior])
    violation[at_zero] = np.maximum(gradient[at_zero], 0.0)
    violation[at_cap] = np.maximum(-gradient[at_cap], 0.0)
    stationarity = float(np.max(violation / scale)) if powers.size else 0.0

    total = float(np.sum(powers))
    slackness = abs(total - budget) / budget if mu > 0 else 0.0
    feasibility = max(
        (total - budget) / budget,
        float(np.max(-powers, initial=0.0)) / budget,
        float(np.max(powers - instance.masks, initial=0.0)) / budget,
        -mu,
        0.0,
    )
    return max(stationarity, slackness, feasibility)


def waterfill(
    interference: np.ndarray, budget: float, masks: np.ndarray
) -> SubproblemSolution:
    """
    Classic waterfilling under per-subcarrier caps (no penalty terms)

    Args:
        interference (np.ndarray): N-vector normalized interference
        budget (float): Total power budget
        masks (np.ndarray): N-vector caps

    Returns:
        SubproblemSolution: Allocation with water level 1 / (ln2 mu) on active carriers
    """
    return solve(
        SubproblemInstance(
            interference=interference,
            alpha=np.zeros_like(np.asarray(interference, dtype=float)),
            budget=budget,
            masks=masks,
        )
    )
