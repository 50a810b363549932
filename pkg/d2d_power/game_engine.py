"""
Sequential better-response dynamics of the sum-rate potential game.

Every update replaces the powers of one couple with the maximizer of the sum rate
in which the other couples' rates are linearized around the current point. The
linearized objective lower-bounds the true sum rate and is tight at the current
point, so no update decreases the sum rate. Iterative waterfilling is the same
loop with the linear term dropped.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from d2d_power import rate_model
from d2d_power.errors import InputError, NumericalError
from d2d_power.rate_model import RateReport
from d2d_power.scenario import Scenario
from d2d_power.subproblem_solver import (
    SubproblemInstance,
    SubproblemSolution,
    solve,
    waterfill,
)

logger = logging.getLogger(__name__)

DEFAULT_EPSILON: float = 1e-4
"""Round-over-round objective change (bit/s/Hz) below which dynamics stop"""

DEFAULT_MAX_ROUNDS: int = 10_000
MONOTONICITY_SLACK: float = 1e-9
FEASIBILITY_SLACK: float = 1e-9

PenaltyProvider = Callable[[int, np.ndarray], np.ndarray]
"""Maps (couple index, joint K x N profile) to the couple's N-vector penalty alpha'"""

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class UpdateRecord:
    """
    One single-user update.

    Attributes:
        round: Round the update belongs to, starting at 1.
        user: Couple that updated.
        before: Objective before the update.
        after: Objective after the update.
    """

    round: int
    user: int
    before: float
    after: float

    @property
    def delta(self) -> float:
        """Objective change caused by the update"""
        return self.after - self.before


@dataclass(kw_only=True)
class IterationTrace:
    """
    Convergence history of one run of the dynamics.

    Attributes:
        sum_rates: Objective at the start (index 0) and after every full round.
        updates: Every single-user update in execution order.
        rounds_to_converge: Number of rounds executed.
    """

    sum_rates: list[float] = field(default_factory=list)
    updates: list[UpdateRecord] = field(default_factory=list)
    rounds_to_converge: int = 0

    def is_monotone(self, slack: float = MONOTONICITY_SLACK) -> bool:
        """
        Check that no single update decreased the objective

        Args:
            slack (float): Tolerated relative decrease

        Returns:
            bool: true if every update is non-decreasing up to the slack
        """
        return all(
            update.after >= update.before - slack * max(1.0, abs(update.before))
            for update in self.updates
        )


@dataclass(frozen=True, eq=False)
class AllocationResult:
    """
    Outcome of a run of the dynamics.

    Attributes:
        powers: K x N final power profile (W).
        rates: Rates at the final profile.
        trace: Convergence history.
        converged: False if the round cap was hit first.
        nash_gap: Largest unilateral improvement left at the final profile.
        candidate_sum_rates: Final sum rate of every start of a multi-start run,
                             in start order; empty for a single run.
    """

    powers: np.ndarray
    rates: RateReport
    trace: IterationTrace
    converged: bool
    nash_gap: float
    candidate_sum_rates: tuple[float, ...] = ()

    @property
    def sum_rate(self) -> float:
        """Sum rate of the final profile"""
        return self.rates.sum_rate


def check_feasible(p: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Validate a power profile against the box and budget constraints

    Args:
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: The profile as a float array

    Raises:
        InputError: If the profile has the wrong shape or violates a constraint.
    """
    profile = np.array(p, dtype=float)
    shape = (scenario.num_couples, scenario.num_subcarriers)
    if profile.shape != shape:
        raise InputError(f"Power profile must have shape {shape}, got {profile.shape}")
    if not np.all(np.isfinite(profile)):
        raise InputError("Power profile contains non-finite values")
    scale = FEASIBILITY_SLACK * np.max(scenario.budgets)
    if np.any(profile < -scale):
        raise InputError("Power profile has negative entries")
    if np.any(profile > scenario.masks + scale):
        raise InputError("Power profile exceeds the power masks")
    if np.any(np.sum(profile, axis=1) > scenario.budgets * (1.0 + FEASIBILITY_SLACK)):
        raise InputError("Power profile exceeds the power budgets")
    return profile


def _validate_order(order: Optional[Sequence[int]], num_couples: int) -> list[int]:
    if order is None:
        return list(range(num_couples))
    result = [int(k) for k in order]
    if sorted(result) != list(range(num_couples)):
        raise InputError(f"Order {result} is not a permutation of the couples")
    return result


def best_response(
    k: int,
    p: np.ndarray,
    scenario: Scenario,
    linearize: bool = True,
    nu: Optional[np.ndarray] = None,
    penalty: Optional[PenaltyProvider] = None,
) -> SubproblemSolution:
    """
    Solve the linearized problem of couple k at the joint profile p

    Args:
        k (int): Couple index
        p (np.ndarray): K x N joint profile, row k is the expansion point
        scenario (Scenario): Problem instance
        linearize (bool): Include the other users' rate sensitivity; false gives
                          plain waterfilling
        nu (Optional[np.ndarray]): B x N interference multipliers, if any
        penalty (Optional[PenaltyProvider]): Replaces the direct computation of the
                                             full penalty alpha' when given

    Returns:
        SubproblemSolution: New powers of couple k
    """
    if penalty is not None:
        coefficients = penalty(k, p)
    else:
        coefficients = -rate_model.interference_penalty(k, nu, scenario)
        if linearize:
            coefficients = coefficients + rate_model.alpha(k, p, scenario)
    instance = SubproblemInstance(
        interference=rate_model.normalized_interference(k, p, scenario),
        alpha=np.minimum(coefficients, 0.0),
        budget=float(scenario.budgets[k]),
        masks=scenario.masks[k],
    )
    return solve(instance)


def _check_bounding_chain(
    k: int,
    before: np.ndarray,
    after: np.ndarray,
    scenario: Scenario,
    nu: Optional[np.ndarray],
) -> None:
    # R(y) <= R~(x; y) <= R(x), with the linear interference price added on both sides
    price = rate_model.interference_penalty(k, nu, scenario)
    step = after[k] - before[k]
    rate_before = rate_model.sum_rate(before, scenario)
    rate_after = rate_model.sum_rate(after, scenario)
    surrogate = rate_model.surrogate_rate(k, after[k], before, before[k], scenario)
    lower = rate_before
    middle = surrogate - float(np.dot(price, step))
    upper = rate_after - float(np.dot(price, step))
    slack = MONOTONICITY_SLACK * max(1.0, abs(rate_before))
    if not (lower <= middle + slack and middle <= upper + slack):
        raise NumericalError(
            "Bounding chain violated by a better response",
            {"user": k, "lower": lower, "surrogate": middle, "upper": upper},
        )


def better_response_dynamics(
    scenario: Scenario,
    p_init: np.ndarray,
    order: Optional[Sequence[int]] = None,
    epsilon: float = DEFAULT_EPSILON,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    linearize: bool = True,
    nu: Optional[np.ndarray] = None,
    penalty: Optional[PenaltyProvider] = None,
    objective: Optional[Objective] = None,
    check_bounds: bool = False,
) -> tuple[np.ndarray, IterationTrace, bool]:
    """
    Run rounds of sequential single-user updates until the objective settles.

    A round updates every couple once, in `order`. The run stops as soon as the
    objective changes by less than `epsilon` over a round.

    Args:
        scenario (Scenario): Problem instance
        p_init (np.ndarray): K x N feasible starting profile
        order (Optional[Sequence[int]]): Update order, ascending index by default
        epsilon (float): Stopping threshold on the round difference
        max_rounds (int): Round cap
        linearize (bool): Use the linearized sum rate; false gives waterfilling
        nu (Optional[np.ndarray]): B x N interference multipliers, if any
        penalty (Optional[PenaltyProvider]): Source of alpha' when not computed
                                             directly
        objective (Optional[Objective]): Tracked objective, sum rate by default
        check_bounds (bool): Verify the bounding chain after every update

    Returns:
        tuple[np.ndarray, IterationTrace, bool]: Final profile, trace and whether
                                                 the stopping rule was met

    Raises:
        InputError: If the starting profile is infeasible or the order invalid.
    """
    p = check_feasible(p_init, scenario)
    sequence = _validate_order(order, scenario.num_couples)
    evaluate = objective or (lambda q: rate_model.sum_rate(q, scenario))
    current = evaluate(p)
    trace = IterationTrace(sum_rates=[current])

    for round_index in range(1, max_rounds + 1):
        round_start = current
        for k in sequence:
            solution = best_response(k, p, scenario, linearize, nu, penalty)
            candidate = p.copy()
            candidate[k] = solution.powers
            if check_bounds and linearize and penalty is None:
                _check_bounding_chain(k, p, candidate, scenario, nu)
            after = evaluate(candidate)
            trace.updates.append(UpdateRecord(round_index, k, current, after))
            if linearize and after < current - MONOTONICITY_SLACK * max(1.0, abs(current)):
                logger.debug(
                    "Update of couple %d decreased the objective by %g",
                    k,
                    current - after,
                )
            p, current = candidate, after
        trace.sum_rates.append(current)
        trace.rounds_to_converge = round_index
        if abs(current - round_start) < epsilon:
            return p, trace, True

    logger.warning(
        "Dynamics stopped at the round cap %d, last round difference %g",
        max_rounds,
        trace.sum_rates[-1] - trace.sum_rates[-2],
    )
    return p, trace, False


def default_initial_power(scenario: Scenario) -> np.ndarray:
    """
    Interference-free waterfilling of every couple under its budget and masks

    Args:
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: K x N feasible profile
    """
    profile = np.zeros((scenario.num_couples, scenario.num_subcarriers))
    for k in range(scenario.num_couples):
        interference = scenario.noise[k] / scenario.direct_gains[k]
        profile[k] = waterfill(
            interference, float(scenario.budgets[k]), scenario.masks[k]
        ).powers
    return profile


def nash_check(
    p: np.ndarray,
    scenario: Scenario,
    epsilon: float = DEFAULT_EPSILON,
    nu: Optional[np.ndarray] = None,
) -> float:
    """
    Largest sum-rate gain any single couple obtains by re-solving its problem at p.

    Args:
        p (np.ndarray): K x N feasible profile
        scenario (Scenario): Problem instance
        epsilon (float): Threshold the gap is reported against
        nu (Optional[np.ndarray]): B x N multipliers; the Lagrangian is compared
                                   instead of the sum rate when given

    Returns:
        float: Non-negative gap, zero at a fixed point of the dynamics
    """
    profile = check_feasible(p, scenario)

    def evaluate(q: np.ndarray) -> float:
        value = rate_model.sum_rate(q, scenario)
        if nu is not None:
            value -= float(np.sum(nu * rate_model.enb_interference(q, scenario)))
        return value

    reference = evaluate(profile)
    gap = 0.0
    for k in range(scenario.num_couples):
        candidate = profile.copy()
        candidate[k] = best_response(k, profile, scenario, nu=nu).powers
        gap = max(gap, evaluate(candidate) - reference)
    if gap > epsilon:
        logger.debug("Nash gap %g exceeds %g", gap, epsilon)
    return gap


def _result(
    scenario: Scenario,
    p: np.ndarray,
    trace: IterationTrace,
    converged: bool,
    epsilon: float,
) -> AllocationResult:
    return AllocationResult(
        powers=p,
        rates=rate_model.rate_report(p, scenario),
        trace=trace,
        converged=converged,
        nash_gap=nash_check(p, scenario, epsilon),
    )


def iadrmp_run(
    scenario: Scenario,
    p_init: Optional[np.ndarray] = None,
    order: Optional[Sequence[int]] = None,
    epsilon: float = DEFAULT_EPSILON,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    penalty: Optional[PenaltyProvider] = None,
    check_bounds: bool = False,
) -> AllocationResult:
    """
    Linearized better-response dynamics on dedicated spectrum

    Args:
        scenario (Scenario): Problem instance
        p_init (Optional[np.ndarray]): Starting profile, interference-free
                                       waterfilling by default
        order (Optional[Sequence[int]]): Update order, ascending index by default
        epsilon (float): Stopping threshold on the round difference
        max_rounds (int): Round cap
        penalty (Optional[PenaltyProvider]): Source of alpha' when not computed
                                             directly
        check_bounds (bool): Verify the bounding chain after every update

    Returns:
        AllocationResult: Converged profile; sum rate never decreased on the way

    Raises:
        InputError: If the starting profile is infeasible.
    """
    start = default_initial_power(scenario) if p_init is None else p_init
    p, trace, converged = better_response_dynamics(
        scenario,
        start,
        order,
        epsilon,
        max_rounds,
        penalty=penalty,
        check_bounds=check_bounds,
    )
    return _result(scenario, p, trace, converged, epsilon)


def iwf_run(
    scenario: Scenario,
    p_init: Optional[np.ndarray] = None,
    order: Optional[Sequence[int]] = None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    epsilon: float = DEFAULT_EPSILON,
) -> AllocationResult:
    """
    Iterative waterfilling: every couple maximizes its own rate only

    Args:
        scenario (Scenario): Problem instance
        p_init (Optional[np.ndarray]): Starting profile
        order (Optional[Sequence[int]]): Update order
        max_rounds (int): Round cap; the dynamics may oscillate
        epsilon (float): Stopping threshold on |round difference|

    Returns:
        AllocationResult: Last profile reached
    """
    start = default_initial_power(scenario) if p_init is None else p_init
    p, trace, converged = better_response_dynamics(
        scenario, start, order, epsilon, max_rounds, linearize=False
    )
    return _result(scenario, p, trace, converged, epsilon)


def random_feasible_profile(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """
    Random profile inside the box, rows scaled down to fit the budgets

    Args:
        scenario (Scenario): Problem instance
        rng (np.random.Generator): Seeded generator

    Returns:
        np.ndarray: K x N feasible profile
    """
    caps = np.minimum(scenario.masks, scenario.budgets[:, None])
    profile = rng.uniform(size=caps.shape) * caps
    totals = np.sum(profile, axis=1)
    scale = np.ones_like(totals)
    over = totals > scenario.budgets
    scale[over] = scenario.budgets[over] / totals[over]
    return profile * scale[:, None]


def multistart_configurations(
    scenario: Scenario,
    num_orders: int,
    num_inits: int,
    rng: np.random.Generator,
) -> tuple[list[list[int]], list[np.ndarray]]:
    """
    Scheduling orders and starting profiles for a multi-start run.

    Orders are the ascending order, the reversed order, then random permutations
    (every permutation when there are no more than `num_orders`). Profiles are the
    interference-free waterfilling, the all-zero profile, then random feasible ones.

    Args:
        scenario (Scenario): Problem instance
        num_orders (int): Number of orders
        num_inits (int): Number of starting profiles
        rng (np.random.Generator): Seeded generator

    Returns:
        tuple[list[list[int]], list[np.ndarray]]: Orders and starting profiles
    """
    num_couples = scenario.num_couples
    if math.factorial(num_couples) <= num_orders:
        orders = [list(order) for order in itertools.permutations(range(num_couples))]
    else:
        orders = [list(range(num_couples)), list(range(num_couples))[::-1]]
        seen = {tuple(order) for order in orders}
        while len(orders) < num_orders:
            order = [int(k) for k in rng.permutation(num_couples)]
            if tuple(order) not in seen:
                seen.add(tuple(order))
                orders.append(order)
    orders = orders[:num_orders]

    inits = [
        default_initial_power(scenario),
        np.zeros((num_couples, scenario.num_subcarriers)),
    ]
    while len(inits) < num_inits:
        inits.append(random_feasible_profile(scenario, rng))
    return orders, inits[:num_inits]


def multistart_run(
    scenario: Scenario,
    orders: Sequence[Sequence[int]],
    inits: Sequence[np.ndarray],
    epsilon: float = DEFAULT_EPSILON,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> AllocationResult:
    """
    Best IADRMP run over every (order, starting profile) pair

    Args:
        scenario (Scenario): Problem instance
        orders (Sequence[Sequence[int]]): Scheduling orders
        inits (Sequence[np.ndarray]): Starting profiles
        epsilon (float): Stopping threshold of each run
        max_rounds (int): Round cap of each run

    Returns:
        AllocationResult: Run with the largest final sum rate, first one on ties

    Raises:
        InputError: If either list is empty.
    """
    if not orders or not inits:
        raise InputError("Multi-start needs at least one order and one initial profile")
    best: Optional[AllocationResult] = None
    sum_rates: list[float] = []
    for order in orders:
        for init in inits:
            result = iadrmp_run(scenario, init, order, epsilon, max_rounds)
            sum_rates.append(result.sum_rate)
            if best is None or result.sum_rate > best.sum_rate:
                best = result
    assert best is not None
    return AllocationResult(
        powers=best.powers,
        rates=best.rates,
        trace=best.trace,
        converged=best.converged,
        nash_gap=best.nash_gap,
        candidate_sum_rates=tuple(sum_rates),
    )
