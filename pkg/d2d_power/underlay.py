"""
Spectrum reuse with a tolerated interference Q at every eNB and subcarrier.

The interference constraints are dualized with multipliers nu (B x N). For fixed
nu the penalized problem has the same structure as the dedicated one, with the
sensitivity alpha shifted by -sum_b nu A, so the same better-response dynamics
apply. Two procedures sit on top:

* `iadrmpic_run` moves nu with projected subgradient steps and warm-starts the
  dynamics from the previous powers.
* `dual_upper_bound` minimizes the dual function with the ellipsoid method. Any
  evaluated dual value bounds the constrained sum rate from above.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from d2d_power import rate_model
from d2d_power.errors import InputError, NumericalError
from d2d_power.game_engine import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_ROUNDS,
    MONOTONICITY_SLACK,
    IterationTrace,
    PenaltyProvider,
    better_response_dynamics,
    default_initial_power,
    multistart_configurations,
)
from d2d_power.rate_model import LN2, RateReport
from d2d_power.scenario import Scenario

logger = logging.getLogger(__name__)

DEFAULT_GAMMA: float = 0.1
DEFAULT_POWER_TOLERANCE: float = 1e-6
"""Outer loop stops once no couple's powers move more than this (W, 2-norm)"""

DEFAULT_MAX_OUTER: int = 500
DEFAULT_OSCILLATION_WINDOW: int = 5
VIOLATION_TOLERANCE: float = 1e-2
"""Relative interference excess still accepted when the multiplier updates stop"""

VOLUME_REDUCTION: float = 1e-12
"""Ellipsoid stops once its volume falls below this fraction of the initial one"""

STEPS_PER_DIMENSION: int = 200

PenaltyFactory = Callable[[np.ndarray], PenaltyProvider]
"""Builds the alpha' source used by the dynamics for a given nu"""


@dataclass(frozen=True, eq=False)
class DualState:
    """
    Ellipsoid over the multipliers of the finite interference constraints.

    Attributes:
        center: M-vector, current ellipsoid center.
        shape_inverse: M x M symmetric positive definite matrix P; the ellipsoid is
                       {x : (x - center)^T P^-1 (x - center) <= 1}.
        grid: (B, N) shape the multipliers are laid out on.
        active: B x N flags of the constraints the M coordinates belong to.
        iteration: Number of cuts applied so far.
        converged: Set when a zero subgradient was passed in.
    """

    center: np.ndarray
    shape_inverse: np.ndarray
    grid: tuple[int, int]
    active: np.ndarray
    iteration: int = 0
    converged: bool = False

    @staticmethod
    def initial(active: np.ndarray, radius: float) -> "DualState":
        """
        Ball of the given radius around nu = 0

        Args:
            active (np.ndarray): B x N flags of the dualized constraints
            radius (float): Ball radius

        Returns:
            DualState: Initial state
        """
        dimension = int(np.count_nonzero(active))
        return DualState(
            center=np.zeros(dimension),
            shape_inverse=radius**2 * np.eye(dimension),
            grid=tuple(active.shape),
            active=np.asarray(active, dtype=bool),
        )

    @property
    def dimension(self) -> int:
        """Number M of dualized constraints"""
        return len(self.center)

    @property
    def nu(self) -> np.ndarray:
        """B x N multipliers at the center, projected on nu >= 0"""
        multipliers = np.zeros(self.grid)
        multipliers[self.active] = np.maximum(self.center, 0.0)
        return multipliers

    @property
    def log_volume(self) -> float:
        """Log of the ellipsoid volume up to the unit-ball constant"""
        sign, log_det = np.linalg.slogdet(self.shape_inverse)
        return 0.5 * log_det if sign > 0 else -math.inf


@dataclass(frozen=True)
class OuterRecord:
    """
    One multiplier update of the interference-constrained heuristic.

    Attributes:
        step: Outer iteration, starting at 1.
        nu_mean: Mean multiplier used by the inner dynamics.
        nu_max: Largest multiplier used by the inner dynamics.
        interference: B x N aggregate interference after the inner dynamics (W).
        primal_value: Sum rate after the inner dynamics.
        dual_value: Lagrangian after the inner dynamics.
        power_change: Largest per-couple 2-norm power change (W).
        gamma: Step size used for the following update.
        inner_rounds: Rounds spent by the inner dynamics.
    """

    step: int
    nu_mean: float
    nu_max: float
    interference: np.ndarray
    primal_value: float
    dual_value: float
    power_change: float
    gamma: float
    inner_rounds: int


@dataclass(frozen=True, eq=False)
class DualBound:
    """
    Result of the ellipsoid minimization of the dual function.

    Attributes:
        value: Smallest evaluated dual value, an upper bound of the constrained
               sum rate.
        nu: B x N multipliers attaining `value`.
        powers: K x N maximizer of the Lagrangian at `nu`.
        evaluations: Every evaluated dual value in order.
        steps: Number of ellipsoid cuts.
        collapsed: Set when the ellipsoid degenerated numerically.
    """

    value: float
    nu: np.ndarray
    powers: np.ndarray
    evaluations: list[float] = field(default_factory=list)
    steps: int = 0
    collapsed: bool = False


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True, eq=False)
class UnderlayResult:
    """
    Outcome of the interference-constrained heuristic.

    Attributes:
        powers: K x N final profile (W).
        nu: B x N final multipliers.
        interference: B x N aggregate interference of the final profile (W).
        rates: Rates of the final profile.
        primal_value: Sum rate of the final profile.
        trace: One record per outer iteration.
        converged: False if max_outer was hit first.
        dual_bound: Ellipsoid bound when computed.
        lower_model_violations: Outer steps at which the dual lower-model inequality failed.
        inner_trace: Trace of the last inner dynamics.
    """

    powers: np.ndarray
    nu: np.ndarray
    interference: np.ndarray
    rates: RateReport
    primal_value: float
    trace: list[OuterRecord]
    converged: bool
    dual_bound: Optional[float] = None
    lower_model_violations: int = 0
    inner_trace: Optional[IterationTrace] = None

    def max_interference_ratio(self, thresholds: np.ndarray) -> float:
        """
        Worst interference relative to its threshold

        Args:
            thresholds (np.ndarray): B x N thresholds Q

        Returns:
            float: max over finite, positive Q of interference / Q; 0 if none
        """
        return max_interference_ratio(self.interference, thresholds)


def max_interference_ratio(interference: np.ndarray, thresholds: np.ndarray) -> float:
    """
    Worst aggregate interference relative to its threshold

    Args:
        interference (np.ndarray): B x N interference (W)
        thresholds (np.ndarray): B x N thresholds (W)

    Returns:
        float: max over finite, positive thresholds of interference / Q; 0 if none
    """
    bounded = np.isfinite(thresholds) & (thresholds > 0)
    if not np.any(bounded):
        return 0.0
    return float(np.max(interference[bounded] / thresholds[bounded]))


def lagrangian_value(p: np.ndarray, nu: np.ndarray, scenario: Scenario) -> float:
    """
    Sum rate plus the priced interference slack

    Args:
        p (np.ndarray): K x N powers
        nu (np.ndarray): B x N non-negative multipliers
        scenario (Scenario): Problem instance

    Returns:
        float: R(p) + sum nu (Q - sum_k A p); entries with nu = 0 contribute nothing
    """
    slack = scenario.thresholds - rate_model.enb_interference(p, scenario)
    priced = np.where(nu > 0, nu * np.where(nu > 0, slack, 0.0), 0.0)
    return rate_model.sum_rate(p, scenario) + float(np.sum(priced))


def subgradient(p: np.ndarray, scenario: Scenario) -> np.ndarray:
    """
    Interference slack, a subgradient of the dual function at the nu p maximizes

    Args:
        p (np.ndarray): K x N powers
        scenario (Scenario): Problem instance

    Returns:
        np.ndarray: M = B * N vector Q - sum_k A p, row-major over (b, n)
    """
    return (scenario.thresholds - rate_model.enb_interference(p, scenario)).ravel()


def inner_solve(
    nu: np.ndarray,
    p_init: np.ndarray,
    scenario: Scenario,
    epsilon: float = DEFAULT_EPSILON,
    order: Optional[Sequence[int]] = None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    penalty: Optional[PenaltyProvider] = None,
) -> np.ndarray:
    """
    Better-response dynamics on the Lagrangian at fixed multipliers

    Args:
        nu (np.ndarray): B x N non-negative multipliers
        p_init (np.ndarray): K x N feasible starting profile
        scenario (Scenario): Problem instance
        epsilon (float): Stopping threshold on the round difference
        order (Optional[Sequence[int]]): Update order
        max_rounds (int): Round cap
        penalty (Optional[PenaltyProvider]): Source of alpha' when not computed
                                             directly

    Returns:
        np.ndarray: K x N local maximizer of the Lagrangian

    Raises:
        InputError: If nu has the wrong shape or negative entries.
    """
    multipliers = _checked_nu(nu, scenario)
    p, _, _ = _inner_dynamics(
        multipliers, p_init, scenario, epsilon, order, max_rounds, penalty
    )
    return p


def _checked_nu(nu: np.ndarray, scenario: Scenario) -> np.ndarray:
    multipliers = np.asarray(nu, dtype=float)
    if multipliers.shape != (scenario.num_cells, scenario.num_subcarriers):
        raise InputError(f"Multipliers must be B x N, got {multipliers.shape}")
    if np.any(multipliers < 0) or not np.all(np.isfinite(multipliers)):
        raise InputError("Multipliers must be finite and non-negative")
    return multipliers


def _inner_dynamics(
    nu: np.ndarray,
    p_init: np.ndarray,
    scenario: Scenario,
    epsilon: float,
    order: Optional[Sequence[int]],
    max_rounds: int,
    penalty: Optional[PenaltyProvider] = None,
) -> tuple[np.ndarray, IterationTrace, bool]:
    return better_response_dynamics(
        scenario,
        p_init,
        order,
        epsilon,
        max_rounds,
        nu=nu,
        penalty=penalty,
        objective=lambda q: lagrangian_value(q, nu, scenario),
    )


def ellipsoid_step(state: DualState, d: np.ndarray) -> DualState:
    """
    Cut the ellipsoid with the half-space {x : d^T (x - center) <= 0}.

    With d~ = d / sqrt(d^T P d) the center moves to center - P d~ / (M + 1) and
    P becomes M^2 / (M^2 - 1) (P - 2 / (M + 1) P d~ d~^T P). For M = 1 the
    ellipsoid is an interval and the cut halves it.

    Args:
        state (DualState): Current ellipsoid
        d (np.ndarray): M-vector cut direction

    Returns:
        DualState: Smaller ellipsoid; the same one flagged converged if d = 0

    Raises:
        NumericalError: If the updated shape matrix is not positive definite.
    """
    direction = np.asarray(d, dtype=float).ravel()
    if not np.any(direction):
        return DualState(
            center=state.center,
            shape_inverse=state.shape_inverse,
            grid=state.grid,
            active=state.active,
            iteration=state.iteration,
            converged=True,
        )
    shape = state.shape_inverse
    dimension = state.dimension
    projected = shape @ direction
    norm = float(direction @ projected)
    if not norm > 0 or not math.isfinite(norm):
        raise NumericalError(
            "Cut direction has no positive length in the ellipsoid metric",
            {"norm": norm, "iteration": state.iteration},
        )
    shift = projected / math.sqrt(norm)

    if dimension == 1:
        center = state.center - shift / 2.0
        updated = shape / 4.0
    else:
        center = state.center - shift / (dimension + 1)
        updated = (
            dimension**2
            / (dimension**2 - 1.0)
            * (shape - 2.0 / (dimension + 1) * np.outer(shift, shift))
        )
        updated = 0.5 * (updated + updated.T)
        try:
            np.linalg.cholesky(updated)
        except np.linalg.LinAlgError as ex:
            raise NumericalError(
                "Ellipsoid shape matrix lost positive definiteness",
                {
                    "iteration": state.iteration,
                    "min_eigenvalue": float(np.min(np.linalg.eigvalsh(updated))),
                },
            ) from ex

    return DualState(
        center=center,
        shape_inverse=updated,
        grid=state.grid,
        active=state.active,
        iteration=state.iteration + 1,
    )


def default_nu_cap(scenario: Scenario) -> float:
    """
    Multiplier above which the price of a subcarrier exceeds any rate gain.

    Computed as the largest 1 / (ln2 A[k, b, n] i[k, n]) over positive gains,
    with i the interference-free normalized noise.

    Args:
        scenario (Scenario): Problem instance

    Returns:
        float: Positive cap; 1 if no tx-to-eNB gain is positive
    """
    gains = scenario.enb_gains
    positive = gains > 0
    if not np.any(positive):
        return 1.0
    interference = scenario.noise / scenario.direct_gains
    referred = gains * interference[:, None, :]
    return float(np.max(1.0 / (LN2 * referred[positive])))


def _dual_value(
    nu: np.ndarray,
    scenario: Scenario,
    orders: Sequence[Sequence[int]],
    inits: Sequence[np.ndarray],
    epsilon: float,
    max_rounds: int,
) -> tuple[float, np.ndarray]:
    best_value, best_p = -math.inf, inits[0]
    for order in orders:
        for init in inits:
            p, _, _ = _inner_dynamics(nu, init, scenario, epsilon, order, max_rounds)
            value = lagrangian_value(p, nu, scenario)
            if value > best_value:
                best_value, best_p = value, p
    return best_value, best_p


# pylint: disable=too-many-arguments,too-many-locals
def dual_upper_bound(
    scenario: Scenario,
    num_orders: int = 6,
    num_inits: int = 2,
    epsilon: float = DEFAULT_EPSILON,
    max_steps: Optional[int] = None,
    nu_cap: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
    warm_starts: Optional[Sequence[np.ndarray]] = None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> DualBound:
    """
    Minimize the dual function over nu >= 0 with the ellipsoid method.

    The dual function is evaluated by a multi-start maximization of the Lagrangian
    (orders x starting profiles, plus `warm_starts` and the previous maximizer).
    Coordinates of the center that are negative are handled with a feasibility cut
    along the coordinate axis instead of an evaluation. Constraints with infinite
    Q are never dualized.

    Args:
        scenario (Scenario): Problem instance
        num_orders (int): Scheduling orders of each multi-start evaluation
        num_inits (int): Starting profiles of each multi-start evaluation
        epsilon (float): Stopping threshold of the inner dynamics
        max_steps (Optional[int]): Cut cap, 200 M by default
        nu_cap (Optional[float]): Per-coordinate multiplier bound defining the
                                  initial ball, `default_nu_cap` by default
        rng (Optional[np.random.Generator]): Generator for random orders and profiles
        warm_starts (Optional[Sequence[np.ndarray]]): Extra starting profiles
        max_rounds (int): Round cap of the inner dynamics

    Returns:
        DualBound: Smallest evaluated dual value and where it was attained
    """
    generator = rng if rng is not None else np.random.default_rng(0)
    orders, inits = multistart_configurations(scenario, num_orders, num_inits, generator)
    inits = list(inits) + list(warm_starts or [])
    active = np.isfinite(scenario.thresholds)
    state = DualState.initial(
        active,
        (nu_cap or default_nu_cap(scenario)) * math.sqrt(max(1, np.count_nonzero(active))),
    )

    value, p = _dual_value(state.nu, scenario, orders, inits, epsilon, max_rounds)
    bound = DualBound(value=value, nu=state.nu, powers=p, evaluations=[value])
    if state.dimension == 0:
        return bound

    steps = max_steps if max_steps is not None else STEPS_PER_DIMENSION * state.dimension
    stop_volume = state.log_volume + math.log(VOLUME_REDUCTION)
    best, best_nu, best_p = value, state.nu, p
    evaluations = [value]
    collapsed = False
    direction = subgradient(p, scenario)[active.ravel()]
    for _ in range(steps):
        try:
            state = ellipsoid_step(state, direction)
        except NumericalError as ex:
            logger.warning("Ellipsoid collapsed: %s %s", ex, ex.diagnostics)
            collapsed = True
            break
        if state.converged or state.log_volume < stop_volume:
            break
        if np.any(state.center < 0):
            direction = np.zeros(state.dimension)
            direction[int(np.argmin(state.center))] = -1.0
            continue
        nu = state.nu
        value, p = _dual_value(nu, scenario, orders, inits + [p], epsilon, max_rounds)
        evaluations.append(value)
        if value < best:
            best, best_nu, best_p = value, nu, p
        direction = subgradient(p, scenario)[active.ravel()]

    logger.info(
        "Dual bound %g after %d cuts and %d evaluations",
        best,
        state.iteration,
        len(evaluations),
    )
    return DualBound(
        value=best,
        nu=best_nu,
        powers=best_p,
        evaluations=evaluations,
        steps=state.iteration,
        collapsed=collapsed,
    )


def _step_scale(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    # thresholds the slack is measured against (zero thresholds use the smallest
    # noise) and the multiplier at which a lone couple's interference meets them
    fallback = float(np.min(scenario.noise))
    scale = np.where(scenario.thresholds > 0, scenario.thresholds, fallback)
    return 1.0 / (LN2 * scale), scale


def _oscillating(excesses: list[float], flips: list[bool], window: int) -> bool:
    # the worst relative violation has not shrunk over the window while some
    # engaged constraint kept crossing its threshold
    return (
        len(excesses) > window
        and any(flips[-window:])
        and excesses[-1] >= excesses[-1 - window]
    )


# pylint: disable=too-many-arguments,too-many-locals,too-many-statements
def iadrmpic_run(
    scenario: Scenario,
    gamma: float = DEFAULT_GAMMA,
    epsilon: float = DEFAULT_POWER_TOLERANCE,
    max_outer: int = DEFAULT_MAX_OUTER,
    inner_epsilon: float = DEFAULT_EPSILON,
    order: Optional[Sequence[int]] = None,
    p_init: Optional[np.ndarray] = None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    penalty_factory: Optional[PenaltyFactory] = None,
    oscillation_window: int = DEFAULT_OSCILLATION_WINDOW,
) -> UnderlayResult:
    """
    Interference-constrained heuristic with projected subgradient multiplier steps.

    Every outer step runs the dynamics on the Lagrangian at the current nu,
    warm-started at the previous powers, then moves nu along the interference
    slack relative to Q:

        nu <- [nu - gamma (nu + nu_ref) (Q - sum A p) / Q]^+

    nu_ref = 1 / (ln 2 Q) is the multiplier at which a single couple's
    interference falls to Q, so the step grows with the multiplier and covers
    the orders of magnitude between the first step and the price that keeps
    the eNBs below their thresholds. The step size is halved when the worst
    relative violation has not shrunk over `oscillation_window` steps while
    some engaged (b, n) constraint changed the sign of its slack.

    Args:
        scenario (Scenario): Problem instance
        gamma (float): Initial dimensionless step size
        epsilon (float): Stop once every couple's power change is below this (W)
                         and no eNB exceeds its threshold by more than
                         `VIOLATION_TOLERANCE`
        max_outer (int): Outer iteration cap
        inner_epsilon (float): Stopping threshold of the inner dynamics
        order (Optional[Sequence[int]]): Update order
        p_init (Optional[np.ndarray]): Starting profile
        max_rounds (int): Round cap of the inner dynamics
        penalty_factory (Optional[PenaltyFactory]): Source of alpha' per nu, for
                                                    example sounding estimates
        oscillation_window (int): Steps over which an oscillating violation must
                                  shrink before the step size is halved

    Returns:
        UnderlayResult: Final powers, multipliers and trace

    Raises:
        InputError: If gamma is not positive.
    """
    if not gamma > 0:
        raise InputError(f"Step size must be positive, got {gamma}")
    active = np.isfinite(scenario.thresholds)
    reference, scale = _step_scale(scenario)
    nu = np.zeros((scenario.num_cells, scenario.num_subcarriers))
    p = default_initial_power(scenario) if p_init is None else np.asarray(p_init)

    records: list[OuterRecord] = []
    excesses: list[float] = []
    flips: list[bool] = []
    violations = 0
    previous: Optional[tuple[np.ndarray, np.ndarray, np.ndarray]] = None
    inner_trace: Optional[IterationTrace] = None
    converged = False
    for step in range(1, max_outer + 1):
        penalty = penalty_factory(nu) if penalty_factory is not None else None
        p_new, inner_trace, _ = _inner_dynamics(
            nu, p, scenario, inner_epsilon, order, max_rounds, penalty
        )
        dual_value = lagrangian_value(p_new, nu, scenario)
        interference = rate_model.enb_interference(p_new, scenario)
        slack = np.where(active, scenario.thresholds - interference, 0.0)
        relative = slack / scale

        if previous is not None:
            p_old, nu_old, slack_old = previous
            predicted = lagrangian_value(p_old, nu_old, scenario) + float(
                np.sum(slack_old * (nu - nu_old))
            )
            if dual_value < predicted - MONOTONICITY_SLACK * max(1.0, abs(predicted)):
                violations += 1
                logger.warning(
                    "Dual lower model violated at step %d by %g",
                    step,
                    predicted - dual_value,
                )
            relative_old = slack_old / scale
            crossed = (
                (np.sign(relative) * np.sign(relative_old) < 0)
                & (np.abs(relative) > VIOLATION_TOLERANCE)
                & (np.abs(relative_old) > VIOLATION_TOLERANCE)
            )
            flips.append(bool(np.any(crossed)))
        else:
            flips.append(False)

        engaged = active & ((nu > 0) | (relative < 0))
        excesses.append(float(np.max(np.abs(relative[engaged]), initial=0.0)))
        if _oscillating(excesses, flips, oscillation_window):
            gamma /= 2.0
            excesses, flips = [excesses[-1]], [False]
            logger.info(
                "Interference oscillates around the thresholds, step size halved to %g",
                gamma,
            )

        change = float(np.max(np.linalg.norm(p_new - p, axis=1)))
        records.append(
            OuterRecord(
                step=step,
                nu_mean=float(np.mean(nu)),
                nu_max=float(np.max(nu)),
                interference=interference,
                primal_value=rate_model.sum_rate(p_new, scenario),
                dual_value=dual_value,
                power_change=change,
                gamma=gamma,
                inner_rounds=inner_trace.rounds_to_converge,
            )
        )
        previous = (p_new, nu, slack)
        p = p_new
        excess = float(np.max(-relative))
        if change < epsilon and excess <= VIOLATION_TOLERANCE:
            converged = True
            break
        nu = np.maximum(nu - gamma * (nu + reference) * relative, 0.0)

    if not converged:
        logger.warning("Multiplier updates stopped at the cap of %d steps", max_outer)
    return UnderlayResult(
        powers=p,
        nu=nu,
        interference=rate_model.enb_interference(p, scenario),
        rates=rate_model.rate_report(p, scenario),
        primal_value=rate_model.sum_rate(p, scenario),
        trace=records,
        converged=converged,
        lower_model_violations=violations,
        inner_trace=inner_trace,
    )
