"""
Seeded Monte-Carlo campaigns over experiment modes, and the dedicated vs reuse
comparison. Realizations are independent and may run in worker processes; all
results are reduced in seed order so the written tables do not depend on the
number of workers.
"""

import csv
import json
import logging
import time
from dataclasses import dataclass, field, fields, replace
from functools import partial
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np
from dataclasses_json import dataclass_json

from d2d_power import rate_model, utils
from d2d_power.config import ExperimentConfig
from d2d_power.game_engine import (
    AllocationResult,
    iadrmp_run,
    iwf_run,
    multistart_configurations,
    multistart_run,
)
from d2d_power.scenario import (
    ChannelGains,
    RadioParams,
    Scenario,
    Topology,
    build_scenario,
    generate_scenario,
    generate_topology,
    sample_gains,
)
from d2d_power.sounding import sounding_penalty
from d2d_power.subproblem_solver import waterfill
from d2d_power.types import ExperimentMode, MaskMode, RunStatus
from d2d_power.underlay import (
    UnderlayResult,
    dual_upper_bound,
    iadrmpic_run,
    max_interference_ratio,
)

logger = logging.getLogger(__name__)

SUMMARY_FILE: str = "summary.csv"
AGGREGATE_FILE: str = "aggregate.csv"
COMPARISON_FILE: str = "comparison.csv"
COMPARISON_RUNS_FILE: str = "comparison_runs.csv"
MANIFEST_FILE: str = "manifest.json"

STREAMS: tuple[str, ...] = ("topology", "channel", "multistart", "sounding")

Row = TypeVar("Row")


# pylint: disable=too-many-instance-attributes
@dataclass_json
@dataclass(kw_only=True)
class SummaryRow:
    """
    Outcome of one (seed, mode, sweep point) run.

    Attributes:
        seed: Master seed of the realization.
        mode: Experiment mode.
        num_cells: Number of cells B.
        power_budget: Budget P of every couple.
        interference_threshold: Tolerated interference Q at every eNB.
        sum_rate: Sum rate of the final profile.
        spectral_efficiency: Sum rate per cell divided by the number of subcarriers.
        rounds: Rounds (overlay) or multiplier updates (underlay) executed.
        nash_gap: Largest unilateral improvement left, overlay modes only.
        max_interference_ratio: Worst aggregate interference relative to Q.
        dual_bound: Upper bound of the constrained sum rate, underlay-ub only.
        status: Run outcome.
        error: Error message of a failed run.
        wall_time: Run duration, excluded from determinism checks.
    """

    seed: int = field(metadata=utils.get_metadata())
    mode: ExperimentMode = field(metadata=utils.get_metadata())
    num_cells: int = field(metadata=utils.get_metadata())
    power_budget: float = field(metadata=utils.get_metadata("W"))
    interference_threshold: float = field(metadata=utils.get_metadata("W"))
    sum_rate: Optional[float] = field(
        default=None, metadata=utils.get_metadata("bit/s/Hz")
    )
    spectral_efficiency: Optional[float] = field(
        default=None, metadata=utils.get_metadata("bit/s/Hz")
    )
    rounds: Optional[int] = field(default=None, metadata=utils.get_metadata())
    nash_gap: Optional[float] = field(
        default=None, metadata=utils.get_metadata("bit/s/Hz")
    )
    max_interference_ratio: Optional[float] = field(
        default=None, metadata=utils.get_metadata()
    )
    dual_bound: Optional[float] = field(
        default=None, metadata=utils.get_metadata("bit/s/Hz")
    )
    status: RunStatus = field(default=RunStatus.OK, metadata=utils.get_metadata())
    error: str = field(default="", metadata=utils.get_metadata())
    wall_time: float = field(default=0.0, metadata=utils.get_metadata("s"))


@dataclass_json
@dataclass(kw_only=True)
class AggregateRow:
    """
    Statistics of the successful runs of one mode at one sweep point.

    Attributes:
        mode: Experiment mode.
        power_budget: Budget P.
        interference_threshold: Threshold Q.
        runs: Successful runs entering the statistics.
        failures: Failed runs.
        sum_rate_*: Mean, standard deviation, minimum and maximum of the sum rate.
        spectral_efficiency_*: Same statistics for the spectral efficiency.
    """

    mode: ExperimentMode = field(metadata=utils.get_metadata())
    power_budget: float = field(metadata=utils.get_metadata("W"))
    interference_threshold: float = field(metadata=utils.get_metadata("W"))
    runs: int = field(metadata=utils.get_metadata())
    failures: int = field(metadata=utils.get_metadata())
    sum_rate_mean: float = field(metadata=utils.get_metadata("bit/s/Hz"))
    sum_rate_std: float = field(metadata=utils.get_metadata("bit/s/Hz"))
    sum_rate_min: float = field(metadata=utils.get_metadata("bit/s/Hz"))
    sum_rate_max: float = field(metadata=utils.get_metadata("bit/s/Hz"))
    spectral_efficiency_mean: float = field(metadata=utils.get_metadata("bit/s/Hz"))
    spectral_efficiency_std: float = field(metadata=utils.get_metadata("bit/s/Hz"))
    spectral_efficiency_min: float = field(metadata=utils.get_metadata("bit/s/Hz"))
    spectral_efficiency_max: float = field(metadata=utils.get_metadata("bit/s/Hz"))


@dataclass_json
@dataclass(kw_only=True)
class ComparisonRow:
    """
    Dedicated vs reuse outcome of one seed, distance and scenario.

    Attributes:
        seed: Master seed.
        d_max: Maximum tx-rx distance.
        scenario: Index into the configured (N_d, Q_max) pairs.
        dedicated_subcarriers: N_d.
        q_max: Tolerated interference in reuse mode.
        eta_dedicated: Spectral efficiency of IADRMP on the N_d reserved subcarriers.
        eta_reuse: Spectral efficiency of IADRMPIC on all subcarriers.
        ue_rate_dedicated: Aggregate UE rate on the N - N_d cellular subcarriers.
        ue_rate_reuse: Aggregate UE rate on all subcarriers against Q_max + sigma2.
        reuse_max_interference_ratio: Worst eNB interference relative to Q_max.
        status: Run outcome.
        error: Error message of a failed run.
    """

    seed: int = field(metadata=utils.get_metadata())
    d_max: float = field(metadata=utils.get_metadata("m"))
    scenario: int = field(metadata=utils.get_metadata())
    dedicated_subcarriers: int = field(metadata=utils.get_metadata())
    q_max: float = field(metadata=utils.get_metadata("W"))
    eta_dedicated: Optional[float] = field(
        default=None, metadata=utils.get_metadata("bit/s/Hz")
    )
    eta_reuse: Optional[float] = field(
        default=None, metadata=utils.get_metadata("bit/s/Hz")
    )
    ue_rate_dedicated: Optional[float] = field(
        default=None, metadata=utils.get_metadata("bit/s/Hz")
    )
    ue_rate_reuse: Optional[float] = field(
        default=None, metadata=utils.get_metadata("bit/s/Hz")
    )
    reuse_max_interference_ratio: Optional[float] = field(
        default=None, metadata=utils.get_metadata()
    )
    status: RunStatus = field(default=RunStatus.OK, metadata=utils.get_metadata())
    error: str = field(default="", metadata=utils.get_metadata())


@dataclass_json
@dataclass(kw_only=True)
class ComparisonSummaryRow:
    """
    Seed averages of one (distance, scenario) cell of the comparison.

    Attributes:
        d_max: Maximum tx-rx distance.
        scenario: Index into the configured (N_d, Q_max) pairs.
        dedicated_subcarriers: N_d.
        q_max: Tolerated interference in reuse mode.
        runs: Seeds entering the averages.
        eta_dedicated: Mean dedicated spectral efficiency.
        eta_reuse: Mean reuse spectral efficiency.
        ue_rate_dedicated: Mean aggregate UE rate, dedicated mode.
        ue_rate_reuse: Mean aggregate UE rate, reuse mode.
    """

    d_max: float = field(metadata=utils.get_metadata("m"))
    scenario: int = field(metadata=utils.get_metadata())
    dedicated_subcarriers: int = field(metadata=utils.get_metadata())
    q_max: float = field(metadata=utils.get_metadata("W"))
    runs: int = field(metadata=utils.get_metadata())
    eta_dedicated: float = field(metadata=utils.get_metadata("bit/s/Hz"))
    eta_reuse: float = field(metadata=utils.get_metadata("bit/s/Hz"))
    ue_rate_dedicated: float = field(metadata=utils.get_metadata("bit/s/Hz"))
    ue_rate_reuse: float = field(metadata=utils.get_metadata("bit/s/Hz"))


@dataclass
class TraceTable:
    """Convergence trace of one run, written as `trace_<seed>_<mode>.csv`"""

    name: str
    headers: list[str]
    rows: list[list[Any]]


@dataclass
class RealizationOutcome:
    """Everything one seed produced, in mode and sweep order"""

    rows: list[SummaryRow] = field(default_factory=list)
    traces: list[TraceTable] = field(default_factory=list)


@dataclass
class CampaignReport:
    """
    Result of a campaign.

    Attributes:
        rows: One summary row per (seed, mode, sweep point).
        aggregates: Statistics per (mode, sweep point).
        comparison: Per-seed dedicated vs reuse rows.
        comparison_summary: Seed averages of the comparison.
        output_dir: Directory the files were written to.
    """

    rows: list[SummaryRow] = field(default_factory=list)
    aggregates: list[AggregateRow] = field(default_factory=list)
    comparison: list[ComparisonRow] = field(default_factory=list)
    comparison_summary: list[ComparisonSummaryRow] = field(default_factory=list)
    output_dir: Optional[Path] = None

    @property
    def total_runs(self) -> int:
        """Number of runs attempted"""
        return len(self.rows) + len(self.comparison)

    @property
    def failed_runs(self) -> int:
        """Number of runs that raised"""
        return sum(
            1 for row in [*self.rows, *self.comparison] if row.status == RunStatus.FAILED
        )


def spectral_efficiency(sum_rate: float, num_cells: int, num_subcarriers: int) -> float:
    """
    Sum rate per cell normalized by the whole system bandwidth

    Args:
        sum_rate (float): Sum rate of all couples
        num_cells (int): Number of cells B
        num_subcarriers (int): Total number of subcarriers of the system

    Returns:
        float: eta in bit/s/Hz
    """
    return sum_rate / num_cells / num_subcarriers


def _overlay_trace(result: AllocationResult) -> tuple[list[str], list[list[Any]]]:
    headers = ["round", "sum_rate[bit/s/Hz]"]
    return headers, [[index, value] for index, value in enumerate(result.trace.sum_rates)]


def _underlay_trace(
    result: UnderlayResult, scenario: Scenario
) -> tuple[list[str], list[list[Any]]]:
    headers = [
        "step",
        "nu_mean[1/W]",
        "nu_max[1/W]",
        "primal_value[bit/s/Hz]",
        "dual_value[bit/s/Hz]",
        "power_change[W]",
        "gamma",
        "inner_rounds",
        "max_interference_ratio",
    ]
    headers += [
        f"interference_b{b}_n{n}[W]"
        for b in range(scenario.num_cells)
        for n in range(scenario.num_subcarriers)
    ]
    rows = [
        [
            record.step,
            record.nu_mean,
            record.nu_max,
            record.primal_value,
            record.dual_value,
            record.power_change,
            record.gamma,
            record.inner_rounds,
            max_interference_ratio(record.interference, scenario.thresholds),
            *(float(value) for value in record.interference.ravel()),
        ]
        for record in result.trace
    ]
    return headers, rows


# pylint: disable=too-many-locals
def run_mode(
    mode: ExperimentMode,
    scenario: Scenario,
    config: ExperimentConfig,
    streams: dict[str, np.random.Generator],
) -> tuple[dict[str, Any], tuple[list[str], list[list[Any]]]]:
    """
    Run one experiment mode on one scenario

    Args:
        mode (ExperimentMode): Mode to run; mode comparison is not a per-scenario mode
        scenario (Scenario): Problem instance
        config (ExperimentConfig): Algorithm and sounding parameters
        streams (dict[str, np.random.Generator]): Named generators of the realization

    Returns:
        tuple[dict[str, Any], tuple[list[str], list[list[Any]]]]: Summary values and
                                                                 trace table
    """
    algorithm = config.algorithm
    sounding = config.sounding

    def penalty_for(nu: Optional[np.ndarray]):
        return sounding_penalty(
            scenario,
            nu,
            sounding.reference_power,
            sounding.noise_std,
            streams["sounding"],
        )

    if mode in (
        ExperimentMode.OVERLAY_IADRMP,
        ExperimentMode.OVERLAY_IWF,
        ExperimentMode.OVERLAY_MULTISTART,
    ):
        if mode == ExperimentMode.OVERLAY_IADRMP:
            result = iadrmp_run(
                scenario,
                epsilon=algorithm.epsilon,
                max_rounds=algorithm.max_rounds,
                penalty=penalty_for(None) if sounding.enabled else None,
                check_bounds=algorithm.check_bounds,
            )
        elif mode == ExperimentMode.OVERLAY_IWF:
            result = iwf_run(
                scenario, max_rounds=algorithm.iwf_max_rounds, epsilon=algorithm.epsilon
            )
        else:
            orders, inits = multistart_configurations(
                scenario,
                algorithm.multistart_orders,
                algorithm.multistart_inits,
                streams["multistart"],
            )
            result = multistart_run(
                scenario, orders, inits, algorithm.epsilon, algorithm.max_rounds
            )
        values = {
            "sum_rate": result.sum_rate,
            "rounds": result.trace.rounds_to_converge,
            "nash_gap": result.nash_gap,
            "max_interference_ratio": max_interference_ratio(
                rate_model.enb_interference(result.powers, scenario),
                scenario.thresholds,
            ),
            "converged": result.converged,
        }
        return values, _overlay_trace(result)

    underlay = iadrmpic_run(
        scenario,
        gamma=algorithm.gamma,
        epsilon=algorithm.power_tolerance,
        max_outer=algorithm.max_outer,
        inner_epsilon=algorithm.epsilon,
        max_rounds=algorithm.max_rounds,
        penalty_factory=penalty_for if sounding.enabled else None,
        oscillation_window=algorithm.oscillation_window,
    )
    values = {
        "sum_rate": underlay.primal_value,
        "rounds": len(underlay.trace),
        "max_interference_ratio": underlay.max_interference_ratio(scenario.thresholds),
        "converged": underlay.converged,
    }
    if mode == ExperimentMode.UNDERLAY_UB:
        bound = dual_upper_bound(
            scenario,
            num_orders=algorithm.multistart_orders,
            num_inits=algorithm.multistart_inits,
            epsilon=algorithm.epsilon,
            max_steps=algorithm.ellipsoid_max_steps,
            nu_cap=algorithm.nu_cap,
            rng=streams["multistart"],
            warm_starts=[underlay.powers],
            max_rounds=algorithm.max_rounds,
        )
        values["dual_bound"] = bound.value
        best = np.minimum.accumulate(bound.evaluations)
        trace = (
            ["evaluation", "dual_value[bit/s/Hz]", "best_bound[bit/s/Hz]"],
            [
                [index, value, float(low)]
                for index, (value, low) in enumerate(zip(bound.evaluations, best))
            ],
        )
        return values, trace
    return values, _underlay_trace(underlay, scenario)


def _failed_row(row: SummaryRow, ex: Exception, start: float) -> SummaryRow:
    logger.error("Seed %d, mode %s failed: %s", row.seed, row.mode.value, ex)
    row.status = RunStatus.FAILED
    row.error = f"{type(ex).__name__}: {ex}"
    row.wall_time = time.perf_counter() - start
    return row


def run_realization(config: ExperimentConfig, seed: int) -> RealizationOutcome:
    """
    Run every selected mode at every sweep point on the realization of one seed.

    The instance is drawn once per sweep point and shared by the modes; each mode
    gets its own copy of the named streams so its results do not depend on the
    other modes selected. Failures are recorded in the returned rows and never
    propagate.

    Args:
        config (ExperimentConfig): Experiment description
        seed (int): Master seed

    Returns:
        RealizationOutcome: Summary rows and traces, in mode and sweep order
    """
    outcome = RealizationOutcome()
    modes = [mode for mode in config.mode if mode != ExperimentMode.MODE_COMPARISON]
    points = config.sweep_points()
    for point_index, (budget, threshold) in enumerate(points):
        radio = replace(
            config.radio, power_budget=budget, interference_threshold=threshold
        )
        start = time.perf_counter()
        try:
            scenario = generate_scenario(seed, config.topology, config.channel, radio)
        except Exception as ex:  # pylint: disable=broad-exception-caught
            for mode in modes:
                row = SummaryRow(
                    seed=seed,
                    mode=mode,
                    num_cells=config.topology.num_cells,
                    power_budget=budget,
                    interference_threshold=threshold,
                )
                outcome.rows.append(_failed_row(row, ex, start))
            continue

        for mode in modes:
            row = SummaryRow(
                seed=seed,
                mode=mode,
                num_cells=config.topology.num_cells,
                power_budget=budget,
                interference_threshold=threshold,
            )
            start = time.perf_counter()
            try:
                streams = utils.realization_streams(seed, *STREAMS)
                values, (headers, rows) = run_mode(mode, scenario, config, streams)
            except Exception as ex:  # pylint: disable=broad-exception-caught
                outcome.rows.append(_failed_row(row, ex, start))
                continue

            row.sum_rate = float(values["sum_rate"])
            row.spectral_efficiency = spectral_efficiency(
                row.sum_rate, scenario.num_cells, scenario.num_subcarriers
            )
            row.rounds = int(values["rounds"])
            row.nash_gap = values.get("nash_gap")
            row.max_interference_ratio = values.get("max_interference_ratio")
            row.dual_bound = values.get("dual_bound")
            row.status = RunStatus.OK if values["converged"] else RunStatus.NOT_CONVERGED
            row.wall_time = time.perf_counter() - start
            outcome.rows.append(row)

            suffix = f"_p{point_index}" if len(points) > 1 else ""
            outcome.traces.append(
                TraceTable(f"trace_{seed}_{mode.value}{suffix}.csv", headers, rows)
            )
    logger.info("Seed %d done, %d runs", seed, len(outcome.rows))
    return outcome


def ue_assignment(
    topology: Topology, num_subcarriers: int, subcarriers: Sequence[int]
) -> np.ndarray:
    """
    Round-robin assignment of the cellular subcarriers to the UEs of each cell

    Args:
        topology (Topology): Node positions including UEs
        num_subcarriers (int): Total number of subcarriers N
        subcarriers (Sequence[int]): Subcarriers available to the cellular users

    Returns:
        np.ndarray: U x N flags, true where the UE owns the subcarrier
    """
    assert topology.ue_serving is not None
    owned = np.zeros((len(topology.ue_serving), num_subcarriers), dtype=bool)
    for cell in range(topology.num_cells):
        members = np.flatnonzero(topology.ue_serving == cell)
        for position, subcarrier in enumerate(subcarriers):
            owned[members[position % len(members)], subcarrier] = True
    return owned


def ue_powers(
    gains: ChannelGains, owned: np.ndarray, interference: float, budget: float
) -> tuple[np.ndarray, float]:
    """
    Waterfilling of every UE over its subcarriers against a fixed interference level

    Args:
        gains (ChannelGains): Gains including UE-to-eNB links
        owned (np.ndarray): U x N ownership flags
        interference (float): Interference-plus-noise seen at the eNB (W)
        budget (float): Power budget of every UE (W)

    Returns:
        tuple[np.ndarray, float]: U x N powers and the aggregate UE rate
    """
    assert gains.ue_enb is not None
    powers = np.zeros(owned.shape)
    total_rate = 0.0
    for ue, flags in enumerate(owned):
        if not np.any(flags):
            continue
        gain = gains.ue_enb[ue, flags]
        normalized = interference / gain
        allocation = waterfill(normalized, budget, np.full(gain.shape, np.inf)).powers
        powers[ue, flags] = allocation
        total_rate += float(np.sum(np.log2(1.0 + allocation / normalized)))
    return powers, total_rate


def _comparison_rows(
    config: ExperimentConfig,
    seed: int,
    d_max: float,
    topology: Topology,
    gains: ChannelGains,
) -> list[ComparisonRow]:
    comparison = config.comparison
    algorithm = config.algorithm
    num_subcarriers = comparison.num_subcarriers
    noise = config.radio.noise_power
    rows = []
    for index, (dedicated, q_max) in enumerate(
        zip(comparison.dedicated_subcarriers, comparison.q_max)
    ):
        row = ComparisonRow(
            seed=seed,
            d_max=d_max,
            scenario=index,
            dedicated_subcarriers=dedicated,
            q_max=q_max,
        )
        try:
            owned = ue_assignment(
                topology, num_subcarriers, range(dedicated, num_subcarriers)
            )
            _, row.ue_rate_dedicated = ue_powers(
                gains, owned, noise, comparison.ue_power_budget
            )
            radio = RadioParams(
                num_subcarriers=num_subcarriers,
                noise_power=noise,
                power_budget=config.radio.power_budget,
                mask_mode=MaskMode.CONSTANT,
                mask_value=config.radio.power_budget,
                interference_threshold=np.inf,
            )
            scenario = build_scenario(topology, gains, radio).restrict_subcarriers(
                np.arange(dedicated)
            )
            result = iadrmp_run(
                scenario, epsilon=algorithm.epsilon, max_rounds=algorithm.max_rounds
            )
            row.eta_dedicated = spectral_efficiency(
                result.sum_rate, topology.num_cells, num_subcarriers
            )

            owned = ue_assignment(topology, num_subcarriers, range(num_subcarriers))
            powers, row.ue_rate_reuse = ue_powers(
                gains, owned, q_max + noise, comparison.ue_power_budget
            )
            assert gains.ue_d2d is not None
            extra_noise = np.einsum("ukn,un->kn", gains.ue_d2d, powers)
            radio = replace(
                config.radio,
                num_subcarriers=num_subcarriers,
                interference_threshold=q_max,
            )
            scenario = build_scenario(topology, gains, radio, extra_noise)
            underlay = iadrmpic_run(
                scenario,
                gamma=algorithm.gamma,
                epsilon=algorithm.power_tolerance,
                max_outer=algorithm.max_outer,
                inner_epsilon=algorithm.epsilon,
                max_rounds=algorithm.max_rounds,
                oscillation_window=algorithm.oscillation_window,
            )
            row.eta_reuse = spectral_efficiency(
                underlay.primal_value, topology.num_cells, num_subcarriers
            )
            row.reuse_max_interference_ratio = underlay.max_interference_ratio(
                scenario.thresholds
            )
            if not underlay.converged:
                row.status = RunStatus.NOT_CONVERGED
        except Exception as ex:  # pylint: disable=broad-exception-caught
            logger.error(
                "Comparison seed %d, D_max %g, scenario %d failed: %s",
                seed,
                d_max,
                index,
                ex,
            )
            row.status = RunStatus.FAILED
            row.error = f"{type(ex).__name__}: {ex}"
        rows.append(row)
    return rows


def compare_realization(config: ExperimentConfig, seed: int) -> list[ComparisonRow]:
    """
    Dedicated vs reuse rows of one seed for every D_max and scenario.

    Every D_max reuses the same random streams, so the drops only differ in their
    tx-rx distances.

    Args:
        config (ExperimentConfig): Experiment description
        seed (int): Master seed

    Returns:
        list[ComparisonRow]: Rows ordered by D_max, then scenario
    """
    comparison = config.comparison
    rows: list[ComparisonRow] = []
    for d_max in comparison.d_max_values:
        params = replace(
            config.topology,
            num_cells=comparison.num_cells,
            pairs_per_cell=comparison.pairs_per_cell,
            ues_per_cell=comparison.ues_per_cell,
            d_max=d_max,
        )
        streams = utils.realization_streams(seed, "topology", "channel")
        topology = generate_topology(params, streams["topology"])
        gains = sample_gains(
            topology,
            config.channel,
            comparison.num_subcarriers,
            streams["channel"],
            params.d_min,
        )
        rows.extend(_comparison_rows(config, seed, d_max, topology, gains))
    return rows


def _map(function: Callable[[int], Row], seeds: Sequence[int], workers: int) -> list[Row]:
    if workers <= 1 or len(seeds) <= 1:
        return [function(seed) for seed in seeds]
    with Pool(processes=min(workers, len(seeds))) as pool:
        return pool.map(function, seeds)


def mode_comparison(
    config: ExperimentConfig, workers: Optional[int] = None
) -> tuple[list[ComparisonRow], list[ComparisonSummaryRow]]:
    """
    Dedicated vs reuse spectral efficiency over D_max

    Args:
        config (ExperimentConfig): Experiment description
        workers (Optional[int]): Worker processes, the configured count by default

    Returns:
        tuple[list[ComparisonRow], list[ComparisonSummaryRow]]: Per-seed rows and
                                                                seed averages
    """
    outcomes = _map(
        partial(compare_realization, config), config.seeds, workers or config.workers
    )
    rows = [row for outcome in outcomes for row in outcome]
    summary = []
    for d_max in config.comparison.d_max_values:
        for index, (dedicated, q_max) in enumerate(
            zip(config.comparison.dedicated_subcarriers, config.comparison.q_max)
        ):
            members = [
                row
                for row in rows
                if row.d_max == d_max
                and row.scenario == index
                and row.status != RunStatus.FAILED
            ]
            if not members:
                continue
            summary.append(
                ComparisonSummaryRow(
                    d_max=d_max,
                    scenario=index,
                    dedicated_subcarriers=dedicated,
                    q_max=q_max,
                    runs=len(members),
                    eta_dedicated=float(np.mean([row.eta_dedicated for row in members])),
                    eta_reuse=float(np.mean([row.eta_reuse for row in members])),
                    ue_rate_dedicated=float(
                        np.mean([row.ue_rate_dedicated for row in members])
                    ),
                    ue_rate_reuse=float(np.mean([row.ue_rate_reuse for row in members])),
                )
            )
    return rows, summary


def aggregate(rows: Iterable[SummaryRow]) -> list[AggregateRow]:
    """
    Statistics per (mode, power budget, threshold) in first-appearance order

    Args:
        rows (Iterable[SummaryRow]): Summary rows

    Returns:
        list[AggregateRow]: One row per group with at least one successful run
    """
    groups: dict[tuple[ExperimentMode, float, float], list[SummaryRow]] = {}
    for row in rows:
        key = (row.mode, row.power_budget, row.interference_threshold)
        groups.setdefault(key, []).append(row)

    result = []
    for (mode, budget, threshold), members in groups.items():
        finished = [row for row in members if row.status != RunStatus.FAILED]
        if not finished:
            continue
        rates = np.array([row.sum_rate for row in finished], dtype=float)
        etas = np.array([row.spectral_efficiency for row in finished], dtype=float)
        result.append(
            AggregateRow(
                mode=mode,
                power_budget=budget,
                interference_threshold=threshold,
                runs=len(finished),
                failures=len(members) - len(finished),
                sum_rate_mean=float(np.mean(rates)),
                sum_rate_std=float(np.std(rates)),
                sum_rate_min=float(np.min(rates)),
                sum_rate_max=float(np.max(rates)),
                spectral_efficiency_mean=float(np.mean(etas)),
                spectral_efficiency_std=float(np.std(etas)),
                spectral_efficiency_min=float(np.min(etas)),
                spectral_efficiency_max=float(np.max(etas)),
            )
        )
    return result


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if hasattr(value, "value"):
        return value.value
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_rows(path: Path, row_type: type, rows: Iterable[Any]) -> None:
    """
    Write dataclass rows as CSV with unit-annotated headers

    Args:
        path (Path): Destination file
        row_type (type): Dataclass of the rows, defines column order
        rows (Iterable[Any]): Rows to write
    """
    columns = fields(row_type)
    with open(path, "w", newline="", encoding="utf-8") as f:  # pylint: disable=C0103
        writer = csv.writer(f)
        writer.writerow([utils.column_header(column) for column in columns])
        for row in rows:
            writer.writerow([_cell(getattr(row, column.name)) for column in columns])


def write_trace(directory: Path, trace: TraceTable) -> None:
    """
    Write a convergence trace

    Args:
        directory (Path): Output directory
        trace (TraceTable): Trace to write
    """
    with open(
        directory.joinpath(trace.name), "w", newline="", encoding="utf-8"
    ) as f:  # pylint: disable=C0103
        writer = csv.writer(f)
        writer.writerow(trace.headers)
        writer.writerows([[_cell(value) for value in row] for row in trace.rows])


def write_manifest(path: Path, config: ExperimentConfig) -> None:
    """
    Write the fully resolved configuration as JSON

    Args:
        path (Path): Destination file
        config (ExperimentConfig): Resolved configuration
    """
    document = {
        "config": config.to_dict(encode_json=True),
        "sweep_points": [list(point) for point in config.sweep_points()],
    }
    path.write_text(
        json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def run_campaign(config: ExperimentConfig) -> CampaignReport:
    """
    Run every seed and mode, then write summary, aggregates, traces and manifest

    Args:
        config (ExperimentConfig): Experiment description

    Returns:
        CampaignReport: All rows; failed runs are recorded, never raised
    """
    directory = Path(config.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_manifest(directory.joinpath(MANIFEST_FILE), config)
    report = CampaignReport(output_dir=directory)

    if any(mode != ExperimentMode.MODE_COMPARISON for mode in config.mode):
        outcomes = _map(partial(run_realization, config), config.seeds, config.workers)
        for outcome in outcomes:
            report.rows.extend(outcome.rows)
            if config.output.traces:
                for trace in outcome.traces:
                    write_trace(directory, trace)
        report.aggregates = aggregate(report.rows)
        write_rows(directory.joinpath(SUMMARY_FILE), SummaryRow, report.rows)
        write_rows(directory.joinpath(AGGREGATE_FILE), AggregateRow, report.aggregates)

    if ExperimentMode.MODE_COMPARISON in config.mode:
        report.comparison, report.comparison_summary = mode_comparison(config)
        write_rows(
            directory.joinpath(COMPARISON_RUNS_FILE), ComparisonRow, report.comparison
        )
        write_rows(
            directory.joinpath(COMPARISON_FILE),
            ComparisonSummaryRow,
            report.comparison_summary,
        )

    logger.info(
        "Campaign finished: %d runs, %d failed, results in %s",
        report.total_runs,
        report.failed_runs,
        directory,
    )
    return report
