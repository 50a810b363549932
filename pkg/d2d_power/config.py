"""Experiment configuration: typed sections, defaults and parsing"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from dataclasses_json import dataclass_json

from d2d_power import utils
from d2d_power.errors import ConfigurationError
from d2d_power.scenario import ChannelParams, RadioParams, TopologyParams
from d2d_power.types import ExperimentMode
from d2d_power.validation import ConfigValidator, Result


@dataclass_json
@dataclass(kw_only=True)
class AlgorithmParams:
    """
    Stopping rules and knobs of the allocation algorithms.

    Attributes:
        epsilon: Round-over-round objective change that stops the dynamics.
        max_rounds: Round cap of IADRMP and of every inner dynamics.
        iwf_max_rounds: Round cap of iterative waterfilling, which may oscillate.
        gamma: Initial step size of the multiplier updates.
        power_tolerance: Per-couple power change that stops the multiplier updates.
        max_outer: Cap on multiplier updates.
        oscillation_window: Updates over which an oscillating violation must shrink
                            before the step size is halved.
        multistart_orders: Scheduling orders tried by multi-start runs.
        multistart_inits: Starting profiles tried by multi-start runs.
        ellipsoid_max_steps: Cut cap of the dual bound, 200 M when unset.
        nu_cap: Multiplier scale of the initial ellipsoid, derived when unset.
        check_bounds: Verify the bounding chain after every update.
    """

    epsilon: float = field(default=1e-4, metadata=utils.get_metadata("bit/s/Hz"))
    max_rounds: int = field(default=10_000, metadata=utils.get_metadata())
    iwf_max_rounds: int = field(default=500, metadata=utils.get_metadata())
    gamma: float = field(default=0.1, metadata=utils.get_metadata())
    power_tolerance: float = field(default=1e-6, metadata=utils.get_metadata("W"))
    max_outer: int = field(default=500, metadata=utils.get_metadata())
    oscillation_window: int = field(default=5, metadata=utils.get_metadata())
    multistart_orders: int = field(default=6, metadata=utils.get_metadata())
    multistart_inits: int = field(default=2, metadata=utils.get_metadata())
    ellipsoid_max_steps: Optional[int] = field(
        default=None, metadata=utils.get_metadata()
    )
    nu_cap: Optional[float] = field(default=None, metadata=utils.get_metadata("1/W"))
    check_bounds: bool = field(default=False, metadata=utils.get_metadata())


@dataclass_json
@dataclass(kw_only=True)
class SoundingParams:
    """
    Measurement-based penalty estimation.

    Attributes:
        enabled: Estimate alpha' from sounding measurements instead of computing it.
        reference_power: Reference sounding power p0.
        noise_std: Relative standard deviation of the measurement noise.
    """

    enabled: bool = field(default=False, metadata=utils.get_metadata())
    reference_power: float = field(default=1e-3, metadata=utils.get_metadata("W"))
    noise_std: float = field(default=0.0, metadata=utils.get_metadata())


@dataclass_json
@dataclass(kw_only=True)
class SweepParams:
    """
    Grid of budgets and thresholds every selected mode is run on.

    Attributes:
        power_budgets: Values of P; the radio budget alone when empty.
        interference_thresholds: Values of Q_max; the radio threshold alone when empty.
    """

    power_budgets: list[float] = field(
        default_factory=list, metadata=utils.get_metadata("W")
    )
    interference_thresholds: list[float] = field(
        default_factory=list, metadata=utils.get_metadata("W")
    )


@dataclass_json
@dataclass(kw_only=True)
class ComparisonParams:
    """
    Dedicated vs reuse comparison setting.

    Scenario i reserves `dedicated_subcarriers[i]` subcarriers to D2D in dedicated
    mode and tolerates `q_max[i]` at every eNB in reuse mode. The default Q_max
    values are -132, -128.5 and -125 dBW.

    Attributes:
        num_cells: Number of cells B.
        num_subcarriers: Total subcarriers N shared by UEs and D2D.
        pairs_per_cell: D2D couples per cell.
        ues_per_cell: Cellular UEs per cell.
        ue_power_budget: Power budget of every UE.
        dedicated_subcarriers: N_d per scenario.
        q_max: Tolerated interference per scenario.
        d_max_values: Maximum tx-rx distances compared.
    """

    num_cells: int = field(default=3, metadata=utils.get_metadata())
    num_subcarriers: int = field(default=24, metadata=utils.get_metadata())
    pairs_per_cell: int = field(default=4, metadata=utils.get_metadata())
    ues_per_cell: int = field(default=8, metadata=utils.get_metadata())
    ue_power_budget: float = field(default=1.0, metadata=utils.get_metadata("W"))
    dedicated_subcarriers: list[int] = field(
        default_factory=lambda: [4, 8, 12], metadata=utils.get_metadata()
    )
    q_max: list[float] = field(
        default_factory=lambda: [10.0 ** (db / 10.0) for db in (-132.0, -128.5, -125.0)],
        metadata=utils.get_metadata("W"),
    )
    d_max_values: list[float] = field(
        default_factory=lambda: [25.0, 50.0, 100.0], metadata=utils.get_metadata("m")
    )


@dataclass_json
@dataclass(kw_only=True)
class OutputParams:
    """
    Output location.

    Attributes:
        directory: Directory all result files are written to.
        traces: Write one convergence trace file per run.
    """

    directory: str = field(default="results", metadata=utils.get_metadata())
    traces: bool = field(default=True, metadata=utils.get_metadata())


# pylint: disable=too-many-instance-attributes
@dataclass_json
@dataclass(kw_only=True)
class ExperimentConfig:
    """
    Fully resolved experiment description.

    Attributes:
        mode: Experiment modes, run in the given order for every seed.
        seeds: Master seeds of the realizations.
        workers: Processes realizations are dispatched to.
        topology: Geometry parameters.
        channel: Propagation model.
        radio: Radio resources and constraints.
        algorithm: Algorithm parameters.
        sounding: Penalty estimation parameters.
        sweep: Budget and threshold grid.
        comparison: Dedicated vs reuse setting.
        output: Output location.
    """

    mode: list[ExperimentMode] = field(metadata=utils.get_metadata())
    seeds: list[int] = field(default_factory=lambda: [0], metadata=utils.get_metadata())
    workers: int = field(default=1, metadata=utils.get_metadata())
    topology: TopologyParams = field(
        default_factory=TopologyParams, metadata=utils.get_metadata()
    )
    channel: ChannelParams = field(
        default_factory=ChannelParams, metadata=utils.get_metadata()
    )
    radio: RadioParams = field(default_factory=RadioParams, metadata=utils.get_metadata())
    algorithm: AlgorithmParams = field(
        default_factory=AlgorithmParams, metadata=utils.get_metadata()
    )
    sounding: SoundingParams = field(
        default_factory=SoundingParams, metadata=utils.get_metadata()
    )
    sweep: SweepParams = field(default_factory=SweepParams, metadata=utils.get_metadata())
    comparison: ComparisonParams = field(
        default_factory=ComparisonParams, metadata=utils.get_metadata()
    )
    output: OutputParams = field(
        default_factory=OutputParams, metadata=utils.get_metadata()
    )

    def sweep_points(self) -> list[tuple[float, float]]:
        """
        (power budget, interference threshold) pairs to run

        Returns:
            list[tuple[float, float]]: Cartesian grid, budgets outermost
        """
        budgets = self.sweep.power_budgets or [self.radio.power_budget]
        thresholds = self.sweep.interference_thresholds or [
            self.radio.interference_threshold
        ]
        return [(budget, threshold) for budget in budgets for threshold in thresholds]


def _normalize(document: dict[str, Any]) -> dict[str, Any]:
    normalized = dict(document)
    if isinstance(normalized["mode"], str):
        normalized["mode"] = [normalized["mode"]]
    seeds = normalized.get("seeds")
    if isinstance(seeds, int):
        normalized["seeds"] = list(range(seeds))
    return normalized


def parse_config(path: str | Path) -> ExperimentConfig:
    """
    Read, validate and default an experiment configuration

    Args:
        path (str | Path): JSON configuration file

    Returns:
        ExperimentConfig: Configuration with every default applied

    Raises:
        ConfigurationError: If the file is missing, malformed or invalid; the
                            findings name the failure class and its location.
    """
    validator = ConfigValidator()
    if validator.validate(path) == Result.FAILURE:
        raise ConfigurationError(
            f"Invalid configuration file {path}", validator.details()
        )
    return ExperimentConfig.from_dict(_normalize(validator.document()))
