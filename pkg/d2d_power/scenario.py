"""Random multi-cell D2D topologies, channel gains and immutable problem instances"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
from dataclasses_json import dataclass_json

from d2d_power import utils
from d2d_power.errors import ConfigurationError, InputError, NumericalError
from d2d_power.types import MaskMode, RxPlacement

logger = logging.getLogger(__name__)

SQRT3: float = math.sqrt(3.0)
DEFAULT_MASK_CAP: float = 1.0e3
"""Cap used for a subcarrier whose tx-to-eNB gain is zero (W)"""


@dataclass_json
@dataclass(kw_only=True)
class TopologyParams:
    """
    Geometry of a realization.

    Attributes:
        num_cells: Number of hexagonal cells B.
        cell_radius: Center-to-vertex radius R of each cell.
        pairs_per_cell: D2D couples dropped in every cell.
        d_max: Maximum tx-rx distance of a couple.
        d_min: Lower clamp applied to every distance before computing path loss.
        rx_placement: How the receiver is placed around its transmitter.
        ues_per_cell: Cellular UEs dropped in every cell (mode comparison only).
    """

    num_cells: int = field(default=1, metadata=utils.get_metadata())
    cell_radius: float = field(default=500.0, metadata=utils.get_metadata("m"))
    pairs_per_cell: int = field(default=8, metadata=utils.get_metadata())
    d_max: float = field(default=100.0, metadata=utils.get_metadata("m"))
    d_min: float = field(default=1.0, metadata=utils.get_metadata("m"))
    rx_placement: RxPlacement = field(
        default=RxPlacement.DISC, metadata=utils.get_metadata()
    )
    ues_per_cell: int = field(default=0, metadata=utils.get_metadata())


@dataclass_json
@dataclass(kw_only=True)
class ChannelParams:
    """
    Propagation model: C * d^-exponent * 10^(X/10) * F.

    Attributes:
        path_loss_exponent: Path-loss exponent.
        path_loss_constant: Gain C at the 1 m reference distance.
        shadowing_std_db: Standard deviation of the log-normal shadowing X.
        shadowing: Draw shadowing; X = 0 dB otherwise.
        fading: Draw Rayleigh power fading F per subcarrier; F = 1 otherwise.
    """

    path_loss_exponent: float = field(default=4.0, metadata=utils.get_metadata())
    path_loss_constant: float = field(default=1.0, metadata=utils.get_metadata())
    shadowing_std_db: float = field(default=8.0, metadata=utils.get_metadata("dB"))
    shadowing: bool = field(default=True, metadata=utils.get_metadata())
    fading: bool = field(default=True, metadata=utils.get_metadata())


@dataclass_json
@dataclass(kw_only=True)
class RadioParams:
    """
    Radio resources and constraints.

    Attributes:
        num_subcarriers: Number of subcarriers N.
        noise_power: Noise-plus-cellular-interference power sigma2 per receiver
                     and subcarrier.
        power_budget: Total power budget P_k of every couple.
        mask_mode: How per-subcarrier caps are derived.
        mask_value: Cap used in constant mask mode.
        mask_cap: Cap used where the tx-to-eNB gain vanishes.
        interference_threshold: Tolerated interference Q at every eNB and subcarrier.
    """

    num_subcarriers: int = field(default=8, metadata=utils.get_metadata())
    noise_power: float = field(default=1.0e-13, metadata=utils.get_metadata("W"))
    power_budget: float = field(default=0.25, metadata=utils.get_metadata("W"))
    mask_mode: MaskMode = field(
        default=MaskMode.INTERFERENCE_DERIVED, metadata=utils.get_metadata()
    )
    mask_value: float = field(default=0.25, metadata=utils.get_metadata("W"))
    mask_cap: float = field(default=DEFAULT_MASK_CAP, metadata=utils.get_metadata("W"))
    interference_threshold: float = field(
        default=1.0e-13, metadata=utils.get_metadata("W")
    )


@dataclass(frozen=True, eq=False)
class Topology:
    """
    Node positions of one realization.

    Attributes:
        cell_radius: Center-to-vertex radius of the cells.
        enb_positions: B x 2 eNB coordinates.
        tx_positions: K x 2 D2D transmitter coordinates.
        rx_positions: K x 2 D2D receiver coordinates.
        serving: K-vector, index of the eNB nearest to each transmitter.
        ue_positions: U x 2 cellular UE coordinates, if any.
        ue_serving: U-vector, cell of each UE.
    """

    cell_radius: float
    enb_positions: np.ndarray
    tx_positions: np.ndarray
    rx_positions: np.ndarray
    serving: np.ndarray
    ue_positions: Optional[np.ndarray] = None
    ue_serving: Optional[np.ndarray] = None

    @property
    def num_cells(self) -> int:
        """Number of cells B"""
        return len(self.enb_positions)

    @property
    def num_couples(self) -> int:
        """Number of D2D couples K"""
        return len(self.tx_positions)

    @property
    def d2d_pairs(self) -> list[tuple[np.ndarray, np.ndarray, int]]:
        """(tx position, rx position, serving cell) per couple"""
        return [
            (tx, rx, int(b))
            for tx, rx, b in zip(self.tx_positions, self.rx_positions, self.serving)
        ]


@dataclass(frozen=True, eq=False)
class ChannelGains:
    """
    Power gains of one realization.

    Attributes:
        d2d: K x K x N, d2d[j, k, n] is the gain from tx j to rx k on subcarrier n.
        enb: K x B x N, gain from tx k to eNB b.
        ue_enb: U x N, gain from each UE to its serving eNB.
        ue_d2d: U x K x N, gain from each UE to every D2D receiver.
    """

    d2d: np.ndarray
    enb: np.ndarray
    ue_enb: Optional[np.ndarray] = None
    ue_d2d: Optional[np.ndarray] = None


class ScenarioBuilder:
    """Builder class for creating problem instances by hand"""

    def __init__(self) -> None:
        self.__reset()

    def __reset(self) -> None:
        self.__gains: Optional[np.ndarray] = None
        self.__enb_gains: Optional[np.ndarray] = None
        self.__noise: float | np.ndarray = 1.0
        self.__budget: float | np.ndarray = 1.0
        self.__masks: Optional[float | np.ndarray] = None
        self.__thresholds: Optional[float | np.ndarray] = None
        self.__serving: Optional[np.ndarray] = None
        self.__topology: Optional[Topology] = None

    def gains(self, gains: np.ndarray) -> "ScenarioBuilder":
        """
        Set D2D gain tensor

        Args:
            gains (np.ndarray): K x K x N gains, tx j to rx k on subcarrier n

        Returns:
            ScenarioBuilder: Builder object
        """
        self.__gains = np.asarray(gains, dtype=float)
        return self

    def enb_gains(self, enb_gains: np.ndarray) -> "ScenarioBuilder":
        """
        Set tx-to-eNB gain tensor

        Args:
            enb_gains (np.ndarray): K x B x N gains

        Returns:
            ScenarioBuilder: Builder object
        """
        self.__enb_gains = np.asarray(enb_gains, dtype=float)
        return self

    def noise(self, noise: float | np.ndarray) -> "ScenarioBuilder":
        """
        Set noise-plus-cellular-interference power

        Args:
            noise (float | np.ndarray): Scalar or K x N powers (W)

        Returns:
            ScenarioBuilder: Builder object
        """
        self.__noise = noise
        return self

    def budget(self, budget: float | np.ndarray) -> "ScenarioBuilder":
        """
        Set total power budgets

        Args:
            budget (float | np.ndarray): Scalar or K-vector (W)

        Returns:
            ScenarioBuilder: Builder object
        """
        self.__budget = budget
        return self

    def masks(self, masks: float | np.ndarray) -> "ScenarioBuilder":
        """
        Set per-subcarrier power caps. Defaults to the user's budget.

        Args:
            masks (float | np.ndarray): Scalar or K x N caps (W)

        Returns:
            ScenarioBuilder: Builder object
        """
        self.__masks = masks
        return self

    def thresholds(self, thresholds: float | np.ndarray) -> "ScenarioBuilder":
        """
        Set tolerated interference per eNB and subcarrier. Defaults to +inf.

        Args:
            thresholds (float | np.ndarray): Scalar or B x N thresholds (W)

        Returns:
            ScenarioBuilder: Builder object
        """
        self.__thresholds = thresholds
        return self

    def serving(self, serving: np.ndarray) -> "ScenarioBuilder":
        """
        Set serving eNB index per couple. Defaults to eNB 0.

        Args:
            serving (np.ndarray): K-vector of cell indices

        Returns:
            ScenarioBuilder: Builder object
        """
        self.__serving = np.asarray(serving, dtype=int)
        return self

    def topology(self, topology: Topology) -> "ScenarioBuilder":
        """
        Attach the geometry the gains were drawn from

        Args:
            topology (Topology): Node positions

        Returns:
            ScenarioBuilder: Builder object
        """
        self.__topology = topology
        return self

    def create(self) -> "Scenario":
        """
        Create final scenario object.

        Returns:
            Scenario: Validated, read-only problem instance

        Raises:
            InputError: If no gains were set or the data is inconsistent.
        """
        if self.__gains is None:
            raise InputError("No D2D gains provided.")
        num_couples, _, num_subcarriers = self.__gains.shape
        enb_gains = self.__enb_gains
        if enb_gains is None:
            enb_gains = np.zeros((num_couples, 1, num_subcarriers))
        num_cells = enb_gains.shape[1]
        budgets = np.broadcast_to(
            np.asarray(self.__budget, dtype=float), (num_couples,)
        ).copy()
        masks = self.__masks
        if masks is None:
            masks = np.repeat(budgets[:, None], num_subcarriers, axis=1)
        thresholds = np.inf if self.__thresholds is None else self.__thresholds
        serving = self.__serving
        if serving is None:
            serving = np.zeros(num_couples, dtype=int)

        return Scenario(
            gains=self.__gains,
            enb_gains=enb_gains,
            noise=np.broadcast_to(
                np.asarray(self.__noise, dtype=float), (num_couples, num_subcarriers)
            ).copy(),
            budgets=budgets,
            masks=np.broadcast_to(
                np.asarray(masks, dtype=float), (num_couples, num_subcarriers)
            ).copy(),
            thresholds=np.broadcast_to(
                np.asarray(thresholds, dtype=float), (num_cells, num_subcarriers)
            ).copy(),
            serving=serving,
            topology=self.__topology,
        )


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True, eq=False)
class Scenario:
    """
    Immutable problem instance. All arrays are read-only after construction.

    Attributes:
        gains: K x K x N tensor G, gains[j, k, n] from tx of couple j to rx of couple k.
        enb_gains: K x B x N tensor A, gain from tx of couple k to eNB b.
        noise: K x N noise-plus-cellular-interference power sigma2 (W).
        budgets: K-vector of total power budgets (W).
        masks: K x N per-subcarrier power caps (W).
        thresholds: B x N tolerated interference Q (W).
        serving: K-vector, serving eNB of each couple.
        topology: Geometry the gains were drawn from, if any.
    """

    gains: np.ndarray
    enb_gains: np.ndarray
    noise: np.ndarray
    budgets: np.ndarray
    masks: np.ndarray
    thresholds: np.ndarray
    serving: np.ndarray
    topology: Optional[Topology] = None

    def __post_init__(self) -> None:
        for name in (
            "gains",
            "enb_gains",
            "noise",
            "budgets",
            "masks",
            "thresholds",
            "serving",
        ):
            array = np.array(getattr(self, name))
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        self.__validate()

    def __validate(self) -> None:
        if self.gains.ndim != 3 or self.gains.shape[0] != self.gains.shape[1]:
            raise InputError(f"D2D gains must be K x K x N, got {self.gains.shape}")
        shape_kn = (self.num_couples, self.num_subcarriers)
        expected = {
            "enb_gains": (self.num_couples, self.num_cells, self.num_subcarriers),
            "noise": shape_kn,
            "budgets": (self.num_couples,),
            "masks": shape_kn,
            "thresholds": (self.num_cells, self.num_subcarriers),
            "serving": (self.num_couples,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise InputError(
                    f"{name} must have shape {shape}, got {getattr(self, name).shape}"
                )
        for name in ("gains", "enb_gains", "noise", "budgets"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InputError(f"{name} contains non-finite values")
        if np.any(self.gains < 0) or np.any(self.enb_gains < 0):
            raise InputError("Channel gains must be non-negative")
        if np.any(self.direct_gains <= 0):
            raise InputError("Direct gains G[k][k][n] must be strictly positive")
        if np.any(self.noise <= 0):
            raise InputError("Noise power must be strictly positive")
        if np.any(self.budgets <= 0):
            raise InputError("Power budgets must be strictly positive")
        if np.any(self.masks < 0) or np.any(np.isnan(self.masks)):
            raise InputError("Power masks must be non-negative")
        if np.any(self.thresholds < 0) or np.any(np.isnan(self.thresholds)):
            raise InputError("Interference thresholds must be non-negative")
        if np.any(self.serving < 0) or np.any(self.serving >= self.num_cells):
            raise InputError("Serving cell index out of range")

    @staticmethod
    def new() -> ScenarioBuilder:
        """
        Create a new scenario

        Returns:
             ScenarioBuilder: A builder object which allows to set up a scenario
                              step by step.
        """
        return ScenarioBuilder()

    @property
    def num_couples(self) -> int:
        """Number of D2D couples K"""
        return self.gains.shape[0]

    @property
    def num_subcarriers(self) -> int:
        """Number of subcarriers N"""
        return self.gains.shape[2]

    @property
    def num_cells(self) -> int:
        """Number of eNBs B"""
        return self.enb_gains.shape[1]

    @cached_property
    def direct_gains(self) -> np.ndarray:
        """K x N direct gains G[k][k][n]"""
        direct = np.array(np.einsum("kkn->kn", self.gains))
        direct.setflags(write=False)
        return direct

    @cached_property
    def cross_gains(self) -> np.ndarray:
        """D2D gains with the direct links zeroed"""
        cross = np.array(self.gains)
        cross[np.arange(self.num_couples), np.arange(self.num_couples), :] = 0.0
        cross.setflags(write=False)
        return cross

    def with_masks(self, masks: np.ndarray) -> "Scenario":
        """
        Copy of the scenario with other power caps

        Args:
            masks (np.ndarray): K x N caps (W)

        Returns:
            Scenario: New instance
        """
        return replace(self, masks=np.asarray(masks, dtype=float))

    def with_thresholds(self, thresholds: float | np.ndarray) -> "Scenario":
        """
        Copy of the scenario with other interference thresholds

        Args:
            thresholds (float | np.ndarray): Scalar or B x N thresholds (W)

        Returns:
            Scenario: New instance
        """
        return replace(
            self,
            thresholds=np.broadcast_to(
                np.asarray(thresholds, dtype=float),
                (self.num_cells, self.num_subcarriers),
            ).copy(),
        )

    def with_budgets(self, budgets: float | np.ndarray) -> "Scenario":
        """
        Copy of the scenario with other power budgets

        Args:
            budgets (float | np.ndarray): Scalar or K-vector (W)

        Returns:
            Scenario: New instance
        """
        return replace(
            self,
            budgets=np.broadcast_to(
                np.asarray(budgets, dtype=float), (self.num_couples,)
            ).copy(),
        )

    def restrict_subcarriers(self, subcarriers: np.ndarray) -> "Scenario":
        """
        Copy of the scenario that only keeps the given subcarriers

        Args:
            subcarriers (np.ndarray): Indices of the kept subcarriers

        Returns:
            Scenario: New instance with N = len(subcarriers)
        """
        index = np.asarray(subcarriers, dtype=int)
        return replace(
            self,
            gains=self.gains[:, :, index],
            enb_gains=self.enb_gains[:, :, index],
            noise=self.noise[:, index],
            masks=self.masks[:, index],
            thresholds=self.thresholds[:, index],
        )


def hex_centers(num_cells: int, radius: float) -> np.ndarray:
    """
    eNB positions on a hexagonal lattice, central cell first, then ring by ring.

    Cells are flat-topped with center-to-vertex radius `radius`; adjacent centers
    are sqrt(3) * radius apart. The first three cells are mutually adjacent and the
    first seven are the central cell plus its first ring.

    Args:
        num_cells (int): Number of cells B
        radius (float): Cell radius R

    Returns:
        np.ndarray: B x 2 coordinates
    """
    step = SQRT3 * radius
    angles = np.deg2rad(30.0 + 60.0 * np.arange(6))
    directions = step * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    centers: list[np.ndarray] = [np.zeros(2)]
    ring = 1
    while len(centers) < num_cells:
        position = ring * directions[4]
        for side in range(6):
            for _ in range(ring):
                centers.append(position.copy())
                position = position + directions[side]
        ring += 1
    return np.array(centers[:num_cells])


def in_hexagon(points: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """
    Membership test for a flat-topped hexagon

    Args:
        points (np.ndarray): M x 2 coordinates
        center (np.ndarray): Hexagon center
        radius (float): Center-to-vertex radius

    Returns:
        np.ndarray: M boolean flags
    """
    offset = np.abs(np.atleast_2d(points) - center)
    return (offset[:, 1] <= SQRT3 / 2 * radius) & (
        SQRT3 * offset[:, 0] + offset[:, 1] <= SQRT3 * radius
    )


def in_cells(points: np.ndarray, centers: np.ndarray, radius: float) -> np.ndarray:
    """
    Membership test for the union of cells

    Args:
        points (np.ndarray): M x 2 coordinates
        centers (np.ndarray): B x 2 cell centers
        radius (float): Cell radius

    Returns:
        np.ndarray: M boolean flags
    """
    inside = np.zeros(len(np.atleast_2d(points)), dtype=bool)
    for center in centers:
        inside |= in_hexagon(points, center, radius)
    return inside


def _sample_in_hexagon(
    count: int, center: np.ndarray, radius: float, rng: np.random.Generator
) -> np.ndarray:
    samples = np.empty((0, 2))
    half_height = SQRT3 / 2 * radius
    while len(samples) < count:
        candidates = rng.uniform(
            (-radius, -half_height), (radius, half_height), size=(2 * count, 2)
        )
        candidates = candidates[in_hexagon(candidates, np.zeros(2), radius)]
        samples = np.vstack([samples, candidates])
    return samples[:count] + center


def _sample_receiver(
    tx: np.ndarray,
    params: TopologyParams,
    centers: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    while True:
        if params.rx_placement == RxPlacement.DISC:
            distance = params.d_max * math.sqrt(rng.uniform())
        else:
            distance = params.d_max * rng.uniform()
        angle = rng.uniform(0.0, 2.0 * math.pi)
        rx = tx + distance * np.array([math.cos(angle), math.sin(angle)])
        if in_cells(rx, centers, params.cell_radius)[0]:
            return rx


def generate_topology(params: TopologyParams, rng: np.random.Generator) -> Topology:
    """
    Drop D2D couples (and optionally UEs) uniformly in a hexagonal multi-cell area

    Args:
        params (TopologyParams): Geometry parameters
        rng (np.random.Generator): Seeded generator

    Returns:
        Topology: pairs_per_cell * B couples; rx within d_max of its tx

    Raises:
        ConfigurationError: If a geometry parameter is out of range.
    """
    if params.cell_radius <= 0:
        raise ConfigurationError(
            f"Cell radius must be positive, got {params.cell_radius}"
        )
    if params.num_cells < 1 or params.pairs_per_cell < 1:
        raise ConfigurationError("At least one cell with one D2D couple is required")
    if params.d_max < 0 or params.d_min <= 0:
        raise ConfigurationError("d_max must be non-negative and d_min positive")
    if params.ues_per_cell < 0:
        raise ConfigurationError("ues_per_cell must be non-negative")

    centers = hex_centers(params.num_cells, params.cell_radius)
    tx_positions, rx_positions = [], []
    ue_positions, ue_serving = [], []
    for cell, center in enumerate(centers):
        for tx in _sample_in_hexagon(
            params.pairs_per_cell, center, params.cell_radius, rng
        ):
            tx_positions.append(tx)
            rx_positions.append(_sample_receiver(tx, params, centers, rng))
        if params.ues_per_cell:
            ue_positions.extend(
                _sample_in_hexagon(params.ues_per_cell, center, params.cell_radius, rng)
            )
            ue_serving.extend([cell] * params.ues_per_cell)

    tx_array = np.array(tx_positions)
    serving = np.argmin(
        np.linalg.norm(tx_array[:, None, :] - centers[None, :, :], axis=2), axis=1
    )
    return Topology(
        cell_radius=params.cell_radius,
        enb_positions=centers,
        tx_positions=tx_array,
        rx_positions=np.array(rx_positions),
        serving=serving,
        ue_positions=np.array(ue_positions) if ue_positions else None,
        ue_serving=np.array(ue_serving, dtype=int) if ue_serving else None,
    )


def _link_gains(
    distances: np.ndarray,
    num_subcarriers: int,
    channel: ChannelParams,
    rng: np.random.Generator,
) -> np.ndarray:
    if np.any(distances <= 0):
        raise NumericalError(
            "Zero link distance after clamping", {"min_distance": distances.min()}
        )
    path_gain = channel.path_loss_constant * distances ** (-channel.path_loss_exponent)
    shadowing_db = np.zeros(distances.shape)
    if channel.shadowing:
        shadowing_db = rng.normal(0.0, channel.shadowing_std_db, size=distances.shape)
    fading = np.ones(distances.shape + (num_subcarriers,))
    if channel.fading:
        fading = rng.exponential(1.0, size=distances.shape + (num_subcarriers,))
    return (path_gain * 10.0 ** (shadowing_db / 10.0))[..., None] * fading


def _distances(
    sources: np.ndarray, destinations: np.ndarray, d_min: float
) -> np.ndarray:
    distances = np.linalg.norm(sources[:, None, :] - destinations[None, :, :], axis=2)
    return np.maximum(distances, d_min)


def sample_gains(
    topology: Topology,
    channel: ChannelParams,
    num_subcarriers: int,
    rng: np.random.Generator,
    d_min: float = 1.0,
) -> ChannelGains:
    """
    Draw path loss, per-link shadowing and per-subcarrier Rayleigh fading

    Args:
        topology (Topology): Node positions
        channel (ChannelParams): Propagation model
        num_subcarriers (int): Number of subcarriers N
        rng (np.random.Generator): Seeded generator
        d_min (float): Lower clamp on every distance

    Returns:
        ChannelGains: Non-negative gain tensors
    """
    d2d = _link_gains(
        _distances(topology.tx_positions, topology.rx_positions, d_min),
        num_subcarriers,
        channel,
        rng,
    )
    enb = _link_gains(
        _distances(topology.tx_positions, topology.enb_positions, d_min),
        num_subcarriers,
        channel,
        rng,
    )
    ue_enb = ue_d2d = None
    if topology.ue_positions is not None:
        ue_to_enb = _link_gains(
            _distances(topology.ue_positions, topology.enb_positions, d_min),
            num_subcarriers,
            channel,
            rng,
        )
        ue_enb = ue_to_enb[np.arange(len(topology.ue_positions)), topology.ue_serving]
        ue_d2d = _link_gains(
            _distances(topology.ue_positions, topology.rx_positions, d_min),
            num_subcarriers,
            channel,
            rng,
        )
    return ChannelGains(d2d=d2d, enb=enb, ue_enb=ue_enb, ue_d2d=ue_d2d)


def derive_masks(
    scenario: Scenario,
    mode: MaskMode,
    value: float = 0.25,
    cap: float = DEFAULT_MASK_CAP,
) -> np.ndarray:
    """
    Per-subcarrier power caps

    In interference-derived mode the cap is Q[b(k)][n] / A[k][b(k)][n], so that a
    single couple alone never exceeds the tolerated interference at its serving eNB.

    Args:
        scenario (Scenario): Instance providing eNB gains, thresholds and serving cells
        mode (MaskMode): Derivation rule
        value (float): Cap in constant mode (W)
        cap (float): Cap where the serving gain vanishes (W)

    Returns:
        np.ndarray: K x N caps (W)
    """
    num_couples, num_subcarriers = scenario.num_couples, scenario.num_subcarriers
    if mode == MaskMode.CONSTANT:
        return np.full((num_couples, num_subcarriers), float(value))

    serving_gain = scenario.enb_gains[np.arange(num_couples), scenario.serving]
    serving_threshold = scenario.thresholds[scenario.serving]
    masks = np.full((num_couples, num_subcarriers), float(cap))
    positive = serving_gain > 0
    masks[positive] = serving_threshold[positive] / serving_gain[positive]
    if not np.all(positive):
        logger.warning(
            "Zero tx-to-eNB gain on %d (couple, subcarrier) entries; mask set to %g W",
            int(np.count_nonzero(~positive)),
            cap,
        )
    return np.minimum(masks, cap)


def build_scenario(
    topology: Topology,
    gains: ChannelGains,
    radio: RadioParams,
    extra_noise: Optional[np.ndarray] = None,
) -> Scenario:
    """
    Assemble a problem instance from geometry, gains and radio parameters

    Args:
        topology (Topology): Node positions
        gains (ChannelGains): Drawn gains
        radio (RadioParams): Budgets, noise, masks and thresholds
        extra_noise (Optional[np.ndarray]): K x N cellular interference added to
                                            the noise floor

    Returns:
        Scenario: Immutable instance
    """
    noise = np.full((topology.num_couples, radio.num_subcarriers), radio.noise_power)
    if extra_noise is not None:
        noise = noise + extra_noise
    scenario = (
        Scenario.new()
        .gains(gains.d2d)
        .enb_gains(gains.enb)
        .noise(noise)
        .budget(radio.power_budget)
        .thresholds(radio.interference_threshold)
        .serving(topology.serving)
        .topology(topology)
        .create()
    )
    return scenario.with_masks(
        derive_masks(scenario, radio.mask_mode, radio.mask_value, radio.mask_cap)
    )


def generate_scenario(
    seed: int,
    topology_params: TopologyParams,
    channel_params: ChannelParams,
    radio_params: RadioParams,
) -> Scenario:
    """
    Draw a complete realization from a single seed

    Args:
        seed (int): Master seed of the realization
        topology_params (TopologyParams): Geometry parameters
        channel_params (ChannelParams): Propagation model
        radio_params (RadioParams): Radio parameters

    Returns:
        Scenario: Same seed and parameters always give a bit-identical instance
    """
    streams = utils.realization_streams(seed, "topology", "channel")
    topology = generate_topology(topology_params, streams["topology"])
    gains = sample_gains(
        topology,
        channel_params,
        radio_params.num_subcarriers,
        streams["channel"],
        topology_params.d_min,
    )
    return build_scenario(topology, gains, radio_params)


_TENSORS: tuple[str, ...] = (
    "gains",
    "enb_gains",
    "noise",
    "budgets",
    "masks",
    "thresholds",
    "serving",
)


def dump_scenario(scenario: Scenario, path: str | Path) -> None:
    """
    Write a scenario as plain text.

    The first line holds `K N B`; every following line holds one tensor as its
    name followed by its values in row-major order, printed with 17 significant
    digits so that loading reproduces the instance bit for bit.

    Args:
        scenario (Scenario): Instance to write
        path (str | Path): Destination file
    """
    lines = [
        f"{scenario.num_couples} {scenario.num_subcarriers} {scenario.num_cells}"
    ]
    for name in _TENSORS:
        values = np.asarray(getattr(scenario, name)).ravel()
        lines.append(" ".join([name] + [format(v, ".17g") for v in values]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_scenario(path: str | Path) -> Scenario:
    """
    Read a scenario written by `dump_scenario`

    Args:
        path (str | Path): Source file

    Returns:
        Scenario: Instance without topology metadata

    Raises:
        InputError: If the file does not follow the format.
    """
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    try:
        num_couples, num_subcarriers, num_cells = (int(v) for v in lines[0].split())
    except ValueError as ex:
        raise InputError(f"Malformed scenario header: {lines[0]!r}") from ex
    shapes = {
        "gains": (num_couples, num_couples, num_subcarriers),
        "enb_gains": (num_couples, num_cells, num_subcarriers),
        "noise": (num_couples, num_subcarriers),
        "budgets": (num_couples,),
        "masks": (num_couples, num_subcarriers),
        "thresholds": (num_cells, num_subcarriers),
        "serving": (num_couples,),
    }
    tensors: dict[str, np.ndarray] = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        name, *values = line.split()
        if name not in shapes:
            raise InputError(f"Unknown tensor {name!r} in scenario file")
        try:
            tensors[name] = np.array([float(v) for v in values]).reshape(shapes[name])
        except ValueError as ex:
            raise InputError(f"Tensor {name!r} has the wrong size or values") from ex
    missing = set(shapes) - set(tensors)
    if missing:
        raise InputError(f"Scenario file misses tensors: {sorted(missing)}")
    tensors["serving"] = tensors["serving"].astype(int)
    return Scenario(**tensors)
