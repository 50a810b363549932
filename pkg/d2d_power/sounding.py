"""
Measurement-based estimation of the penalty coefficients.

Every D2D receiver broadcasts a sounding signal of power delta * p0 and every eNB
one of power nu * p0 on each subcarrier. Under channel reciprocity a transmitter
hears receiver l through G[k, l] and eNB b through A[k, b], so the two aggregate
powers it measures, once its own receiver is removed and the result is divided by
p0, give -alpha'. The two broadcast classes are assumed to use distinct sounding
resources and are measured separately.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from d2d_power import rate_model
from d2d_power.errors import InputError
from d2d_power.game_engine import PenaltyProvider
from d2d_power.scenario import Scenario

DEFAULT_REFERENCE_POWER: float = 1e-3
"""Reference sounding power p0 (W)"""


@dataclass(frozen=True, eq=False)
class SoundingFrame:
    """
    Sounding powers broadcast in one estimation slot.

    Attributes:
        p0: Reference power factor (W).
        rx_broadcast: K x N powers delta * p0 sent by the D2D receivers (W).
        enb_broadcast: B x N powers nu * p0 sent by the eNBs (W).
    """

    p0: float
    rx_broadcast: np.ndarray
    enb_broadcast: np.ndarray


def build_frame(
    p: np.ndarray,
    nu: Optional[np.ndarray],
    scenario: Scenario,
    p0: float = DEFAULT_REFERENCE_POWER,
) -> SoundingFrame:
    """
    Sounding powers for the joint state (p, nu)

    Args:
        p (np.ndarray): K x N powers
        nu (Optional[np.ndarray]): B x N non-negative multipliers, None for zero
        scenario (Scenario): Problem instance
        p0 (float): Reference power factor (W)

    Returns:
        SoundingFrame: Non-negative broadcast powers

    Raises:
        InputError: If p0 is not positive or nu has negative entries.
    """
    if not p0 > 0:
        raise InputError(f"Reference sounding power must be positive, got {p0}")
    multipliers = (
        np.zeros((scenario.num_cells, scenario.num_subcarriers))
        if nu is None
        else np.asarray(nu, dtype=float)
    )
    if np.any(multipliers < 0):
        raise InputError("Multipliers must be non-negative")
    return SoundingFrame(
        p0=p0,
        rx_broadcast=rate_model.delta_matrix(p, scenario) * p0,
        enb_broadcast=multipliers * p0,
    )


def measure_and_estimate(
    k: int,
    frame: SoundingFrame,
    scenario: Scenario,
    noise_std: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Estimate alpha'_k from the powers transmitter k measures

    Args:
        k (int): Couple index
        frame (SoundingFrame): Broadcast powers of the current joint state
        scenario (Scenario): Problem instance
        noise_std (float): Relative standard deviation of Gaussian measurement
                           noise on each aggregate; 0 for exact measurements
        rng (Optional[np.random.Generator]): Generator for the measurement noise

    Returns:
        np.ndarray: N-vector estimate of alpha_k - sum_b nu A[k, b]
    """
    # own receiver excluded
    from_receivers = np.einsum("ln,ln->n", scenario.cross_gains[k], frame.rx_broadcast)
    from_enbs = np.einsum("bn,bn->n", scenario.enb_gains[k], frame.enb_broadcast)
    if noise_std > 0:
        generator = rng if rng is not None else np.random.default_rng()
        from_receivers = from_receivers * (
            1.0 + noise_std * generator.standard_normal(from_receivers.shape)
        )
        from_enbs = from_enbs * (
            1.0 + noise_std * generator.standard_normal(from_enbs.shape)
        )
    return -(from_receivers + from_enbs) / frame.p0


def sounding_penalty(
    scenario: Scenario,
    nu: Optional[np.ndarray] = None,
    p0: float = DEFAULT_REFERENCE_POWER,
    noise_std: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> PenaltyProvider:
    """
    Penalty source for the dynamics that re-sounds at every update

    Args:
        scenario (Scenario): Problem instance
        nu (Optional[np.ndarray]): B x N multipliers broadcast by the eNBs
        p0 (float): Reference power factor (W)
        noise_std (float): Relative measurement noise
        rng (Optional[np.random.Generator]): Generator for the measurement noise

    Returns:
        PenaltyProvider: (k, p) -> estimated alpha'_k
    """

    def provider(k: int, p: np.ndarray) -> np.ndarray:
        frame = build_frame(p, nu, scenario, p0)
        return measure_and_estimate(k, frame, scenario, noise_std, rng)

    return provider
