"""Implementations for all general enums shared across the library"""

from enum import Enum


class ExperimentMode(str, Enum):
    """
    Enumerates the experiment modes a campaign can run.

    Attributes:
        OVERLAY_IADRMP: Iterative linearized better-response dynamics, dedicated spectrum.
        OVERLAY_IWF: Iterative waterfilling baseline, dedicated spectrum.
        OVERLAY_MULTISTART: Best of several scheduling orders and initial profiles.
        UNDERLAY_IADRMPIC: Interference-constrained heuristic with subgradient
                           multiplier updates.
        UNDERLAY_UB: Lagrangian dual upper bound computed with the ellipsoid method.
        MODE_COMPARISON: Dedicated vs reuse spectral efficiency over D_max.
    """

    OVERLAY_IADRMP = "overlay-iadrmp"
    OVERLAY_IWF = "overlay-iwf"
    OVERLAY_MULTISTART = "overlay-multistart"
    UNDERLAY_IADRMPIC = "underlay-iadrmpic"
    UNDERLAY_UB = "underlay-ub"
    MODE_COMPARISON = "mode-comparison"


class MaskMode(str, Enum):
    """
    Enumerates the ways per-subcarrier power caps are populated.

    Attributes:
        INTERFERENCE_DERIVED: Cap equals the tolerated interference at the serving
                              eNB divided by the tx-to-eNB gain.
        CONSTANT: Same configured cap on every user and subcarrier.
    """

    INTERFERENCE_DERIVED = "interference-derived"
    CONSTANT = "constant"


class RxPlacement(str, Enum):
    """
    Enumerates how a D2D receiver is placed around its transmitter.

    Attributes:
        DISC: Uniform in the disc of radius D_max around the transmitter.
        UNIFORM_DISTANCE: Distance uniform in [0, D_max], angle uniform.
    """

    DISC = "disc"
    UNIFORM_DISTANCE = "uniform-distance"


class RunStatus(str, Enum):
    """
    Enumerates the outcome of a single campaign run.

    Attributes:
        OK: Run finished and converged.
        NOT_CONVERGED: Run finished at its iteration cap.
        FAILED: Run raised; the error is recorded next to the row.
    """

    OK = "ok"
    NOT_CONVERGED = "not-converged"
    FAILED = "failed"
