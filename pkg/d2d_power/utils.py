"""
Utility functions for library
"""

from dataclasses import Field
from typing import Any

import numpy as np
from dataclasses_json import config

UNIT_KEY: str = "unit"


def is_none(item: Any) -> bool:
    """
    Check whether a given item is initialized or None

    Args:
        item (Any): Item to be checked

    Returns:
        bool: true if item is None
    """
    return item is None


def get_metadata(unit: str = "", field_name: str | None = None) -> dict[str, Any]:
    """
    Get default metadata information for dataclass field

    Args:
        unit (str): Physical unit of the field the result will be applied to.
                    Empty for dimensionless quantities and labels.
        field_name (str | None): Optional name override used when serializing.

    Returns:
        dict[str, Any]: Metadata information
    """
    return config(exclude=is_none, field_name=field_name) | {UNIT_KEY: unit}


def column_header(item: Field) -> str:
    """
    Build a table header for a dataclass field, including its unit if any

    Args:
        item (Field): Dataclass field created with `get_metadata`

    Returns:
        str: Header such as `sum_rate[bit/s/Hz]`
    """
    unit: str = item.metadata.get(UNIT_KEY, "")
    return f"{item.name}[{unit}]" if unit else item.name


def realization_streams(seed: int, *names: str) -> dict[str, np.random.Generator]:
    """
    Split the master seed of one realization into named, independent generators.

    The children are spawned from `numpy.random.SeedSequence(seed)` in the order
    of `names`, so the same seed and the same names always give the same streams,
    independent of how many realizations run or in which process.

    Args:
        seed (int): Master seed of the realization
        names (str): Names of the required streams

    Returns:
        dict[str, np.random.Generator]: One PCG64 generator per name
    """
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {
        name: np.random.default_rng(child) for name, child in zip(names, children)
    }


def relative_error(actual: Any, expected: Any) -> float:
    """
    Largest elementwise relative deviation, with absolute fallback near zero

    Args:
        actual (Any): Computed values
        expected (Any): Reference values

    Returns:
        float: max |a - e| / max(|e|, tiny)
    """
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    scale = np.maximum(np.abs(expected), np.finfo(float).tiny)
    if actual.size == 0:
        return 0.0
    return float(np.max(np.abs(actual - expected) / scale))
