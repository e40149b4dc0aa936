from __future__ import annotations

from typing import Optional

import numpy as np

from ._errors import ContractViolation

__all__ = ["readonly_array", "as_float_array"]


def as_float_array(values: object, name: str, ndim: Optional[int] = None) -> np.ndarray:
    """
    Convert to a finite float array, raising a contract violation otherwise.
    """
    try:
        array = np.array(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise ContractViolation(f"{name} is not numeric: {e}") from e
    if ndim is not None and array.ndim != ndim:
        raise ContractViolation(
            f"Expected {name} with {ndim} dimensions, got shape {array.shape}"
        )
    if not np.all(np.isfinite(array)):
        raise ContractViolation(f"{name} must be finite")
    return array


def readonly_array(values: object, name: str, ndim: Optional[int] = None) -> np.ndarray:
    array = as_float_array(values, name, ndim)
    array.setflags(write=False)
    return array
