from __future__ import annotations

from dataclasses import MISSING, Field, fields
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    import rich

# Arrays with more entries than this are shown as a summary
SUMMARY_SIZE = 8


class DataclassHideDefault:
    """
    Inherit from this class when creating a dataclass to not show any fields
    in the repr which are set to their default, with Rich. Large numpy arrays
    are shown by shape and range instead of entry by entry.

    Also, any fields with `positional` metadata set to `True` will
    be shown as positional args.

    Refer to Rich reference for protocol:

    https://rich.readthedocs.io/en/stable/pretty.html
    """

    def __rich_repr__(self) -> rich.repr.Result:
        for f in fields(self):
            if not f.repr or field_is_default(f, self):
                continue
            name = f.name
            value = summarize(getattr(self, name))
            positional = f.metadata.get("positional", False)
            yield None if positional else name, value


class ArraySummary:
    def __init__(self, array: np.ndarray):
        self.shape = array.shape
        self.min = float(array.min()) if array.size else None
        self.max = float(array.max()) if array.size else None

    def __repr__(self) -> str:
        return f"array(shape={self.shape}, min={self.min!r}, max={self.max!r})"


def summarize(value: object) -> object:
    if isinstance(value, np.ndarray):
        if value.size > SUMMARY_SIZE:
            return ArraySummary(value)
        return value.tolist()
    if isinstance(value, tuple) and any(isinstance(v, np.ndarray) for v in value):
        return tuple(summarize(v) for v in value)
    return value


def field_is_default(f: Field, value: object) -> bool:
    if f.default_factory != MISSING:  # type: ignore
        default = f.default_factory()  # type: ignore
    elif f.default != MISSING:
        default = f.default
    else:
        return False
    current = getattr(value, f.name)
    if isinstance(current, np.ndarray) or isinstance(default, np.ndarray):
        return (
            isinstance(current, np.ndarray)
            and isinstance(default, np.ndarray)
            and np.array_equal(current, default)
        )
    return current == default
