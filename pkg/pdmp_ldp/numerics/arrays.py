from __future__ import annotations

from typing import Any

import numpy as np


def as_columns(values: Any, rows: int) -> np.ndarray:
    """
    `values` as a float array of shape (rows, k). Zero-width blocks (a model
    with no slow variables) come back as (rows, 0) rather than failing the
    reshape.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return np.zeros((rows, 0))
    return arr.reshape(rows, -1)
