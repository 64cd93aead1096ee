from __future__ import annotations

from typing import Dict, Optional

import numpy as np
import pandas as pd

from pdmp_ldp.numerics.arrays import as_columns

# Fixed so reruns are byte-identical and every double round-trips.
FLOAT_FORMAT = "%.17g"


def dataframe_to_csv_bytes(df: pd.DataFrame) -> bytes:
    return df.to_csv(index=False, float_format=FLOAT_FORMAT).encode("utf-8")


def trajectory_frame(
    t: np.ndarray,
    x: np.ndarray,
    u: np.ndarray,
    z: Optional[np.ndarray] = None,
    extra: Optional[Dict[str, np.ndarray]] = None,
) -> pd.DataFrame:
    """
    Wide trajectory table: t, x_1..x_d, u_1..u_m, then z_1..z_M and any
    extra named blocks (each a 1-D or 2-D array aligned with t).
    """
    data: Dict[str, np.ndarray] = {"t": np.asarray(t, dtype=float)}
    for prefix, block in (("x", x), ("u", u), ("z", z)):
        if block is None:
            continue
        block = as_columns(block, len(t))
        for j in range(block.shape[1]):
            data[f"{prefix}_{j + 1}"] = block[:, j]
    for prefix, block in (extra or {}).items():
        block = as_columns(block, len(t))
        for j in range(block.shape[1]):
            data[f"{prefix}_{j + 1}"] = block[:, j]
    return pd.DataFrame(data)


def frame_block(df: pd.DataFrame, prefix: str) -> np.ndarray:
    """Columns prefix_1..prefix_k of a trajectory table as an (n, k) array."""
    cols = []
    k = 1
    while f"{prefix}_{k}" in df.columns:
        cols.append(f"{prefix}_{k}")
        k += 1
    if not cols:
        return np.zeros((len(df), 0))
    return df[cols].to_numpy(dtype=float)
