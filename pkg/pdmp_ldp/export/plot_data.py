"""
Tidy long-format series (series, t, value) for external plotting.

Works on optimal trajectories (x, u, eta), ensemble reports (mean with
stderr bands) and sweep reports ((N, -log P / N) rows plus a flat J* line).
For sweeps the `t` column carries N.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from pdmp_ldp.export.artifacts import ArtifactWriter
from pdmp_ldp.numerics.arrays import as_columns

PLOT_COLUMNS = ["series", "t", "value"]


def _long(t: np.ndarray, blocks: Dict[str, np.ndarray]) -> pd.DataFrame:
    frames: List[pd.DataFrame] = []
    t = np.asarray(t, dtype=float)
    for prefix, block in blocks.items():
        block = as_columns(block, t.size)
        for j in range(block.shape[1]):
            frames.append(pd.DataFrame({"series": f"{prefix}_{j + 1}", "t": t, "value": block[:, j]}))
    if not frames:
        return pd.DataFrame(columns=PLOT_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def trajectory_plot_frame(trajectory: Any) -> pd.DataFrame:
    return _long(trajectory.t, {"x": trajectory.x, "u": trajectory.u, "eta": trajectory.eta})


def ensemble_plot_frame(report: Any) -> pd.DataFrame:
    se_x, se_u = report.stderr_x(), report.stderr_u()
    return _long(
        report.t,
        {
            "mean_x": report.mean_x,
            "mean_x_lower": report.mean_x - se_x,
            "mean_x_upper": report.mean_x + se_x,
            "mean_u": report.mean_u,
            "mean_u_lower": report.mean_u - se_u,
            "mean_u_upper": report.mean_u + se_u,
        },
    )


def sweep_plot_frame(rows: Sequence[Dict[str, Any]], j_star: Optional[float] = None) -> pd.DataFrame:
    usable = [r for r in rows if isinstance(r.get("minus_logP_over_N"), (int, float))]
    frames = [
        pd.DataFrame(
            {
                "series": "minus_logP_over_N",
                "t": [float(r["N"]) for r in usable],
                "value": [float(r["minus_logP_over_N"]) for r in usable],
            }
        )
    ]
    if j_star is not None and rows:
        scales = [float(r["N"]) for r in rows]
        frames.append(pd.DataFrame({"series": "J_star", "t": scales, "value": [float(j_star)] * len(scales)}))
    return pd.concat(frames, ignore_index=True)


def plot_frames(report: Any) -> Dict[str, pd.DataFrame]:
    """Plot tables keyed by a file stem, chosen by what the report carries."""
    if isinstance(report, dict):
        frames: Dict[str, pd.DataFrame] = {}
        if "monte_carlo" in report:
            frames["sweep"] = sweep_plot_frame(report["monte_carlo"], report.get("J_star"))
        if report.get("trajectory") is not None and hasattr(report["trajectory"], "eta"):
            frames["trajectory"] = trajectory_plot_frame(report["trajectory"])
        return frames
    if hasattr(report, "eta"):
        return {"trajectory": trajectory_plot_frame(report)}
    if hasattr(report, "mean_x"):
        return {"ensemble": ensemble_plot_frame(report)}
    raise TypeError(f"no plot data for {type(report).__name__}")


def emit_plot_data(report: Any, writer: ArtifactWriter, *, prefix: str = "plot") -> List[str]:
    """Write each plot table as <prefix>_<stem>.csv; returns the names written."""
    names = []
    for stem, frame in plot_frames(report).items():
        name = f"{prefix}_{stem}.csv"
        writer.write_csv(name, frame)
        names.append(name)
    return names
