"""Export helpers (CSV, JSON artifacts, manifest, plot data)."""

from pdmp_ldp.export.artifacts import ArtifactWriter, safe_json_dumps, sha256_bytes
from pdmp_ldp.export.csv_export import FLOAT_FORMAT, dataframe_to_csv_bytes, frame_block, trajectory_frame
from pdmp_ldp.export.plot_data import emit_plot_data, plot_frames

__all__ = [
    "ArtifactWriter",
    "safe_json_dumps",
    "sha256_bytes",
    "FLOAT_FORMAT",
    "dataframe_to_csv_bytes",
    "frame_block",
    "trajectory_frame",
    "emit_plot_data",
    "plot_frames",
]
