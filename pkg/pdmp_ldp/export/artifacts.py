"""
Artifact writing: canonical JSON, CSV tables and a sha256 manifest of every
file a run produced.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from pdmp_ldp.export.csv_export import dataframe_to_csv_bytes

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def _jsonable(value: Any) -> Any:
    if hasattr(value, "to_json") and not isinstance(value, (pd.DataFrame, pd.Series)):
        return value.to_json()
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return _jsonable(value.value)
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        f = float(value)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "+inf" if f > 0 else "-inf"
        return f
    return value


def safe_json_dumps(obj: Any, *, indent: int | None = None) -> str:
    """
    Canonical JSON: sorted keys, numpy values unwrapped, non-finite floats as
    strings. Compact separators unless `indent` is given.
    """
    separators = (",", ":") if indent is None else (",", ": ")
    return json.dumps(_jsonable(obj), sort_keys=True, separators=separators, indent=indent, allow_nan=False)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class ArtifactWriter:
    output_dir: Path
    entries: List[Dict[str, Any]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.output_dir = Path(self.output_dir)

    def write_bytes(self, name: str, data: bytes, *, kind: str) -> Path:
        path = self.output_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        self.entries = [e for e in self.entries if e["path"] != name]
        self.entries.append({"path": name, "kind": kind, "bytes": len(data), "sha256": sha256_bytes(data)})
        logger.info("wrote %s (%d bytes)", path, len(data))
        return path

    def write_csv(self, name: str, df: pd.DataFrame) -> Path:
        return self.write_bytes(name, dataframe_to_csv_bytes(df), kind="csv")

    def write_json(self, name: str, obj: Any) -> Path:
        return self.write_bytes(name, (safe_json_dumps(obj, indent=2) + "\n").encode("utf-8"), kind="json")

    def write_manifest(self, *, config: Dict[str, Any], seed: Any = None, command: str | None = None) -> Path:
        manifest = {
            "command": command,
            "seed": seed,
            "config": config,
            "files": sorted(self.entries, key=lambda e: e["path"]),
        }
        path = self.output_dir / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(safe_json_dumps(manifest, indent=2) + "\n", encoding="utf-8")
        logger.info("wrote manifest with %d files to %s", len(self.entries), path)
        return path
