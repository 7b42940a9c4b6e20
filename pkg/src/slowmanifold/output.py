"""Deterministic CSV and run-manifest output.

Floats are written with repr (shortest round-trip), so two runs with the
same seed produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_manifest(out_dir: str | Path, *, subcommand: str, config_sha256: str,
                   seed: int, version: str, counts: dict | None = None) -> Path:
    """Reproducibility record: config hash, seed, tool version, row counts."""
    path = Path(out_dir) / "run_manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "subcommand": subcommand,
        "config_sha256": config_sha256,
        "seed": int(seed),
        "tool_version": version,
        "counts": {k: int(v) for k, v in (counts or {}).items()},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
