"""Artifact writers: CSV tables, JSON documents, and the run manifest.

Numeric formatting uses repr-level precision so files round-trip to the
exact double and are locale-independent. Data files are deterministic
for a fixed (config, seed, version); the manifest additionally records
wall time and is the only non-reproducible artifact.
"""

from __future__ import annotations

import csv
import json
import subprocess
import time
from pathlib import Path

import numpy as np

from . import __version__


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns: dict) -> Path:
    """Write named columns of equal length; returns the path written."""
    path = Path(path)
    names = list(columns)
    arrays = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    n_rows = len(arrays[0])
    for n, a in zip(names, arrays):
        if len(a) != n_rows:
            raise ValueError(f"column {n} has {len(a)} rows, expected {n_rows}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(names)
        for i in range(n_rows):
            w.writerow([_fmt(a[i]) for a in arrays])
    return path


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.bool_,)):
            return bool(o)
        return super().default(o)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True, cls=_Encoder)
        f.write("\n")
    return path


def version_string() -> str:
    """Package version, refined by git describe when run from a checkout."""
    base = f"ccasim {__version__}"
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{base} ({out.stdout.strip()})"
    except (OSError, subprocess.SubprocessError):
        pass
    return base


class RunManifest:
    """Collects inputs and emitted files for one scenario run."""

    def __init__(self, scenario: str, seed: int | None):
        self.scenario = scenario
        self.seed = seed
        self.inputs: dict = {}
        self.outputs: list[str] = []
        self._t0 = time.monotonic()

    def record_inputs(self, **kw) -> None:
        self.inputs.update(kw)

    def record_output(self, path) -> None:
        # names only, so manifests compare equal across output directories
        self.outputs.append(Path(path).name)

    def write(self, out_dir) -> Path:
        doc = {
            "scenario": self.scenario,
            "version": version_string(),
            "seed": self.seed,
            "wall_time_s": time.monotonic() - self._t0,
            "inputs": self.inputs,
            "outputs": sorted(self.outputs),
        }
        return write_json(Path(out_dir) / "manifest.json", doc)
