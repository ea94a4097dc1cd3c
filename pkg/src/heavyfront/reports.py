"""Deterministic run artifacts: CSV tables, snapshot dumps, manifests, figures.

Every artifact a run writes goes through this module so the bytes are
reproducible: floats are serialized with ``repr`` (shortest round-trip
form), newlines are always ``"\\n"``, JSON keys are sorted, and nothing
embeds wall-clock state.  Rerunning the same config must produce identical
CSV bytes; the manifest records a SHA-256 digest of every file so reruns
can be compared at a glance.

Figures are optional conveniences rendered with the Agg backend; they sit
next to the CSVs but carry no data of their own.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "fmt_cell",
    "write_csv",
    "sha256_of",
    "file_entry",
    "write_json",
    "write_manifest",
    "write_snapshots",
    "SNAPSHOT_BINARY_THRESHOLD",
    "render_lines_png",
    "render_fronts_png",
]

#: Above this many stored values, snapshots switch to a binary dump + index.
SNAPSHOT_BINARY_THRESHOLD = 1_000_000


# ---------------------------------------------------------------------- #
# delimited output
# ---------------------------------------------------------------------- #
def fmt_cell(value) -> str:
    """Stable text form: repr for floats, str for ints and strings."""
    if isinstance(value, str):
        if any(ch in value for ch in ",\n\r\""):
            escaped = value.replace('"', '""')
            return f'"{escaped}"'
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return repr(float(value))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a table with repr-exact numeric cells and ``\\n`` newlines."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_cell(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


# ---------------------------------------------------------------------- #
# hashing and manifests
# ---------------------------------------------------------------------- #
def sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def file_entry(path: Path, base: Path) -> dict:
    return {
        "name": path.relative_to(base).as_posix(),
        "bytes": path.stat().st_size,
        "sha256": sha256_of(path),
    }


def _jsonable(value):
    """Map run values onto JSON: finite floats stay floats, the rest strings."""
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        out = float(value)
        return out if math.isfinite(out) else repr(out)
    if dataclasses.is_dataclass(value):
        return _jsonable(dataclasses.asdict(value))
    return str(value)


def write_json(path: Path, data: Mapping) -> Path:
    text = json.dumps(_jsonable(data), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path


def write_manifest(out_dir: Path, manifest: Mapping) -> Path:
    return write_json(out_dir / "manifest.json", manifest)


# ---------------------------------------------------------------------- #
# snapshot dumps
# ---------------------------------------------------------------------- #
def write_snapshots(out_dir: Path, times: Sequence[float], grid, fields) -> list:
    """Dump solution snapshots: long CSV, or binary + index when large.

    Small runs get ``snapshots.csv`` with ``t,x,u`` rows.  Runs storing more
    than :data:`SNAPSHOT_BINARY_THRESHOLD` values switch to a float64
    ``snapshots.npy`` (snapshots stacked row-wise) plus a small
    ``snapshots_index.csv`` mapping each row to its time.
    """
    n_values = len(times) * grid.n_points
    written = []
    if n_values > SNAPSHOT_BINARY_THRESHOLD:
        stacked = np.vstack([f.values for f in fields]).astype(np.float64)
        npy = out_dir / "snapshots.npy"
        with open(npy, "wb") as fh:
            np.save(fh, stacked)
        written.append(npy)
        written.append(
            write_csv(
                out_dir / "snapshots_index.csv",
                ("row", "t", "n_points", "x_first", "dx"),
                [
                    (i, t, grid.n_points, grid.x[0], grid.dx)
                    for i, t in enumerate(times)
                ],
            )
        )
        return written
    rows = []
    xs = grid.x
    for t, field in zip(times, fields):
        vals = field.values
        for j in range(grid.n_points):
            rows.append((t, xs[j], vals[j]))
    written.append(write_csv(out_dir / "snapshots.csv", ("t", "x", "u"), rows))
    return written


# ---------------------------------------------------------------------- #
# figures (Agg; lazy pyplot import keeps no-plot runs fast)
# ---------------------------------------------------------------------- #
_PNG_METADATA = {"Software": "heavyfront"}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def render_lines_png(
    path: Path,
    curves: Sequence[tuple],
    *,
    xlabel: str,
    ylabel: str,
    title: str,
    logy: bool = False,
) -> Path:
    """One axes, many labelled curves: (label, x, y[, style]) tuples."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        for curve in curves:
            label, xs, ys = curve[0], curve[1], curve[2]
            style = curve[3] if len(curve) > 3 else {}
            ax.plot(xs, ys, label=label, **style)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        if curves:
            ax.legend(loc="best", fontsize=8)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, dpi=110, metadata=_PNG_METADATA)
    finally:
        plt.close(fig)
    return path


def render_fronts_png(path: Path, rows: Sequence, title: str) -> Path:
    """Measured front positions against the stretched-time band."""
    plt = _pyplot()
    ts = [r.t for r in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        lower = [r.r_lower for r in rows]
        upper = [r.r_upper for r in rows]
        ax.fill_between(ts, lower, upper, alpha=0.25, color="tab:blue", label="expected band")
        ax.plot(ts, [r.x_right for r in rows], "o-", color="tab:red", label="measured front")
        finite_left = [r for r in rows if math.isfinite(r.x_left)]
        if finite_left:
            ax.plot(
                [r.t for r in finite_left],
                [r.x_left for r in finite_left],
                "s--",
                color="tab:green",
                label="left front",
            )
        ax.set_xlabel("t")
        ax.set_ylabel("level-set position")
        ax.set_title(title)
        ax.legend(loc="best", fontsize=8)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, dpi=110, metadata=_PNG_METADATA)
    finally:
        plt.close(fig)
    return path
