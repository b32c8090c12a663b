"""Point-cloud text files and atomic output writes.

File layout: a header ``# dim=<d> window=<r>`` followed by one point per
line, coordinates as decimal floats separated by single spaces.
"""
from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .setgen import RHO_DEDUP, PointCloud

_HEADER = re.compile(r"#\s*dim=(\d+)\s+window=(\S+)")


def format_cloud(cloud: PointCloud) -> str:
    lines = [f"# dim={cloud.ambient_dim} window={cloud.window_radius!r}"]
    lines += [" ".join(repr(float(c)) for c in p) for p in cloud.points]
    return "\n".join(lines) + "\n"


def parse_cloud(text: str, resolution: float = RHO_DEDUP) -> PointCloud:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigError("empty point-cloud file")
    m = _HEADER.fullmatch(lines[0].strip())
    if not m:
        raise ConfigError(f"bad header {lines[0]!r}; expected '# dim=<d> window=<r>'")
    dim, window = int(m.group(1)), float(m.group(2))
    rows = []
    for ln in lines[1:]:
        parts = ln.split(" ")
        if len(parts) != dim:
            raise ConfigError(f"line {ln!r} has {len(parts)} coordinates, expected {dim}")
        rows.append([float(p) for p in parts])
    pts = np.array(rows, dtype=float).reshape(-1, dim)
    return PointCloud.from_points(pts, window, dim, resolution)


def write_cloud(path, cloud: PointCloud) -> None:
    atomic_write(path, format_cloud(cloud))


def read_cloud(path, resolution: float = RHO_DEDUP) -> PointCloud:
    return parse_cloud(Path(path).read_text(encoding="utf-8"), resolution)


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
