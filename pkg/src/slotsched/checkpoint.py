"""Versioned textual weight dump.

Layout:

    slotsched-ckpt 1
    <one-line JSON metadata: kind, layer sizes / vocab, optimizer step>
    array NAME dim0 [dim1]
    <one text line per row, %.17g floats>
    ...
    end

%.17g round-trips IEEE doubles exactly, so save/load is lossless and the file
stays diff-friendly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MAGIC = "slotsched-ckpt"
VERSION = 1


def save_checkpoint(path: str | Path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    lines = [f"{MAGIC} {VERSION}", json.dumps(meta, sort_keys=True)]
    for name in sorted(arrays):
        arr = np.asarray(arrays[name], dtype=np.float64)
        if arr.ndim == 1:
            lines.append(f"array {name} {arr.shape[0]}")
            lines.append(" ".join(f"{x:.17g}" for x in arr))
        elif arr.ndim == 2:
            lines.append(f"array {name} {arr.shape[0]} {arr.shape[1]}")
            for row in arr:
                lines.append(" ".join(f"{x:.17g}" for x in row))
        else:
            raise ValueError(f"array {name!r} has unsupported rank {arr.ndim}")
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(MAGIC):
        raise ValueError(f"{path}: not a checkpoint file")
    version = int(lines[0].split()[1])
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    meta = json.loads(lines[1])
    arrays: dict[str, np.ndarray] = {}
    i = 2
    while i < len(lines):
        line = lines[i]
        if line == "end":
            break
        if not line.startswith("array "):
            raise ValueError(f"{path}:{i + 1}: expected array header, got {line!r}")
        parts = line.split()
        name = parts[1]
        dims = [int(d) for d in parts[2:]]
        i += 1
        if len(dims) == 1:
            arrays[name] = _parse_row(lines[i], dims[0])
            i += 1
        else:
            rows = [_parse_row(lines[i + r], dims[1]) for r in range(dims[0])]
            arrays[name] = np.vstack(rows) if rows else np.zeros(dims)
            i += dims[0]
    else:
        raise ValueError(f"{path}: missing end marker")
    return meta, arrays


def _parse_row(line: str, width: int) -> np.ndarray:
    row = np.array([float(x) for x in line.split()], dtype=np.float64)
    if row.size != width:
        raise ValueError(f"row has {row.size} values, expected {width}")
    return row
