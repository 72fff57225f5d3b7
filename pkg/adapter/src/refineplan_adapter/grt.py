"""Standalone GRT codec for the engine's tensor interchange format.

Deliberately re-implemented from the documented byte layout (magic
"GRT1", u32-LE rank, dims, float32-LE payload) rather than importing the
engine, so adapter-side files prove the format contract from both ends.
"""

from __future__ import annotations

import struct

MAGIC = b"GRT1"


def write_grt(path, rows: list, shape: tuple[int, ...] | None = None) -> None:
    """Write nested lists (rank inferred) or a flat list with explicit shape."""
    if shape is None:
        dims = []
        probe = rows
        while isinstance(probe, (list, tuple)):
            dims.append(len(probe))
            probe = probe[0]
        shape = tuple(dims)
        flat = _flatten(rows)
    else:
        flat = list(rows)
    count = 1
    for d in shape:
        count *= d
    if count != len(flat):
        raise ValueError(f"shape {shape} implies {count} values, got {len(flat)}")
    header = MAGIC + struct.pack("<I", len(shape)) + struct.pack(f"<{len(shape)}I", *shape)
    payload = struct.pack(f"<{len(flat)}f", *flat)
    with open(path, "wb") as handle:
        handle.write(header + payload)


def read_grt(path) -> tuple[tuple[int, ...], list[float]]:
    """Read a GRT file into (shape, flat float list)."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic")
    (rank,) = struct.unpack_from("<I", blob, 4)
    shape = struct.unpack_from(f"<{rank}I", blob, 8)
    offset = 8 + 4 * rank
    count = 1
    for d in shape:
        count *= d
    flat = list(struct.unpack_from(f"<{count}f", blob, offset))
    if len(blob) != offset + 4 * count:
        raise ValueError(f"{path}: size mismatch")
    return shape, flat


def read_matrix(path) -> list[list[float]]:
    shape, flat = read_grt(path)
    if len(shape) != 2:
        raise ValueError(f"{path}: expected rank 2, got {shape}")
    rows, cols = shape
    return [flat[r * cols : (r + 1) * cols] for r in range(rows)]


def _flatten(nested):
    out = []
    stack = [iter(nested)]
    while stack:
        try:
            item = next(stack[-1])
        except StopIteration:
            stack.pop()
            continue
        if isinstance(item, (list, tuple)):
            stack.append(iter(item))
        else:
            out.append(float(item))
    return out
