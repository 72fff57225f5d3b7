"""Bit-exact tensor interchange (GRT files) and grayscale heatmap PNGs.

GRT layout: magic ``GRT1``, u32-LE rank, rank u32-LE dims, then the raw
float32-LE payload in row-major order. Nothing is compressed, so a
round trip is byte-identical and trivially parseable from any language.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    NonFiniteValueError,
    TensorFormatError,
    TruncatedPayloadError,
)

GRT_MAGIC = b"GRT1"
_MAX_RANK = 8

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class EmbeddingTensor:
    """Rank-2 float32 matrix of encoder outputs (tokens x dim)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise TensorFormatError(f"embedding tensor must be rank 2, got rank {arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise TensorFormatError(f"embedding tensor dims must be >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteValueError("embedding tensor contains non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class QualityMap:
    """Pixel-level quality map plus its scalar summary score."""

    values: np.ndarray
    summary: float

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float32)
        if arr.ndim != 2:
            raise TensorFormatError(f"quality map must be rank 2, got rank {arr.ndim}")
        if not np.isfinite(arr).all():
            raise NonFiniteValueError("quality map contains non-finite values")
        if not np.isfinite(self.summary):
            raise NonFiniteValueError("quality map summary is non-finite")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "summary", float(self.summary))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def atomic_write_bytes(path, blob: bytes) -> None:
    """Write a file via temp-then-rename so partial output is never visible."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_grt(path, array: np.ndarray) -> None:
    """Serialize an array of any rank to a GRT file (float32-LE payload)."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim < 1 or arr.ndim > _MAX_RANK:
        raise TensorFormatError(f"GRT rank must be 1..{_MAX_RANK}, got {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise TensorFormatError(f"GRT dims must be >= 1, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteValueError("refusing to save non-finite values")
    header = GRT_MAGIC + struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    atomic_write_bytes(path, header + arr.tobytes())


def load_grt(path) -> np.ndarray:
    """Load a GRT file, validating magic, layout, and finiteness."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if len(blob) < 4 or blob[:4] != GRT_MAGIC:
        raise TensorFormatError(f"{path}: bad magic, not a GRT file")
    if len(blob) < 8:
        raise TruncatedPayloadError(f"{path}: header ends before rank field")
    (rank,) = struct.unpack_from("<I", blob, 4)
    if rank < 1 or rank > _MAX_RANK:
        raise TensorFormatError(f"{path}: unsupported rank {rank}")
    dims_end = 8 + 4 * rank
    if len(blob) < dims_end:
        raise TruncatedPayloadError(f"{path}: header ends before dims are complete")
    dims = struct.unpack_from(f"<{rank}I", blob, 8)
    if any(d < 1 for d in dims):
        raise TensorFormatError(f"{path}: zero dimension in {dims}")
    count = 1
    for d in dims:
        count *= d
    expected = dims_end + 4 * count
    if len(blob) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload has {len(blob) - dims_end} bytes, expected {4 * count}"
        )
    if len(blob) > expected:
        raise TensorFormatError(f"{path}: {len(blob) - expected} trailing bytes after payload")
    arr = np.frombuffer(blob, dtype="<f4", count=count, offset=dims_end).reshape(dims)
    if not np.isfinite(arr).all():
        raise NonFiniteValueError(f"{path}: payload contains non-finite values")
    return arr.copy()


def save_tensor(tensor: EmbeddingTensor, path) -> None:
    save_grt(path, tensor.data)


def load_tensor(path) -> EmbeddingTensor:
    arr = load_grt(path)
    if arr.ndim != 2:
        raise TensorFormatError(f"{path}: expected rank-2 tensor, got rank {arr.ndim}")
    return EmbeddingTensor(arr)


def quantize_unit_interval(values: np.ndarray) -> np.ndarray:
    """Map floats to u8 by round(255 * clamp01(v)), half-up for determinism."""
    clamped = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(clamped * 255.0 + 0.5).astype(np.uint8)


def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def write_gray_png(path, pixels: np.ndarray) -> None:
    """Write an 8-bit grayscale PNG with fixed encoder parameters.

    Hand-rolled instead of an imaging library so identical pixel content
    always produces identical bytes (filter 0, zlib level 9).
    """
    arr = np.ascontiguousarray(pixels, dtype=np.uint8)
    if arr.ndim != 2:
        raise TensorFormatError(f"PNG pixels must be rank 2, got rank {arr.ndim}")
    height, width = arr.shape
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)
    raw = b"".join(b"\x00" + row.tobytes() for row in arr)
    blob = (
        _PNG_SIGNATURE
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", zlib.compress(raw, 9))
        + _png_chunk(b"IEND", b"")
    )
    atomic_write_bytes(path, blob)


def render_heatmap(quality_map: QualityMap, path) -> None:
    """Render a quality map to an 8-bit grayscale PNG (0=black .. 1=white)."""
    write_gray_png(path, quantize_unit_interval(quality_map.values))
