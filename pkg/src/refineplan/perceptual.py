"""Perceptual quality map: factor logits, cask-style penalty, upsampling.

The quality text bank holds one positive/negative embedding pair for the
overall axis plus three defect factors. Per-token logits for each factor
come from the cosine against (positive - negative), rescaled to [0, 1];
defect factors below their threshold multiplicatively penalize the
overall logit (weakest factor dominates). The spatial logits are then
upsampled to image size with Catmull-Rom bicubic interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import cosine_logits, token_grid_side
from .errors import DegenerateInputError, NonFiniteValueError, TensorFormatError
from .tensorio import EmbeddingTensor, QualityMap

FACTOR_LABELS = ("overall", "technical", "rationality", "naturalness")


@dataclass(frozen=True)
class QualityTextBank:
    """Four (positive, negative) embedding pairs, one per quality factor."""

    pairs: np.ndarray  # (4, 2, dim)
    labels: tuple[str, ...] = FACTOR_LABELS

    def __post_init__(self):
        arr = np.ascontiguousarray(self.pairs, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] != 4 or arr.shape[1] != 2:
            raise TensorFormatError(f"bank must have shape (4, 2, dim), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteValueError("bank contains non-finite values")
        if np.any(np.linalg.norm(arr, axis=2) == 0.0):
            raise DegenerateInputError("bank contains a zero-norm embedding row")
        object.__setattr__(self, "pairs", arr)

    @property
    def dim(self) -> int:
        return self.pairs.shape[2]

    @classmethod
    def from_tensor(cls, tensor: EmbeddingTensor) -> "QualityTextBank":
        """Build from the 8 x dim interchange layout [pos0, neg0, ... pos3, neg3]."""
        if tensor.rows != 8:
            raise TensorFormatError(f"bank tensor must have 8 rows, got {tensor.rows}")
        return cls(np.asarray(tensor.data, dtype=np.float64).reshape(4, 2, tensor.cols))

    def direction(self, factor: int) -> np.ndarray:
        return self.pairs[factor, 0] - self.pairs[factor, 1]


@dataclass(frozen=True)
class PenaltyThresholds:
    """Per-defect-factor thresholds; logits below them penalize the score."""

    alpha: tuple[float, float, float] = (0.5, 0.5, 0.5)

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        if len(alpha) != 3 or any(not (0.0 < a <= 1.0) for a in alpha):
            raise ValueError(f"alpha must be 3 floats in (0, 1], got {self.alpha}")
        object.__setattr__(self, "alpha", alpha)


def raw_quality_logits(tokens: np.ndarray, bank: QualityTextBank) -> np.ndarray:
    """Per-factor, per-token logits in [0, 1]: (cos(token, pos-neg) + 1) / 2."""
    toks = np.asarray(tokens, dtype=np.float64)
    out = np.empty((4, toks.shape[0]), dtype=np.float64)
    for i in range(4):
        direction = bank.direction(i)
        if np.linalg.norm(direction) == 0.0:
            raise DegenerateInputError(
                f"factor {bank.labels[i]!r}: positive and negative embeddings coincide"
            )
        out[i] = (cosine_logits(toks, direction) + 1.0) / 2.0
    return out


def cask_combine(raw_logits: np.ndarray, thresholds: PenaltyThresholds) -> np.ndarray:
    """Combine factor logits: overall row scaled by min(defect/alpha, 1) per factor.

    A defect factor at or above its threshold contributes nothing; below
    it, the overall logit shrinks proportionally, so one bad factor caps
    the combined score.
    """
    raw = np.asarray(raw_logits, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] != 4:
        raise ValueError(f"raw logits must have shape (4, N), got {raw.shape}")
    if raw.min() < 0.0 or raw.max() > 1.0:
        raise ValueError("raw logits must lie in [0, 1]")
    combined = raw[0].copy()
    for i in range(1, 4):
        combined *= np.minimum(raw[i] / thresholds.alpha[i - 1], 1.0)
    return combined


def _catmull_rom_kernel(x: np.ndarray) -> np.ndarray:
    # a = -0.5 cubic convolution kernel
    ax = np.abs(x)
    out = np.zeros_like(ax)
    near = ax <= 1.0
    far = (ax > 1.0) & (ax < 2.0)
    out[near] = 1.5 * ax[near] ** 3 - 2.5 * ax[near] ** 2 + 1.0
    out[far] = -0.5 * ax[far] ** 3 + 2.5 * ax[far] ** 2 - 4.0 * ax[far] + 2.0
    return out


def _axis_weights(n_src: int, n_dst: int) -> np.ndarray:
    """Dense (n_dst, n_src) resampling matrix: align-corners, edge-clamped taps."""
    weights = np.zeros((n_dst, n_src), dtype=np.float64)
    scale = (n_src - 1) / (n_dst - 1) if n_dst > 1 else 0.0
    for i in range(n_dst):
        src = i * scale
        base = int(np.floor(src))
        taps = np.arange(base - 1, base + 3)
        kern = _catmull_rom_kernel(src - taps.astype(np.float64))
        for tap, w in zip(taps, kern):
            weights[i, min(max(tap, 0), n_src - 1)] += w
    return weights


def bicubic_upsample(grid: np.ndarray, height: int, width: int) -> np.ndarray:
    """Catmull-Rom bicubic resampling of a 2-D grid to height x width.

    Align-corners sampling with edge-clamped taps; resampling to the
    grid's own size reproduces it exactly. Values are returned without
    clamping so overshoot near sharp edges is visible to callers.
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
        raise ValueError(f"grid must be rank 2 with dims >= 1, got shape {g.shape}")
    if height < g.shape[0] or width < g.shape[1]:
        raise ValueError(
            f"target {height}x{width} must be >= grid {g.shape[0]}x{g.shape[1]}"
        )
    rows = _axis_weights(g.shape[0], height)
    cols = _axis_weights(g.shape[1], width)
    return rows @ g @ cols.T


def perceptual_quality_map(
    tokens: np.ndarray,
    bank: QualityTextBank,
    thresholds: PenaltyThresholds,
    height: int,
    width: int,
) -> QualityMap:
    """Full perceptual map: combined logits per token, upsampled spatial grid.

    The scalar summary is the combined logit of the global token (row 0);
    the map is the spatial rows reshaped to their square grid, bicubic
    upsampled and clamped to [0, 1].
    """
    toks = np.asarray(tokens, dtype=np.float64)
    side = token_grid_side(toks.shape[0])
    combined = cask_combine(raw_quality_logits(toks, bank), thresholds)
    grid = combined[1:].reshape(side, side)
    values = np.clip(bicubic_upsample(grid, height, width), 0.0, 1.0)
    return QualityMap(values=values, summary=float(combined[0]))
