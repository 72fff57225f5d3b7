"""Value-only self-attention rewrite and the shared cosine primitive.

Both quality maps work on a token matrix whose row 0 is the global token
and whose remaining rows are spatial patch tokens in row-major grid order.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateInputError

NORM_MODES = ("frobenius", "per-row-l2")


def token_grid_side(rows: int) -> int:
    """Validate a 1+L token layout and return the spatial grid side sqrt(L)."""
    spatial = rows - 1
    if spatial < 1:
        raise DegenerateInputError(f"token matrix needs a global row plus >=1 spatial rows, got {rows}")
    side = math.isqrt(spatial)
    if side * side != spatial:
        raise DegenerateInputError(f"spatial token count {spatial} is not a perfect square")
    return side


def _row_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def vvv_attention(values: np.ndarray, norm: str = "frobenius") -> np.ndarray:
    """Mix token rows by value-only self-attention.

    Computes ``softmax(V @ V.T * scale) @ V`` with a row-wise softmax.
    ``norm`` picks the logit scale: ``frobenius`` uses one global
    1/||V||_F temperature, ``per-row-l2`` scales each row's logits by the
    inverse L2 norm of that row. Output rows are convex combinations of
    the input rows, so dims are preserved.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 1:
        raise DegenerateInputError(f"value matrix must be rank 2 with >=1 rows, got shape {v.shape}")
    if norm not in NORM_MODES:
        raise ValueError(f"norm must be one of {NORM_MODES}, got {norm!r}")
    logits = v @ v.T
    if norm == "frobenius":
        scale = np.linalg.norm(v)
        if scale == 0.0:
            raise DegenerateInputError("all-zero value matrix")
        logits = logits / scale
    else:
        row_norms = np.linalg.norm(v, axis=1)
        if np.any(row_norms == 0.0):
            raise DegenerateInputError("zero-norm row in value matrix")
        logits = logits / row_norms[:, None]
    return _row_softmax(logits) @ v


def cosine_logits(tokens: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Cosine similarity of every token row against one direction vector."""
    toks = np.asarray(tokens, dtype=np.float64)
    direc = np.asarray(direction, dtype=np.float64)
    if toks.ndim != 2:
        raise DegenerateInputError(f"token matrix must be rank 2, got shape {toks.shape}")
    if direc.ndim != 1 or direc.shape[0] != toks.shape[1]:
        raise DegenerateInputError(
            f"direction dim {direc.shape} does not match token dim {toks.shape[1]}"
        )
    dnorm = np.linalg.norm(direc)
    if dnorm == 0.0:
        raise DegenerateInputError("zero-norm direction vector")
    tnorms = np.linalg.norm(toks, axis=1)
    if np.any(tnorms == 0.0):
        raise DegenerateInputError("zero-norm token row")
    return (toks @ direc) / (tnorms * dnorm)
