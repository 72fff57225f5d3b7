"""Mask fusion and the two-stage refinement plan document.

Stage 1 denoises the fused low-quality/misaligned region at a strength
derived from the two scalar scores; stage 2 sweeps the whole frame at a
small fixed strength. Plans serialize to JSON with sorted keys and
9-significant-digit floats so identical inputs give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentThresholds, EmphasizedPrompt
from .perceptual import PenaltyThresholds
from .tensorio import QualityMap, atomic_write_bytes, write_gray_png

PLAN_VERSION = "1"
ORIENTATIONS = ("literal", "inverted")

PLAN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "image", "quality", "stages", "config", "config_hash"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": PLAN_VERSION},
        "image": {"type": "string"},
        "quality": {
            "type": "object",
            "required": ["p", "a"],
            "additionalProperties": False,
            "properties": {
                "p": {"type": "number", "minimum": 0, "maximum": 1},
                "a": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "stages": {
            "type": "array",
            "minItems": 2,
            "maxItems": 2,
            "items": {
                "type": "object",
                "required": ["index", "strength", "steps", "mask_path", "prompt", "emphasis"],
                "additionalProperties": False,
                "properties": {
                    "index": {"type": "integer", "enum": [1, 2]},
                    "strength": {"type": "number", "minimum": 0, "maximum": 1},
                    "steps": {"type": "integer", "minimum": 0},
                    "mask_path": {"type": "string"},
                    "prompt": {"type": "string"},
                    "emphasis": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["text", "weight"],
                            "additionalProperties": False,
                            "properties": {
                                "text": {"type": "string"},
                                "weight": {"type": "number"},
                            },
                        },
                    },
                },
            },
        },
        "config": {
            "type": "object",
            "required": ["alpha", "beta", "a_bound", "tau", "delta", "total_steps", "orientation"],
            "additionalProperties": False,
            "properties": {
                "alpha": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                "beta": {"type": "number"},
                "a_bound": {"type": "number"},
                "tau": {"type": "number"},
                "delta": {"type": "number"},
                "total_steps": {"type": "integer", "minimum": 0},
                "orientation": {"enum": list(ORIENTATIONS)},
            },
        },
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
    },
}


@dataclass(frozen=True)
class PlannerConfig:
    """Knobs for mask binarization and the two-stage schedule."""

    tau: float = 0.6
    delta: float = 0.05
    total_steps: int = 20
    stage1_steps: int | None = None
    orientation: str = "literal"

    def __post_init__(self):
        if not (0.0 <= self.tau <= 1.0):
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")
        if not (0.0 <= self.delta <= 1.0):
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")
        if self.total_steps < 0:
            raise ValueError(f"total_steps must be >= 0, got {self.total_steps}")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {self.orientation!r}")
        n1 = self.split()[0]
        if not (0 <= n1 <= self.total_steps):
            raise ValueError(f"stage1_steps {n1} outside [0, {self.total_steps}]")

    def split(self) -> tuple[int, int]:
        n1 = self.total_steps // 2 if self.stage1_steps is None else self.stage1_steps
        return n1, self.total_steps - n1


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    """Rescale to [0, 1]; a constant map becomes 0.5 everywhere.

    Constancy is judged with a 1e-12 relative tolerance so interpolation
    round-off on a flat map does not get amplified to full range.
    """
    arr = np.asarray(values, dtype=np.float64)
    lo = float(arr.min())
    hi = float(arr.max())
    if hi - lo <= 1e-12 * max(1.0, abs(hi), abs(lo)):
        return np.full(arr.shape, 0.5)
    return (arr - lo) / (hi - lo)


def build_refinement_mask(
    perceptual: QualityMap,
    aligned: QualityMap | None,
    fired: bool,
    tau: float,
) -> np.ndarray:
    """Binary stage-1 mask from the fused inverse-quality + defect map.

    Both maps are min-max normalized before fusing; the alignment term is
    dropped entirely when no defect fired (an untriggered merge is all
    ones, which would otherwise mask the whole frame). A pixel is masked
    when clamp01(1 - P_norm + A_eff) >= tau.
    """
    p_norm = minmax_normalize(perceptual.values)
    if fired:
        if aligned is None:
            raise ValueError("fired=True requires the merged alignment map")
        if aligned.values.shape != perceptual.values.shape:
            raise ValueError(
                f"map shape mismatch: perceptual {perceptual.values.shape},"
                f" alignment {aligned.values.shape}"
            )
        a_eff = minmax_normalize(aligned.values)
    else:
        a_eff = np.zeros(p_norm.shape)
    fused = np.clip(1.0 - p_norm + a_eff, 0.0, 1.0)
    return (fused >= tau).astype(np.uint8)


@dataclass(frozen=True)
class StageSpec:
    index: int
    strength: float
    mask: np.ndarray  # uint8 {0, 1}
    prompt: EmphasizedPrompt
    steps: int


@dataclass(frozen=True)
class RefinePlan:
    image: str
    perceptual_score: float
    alignment_score: float
    stages: tuple[StageSpec, StageSpec]
    config: dict

    def config_hash(self) -> str:
        canon = json.dumps(self.config, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def quantize9(value: float) -> float:
    # 9 significant digits: stable text form on every platform
    return float(f"{float(value):.9g}")


def plan_refinement(
    perceptual_score: float,
    align_score: float,
    mask: np.ndarray,
    prompt: EmphasizedPrompt,
    config: PlannerConfig,
    alpha: PenaltyThresholds,
    align_thresholds: AlignmentThresholds,
    image: str = "",
) -> RefinePlan:
    """Assemble the two-stage plan from scores, mask, and emphasized prompt.

    Stage 1 applies the emphasized prompt over the mask at a strength of
    (p + a) / 2 (or its complement under the inverted orientation); stage
    2 reuses the original prompt over the full frame at the small fixed
    strength. Steps split the configured budget half and half.
    """
    if not (0.0 <= perceptual_score <= 1.0 and 0.0 <= align_score <= 1.0):
        raise ValueError(f"scores must be in [0, 1], got p={perceptual_score} a={align_score}")
    mask_arr = np.ascontiguousarray(mask, dtype=np.uint8)
    if mask_arr.ndim != 2:
        raise ValueError(f"mask must be rank 2, got shape {mask_arr.shape}")
    base = (perceptual_score + align_score) / 2.0
    strength1 = base if config.orientation == "literal" else 1.0 - base
    n1, n2 = config.split()
    stage1 = StageSpec(index=1, strength=strength1, mask=mask_arr, prompt=prompt, steps=n1)
    stage2 = StageSpec(
        index=2,
        strength=config.delta,
        mask=np.ones(mask_arr.shape, dtype=np.uint8),
        prompt=EmphasizedPrompt(text=prompt.text),
        steps=n2,
    )
    config_doc = {
        "alpha": [quantize9(a) for a in alpha.alpha],
        "beta": quantize9(align_thresholds.beta),
        "a_bound": quantize9(align_thresholds.a_bound),
        "tau": quantize9(config.tau),
        "delta": quantize9(config.delta),
        "total_steps": config.total_steps,
        "orientation": config.orientation,
    }
    return RefinePlan(
        image=image,
        perceptual_score=perceptual_score,
        alignment_score=align_score,
        stages=(stage1, stage2),
        config=config_doc,
    )


def plan_document(plan: RefinePlan, mask_paths: tuple[str, str]) -> dict:
    """Plan as a JSON-ready dict referencing already-written mask files."""
    stages = []
    for stage, mask_path in zip(plan.stages, mask_paths):
        stages.append(
            {
                "index": stage.index,
                "strength": quantize9(stage.strength),
                "steps": stage.steps,
                "mask_path": mask_path,
                "prompt": stage.prompt.text,
                "emphasis": [
                    {"text": text, "weight": quantize9(weight)}
                    for text, weight in stage.prompt.emphasis
                ],
            }
        )
    return {
        "version": PLAN_VERSION,
        "image": plan.image,
        "quality": {
            "p": quantize9(plan.perceptual_score),
            "a": quantize9(plan.alignment_score),
        },
        "stages": stages,
        "config": plan.config,
        "config_hash": plan.config_hash(),
    }


def plan_to_json(plan: RefinePlan, mask_paths: tuple[str, str]) -> str:
    return json.dumps(plan_document(plan, mask_paths), sort_keys=True, indent=2) + "\n"


def write_plan(plan: RefinePlan, out_dir) -> str:
    """Write plan.json plus one 0/255 mask PNG per stage; returns plan path."""
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    mask_names = ("stage1_mask.png", "stage2_mask.png")
    for stage, name in zip(plan.stages, mask_names):
        write_gray_png(os.path.join(out_dir, name), stage.mask * np.uint8(255))
    plan_path = os.path.join(out_dir, "plan.json")
    atomic_write_bytes(plan_path, plan_to_json(plan, mask_names).encode("utf-8"))
    return plan_path
