"""Execute a two-stage refinement plan against a denoising backend.

The executor walks the plan's stages in order, handing each one's
prompt, mask, strength, and step count to the backend. The bundled
reference backend is a deterministic stand-in (masked blur blend) so the
mechanics are testable offline; a diffusion inpainting/img2img pipeline
can be dropped in behind the same call signature.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

SUPPORTED_PLAN_VERSION = "1"


@dataclass
class StageCall:
    prompt: str
    emphasis: list[tuple[str, float]]
    strength: float
    steps: int
    mask_fraction: float


class ReferenceBackend:
    """Deterministic pseudo-denoiser: strength-weighted masked smoothing.

    A zero strength or zero steps leaves the image untouched, matching
    what a diffusion pass with no noise injected would do.
    """

    name = "reference"

    def denoise(self, image: np.ndarray, prompt: str, emphasis, mask: np.ndarray,
                strength: float, steps: int) -> np.ndarray:
        if strength == 0.0 or steps == 0:
            return image.copy()
        smoothed = image.astype(np.float64)
        for _ in range(min(steps, 8)):
            smoothed = _box_blur(smoothed)
        weight = (strength * mask)[..., None]
        out = image.astype(np.float64) * (1.0 - weight) + smoothed * weight
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)


class RecordingBackend:
    """Test double that logs every stage call and returns the image as-is."""

    name = "recording"

    def __init__(self):
        self.calls: list[StageCall] = []

    def denoise(self, image, prompt, emphasis, mask, strength, steps):
        self.calls.append(
            StageCall(
                prompt=prompt,
                emphasis=list(emphasis),
                strength=strength,
                steps=steps,
                mask_fraction=float(np.asarray(mask, dtype=np.float64).mean()),
            )
        )
        return image.copy()


def _box_blur(image: np.ndarray) -> np.ndarray:
    padded = np.pad(image, ((1, 1), (1, 1), (0, 0)), mode="edge")
    acc = np.zeros_like(image, dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            acc += padded[dy : dy + image.shape[0], dx : dx + image.shape[1]]
    return acc / 9.0


def load_plan(plan_path) -> dict:
    plan = json.loads(Path(plan_path).read_text(encoding="utf-8"))
    version = plan.get("version")
    if version != SUPPORTED_PLAN_VERSION:
        raise ValueError(f"unsupported plan version {version!r}")
    return plan


def _load_mask(path, height: int, width: int) -> np.ndarray:
    with Image.open(path) as img:
        mask_img = img.convert("L").resize((width, height), Image.NEAREST)
    return (np.asarray(mask_img) >= 128).astype(np.float64)


def execute_plan(plan_path, out_path, backend=None, image_path=None) -> Path:
    """Run every stage of the plan and write the refined image.

    ``image_path`` overrides the plan's recorded image reference. Mask
    PNGs are resolved relative to the plan file and resized (nearest) to
    the image geometry.
    """
    backend = backend or ReferenceBackend()
    plan = load_plan(plan_path)
    plan_dir = Path(plan_path).parent
    source = Path(image_path) if image_path else Path(plan["image"])
    if not source.is_file():
        raise FileNotFoundError(f"input image not found: {source}")
    with Image.open(source) as img:
        pixels = np.asarray(img.convert("RGB"))

    for stage in sorted(plan["stages"], key=lambda s: s["index"]):
        mask = _load_mask(plan_dir / stage["mask_path"], pixels.shape[0], pixels.shape[1])
        emphasis = [(e["text"], e["weight"]) for e in stage["emphasis"]]
        pixels = backend.denoise(
            pixels, stage["prompt"], emphasis, mask, stage["strength"], stage["steps"]
        )

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels).save(out, format="PNG")
    return out
