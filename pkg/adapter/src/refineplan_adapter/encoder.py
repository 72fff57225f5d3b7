"""Feature encoders that produce the engine's embedding inputs.

The default backend is a deterministic hashed-feature encoder: patch
statistics for images and digest-seeded word vectors for text, both
projected into a shared 512-dim space. It needs no downloaded weights,
gives bit-stable output across runs and platforms, and produces enough
spatial/semantic variation to exercise the full pipeline. A CLIP-backed
encoder can be swapped in where model weights are available locally.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np
from PIL import Image

EMBED_DIM = 512
PATCH_GRID = 7
IMAGE_SIZE = 224

_PROJECTION_SEED = 47110815
_WORD_RE = re.compile(r"[A-Za-z0-9']+")

# positive/negative description pairs for the quality bank: one overall
# axis plus the three defect factors
QUALITY_TEXT_PAIRS = (
    ("Good photo.", "Bad photo."),
    ("sharp clean detailed image", "blurry noisy compressed image"),
    ("coherent realistic objects", "distorted malformed objects"),
    ("natural lifelike scene", "artificial uncanny scene"),
)


class EncoderUnavailableError(RuntimeError):
    """Requested encoder backend cannot be constructed in this environment."""


def _seeded_unit(seed_bytes: bytes, dim: int) -> np.ndarray:
    digest = hashlib.blake2b(seed_bytes, digest_size=16).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def tokenize(text: str) -> list[str]:
    return [w.lower() for w in _WORD_RE.findall(text)]


class HashedFeatureEncoder:
    """Deterministic stand-in encoder; name/version recorded in manifests."""

    name = "hashed-features-v1"
    dim = EMBED_DIM
    grid = PATCH_GRID

    def __init__(self):
        rng = np.random.Generator(np.random.PCG64(_PROJECTION_SEED))
        self._patch_projection = rng.standard_normal((15, EMBED_DIM)) / np.sqrt(15.0)
        self._value_projection = rng.standard_normal((15, EMBED_DIM)) / np.sqrt(15.0)
        self._empty_text = _seeded_unit(b"<empty-string>", EMBED_DIM)

    # ----- text ------------------------------------------------------------

    def encode_text(self, text: str) -> np.ndarray:
        words = tokenize(text)
        if not words:
            return self._empty_text.copy()
        acc = np.zeros(EMBED_DIM)
        for position, word in enumerate(words):
            acc += _seeded_unit(word.encode("utf-8"), EMBED_DIM) / (1.0 + 0.1 * position)
        return acc / np.linalg.norm(acc)

    def encode_text_bank(self) -> np.ndarray:
        rows = []
        for positive, negative in QUALITY_TEXT_PAIRS:
            rows.append(self.encode_text(positive))
            rows.append(self.encode_text(negative))
        return np.stack(rows)

    # ----- images ----------------------------------------------------------

    def _patch_features(self, image: np.ndarray) -> np.ndarray:
        """15 summary statistics per patch over a PATCH_GRID x PATCH_GRID tiling."""
        side = IMAGE_SIZE // PATCH_GRID
        features = np.empty((PATCH_GRID * PATCH_GRID, 15))
        luma = image @ np.array([0.299, 0.587, 0.114])
        for row in range(PATCH_GRID):
            for col in range(PATCH_GRID):
                ys = slice(row * side, (row + 1) * side)
                xs = slice(col * side, (col + 1) * side)
                patch = image[ys, xs]
                patch_luma = luma[ys, xs]
                gx = np.abs(np.diff(patch, axis=1)).mean(axis=(0, 1))
                gy = np.abs(np.diff(patch, axis=0)).mean(axis=(0, 1))
                half = side // 2
                quadrants = [
                    patch_luma[:half, :half].mean(),
                    patch_luma[:half, half:].mean(),
                    patch_luma[half:, :half].mean(),
                    patch_luma[half:, half:].mean(),
                ]
                features[row * PATCH_GRID + col] = np.concatenate(
                    [
                        patch.mean(axis=(0, 1)),
                        patch.std(axis=(0, 1)),
                        gx + gy,
                        quadrants,
                        [patch_luma.min(), patch_luma.max()],
                    ]
                )
        return features

    def load_image(self, path) -> np.ndarray:
        with Image.open(path) as img:
            rgb = img.convert("RGB").resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR)
        return np.asarray(rgb, dtype=np.float64) / 255.0

    def encode_image_values(self, path) -> np.ndarray:
        """Raw value matrix: global row plus one row per patch, pre-attention."""
        features = self._patch_features(self.load_image(path))
        spatial = features @ self._value_projection
        spatial /= np.linalg.norm(spatial, axis=1, keepdims=True)
        spatial *= 4.0  # larger norms keep the attention softmax from going uniform
        global_row = spatial.mean(axis=0)
        return np.vstack([global_row, spatial])


class ClipEncoder:
    """CLIP-backed encoder; requires torch/transformers plus local weights.

    Exports the value states of the vision tower's final block as the
    raw value matrix and pooled text features for prompts. Only usable
    where the named checkpoint is already on disk; constructing it
    without one raises EncoderUnavailableError.
    """

    dim = EMBED_DIM
    grid = PATCH_GRID

    def __init__(self, model_id: str):
        self.name = model_id
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise EncoderUnavailableError(f"torch/transformers missing: {exc}") from exc
        try:
            self._model = CLIPModel.from_pretrained(model_id)
            self._processor = CLIPProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise EncoderUnavailableError(f"cannot load {model_id}: {exc}") from exc
        self._model.eval()

    def encode_text(self, text: str) -> np.ndarray:
        import torch

        inputs = self._processor(text=[text if text else " "], return_tensors="pt", padding=True)
        with torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        vec = feats[0].numpy().astype(np.float64)
        return vec / np.linalg.norm(vec)

    def encode_text_bank(self) -> np.ndarray:
        rows = []
        for positive, negative in QUALITY_TEXT_PAIRS:
            rows.append(self.encode_text(positive))
            rows.append(self.encode_text(negative))
        return np.stack(rows)

    def encode_image_values(self, path) -> np.ndarray:
        import torch

        captured = {}

        def grab(_module, _inputs, output):
            captured["values"] = output

        layer = self._model.vision_model.encoder.layers[-1].self_attn.v_proj
        handle = layer.register_forward_hook(grab)
        try:
            with Image.open(path) as img:
                inputs = self._processor(images=img.convert("RGB"), return_tensors="pt")
            with torch.no_grad():
                self._model.get_image_features(**inputs)
        finally:
            handle.remove()
        values = captured["values"][0].numpy().astype(np.float64)
        return values


def make_encoder(backend: str, model_id: str | None = None):
    if backend == "hashed":
        return HashedFeatureEncoder()
    if backend == "clip":
        if not model_id:
            raise EncoderUnavailableError("clip backend needs --model")
        return ClipEncoder(model_id)
    raise EncoderUnavailableError(f"unknown encoder backend {backend!r}")
