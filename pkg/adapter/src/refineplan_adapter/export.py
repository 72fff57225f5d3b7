"""Export encoder outputs into the engine's GRT interchange layout.

One export covers everything a `refineplan plan` run needs: the raw
value matrix, the attention-mixed token matrix, the 8 x dim quality text
bank, the phrase-embedding bundle with its JSON sidecar, the CoNLL-U
parse, and a manifest tying the files together.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle, tagger
from .grt import write_grt


@dataclass
class ExportManifest:
    model: str
    image: str
    prompt: str
    dim: int
    files: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "model": self.model,
            "image": self.image,
            "prompt": self.prompt,
            "dim": self.dim,
            "files": self.files,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def derive_phrases(prompt: str) -> tuple[list[dict], list[dict]]:
    """Tag + segment the prompt; returns (nodes, phrase descriptors)."""
    nodes = tagger.parse_prompt(prompt)
    if not nodes:
        raise ValueError("prompt contains no tokens")
    centers, phrases = oracle.segment(nodes)
    forms = {n["id"]: n["form"] for n in nodes}
    descriptors = [
        {
            "noun_id": center,
            "text": " ".join(forms[t] for t in phrases[center]),
            "noun_text": forms[center],
        }
        for center in centers
    ]
    return nodes, descriptors


def export_embeddings(
    image_path,
    prompt: str,
    out_dir,
    encoder,
    phrases: list[dict] | None = None,
) -> ExportManifest:
    """Write every engine input for one image/prompt pair into out_dir.

    ``phrases`` overrides the derived segmentation; each entry needs
    noun_id, text, and noun_text keys. The token matrix is the value
    matrix passed through the reference attention rewrite so both the
    pre- and post-surgery forms are available downstream.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if phrases is None:
        nodes, phrases = derive_phrases(prompt)
    else:
        nodes = tagger.parse_prompt(prompt)

    values = np.asarray(encoder.encode_image_values(image_path), dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != encoder.dim:
        raise ValueError(f"encoder produced shape {values.shape}, expected (*, {encoder.dim})")
    spatial = values.shape[0] - 1
    side = int(np.sqrt(spatial))
    if side * side != spatial:
        raise ValueError(f"encoder produced {spatial} spatial rows, not a square grid")

    values32 = values.astype(np.float32).astype(np.float64).tolist()
    tokens = oracle.vvv_attention(values32)

    bank = encoder.encode_text_bank()
    if bank.shape != (8, encoder.dim):
        raise ValueError(f"bank shape {bank.shape}, expected (8, {encoder.dim})")

    phrase_rows = [encoder.encode_text(p["text"]) for p in phrases]
    noun_rows = [encoder.encode_text(p["noun_text"]) for p in phrases]
    bundle = np.stack(
        [encoder.encode_text(prompt), encoder.encode_text("")] + phrase_rows + noun_rows
    )

    manifest = ExportManifest(
        model=encoder.name, image=str(image_path), prompt=prompt, dim=encoder.dim
    )

    write_grt(out / "value_matrix.grt", values32)
    write_grt(out / "image_tokens.grt", tokens)
    write_grt(out / "bank.grt", bank.tolist())
    write_grt(out / "phrases.grt", bundle.tolist())
    sidecar = {"prompt": prompt, "phrases": phrases}
    (out / "phrases.grt.json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out / "prompt.conllu").write_text(tagger.to_conllu(prompt, nodes), encoding="utf-8")

    manifest.files = {
        "value_matrix": "value_matrix.grt",
        "image_tokens": "image_tokens.grt",
        "bank": "bank.grt",
        "phrase_embeddings": "phrases.grt",
        "phrase_sidecar": "phrases.grt.json",
        "conllu": "prompt.conllu",
    }
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest
