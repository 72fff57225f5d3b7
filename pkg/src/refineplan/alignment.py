"""Per-phrase alignment maps, defect taxonomy, merging, and prompt emphasis.

Each phrase (and its bare noun) is scored against every image token by a
two-way softmax between the phrase embedding and an empty-string
embedding; the empty row soaks up whatever similarity any text shares
with any image. Phrases whose noun is missing, or whose modifiers are
badly depicted, contribute their noun's spatial map to the merged
alignment map and get emphasized in the refinement prompt.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .attention import cosine_logits, token_grid_side
from .errors import DegenerateInputError, TensorFormatError
from .parsing import PhraseSegmentation, SyntaxTree
from .perceptual import bicubic_upsample
from .tensorio import EmbeddingTensor, QualityMap

EMPHASIS_WEIGHT = 1.1


@dataclass(frozen=True)
class AlignmentThresholds:
    """a_bound flags missing nouns; beta caps the per-phrase score penalty."""

    a_bound: float = 0.5
    beta: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.a_bound < 1.0):
            raise ValueError(f"a_bound must be in (0, 1), got {self.a_bound}")
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")


class DefectKind(enum.Enum):
    NOUN_UNMATCHED = "noun_unmatched"
    ADJ_UNMATCHED = "adj_unmatched"


@dataclass(frozen=True)
class DefectRecord:
    """One alignment defect; ``target`` names whose noun map gets applied."""

    phrase_id: int
    kind: DefectKind
    target: int


@dataclass(frozen=True)
class PhraseAlignment:
    """Alignment of one phrase: its spatial map plus phrase/noun scores."""

    phrase_id: int
    map: QualityMap
    score: float
    noun_score: float


@dataclass(frozen=True)
class EmphasizedPrompt:
    """Original prompt plus ordered (phrase text, weight) emphasis entries."""

    text: str
    emphasis: tuple[tuple[str, float], ...] = ()

    def rendered(self) -> str:
        suffix = "".join(f" ({text}:{weight:g})" for text, weight in self.emphasis)
        return self.text + suffix


def pairwise_softmax(tokens: np.ndarray, text_embed: np.ndarray, empty_embed: np.ndarray) -> np.ndarray:
    """Per-token e^{s_text} / (e^{s_text} + e^{s_empty}) over cosine scores."""
    s_text = cosine_logits(tokens, text_embed)
    s_empty = cosine_logits(tokens, empty_embed)
    # stable two-way softmax
    m = np.maximum(s_text, s_empty)
    e_text = np.exp(s_text - m)
    e_empty = np.exp(s_empty - m)
    return e_text / (e_text + e_empty)


def phrase_alignment(
    tokens: np.ndarray,
    phrase_embed: np.ndarray,
    empty_embed: np.ndarray,
    height: int,
    width: int,
) -> tuple[QualityMap, float]:
    """Alignment map and global-token score for one text embedding."""
    values = pairwise_softmax(tokens, phrase_embed, empty_embed)
    side = token_grid_side(values.shape[0])
    grid = values[1:].reshape(side, side)
    upsampled = np.clip(bicubic_upsample(grid, height, width), 0.0, 1.0)
    score = float(values[0])
    return QualityMap(values=upsampled, summary=score), score


def classify_defects(
    alignments: list[PhraseAlignment],
    ancestors: dict[int, int],
    thresholds: AlignmentThresholds,
) -> list[DefectRecord]:
    """At most one defect per phrase; a missing noun outranks weak modifiers."""
    defects: list[DefectRecord] = []
    for pa in alignments:
        if pa.noun_score < thresholds.a_bound:
            defects.append(DefectRecord(pa.phrase_id, DefectKind.NOUN_UNMATCHED, ancestors[pa.phrase_id]))
        elif pa.score < pa.noun_score:
            defects.append(DefectRecord(pa.phrase_id, DefectKind.ADJ_UNMATCHED, pa.phrase_id))
    return defects


def merge_alignment_map(
    defects: list[DefectRecord],
    noun_maps: dict[int, QualityMap],
    height: int,
    width: int,
) -> tuple[np.ndarray, bool]:
    """Elementwise product of the targeted noun maps, starting from ones.

    Returns the merged values plus a flag saying whether any defect
    fired; callers wrap the values into a QualityMap once the alignment
    score is known.
    """
    merged = np.ones((height, width), dtype=np.float64)
    for defect in defects:
        target_map = noun_maps[defect.target]
        if target_map.height != height or target_map.width != width:
            raise ValueError(
                f"noun map for token {defect.target} is {target_map.height}x{target_map.width},"
                f" expected {height}x{width}"
            )
        merged *= np.asarray(target_map.values, dtype=np.float64)
    return merged, bool(defects)


def emphasize_prompt(
    prompt: str,
    defects: list[DefectRecord],
    phrase_texts: dict[int, str],
) -> EmphasizedPrompt:
    """Attach one weighted emphasis entry per defective phrase, in noun-id order."""
    entries = tuple(
        (phrase_texts[d.phrase_id], EMPHASIS_WEIGHT)
        for d in sorted(defects, key=lambda d: d.phrase_id)
    )
    return EmphasizedPrompt(text=prompt, emphasis=entries)


def alignment_score(global_similarity: float, phrase_scores: list[float], beta: float) -> float:
    """Global prompt similarity, penalized by every phrase below beta."""
    if not (0.0 <= global_similarity <= 1.0):
        raise ValueError(f"global similarity must be in [0, 1], got {global_similarity}")
    score = float(global_similarity)
    for s in phrase_scores:
        score *= min(s / beta, 1.0)
    return score


@dataclass(frozen=True)
class PhraseEmbeddings:
    """Decoded phrase-embedding bundle: prompt row, empty row, per-phrase rows."""

    prompt: str
    noun_ids: tuple[int, ...]
    phrase_texts: tuple[str, ...]
    noun_texts: tuple[str, ...]
    full_prompt: np.ndarray
    empty: np.ndarray
    phrase_rows: np.ndarray  # (n, dim)
    noun_rows: np.ndarray  # (n, dim)


def load_phrase_embeddings(tensor: EmbeddingTensor, sidecar_json: str) -> PhraseEmbeddings:
    """Split the (2n+2) x dim layout [prompt, empty, phrases..., nouns...].

    The JSON sidecar carries the prompt plus per-phrase noun ids and
    texts, in the same order as the embedding rows.
    """
    try:
        meta = json.loads(sidecar_json)
        prompt = meta["prompt"]
        phrases = meta["phrases"]
        noun_ids = tuple(int(p["noun_id"]) for p in phrases)
        phrase_texts = tuple(str(p["text"]) for p in phrases)
        noun_texts = tuple(str(p["noun_text"]) for p in phrases)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise TensorFormatError(f"bad phrase-embedding sidecar: {exc}") from exc
    n = len(noun_ids)
    expected_rows = 2 * n + 2
    if tensor.rows != expected_rows:
        raise TensorFormatError(
            f"phrase tensor has {tensor.rows} rows, sidecar implies {expected_rows}"
            f" (prompt + empty + {n} phrases + {n} nouns)"
        )
    data = np.asarray(tensor.data, dtype=np.float64)
    return PhraseEmbeddings(
        prompt=prompt,
        noun_ids=noun_ids,
        phrase_texts=phrase_texts,
        noun_texts=noun_texts,
        full_prompt=data[0],
        empty=data[1],
        phrase_rows=data[2 : 2 + n],
        noun_rows=data[2 + n :],
    )


@dataclass(frozen=True)
class AlignmentReport:
    """Everything the alignment pass produces for one prompt/image pair."""

    alignments: list[PhraseAlignment]
    defects: list[DefectRecord]
    merged: QualityMap
    fired: bool
    global_similarity: float
    score: float
    emphasized: EmphasizedPrompt


def align_prompt(
    tokens: np.ndarray,
    tree: SyntaxTree,
    seg: PhraseSegmentation,
    ancestors: dict[int, int],
    embeds: PhraseEmbeddings,
    thresholds: AlignmentThresholds,
    height: int,
    width: int,
) -> AlignmentReport:
    """Run the whole alignment pass for one prompt against one token matrix."""
    if embeds.noun_ids != tuple(seg.centers):
        raise TensorFormatError(
            f"phrase embeddings were built for noun ids {list(embeds.noun_ids)},"
            f" parse yields {list(seg.centers)}"
        )
    alignments: list[PhraseAlignment] = []
    noun_maps: dict[int, QualityMap] = {}
    for idx, center in enumerate(seg.centers):
        phrase_map, phrase_score = phrase_alignment(
            tokens, embeds.phrase_rows[idx], embeds.empty, height, width
        )
        noun_map, noun_score = phrase_alignment(
            tokens, embeds.noun_rows[idx], embeds.empty, height, width
        )
        noun_maps[center] = noun_map
        alignments.append(
            PhraseAlignment(phrase_id=center, map=phrase_map, score=phrase_score, noun_score=noun_score)
        )

    defects = classify_defects(alignments, ancestors, thresholds)
    merged_values, fired = merge_alignment_map(defects, noun_maps, height, width)

    global_similarity = float(
        (cosine_logits(np.asarray(tokens, dtype=np.float64)[:1], embeds.full_prompt)[0] + 1.0) / 2.0
    )
    score = alignment_score(global_similarity, [pa.score for pa in alignments], thresholds.beta)

    phrase_texts = {c: seg.phrase_text(tree, c) for c in seg.centers}
    emphasized = emphasize_prompt(embeds.prompt, defects, phrase_texts)
    merged = QualityMap(values=merged_values, summary=score)
    return AlignmentReport(
        alignments=alignments,
        defects=defects,
        merged=merged,
        fired=fired,
        global_similarity=global_similarity,
        score=score,
        emphasized=emphasized,
    )
