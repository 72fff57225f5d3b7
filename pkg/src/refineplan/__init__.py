"""Quality-map computation and refinement planning for generated images.

The engine consumes encoder outputs (token matrices, text embedding
banks) plus a dependency-parsed prompt, produces pixel-level perceptual
and alignment quality maps with scalar scores, and emits a two-stage
denoising plan (mask, emphasized prompt, strengths, step counts) for an
external diffusion backend to execute.
"""

from .alignment import (
    AlignmentReport,
    AlignmentThresholds,
    DefectKind,
    DefectRecord,
    EmphasizedPrompt,
    PhraseAlignment,
    PhraseEmbeddings,
    align_prompt,
    alignment_score,
    classify_defects,
    emphasize_prompt,
    load_phrase_embeddings,
    merge_alignment_map,
    pairwise_softmax,
    phrase_alignment,
)
from .attention import cosine_logits, token_grid_side, vvv_attention
from .errors import (
    ConlluParseError,
    DegenerateInputError,
    EngineError,
    NonFiniteValueError,
    TensorFormatError,
    TruncatedPayloadError,
)
from .parsing import (
    NOUN_TAGS,
    PhraseSegmentation,
    SyntaxTree,
    TokenNode,
    parse_conllu,
    phrase_ancestors,
    segment_phrases,
)
from .perceptual import (
    FACTOR_LABELS,
    PenaltyThresholds,
    QualityTextBank,
    bicubic_upsample,
    cask_combine,
    perceptual_quality_map,
    raw_quality_logits,
)
from .planner import (
    PLAN_SCHEMA,
    PLAN_VERSION,
    PlannerConfig,
    RefinePlan,
    StageSpec,
    build_refinement_mask,
    minmax_normalize,
    plan_refinement,
    plan_to_json,
    write_plan,
)
from .tensorio import (
    EmbeddingTensor,
    QualityMap,
    load_grt,
    load_tensor,
    render_heatmap,
    save_grt,
    save_tensor,
)

__version__ = "0.1.0"
