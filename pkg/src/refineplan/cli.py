"""Command-line pipeline: perceptual map, alignment map, refinement plan.

Every command is a pure function of its input files and flags; outputs
are written atomically so re-runs are byte-identical. Exit codes: 0 ok,
2 missing input, 3 parse/format error, 4 numeric or degenerate input.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click
import numpy as np

from .alignment import AlignmentThresholds, align_prompt, load_phrase_embeddings
from .attention import vvv_attention, NORM_MODES
from .errors import (
    ConlluParseError,
    DegenerateInputError,
    NonFiniteValueError,
    TensorFormatError,
)
from .parsing import parse_conllu, phrase_ancestors, segment_phrases
from .perceptual import PenaltyThresholds, QualityTextBank, perceptual_quality_map
from .planner import (
    PlannerConfig,
    build_refinement_mask,
    plan_refinement,
    quantize9,
    write_plan,
)
from .tensorio import (
    atomic_write_bytes,
    load_grt,
    load_tensor,
    quantize_unit_interval,
    render_heatmap,
    save_grt,
    write_gray_png,
)

EXIT_MISSING_INPUT = 2
EXIT_PARSE_ERROR = 3
EXIT_NUMERIC_ERROR = 4


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def engine_errors(fn):
    """Map engine exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConlluParseError, TensorFormatError) as exc:
            _fail(EXIT_PARSE_ERROR, str(exc))
        except (NonFiniteValueError, DegenerateInputError) as exc:
            _fail(EXIT_NUMERIC_ERROR, str(exc))

    return wrapper


def _require_file(path: str | None, label: str) -> str:
    if path is None:
        raise click.UsageError(f"missing required option for {label}")
    if not os.path.isfile(path):
        _fail(EXIT_MISSING_INPUT, f"{label} not found: {path}")
    return path


def _parse_alpha(_ctx, _param, value: str) -> PenaltyThresholds:
    parts = value.split(",")
    if len(parts) != 3:
        raise click.BadParameter(f"expected 3 comma-separated floats, got {value!r}")
    try:
        return PenaltyThresholds(tuple(float(p) for p in parts))
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc


def _parse_map_size(_ctx, _param, value: str) -> tuple[int, int]:
    try:
        h_str, w_str = value.lower().split("x")
        height, width = int(h_str), int(w_str)
    except ValueError:
        raise click.BadParameter(f"expected HxW, got {value!r}") from None
    if height < 1 or width < 1:
        raise click.BadParameter(f"map size must be positive, got {value!r}")
    return height, width


def _load_tokens(image_tokens: str | None, value_matrix: str | None, norm: str) -> np.ndarray:
    if (image_tokens is None) == (value_matrix is None):
        raise click.UsageError("exactly one of --image-tokens / --value-matrix is required")
    if value_matrix is not None:
        path = _require_file(value_matrix, "value matrix")
        return vvv_attention(load_tensor(path).data, norm=norm)
    path = _require_file(image_tokens, "image tokens")
    return np.asarray(load_tensor(path).data, dtype=np.float64)


def _write_json(path: str, doc) -> None:
    atomic_write_bytes(path, (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8"))


def tokens_options(fn):
    fn = click.option(
        "--image-tokens",
        type=click.Path(),
        help="GRT token matrix (row 0 global, rows 1..L spatial), already attention-mixed.",
    )(fn)
    fn = click.option(
        "--value-matrix",
        type=click.Path(),
        help="GRT raw value matrix; value-only attention is applied before use.",
    )(fn)
    fn = click.option(
        "--norm",
        type=click.Choice(NORM_MODES),
        default="frobenius",
        show_default=True,
        help="Logit scale used when mixing a raw value matrix.",
    )(fn)
    fn = click.option(
        "--map-size",
        default="224x224",
        show_default=True,
        callback=_parse_map_size,
        help="Output map size as HxW.",
    )(fn)
    return fn


def alignment_options(fn):
    fn = click.option(
        "--phrase-embeds",
        type=click.Path(),
        required=True,
        help="GRT phrase-embedding bundle: [prompt, empty, phrases..., nouns...].",
    )(fn)
    fn = click.option(
        "--phrase-meta",
        type=click.Path(),
        default=None,
        help="JSON sidecar for --phrase-embeds. [default: <phrase-embeds>.json]",
    )(fn)
    fn = click.option(
        "--conllu",
        type=click.Path(),
        required=True,
        help="CoNLL-U dependency parse of the prompt.",
    )(fn)
    fn = click.option(
        "--a-bound",
        type=float,
        default=0.5,
        show_default=True,
        help="Noun score below this flags a missing noun.",
    )(fn)
    fn = click.option(
        "--beta",
        type=float,
        default=0.5,
        show_default=True,
        help="Phrase scores below this penalize the alignment score.",
    )(fn)
    return fn


@click.group()
@click.version_option(package_name="refineplan")
def main():
    """Quality maps and refinement plans from encoder outputs."""


def _compute_aq(phrase_embeds, phrase_meta, conllu, tokens, a_bound, beta, map_size):
    conllu_path = _require_file(conllu, "conllu")
    embeds_path = _require_file(phrase_embeds, "phrase embeddings")
    meta_path = _require_file(
        phrase_meta if phrase_meta is not None else embeds_path + ".json",
        "phrase-embedding sidecar",
    )
    with open(conllu_path, "r", encoding="utf-8") as handle:
        tree = parse_conllu(handle.read())
    seg = segment_phrases(tree)
    ancestors = phrase_ancestors(tree, seg)
    with open(meta_path, "r", encoding="utf-8") as handle:
        sidecar = handle.read()
    embeds = load_phrase_embeddings(load_tensor(embeds_path), sidecar)
    try:
        thresholds = AlignmentThresholds(a_bound=a_bound, beta=beta)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc
    report = align_prompt(tokens, tree, seg, ancestors, embeds, thresholds, *map_size)
    return tree, seg, report, thresholds


def _aq_report_doc(tree, seg, report) -> dict:
    return {
        "fired": report.fired,
        "a": quantize9(report.score),
        "global_similarity": quantize9(report.global_similarity),
        "prompt": report.emphasized.text,
        "prompt_emphasized": report.emphasized.rendered(),
        "emphasis": [
            {"text": text, "weight": quantize9(weight)} for text, weight in report.emphasized.emphasis
        ],
        "phrases": [
            {
                "noun_id": pa.phrase_id,
                "text": seg.phrase_text(tree, pa.phrase_id),
                "a_phs": quantize9(pa.score),
                "a_pns": quantize9(pa.noun_score),
            }
            for pa in report.alignments
        ],
        "defects": [
            {"noun_id": d.phrase_id, "kind": d.kind.value, "target": d.target}
            for d in report.defects
        ],
    }


@main.command("pq")
@tokens_options
@click.option("--bank", type=click.Path(), required=True, help="GRT 8 x dim quality text bank.")
@click.option(
    "--alpha",
    default="0.5,0.5,0.5",
    show_default=True,
    callback=_parse_alpha,
    help="Defect-factor penalty thresholds, three comma-separated floats in (0,1].",
)
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@click.option("--save-maps", is_flag=True, help="Also write the raw map as pq_map.grt.")
@engine_errors
def cmd_pq(image_tokens, value_matrix, norm, map_size, bank, alpha, out, save_maps):
    """Perceptual quality map (pq.png) and score (pq.json)."""
    tokens = _load_tokens(image_tokens, value_matrix, norm)
    bank_path = _require_file(bank, "bank")
    text_bank = QualityTextBank.from_tensor(load_tensor(bank_path))
    quality = perceptual_quality_map(tokens, text_bank, alpha, *map_size)
    os.makedirs(out, exist_ok=True)
    render_heatmap(quality, os.path.join(out, "pq.png"))
    _write_json(os.path.join(out, "pq.json"), {"p": quantize9(quality.summary), "alpha": list(alpha.alpha)})
    if save_maps:
        save_grt(os.path.join(out, "pq_map.grt"), quality.values)
    click.echo(f"p={quality.summary:.6f} -> {out}")


@main.command("aq")
@tokens_options
@alignment_options
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@click.option("--save-maps", is_flag=True, help="Also write the merged map as aq_map.grt.")
@engine_errors
def cmd_aq(image_tokens, value_matrix, norm, map_size, phrase_embeds, phrase_meta, conllu, a_bound, beta, out, save_maps):
    """Alignment defect report (aq.json) and, when defects fire, aq.png."""
    tokens = _load_tokens(image_tokens, value_matrix, norm)
    tree, seg, report, _ = _compute_aq(
        phrase_embeds, phrase_meta, conllu, tokens, a_bound, beta, map_size
    )
    os.makedirs(out, exist_ok=True)
    _write_json(os.path.join(out, "aq.json"), _aq_report_doc(tree, seg, report))
    if report.fired:
        render_heatmap(report.merged, os.path.join(out, "aq.png"))
        if save_maps:
            save_grt(os.path.join(out, "aq_map.grt"), report.merged.values)
    click.echo(f"a={report.score:.6f} defects={len(report.defects)} -> {out}")


@main.command("plan")
@tokens_options
@alignment_options
@click.option("--bank", type=click.Path(), required=True, help="GRT 8 x dim quality text bank.")
@click.option(
    "--alpha",
    default="0.5,0.5,0.5",
    show_default=True,
    callback=_parse_alpha,
    help="Defect-factor penalty thresholds, three comma-separated floats in (0,1].",
)
@click.option("--tau", type=float, default=0.6, show_default=True, help="Mask binarization threshold.")
@click.option("--delta", type=float, default=0.05, show_default=True, help="Stage-2 strength.")
@click.option("--total-steps", type=int, default=20, show_default=True, help="Total denoising iterations.")
@click.option(
    "--orientation",
    type=click.Choice(["literal", "inverted"]),
    default="literal",
    show_default=True,
    help="Stage-1 strength from (p+a)/2, taken as-is or complemented.",
)
@click.option("--image", default="", help="Image path/URI recorded in the plan for the executor.")
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@engine_errors
def cmd_plan(
    image_tokens,
    value_matrix,
    norm,
    map_size,
    phrase_embeds,
    phrase_meta,
    conllu,
    a_bound,
    beta,
    bank,
    alpha,
    tau,
    delta,
    total_steps,
    orientation,
    image,
    out,
):
    """Full pipeline: both maps, fused mask, two-stage plan.json."""
    tokens = _load_tokens(image_tokens, value_matrix, norm)
    bank_path = _require_file(bank, "bank")
    text_bank = QualityTextBank.from_tensor(load_tensor(bank_path))
    quality = perceptual_quality_map(tokens, text_bank, alpha, *map_size)
    _, _, report, align_thresholds = _compute_aq(
        phrase_embeds, phrase_meta, conllu, tokens, a_bound, beta, map_size
    )
    try:
        config = PlannerConfig(tau=tau, delta=delta, total_steps=total_steps, orientation=orientation)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc
    mask = build_refinement_mask(quality, report.merged if report.fired else None, report.fired, tau)
    plan = plan_refinement(
        quality.summary,
        report.score,
        mask,
        report.emphasized,
        config,
        alpha,
        align_thresholds,
        image=image,
    )
    plan_path = write_plan(plan, out)
    click.echo(f"p={quality.summary:.6f} a={report.score:.6f} -> {plan_path}")


@main.command("render")
@click.option("--map", "map_path", type=click.Path(), required=True, help="Rank-2 GRT map to render.")
@click.option("--out", type=click.Path(), required=True, help="Output PNG path.")
@engine_errors
def cmd_render(map_path, out):
    """Render any rank-2 GRT tensor as a grayscale heatmap PNG."""
    path = _require_file(map_path, "map")
    values = load_grt(path)
    if values.ndim != 2:
        raise TensorFormatError(f"{path}: heatmap input must be rank 2, got rank {values.ndim}")
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_gray_png(out, quantize_unit_interval(values))
    click.echo(f"{path} -> {out}")


if __name__ == "__main__":
    main()
