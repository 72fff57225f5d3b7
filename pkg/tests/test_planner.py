import json

import jsonschema
import numpy as np
import pytest
from hypothesis import given, strategies as st
from PIL import Image

from refineplan import (
    AlignmentThresholds,
    EmphasizedPrompt,
    PLAN_SCHEMA,
    PenaltyThresholds,
    PlannerConfig,
    QualityMap,
    build_refinement_mask,
    minmax_normalize,
    plan_refinement,
    plan_to_json,
    write_plan,
)


def qmap(values, summary=0.5) -> QualityMap:
    return QualityMap(values=np.asarray(values, dtype=np.float64), summary=summary)


def test_minmax_constant_becomes_half():
    assert minmax_normalize(np.full((3, 3), 0.7)).tolist() == np.full((3, 3), 0.5).tolist()


def test_minmax_near_constant_treated_as_constant():
    values = np.full((2, 2), 0.7)
    values[0, 0] += 1e-15
    assert (minmax_normalize(values) == 0.5).all()


def test_minmax_rescales_full_range():
    out = minmax_normalize(np.array([[0.2, 0.4], [0.6, 1.0]]))
    assert out == pytest.approx(np.array([[0.0, 0.25], [0.5, 1.0]]), abs=1e-12)


def test_mask_constant_quality_unfired_is_empty():
    mask = build_refinement_mask(qmap(np.full((4, 4), 0.9)), None, False, 0.6)
    assert mask.sum() == 0


def test_mask_marks_low_quality_region():
    values = np.ones((4, 4))
    values[0, 0] = 0.1
    values[0, 1] = 0.4
    mask = build_refinement_mask(qmap(values), None, False, 0.6)
    p_norm = (values - 0.1) / 0.9
    expected = (np.clip(1.0 - p_norm, 0.0, 1.0) >= 0.6).astype(np.uint8)
    assert mask.tolist() == expected.tolist()
    assert mask[0, 0] == 1 and mask[3, 3] == 0


def test_mask_alignment_region_dominates():
    # alignment hotspot forces the mask on even where quality is best
    perceptual = qmap(np.linspace(0.0, 1.0, 16).reshape(4, 4))
    aligned = np.full((4, 4), 0.2)
    aligned[3, 3] = 1.0  # best-quality corner
    mask = build_refinement_mask(perceptual, qmap(aligned), True, 0.6)
    assert mask[3, 3] == 1


def test_mask_requires_alignment_when_fired():
    with pytest.raises(ValueError):
        build_refinement_mask(qmap(np.ones((2, 2))), None, True, 0.6)


def test_mask_dimension_mismatch():
    with pytest.raises(ValueError):
        build_refinement_mask(qmap(np.ones((2, 2))), qmap(np.ones((3, 3))), True, 0.6)


def test_mask_threshold_idempotent():
    rng = np.random.default_rng(12)
    mask = build_refinement_mask(qmap(rng.uniform(size=(8, 8))), None, False, 0.6)
    rebinarized = (mask.astype(np.float64) >= 0.6).astype(np.uint8)
    assert rebinarized.tolist() == mask.tolist()


def test_mask_monotone_under_bounds_preserving_lowering():
    # lowering interior pixels (min and max pixels untouched) only grows the mask
    rng = np.random.default_rng(99)
    for _ in range(50):
        values = rng.uniform(0.2, 0.8, size=(6, 6))
        values[0, 0] = 0.0
        values[5, 5] = 1.0
        base = build_refinement_mask(qmap(values), None, False, 0.55)
        lowered = values.copy()
        interior = rng.uniform(size=(6, 6)) < 0.3
        interior[0, 0] = interior[5, 5] = False
        lowered[interior] = lowered[interior] * rng.uniform(0.0, 1.0)
        new = build_refinement_mask(qmap(lowered), None, False, 0.55)
        assert (new >= base).all()


def default_plan(p=0.6, a=0.4, config=None, prompt=None):
    mask = np.zeros((4, 4), dtype=np.uint8)
    mask[0, 0] = 1
    return plan_refinement(
        p,
        a,
        mask,
        prompt or EmphasizedPrompt(text="a cat", emphasis=(("a cat", 1.1),)),
        config or PlannerConfig(),
        PenaltyThresholds(),
        AlignmentThresholds(),
        image="img.png",
    )


def test_plan_strengths_and_steps():
    plan = default_plan()
    assert plan.stages[0].strength == pytest.approx(0.5)
    assert plan.stages[0].steps == 10
    assert plan.stages[1].strength == 0.05
    assert plan.stages[1].steps == 10
    assert (plan.stages[1].mask == 1).all()
    assert plan.stages[1].prompt.emphasis == ()


def test_plan_inverted_orientation():
    plan = default_plan(config=PlannerConfig(orientation="inverted"))
    assert plan.stages[0].strength == pytest.approx(0.5)  # fixed point
    perfect = default_plan(p=1.0, a=1.0, config=PlannerConfig(orientation="inverted"))
    assert perfect.stages[0].strength == 0.0


def test_plan_odd_total_splits_floor_then_rest():
    plan = default_plan(config=PlannerConfig(total_steps=7))
    assert (plan.stages[0].steps, plan.stages[1].steps) == (3, 4)


def test_plan_explicit_stage1_steps():
    plan = default_plan(config=PlannerConfig(total_steps=20, stage1_steps=15))
    assert (plan.stages[0].steps, plan.stages[1].steps) == (15, 5)


@given(total=st.integers(0, 200))
def test_plan_steps_always_sum_to_total(total):
    plan = default_plan(config=PlannerConfig(total_steps=total))
    assert plan.stages[0].steps + plan.stages[1].steps == total


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(delta=1.5)
    with pytest.raises(ValueError):
        PlannerConfig(total_steps=-1)
    with pytest.raises(ValueError):
        PlannerConfig(orientation="sideways")
    with pytest.raises(ValueError):
        PlannerConfig(total_steps=10, stage1_steps=11)
    with pytest.raises(ValueError):
        PlannerConfig(tau=-0.1)


def test_plan_scores_validated():
    with pytest.raises(ValueError):
        default_plan(p=1.5)


def test_plan_json_deterministic_and_schema_valid():
    doc_a = plan_to_json(default_plan(), ("stage1_mask.png", "stage2_mask.png"))
    doc_b = plan_to_json(default_plan(), ("stage1_mask.png", "stage2_mask.png"))
    assert doc_a == doc_b
    parsed = json.loads(doc_a)
    jsonschema.validate(parsed, PLAN_SCHEMA)
    assert parsed["version"] == "1"
    assert parsed["quality"] == {"p": 0.6, "a": 0.4}
    assert parsed["config"]["total_steps"] == 20
    assert parsed["stages"][0]["emphasis"] == [{"text": "a cat", "weight": 1.1}]
    assert parsed["stages"][1]["emphasis"] == []


def test_plan_floats_are_nine_significant_digits():
    plan = default_plan(p=2.0 / 3.0, a=1.0 / 3.0)
    parsed = json.loads(plan_to_json(plan, ("m1.png", "m2.png")))
    assert parsed["quality"]["p"] == 0.666666667
    assert parsed["quality"]["a"] == 0.333333333
    assert parsed["stages"][0]["strength"] == 0.5


def test_config_hash_tracks_config():
    base = default_plan()
    other = default_plan(config=PlannerConfig(tau=0.7))
    assert base.config_hash() != other.config_hash()
    assert base.config_hash() == default_plan().config_hash()


def test_write_plan_outputs(tmp_path):
    plan_path = write_plan(default_plan(), tmp_path / "out")
    parsed = json.loads((tmp_path / "out" / "plan.json").read_text())
    jsonschema.validate(parsed, PLAN_SCHEMA)
    assert parsed["stages"][0]["mask_path"] == "stage1_mask.png"
    with Image.open(tmp_path / "out" / "stage1_mask.png") as img:
        pixels = np.asarray(img)
    assert set(np.unique(pixels)) <= {0, 255}
    assert pixels[0, 0] == 255
    with Image.open(tmp_path / "out" / "stage2_mask.png") as img:
        assert (np.asarray(img) == 255).all()
    assert plan_path.endswith("plan.json")
