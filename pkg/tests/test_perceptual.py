import numpy as np
import pytest
from hypothesis import given, strategies as st

from refineplan import (
    DegenerateInputError,
    PenaltyThresholds,
    QualityTextBank,
    TensorFormatError,
    bicubic_upsample,
    cask_combine,
    perceptual_quality_map,
    raw_quality_logits,
)


def bank_from_directions(directions: np.ndarray, rng=None) -> QualityTextBank:
    """Bank whose (positive - negative) differences equal the given rows."""
    rng = rng or np.random.default_rng(123)
    dim = directions.shape[1]
    pairs = np.empty((4, 2, dim))
    for i in range(4):
        base = rng.standard_normal(dim)
        pairs[i, 0] = base + directions[i] / 2.0
        pairs[i, 1] = base - directions[i] / 2.0
    return QualityTextBank(pairs)


def test_bank_shape_validation():
    with pytest.raises(TensorFormatError):
        QualityTextBank(np.zeros((3, 2, 4)))
    with pytest.raises(DegenerateInputError):
        QualityTextBank(np.zeros((4, 2, 4)))


def test_bank_from_tensor_row_order():
    rows = np.arange(8 * 3, dtype=np.float32).reshape(8, 3) + 1.0
    from refineplan import EmbeddingTensor

    bank = QualityTextBank.from_tensor(EmbeddingTensor(rows))
    assert bank.pairs[0, 0].tolist() == [1.0, 2.0, 3.0]
    assert bank.pairs[0, 1].tolist() == [4.0, 5.0, 6.0]
    assert bank.pairs[3, 1].tolist() == [22.0, 23.0, 24.0]
    assert bank.labels == ("overall", "technical", "rationality", "naturalness")


def test_penalty_threshold_validation():
    PenaltyThresholds((1.0, 0.5, 0.1))
    with pytest.raises(ValueError):
        PenaltyThresholds((0.0, 0.5, 0.5))
    with pytest.raises(ValueError):
        PenaltyThresholds((0.5, 0.5, 1.5))


def test_raw_logits_parallel_and_orthogonal():
    directions = np.vstack([np.eye(4)[0], np.eye(4)[1], np.eye(4)[2], np.eye(4)[3]])
    bank = bank_from_directions(directions)
    tokens = np.array([[2.0, 0.0, 0.0, 0.0]])
    raw = raw_quality_logits(tokens, bank)
    assert raw[0, 0] == pytest.approx(1.0, abs=1e-12)  # parallel to factor 0
    assert raw[1:, 0] == pytest.approx([0.5, 0.5, 0.5], abs=1e-12)  # orthogonal


def test_raw_logits_identical_pair_rejected():
    pairs = np.ones((4, 2, 3))
    pairs[:, 0] += np.arange(3)  # distinct pos rows, but pos-neg nonzero...
    pairs[2, 1] = pairs[2, 0]  # ...except factor 2
    bank = QualityTextBank(pairs)
    with pytest.raises(DegenerateInputError):
        raw_quality_logits(np.ones((2, 3)), bank)


def test_cask_fixture_value():
    raw = np.array([[0.8], [0.5], [0.9], [0.7]])
    out = cask_combine(raw, PenaltyThresholds((0.6, 0.6, 0.6)))
    assert out[0] == pytest.approx(0.6666666666666667, rel=1e-12)


def test_cask_no_penalty_identity():
    raw = np.array([[0.7, 0.2], [0.6, 0.9], [0.5, 0.5], [1.0, 0.8]])
    out = cask_combine(raw, PenaltyThresholds((0.5, 0.5, 0.5)))
    assert out.tolist() == [0.7, 0.2]


def test_cask_zero_annihilates():
    raw = np.array([[0.9], [0.0], [0.9], [0.9]])
    assert cask_combine(raw, PenaltyThresholds())[0] == 0.0


def test_cask_rejects_out_of_range():
    with pytest.raises(ValueError):
        cask_combine(np.full((4, 1), 1.2), PenaltyThresholds())


@given(st.integers(0, 2**31 - 1))
def test_cask_monotone_and_bounded(seed):
    rng = np.random.default_rng(seed)
    raw = rng.uniform(size=(4, 6))
    alpha = PenaltyThresholds(tuple(rng.uniform(0.1, 1.0, size=3)))
    base = cask_combine(raw, alpha)
    assert (base <= raw[0] + 1e-12).all()  # penalty never raises the overall row
    bumped = raw.copy()
    i = rng.integers(0, 4)
    k = rng.integers(0, 6)
    bumped[i, k] = min(1.0, bumped[i, k] + rng.uniform(0.0, 0.5))
    assert (cask_combine(bumped, alpha) >= base - 1e-12).all()


def test_bicubic_constant_grid():
    out = bicubic_upsample(np.full((3, 3), 0.7), 9, 13)
    assert out == pytest.approx(np.full((9, 13), 0.7), abs=1e-12)


def test_bicubic_identity_resample():
    rng = np.random.default_rng(2)
    grid = rng.uniform(size=(5, 4))
    assert bicubic_upsample(grid, 5, 4) == pytest.approx(grid, abs=0)


def test_bicubic_matches_reference_cases(oracle_cases):
    for case in oracle_cases["bicubic"]:
        got = bicubic_upsample(np.array(case["grid"]), case["height"], case["width"])
        assert got == pytest.approx(np.array(case["expected"]), rel=1e-10, abs=1e-12)


def test_bicubic_rejects_downsampling():
    with pytest.raises(ValueError):
        bicubic_upsample(np.zeros((4, 4)), 2, 8)


def test_pq_map_orthogonal_bank_is_constant():
    # tokens live in one subspace, bank directions in another
    dim = 8
    tokens = np.zeros((5, dim))
    tokens[:, 0] = [1.0, 0.5, 2.0, 1.5, 3.0]
    directions = np.zeros((4, dim))
    directions[:, 4:] = np.eye(4)
    bank = bank_from_directions(directions)
    alpha = PenaltyThresholds((0.8, 0.5, 0.5))
    quality = perceptual_quality_map(tokens, bank, alpha, 6, 6)
    expected = 0.5 * (0.5 / 0.8)
    assert quality.summary == pytest.approx(expected, rel=1e-12)
    assert quality.values == pytest.approx(np.full((6, 6), expected), rel=1e-9)


def test_pq_map_composition_matches_pieces():
    rng = np.random.default_rng(77)
    tokens = rng.standard_normal((10, 6))
    bank = bank_from_directions(rng.standard_normal((4, 6)), rng)
    alpha = PenaltyThresholds((0.4, 0.6, 0.9))
    quality = perceptual_quality_map(tokens, bank, alpha, 12, 15)
    combined = cask_combine(raw_quality_logits(tokens, bank), alpha)
    assert quality.summary == combined[0]
    expected = np.clip(bicubic_upsample(combined[1:].reshape(3, 3), 12, 15), 0.0, 1.0)
    assert quality.values == pytest.approx(expected, abs=1e-7)  # stored as float32


def test_pq_map_single_spatial_token():
    tokens = np.array([[1.0, 0.2], [0.4, 1.0]])
    bank = bank_from_directions(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]]))
    quality = perceptual_quality_map(tokens, bank, PenaltyThresholds(), 3, 3)
    combined = cask_combine(raw_quality_logits(tokens, bank), PenaltyThresholds())
    assert quality.values == pytest.approx(np.full((3, 3), combined[1]), rel=1e-6)


def test_pq_map_range_and_determinism():
    rng = np.random.default_rng(31)
    tokens = rng.standard_normal((17, 12))
    bank = bank_from_directions(rng.standard_normal((4, 12)), rng)
    first = perceptual_quality_map(tokens, bank, PenaltyThresholds(), 20, 20)
    second = perceptual_quality_map(tokens, bank, PenaltyThresholds(), 20, 20)
    assert first.values.tobytes() == second.values.tobytes()
    assert first.values.min() >= 0.0 and first.values.max() <= 1.0
