import io
import struct

import numpy as np
import pytest
from PIL import Image

from refineplan import (
    EmbeddingTensor,
    NonFiniteValueError,
    QualityMap,
    TensorFormatError,
    TruncatedPayloadError,
    load_grt,
    load_tensor,
    render_heatmap,
    save_grt,
    save_tensor,
)
from refineplan.tensorio import quantize_unit_interval


def _write(path, blob: bytes):
    path.write_bytes(blob)
    return path


def grt_bytes(shape, values) -> bytes:
    header = b"GRT1" + struct.pack("<I", len(shape)) + struct.pack(f"<{len(shape)}I", *shape)
    return header + struct.pack(f"<{len(values)}f", *values)


def test_identity_payload_roundtrip(tmp_path):
    path = _write(tmp_path / "t.grt", grt_bytes((2, 2), [1.0, 0.0, 0.0, 1.0]))
    tensor = load_tensor(path)
    assert tensor.rows == 2 and tensor.cols == 2
    assert tensor.data.tolist() == [[1.0, 0.0], [0.0, 1.0]]


def test_bad_magic_rejected(tmp_path):
    path = _write(tmp_path / "bad.grt", b"NOPE" + grt_bytes((1, 1), [0.5])[4:])
    with pytest.raises(TensorFormatError):
        load_tensor(path)


def test_truncated_payload_rejected(tmp_path):
    blob = grt_bytes((2, 3), [0.0] * 6)
    path = _write(tmp_path / "short.grt", blob[:-4])
    with pytest.raises(TruncatedPayloadError):
        load_tensor(path)


def test_truncated_header_rejected(tmp_path):
    path = _write(tmp_path / "hdr.grt", b"GRT1\x02\x00")
    with pytest.raises(TruncatedPayloadError):
        load_tensor(path)


def test_trailing_bytes_rejected(tmp_path):
    path = _write(tmp_path / "long.grt", grt_bytes((1, 2), [1.0, 2.0]) + b"\x00\x00")
    with pytest.raises(TensorFormatError):
        load_tensor(path)


def test_nonfinite_payload_rejected(tmp_path):
    path = _write(tmp_path / "nan.grt", grt_bytes((1, 2), [1.0, float("nan")]))
    with pytest.raises(NonFiniteValueError):
        load_tensor(path)


def test_zero_dim_rejected(tmp_path):
    path = _write(tmp_path / "zero.grt", grt_bytes((0, 2), []))
    with pytest.raises(TensorFormatError):
        load_tensor(path)


def test_rank_mismatch_for_tensor(tmp_path):
    path = _write(tmp_path / "r3.grt", grt_bytes((1, 1, 2), [1.0, 2.0]))
    assert load_grt(path).shape == (1, 1, 2)
    with pytest.raises(TensorFormatError):
        load_tensor(path)


def test_scalar_roundtrip(tmp_path):
    save_tensor(EmbeddingTensor(np.array([[0.5]], dtype=np.float32)), tmp_path / "s.grt")
    assert load_tensor(tmp_path / "s.grt").data.tolist() == [[0.5]]


def test_dims_roundtrip(tmp_path):
    save_tensor(EmbeddingTensor(np.zeros((3, 4), dtype=np.float32)), tmp_path / "d.grt")
    loaded = load_tensor(tmp_path / "d.grt")
    assert (loaded.rows, loaded.cols) == (3, 4)


def test_random_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    data = rng.standard_normal((7, 512)).astype(np.float32)
    save_tensor(EmbeddingTensor(data), tmp_path / "rt.grt")
    reloaded = load_tensor(tmp_path / "rt.grt")
    assert reloaded.data.tobytes() == data.tobytes()


def test_embedding_tensor_validation():
    with pytest.raises(TensorFormatError):
        EmbeddingTensor(np.zeros(3, dtype=np.float32))
    with pytest.raises(NonFiniteValueError):
        EmbeddingTensor(np.array([[np.inf]], dtype=np.float32))


def test_save_rejects_nonfinite(tmp_path):
    with pytest.raises(NonFiniteValueError):
        save_grt(tmp_path / "x.grt", np.array([[np.nan]]))


def _png_pixels(path) -> np.ndarray:
    with Image.open(path) as img:
        assert img.mode == "L"
        return np.asarray(img)


def test_heatmap_black_and_white(tmp_path):
    black = QualityMap(values=np.zeros((4, 5)), summary=0.0)
    white = QualityMap(values=np.ones((4, 5)), summary=1.0)
    render_heatmap(black, tmp_path / "b.png")
    render_heatmap(white, tmp_path / "w.png")
    assert (_png_pixels(tmp_path / "b.png") == 0).all()
    assert (_png_pixels(tmp_path / "w.png") == 255).all()


def test_heatmap_midpoint_pixel(tmp_path):
    render_heatmap(QualityMap(values=np.full((2, 2), 0.5), summary=0.5), tmp_path / "m.png")
    assert (_png_pixels(tmp_path / "m.png") == 128).all()


def test_heatmap_clamps_out_of_range(tmp_path):
    quality = QualityMap(values=np.array([[-0.5, 1.5]]), summary=0.0)
    render_heatmap(quality, tmp_path / "c.png")
    assert _png_pixels(tmp_path / "c.png").tolist() == [[0, 255]]


def test_quantize_matches_rounding_rule():
    rng = np.random.default_rng(11)
    values = rng.uniform(-0.2, 1.2, size=500)
    got = quantize_unit_interval(values)
    expected = np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    assert (got == expected).all()


def test_png_bytes_deterministic(tmp_path):
    rng = np.random.default_rng(3)
    quality = QualityMap(values=rng.uniform(size=(32, 48)), summary=0.0)
    render_heatmap(quality, tmp_path / "a.png")
    render_heatmap(quality, tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
