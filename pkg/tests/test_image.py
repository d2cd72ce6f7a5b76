"""Quantization round-trip contracts and bilinear/nearest resampling."""

import numpy as np
import pytest

from radnoise.errors import DimensionError, NumericError
from radnoise.image import (
    HALF_STEP,
    NormalizedImage,
    QuantizedImage,
    normalize,
    quantize,
    resample,
    resample_nearest,
)


def test_normalize_bounds_and_midpoint():
    raw = QuantizedImage(np.array([[0, 255, 128]], dtype=np.uint8))
    img = normalize(raw)
    assert img.pixels[0, 0] == 0.0
    assert img.pixels[0, 1] == 1.0
    assert img.pixels[0, 2] == 128.0 / 255.0


def test_quantize_rounds_half_away_from_zero():
    img = NormalizedImage(np.array([[0.5, 1.0, 0.0]]))
    levels = quantize(img).levels
    assert levels.tolist() == [[128, 255, 0]]


def test_quantize_then_normalize_all_256_levels_is_identity():
    raw = QuantizedImage(np.arange(256, dtype=np.uint8).reshape(16, 16))
    assert np.array_equal(quantize(normalize(raw)).levels, raw.levels)


def test_normalize_of_quantize_moves_pixels_at_most_half_step():
    rng = np.random.default_rng(7)
    img = NormalizedImage(rng.random((64, 64)))
    back = normalize(quantize(img))
    assert np.abs(back.pixels - img.pixels).max() <= HALF_STEP + 1e-15


def test_zero_area_image_rejected():
    with pytest.raises(DimensionError):
        NormalizedImage(np.zeros((0, 4)))
    with pytest.raises(DimensionError):
        QuantizedImage(np.zeros((4, 0), dtype=np.uint8))


def test_non_finite_pixel_rejected():
    with pytest.raises(NumericError):
        NormalizedImage(np.array([[0.5, np.nan]]))
    with pytest.raises(NumericError):
        NormalizedImage(np.array([[0.5, 1.5]]))


def test_images_are_immutable():
    img = NormalizedImage(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        img.pixels[0, 0] = 1.0


def test_resample_identity_when_size_matches():
    img = NormalizedImage(np.random.default_rng(0).random((512, 512)))
    assert resample(img, 512, 512) is img


def test_resample_preserves_constant_images_exactly():
    img = NormalizedImage(np.full((2, 2), 0.3))
    out = resample(img, 4, 4)
    assert np.array_equal(out.pixels, np.full((4, 4), 0.3))


def test_resample_align_corners_closed_form():
    img = NormalizedImage(np.array([[0.0, 1.0]]))
    out = resample(img, 1, 3)
    assert out.pixels.tolist() == [[0.0, 0.5, 1.0]]


def test_resample_stays_in_unit_range():
    rng = np.random.default_rng(3)
    img = NormalizedImage(rng.random((17, 13)))
    out = resample(img, 40, 29)
    assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0


def test_resample_rejects_zero_target():
    img = NormalizedImage(np.zeros((4, 4)))
    with pytest.raises(DimensionError):
        resample(img, 0, 4)


def test_resample_nearest_never_invents_labels():
    labels = np.array([[0, 3], [5, 0]], dtype=np.uint8)
    out = resample_nearest(labels, 5, 5)
    assert set(np.unique(out)) <= {0, 3, 5}
    # corners map to corners under align-corners nearest
    assert out[0, 0] == 0 and out[0, -1] == 3 and out[-1, 0] == 5 and out[-1, -1] == 0
