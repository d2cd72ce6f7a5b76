"""Normalized and 8-bit grayscale image values plus quantization and resampling.

All types are immutable after construction (backing arrays are marked
read-only) and all operations are pure functions, so they are safe to
share across worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericError

#: Largest change normalize(quantize(img)) can make to an in-range pixel:
#: half of one 8-bit quantization step.
HALF_STEP = 1.0 / 510.0


def _freeze(arr: np.ndarray) -> np.ndarray:
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NormalizedImage:
    """H x W grid of unitless intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D image, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"image dimensions must be positive, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise NumericError("image contains non-finite pixel values")
        if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
            raise NumericError("normalized image has pixel values outside [0, 1]")
        object.__setattr__(self, "pixels", _freeze(arr))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class QuantizedImage:
    """H x W grid of 8-bit integer levels (0-255)."""

    levels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.levels)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D image, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"image dimensions must be positive, got {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise NumericError(f"levels must be integers, got dtype {arr.dtype}")
            if int(arr.min()) < 0 or int(arr.max()) > 255:
                raise NumericError("levels outside the 8-bit range [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "levels", _freeze(arr))

    @property
    def height(self) -> int:
        return self.levels.shape[0]

    @property
    def width(self) -> int:
        return self.levels.shape[1]


def normalize(raw: QuantizedImage) -> NormalizedImage:
    """Map each 8-bit level to level / 255, exactly."""
    return NormalizedImage(raw.levels.astype(np.float64) / 255.0)


def quantize_array(values: np.ndarray) -> np.ndarray:
    """Clamp a raw float array to [0, 1] and round to 8-bit levels.

    Rounding is half-away-from-zero (equivalently half-up after the
    clamp, since values are non-negative) so outputs are bit-reproducible.
    """
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise NumericError("cannot quantize non-finite pixel values")
    clipped = np.clip(values, 0.0, 1.0)
    return np.floor(clipped * 255.0 + 0.5).astype(np.uint8)


def quantize(img: NormalizedImage) -> QuantizedImage:
    """Convert to 8-bit: round(clamp(p, 0, 1) * 255), half away from zero."""
    return QuantizedImage(quantize_array(img.pixels))


def _axis_coords(n_src: int, n_dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Align-corners source coordinates: low index, high index, fraction."""
    if n_dst == 1:
        pos = np.zeros(1, dtype=np.float64)
    else:
        pos = np.arange(n_dst, dtype=np.float64) * (n_src - 1) / (n_dst - 1)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, n_src - 1)
    frac = pos - lo
    return lo, hi, frac


def resample(img: NormalizedImage, target_h: int, target_w: int) -> NormalizedImage:
    """Bilinear resampling with the align-corners endpoint convention.

    Identity (same object) when the target matches the source size.
    Interpolation uses the v0 + f*(v1 - v0) form so constant images are
    preserved exactly; a final clip guards sub-ulp overshoot.
    """
    if target_h < 1 or target_w < 1:
        raise DimensionError(f"target dimensions must be positive, got {(target_h, target_w)}")
    if (target_h, target_w) == (img.height, img.width):
        return img

    src = img.pixels
    r0, r1, fr = _axis_coords(img.height, target_h)
    c0, c1, fc = _axis_coords(img.width, target_w)

    top = src[np.ix_(r0, c0)]
    top = top + fc[np.newaxis, :] * (src[np.ix_(r0, c1)] - top)
    bot = src[np.ix_(r1, c0)]
    bot = bot + fc[np.newaxis, :] * (src[np.ix_(r1, c1)] - bot)
    out = top + fr[:, np.newaxis] * (bot - top)
    return NormalizedImage(np.clip(out, 0.0, 1.0))


def resample_nearest(labels: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Nearest-neighbor resampling for label/mask images.

    Never interpolates, so no label values are invented.
    """
    if target_h < 1 or target_w < 1:
        raise DimensionError(f"target dimensions must be positive, got {(target_h, target_w)}")
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise DimensionError(f"expected a 2-D label image, got ndim={labels.ndim}")
    if (target_h, target_w) == labels.shape:
        return labels.copy()

    def nearest(n_src: int, n_dst: int) -> np.ndarray:
        if n_dst == 1:
            return np.zeros(1, dtype=np.int64)
        pos = np.arange(n_dst, dtype=np.float64) * (n_src - 1) / (n_dst - 1)
        return np.minimum(np.floor(pos + 0.5).astype(np.int64), n_src - 1)

    return labels[np.ix_(nearest(labels.shape[0], target_h), nearest(labels.shape[1], target_w))]
