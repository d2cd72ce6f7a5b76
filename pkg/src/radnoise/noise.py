"""Severity-parametrized quantum (Poisson) and electronic (Gaussian) noise.

The quantum source models photon-counting statistics: at severity s_q the
effective photon budget per pixel is n0 / s_q**2, each pixel draws a
Poisson count with mean intensity * budget, and the count is rescaled
back to intensity units.  The electronic source adds zero-mean Gaussian
noise with standard deviation sigma0 * s_e, independent of the signal.

Severity 0 means the source is omitted entirely.  Quantum severities in
(0, 1) are rejected: the photon-budget calibration anchors at s_q = 1
and is not defined below it.

When both sources are active the quantum stage runs first (photon
detection precedes readout), the electronic stage operates on its
output, and clamping to [0, 1] happens exactly once, at realization
assembly, so moment checks can run on the unclamped fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from decimal import Decimal

import numpy as np

from .errors import DomainError, ParseError, UndefinedSNRError
from .image import NormalizedImage
from .rng import RandomStream, derive_key, poisson_at_slots, standard_normals

DEFAULT_N0 = 1000.0  # baseline photons/pixel at s_q = 1
DEFAULT_SIGMA0 = 0.1  # baseline Gaussian std, normalized intensity units

_QUANTUM_STAGE = "quantum"
_ELECTRONIC_STAGE = "electronic"

_CONFIG_KEYS = ("s_q", "s_e", "n0", "sigma0", "seed")


@dataclass(frozen=True)
class NoiseSpec:
    """Severity pair plus calibration constants and a reproducibility seed."""

    s_q: float = 0.0
    s_e: float = 0.0
    n0: float = DEFAULT_N0
    sigma0: float = DEFAULT_SIGMA0
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.s_q) or self.s_q < 0:
            raise DomainError(f"s_q must be finite and >= 0, got {self.s_q}")
        if not math.isfinite(self.s_e) or self.s_e < 0:
            raise DomainError(f"s_e must be finite and >= 0, got {self.s_e}")
        if not math.isfinite(self.n0) or self.n0 <= 0:
            raise DomainError(f"n0 must be finite and positive, got {self.n0}")
        if not math.isfinite(self.sigma0) or self.sigma0 < 0:
            raise DomainError(f"sigma0 must be finite and >= 0, got {self.sigma0}")

    def to_config(self) -> str:
        """Serialize to the plain-text key-value block format."""
        return "".join(f"{k} = {getattr(self, k)!r}\n" for k in _CONFIG_KEYS)

    @classmethod
    def from_config(cls, text: str) -> "NoiseSpec":
        values: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"noise config line {lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            values[key.strip()] = raw.strip()
        unknown = set(values) - set(_CONFIG_KEYS)
        if unknown:
            raise ParseError(f"noise config has unknown keys: {sorted(unknown)}")
        try:
            kwargs: dict[str, float | int] = {}
            for key in _CONFIG_KEYS:
                if key not in values:
                    continue
                kwargs[key] = int(values[key]) if key == "seed" else float(values[key])
        except ValueError as exc:
            raise ParseError(f"noise config: {exc}") from exc
        return cls(**kwargs)


@dataclass(frozen=True)
class NoiseRealization:
    """One corrupted image plus the unclamped per-pixel stage fields.

    ``quantum_field`` holds the rescaled Poisson intensities Q (may
    exceed 1); ``electronic_field`` holds the additive Gaussian noise.
    The corrupted image equals clamp(quantum + electronic) pixelwise,
    with the omitted stages replaced by the clean input / zero.
    """

    corrupted: NormalizedImage
    quantum_field: np.ndarray | None
    electronic_field: np.ndarray | None


def photon_budget(s_q: float, n0: float = DEFAULT_N0) -> float:
    """Effective photons per pixel at quantum severity s_q: n0 / s_q**2."""
    if not math.isfinite(s_q) or s_q < 1:
        raise DomainError(
            f"photon budget is only defined for s_q >= 1, got {s_q} "
            "(0 means the quantum source is omitted)"
        )
    if n0 <= 0:
        raise DomainError(f"n0 must be positive, got {n0}")
    return n0 / (s_q * s_q)


def format_photon_budget(value: float) -> str:
    """Render a photon budget the way the severity table prints it.

    One decimal place, trailing zeros stripped: 62.5 stays 62.5 while
    1000.0 prints as 1000.
    """
    text = f"{value:.1f}"
    return text.rstrip("0").rstrip(".") if "." in text else text


def sigma_e(s_e: float, sigma0: float = DEFAULT_SIGMA0) -> float:
    """Electronic noise std at severity s_e: sigma0 * s_e.

    The product is evaluated in decimal on the shortest-repr values and
    rounded to binary once, so decimal-calibrated ladders reproduce
    exactly (a plain binary product turns 0.1 * 6 into 0.6000...0001).
    """
    if not math.isfinite(s_e) or s_e < 0:
        raise DomainError(f"s_e must be finite and >= 0, got {s_e}")
    if not math.isfinite(sigma0) or sigma0 < 0:
        raise DomainError(f"sigma0 must be finite and >= 0, got {sigma0}")
    return float(Decimal(repr(sigma0)) * Decimal(repr(s_e)))


def theoretical_snr_quantum(intensity: float, spec: NoiseSpec) -> float:
    """Closed-form quantum-only SNR: sqrt(intensity * n0) / s_q."""
    if spec.s_q < 1:
        raise DomainError(f"quantum SNR requires s_q >= 1, got {spec.s_q}")
    if intensity <= 0:
        raise UndefinedSNRError("quantum SNR is undefined at zero intensity")
    return math.sqrt(intensity * spec.n0) / spec.s_q


def theoretical_snr_electronic(intensity: float, spec: NoiseSpec) -> float:
    """Closed-form electronic-only SNR: intensity / (sigma0 * s_e)."""
    scale = sigma_e(spec.s_e, spec.sigma0)
    if scale == 0:
        raise UndefinedSNRError(
            "electronic SNR is undefined when sigma0 * s_e is zero"
        )
    return intensity / scale


def _pixel_slots(shape: tuple[int, int]) -> np.ndarray:
    return np.arange(shape[0] * shape[1], dtype=np.uint64)


def quantum_stream(spec: NoiseSpec) -> RandomStream:
    return RandomStream(spec.seed).substream(_QUANTUM_STAGE)


def electronic_stream(spec: NoiseSpec) -> RandomStream:
    return RandomStream(spec.seed).substream(_ELECTRONIC_STAGE)


def inject_quantum(
    img: NormalizedImage, spec: NoiseSpec, stream: RandomStream | None = None
) -> np.ndarray:
    """Per-pixel quantum field Q = Poisson(I * budget) / budget, unclamped.

    Pixel (i, j) draws from slot i*W + j of the quantum stage stream, so
    the field is independent of iteration order and worker count.
    """
    if spec.s_q < 1:
        raise DomainError(f"quantum injection requires s_q >= 1, got {spec.s_q}")
    if stream is None:
        stream = quantum_stream(spec)
    budget = photon_budget(spec.s_q, spec.n0)
    lam = img.pixels.reshape(-1) * budget
    counts = poisson_at_slots(stream, lam, _pixel_slots(img.pixels.shape))
    return (counts.astype(np.float64) / budget).reshape(img.pixels.shape)


def electronic_noise_field(
    shape: tuple[int, int], spec: NoiseSpec, stream: RandomStream | None = None
) -> np.ndarray:
    """The additive Gaussian field epsilon ~ N(0, (sigma0 * s_e)^2)."""
    if stream is None:
        stream = electronic_stream(spec)
    scale = sigma_e(spec.s_e, spec.sigma0)
    n = shape[0] * shape[1]
    return (scale * standard_normals(stream, np.arange(n, dtype=np.uint64))).reshape(shape)


def inject_electronic(
    img: NormalizedImage, spec: NoiseSpec, stream: RandomStream | None = None
) -> np.ndarray:
    """Per-pixel electronic field E = I + epsilon, unclamped.

    With s_e = 0 the input pixels are returned unchanged, bit-exactly.
    """
    if spec.s_e == 0:
        return img.pixels.copy()
    return img.pixels + electronic_noise_field(img.pixels.shape, spec, stream)


def inject(img: NormalizedImage, spec: NoiseSpec) -> NoiseRealization:
    """Run the full pipeline: quantum stage, electronic stage, one clamp.

    The two stages consume disjoint, independently derived streams; with
    both severities zero the input image is returned unchanged.
    """
    if 0 < spec.s_q < 1:
        raise DomainError(
            f"s_q = {spec.s_q} is below the calibration anchor; "
            "use 0 to omit the quantum source or a value >= 1"
        )

    quantum: np.ndarray | None = None
    epsilon: np.ndarray | None = None

    if spec.s_q == 0 and spec.s_e == 0:
        return NoiseRealization(corrupted=img, quantum_field=None, electronic_field=None)

    base = img.pixels
    if spec.s_q >= 1:
        quantum = inject_quantum(img, spec)
        base = quantum
    if spec.s_e > 0:
        epsilon = electronic_noise_field(img.pixels.shape, spec)
        base = base + epsilon

    corrupted = NormalizedImage(np.clip(base, 0.0, 1.0))
    return NoiseRealization(corrupted=corrupted, quantum_field=quantum, electronic_field=epsilon)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _constant_image(intensity: float, samples: int) -> NormalizedImage:
    return NormalizedImage(np.full((samples, 1), intensity))


def moment_checks(
    spec: NoiseSpec,
    samples: int = 1_000_000,
    intensity: float = 0.5,
    corrupt: bool = False,
) -> list[CheckResult]:
    """Monte Carlo validation of the closed-form moment and SNR laws.

    Draws unclamped fields on a constant image and compares sample
    moments against the derivations: E[Q] = I, Var[Q] = I s_q^2 / n0,
    std(E - I) = sigma0 * s_e, and SNR halving when severity doubles.
    ``corrupt`` biases the sampled fields (a negative-control hook for
    exercising the failure path).
    """
    if samples < 100_000:
        raise DomainError(f"need at least 1e5 samples for stable checks, got {samples}")
    img = _constant_image(intensity, samples)
    results: list[CheckResult] = []

    def record(name: str, passed: bool, detail: str) -> None:
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail))

    def quantum_field_for(spec_leg: NoiseSpec) -> np.ndarray:
        field = inject_quantum(img, spec_leg)
        if corrupt:
            field = field + 1.0 / photon_budget(spec_leg.s_q, spec_leg.n0)
        return field

    if spec.s_q >= 1:
        field = quantum_field_for(spec)
        expected_var = intensity * spec.s_q * spec.s_q / spec.n0
        mean_tol = 3.0 * math.sqrt(expected_var / samples)
        mean = float(field.mean())
        record(
            "quantum-mean",
            abs(mean - intensity) <= mean_tol,
            f"mean={mean:.6g} expected={intensity} tol={mean_tol:.3g}",
        )
        var = float(field.var(ddof=1))
        record(
            "quantum-variance",
            abs(var / expected_var - 1.0) <= 0.02,
            f"var={var:.6g} expected={expected_var:.6g} rel-err={abs(var / expected_var - 1):.4f}",
        )
        double = replace(spec, s_q=2.0 * spec.s_q, seed=derive_key(spec.seed, "snr-leg"))
        field2 = quantum_field_for(double)
        snr1 = float(field.mean() / field.std(ddof=1))
        snr2 = float(field2.mean() / field2.std(ddof=1))
        ratio = snr2 / snr1
        record(
            "quantum-snr-scaling",
            abs(ratio - 0.5) <= 0.015,
            f"snr({double.s_q})/snr({spec.s_q})={ratio:.4f} expected 0.5 +/- 3%",
        )

    if spec.s_e > 0:
        def electronic_eps(spec_leg: NoiseSpec) -> np.ndarray:
            eps = electronic_noise_field(img.pixels.shape, spec_leg)
            if corrupt:
                eps = eps * 1.05
            return eps

        scale = sigma_e(spec.s_e, spec.sigma0)
        eps = electronic_eps(spec)
        mean_tol = 3.0 * scale / math.sqrt(samples)
        mean = float(eps.mean())
        record(
            "electronic-mean",
            abs(mean) <= mean_tol,
            f"mean={mean:.3g} expected=0 tol={mean_tol:.3g}",
        )
        std = float(eps.std(ddof=1))
        record(
            "electronic-std",
            abs(std / scale - 1.0) <= 0.01,
            f"std={std:.6g} expected={scale:.6g} rel-err={abs(std / scale - 1):.4f}",
        )
        double = replace(spec, s_e=2.0 * spec.s_e, seed=derive_key(spec.seed, "snr-leg"))
        eps2 = electronic_eps(double)
        snr1 = intensity / float(eps.std(ddof=1))
        snr2 = intensity / float(eps2.std(ddof=1))
        ratio = snr2 / snr1
        record(
            "electronic-snr-scaling",
            abs(ratio - 0.5) <= 0.015,
            f"snr({double.s_e})/snr({spec.s_e})={ratio:.4f} expected 0.5 +/- 3%",
        )

    if not results:
        raise DomainError("both noise sources omitted: nothing to validate")
    return results
