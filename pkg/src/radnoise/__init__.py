"""Calibrated quantum/electronic noise injection and robustness evaluation
for grayscale radiographs."""

__version__ = "0.1.0"

from .errors import (
    DegenerateInputError,
    DimensionError,
    DomainError,
    FormatError,
    InfeasibleSplitError,
    MissingBaselineError,
    NumericError,
    ParseError,
    RadnoiseError,
    ShapeError,
    UndefinedSNRError,
)
from .image import NormalizedImage, QuantizedImage, normalize, quantize, resample, resample_nearest
from .metrics import (
    BinaryMask,
    ConfusionCounts,
    MultiClassMask,
    ScoredSample,
    auprc,
    auroc,
    best_f1_threshold,
    binarize,
    dice,
    f1,
    iou,
    label_image_scores,
    per_class_scores,
)
from .noise import (
    NoiseRealization,
    NoiseSpec,
    inject,
    inject_electronic,
    inject_quantum,
    moment_checks,
    photon_budget,
    sigma_e,
    theoretical_snr_electronic,
    theoretical_snr_quantum,
)
from .rng import RandomStream, derive_key, sample_poisson
from .corpus import (
    CorpusEntry,
    CorpusManifest,
    SplitAssignment,
    load_predictions,
    read_manifest,
    reference_segmenter,
    split_corpus,
)
from .ladder import (
    EvalRecord,
    RobustnessCurve,
    SeverityLadder,
    build_curves,
    evaluate_sweep,
    generate_corrupted_corpus,
)

__all__ = [name for name in dir() if not name.startswith("_")]
