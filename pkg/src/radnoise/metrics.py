"""Segmentation overlap and binary ranking metrics.

Dice and IoU follow the pixel-count definitions; when both masks are
empty the 0/0 case resolves to 1.0 so a correct "nothing present"
prediction is not penalized (callers can attach a warning flag via
``masks_both_empty``).

AUROC is the Mann-Whitney statistic (tied pairs count half) computed by
average ranks.  AUPRC is step-wise average precision with tied scores
processed as a single block; it is accumulated in exact rational
arithmetic and rounded to float once, so small worked examples match
their closed forms bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateInputError, DomainError, ShapeError


@dataclass(frozen=True)
class BinaryMask:
    """H x W boolean foreground mask."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2:
            raise ShapeError(f"expected a 2-D mask, got ndim={arr.ndim}")
        if arr.dtype != np.bool_:
            arr = arr != 0
        if arr.flags.writeable:
            arr = arr.copy()
            arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class MultiClassMask:
    """H x W class-index labels in [0, n_classes); class 0 is background."""

    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ShapeError(f"expected a 2-D label image, got ndim={arr.ndim}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ShapeError(f"labels must be integers, got dtype {arr.dtype}")
        if self.n_classes < 2:
            raise DomainError(f"n_classes must be >= 2, got {self.n_classes}")
        if arr.size and (int(arr.min()) < 0 or int(arr.max()) >= self.n_classes):
            raise DomainError(
                f"labels must lie in [0, {self.n_classes}), got range "
                f"[{int(arr.min())}, {int(arr.max())}]"
            )
        arr = arr.astype(np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)


class ScoredSample(NamedTuple):
    score: float
    label: int  # 1 positive, 0 negative


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _overlap_counts(pred: BinaryMask, truth: BinaryMask) -> tuple[int, int, int]:
    if pred.bits.shape != truth.bits.shape:
        raise ShapeError(
            f"mask shapes differ: {pred.bits.shape} vs {truth.bits.shape}"
        )
    intersection = int(np.count_nonzero(pred.bits & truth.bits))
    return intersection, int(np.count_nonzero(pred.bits)), int(np.count_nonzero(truth.bits))


def masks_both_empty(pred: BinaryMask, truth: BinaryMask) -> bool:
    """True when neither mask has any foreground (the 0/0 convention case)."""
    _, a, b = _overlap_counts(pred, truth)
    return a == 0 and b == 0


def dice(pred: BinaryMask, truth: BinaryMask) -> float:
    """2|A n B| / (|A| + |B|); 1.0 when both masks are empty."""
    intersection, a, b = _overlap_counts(pred, truth)
    if a + b == 0:
        return 1.0
    return 2.0 * intersection / (a + b)


def iou(pred: BinaryMask, truth: BinaryMask) -> float:
    """|A n B| / |A u B|; 1.0 when both masks are empty."""
    intersection, a, b = _overlap_counts(pred, truth)
    union = a + b - intersection
    if union == 0:
        return 1.0
    return intersection / union


@dataclass(frozen=True)
class PerClassScores:
    per_class: tuple[tuple[int, float, float], ...]  # (class index, dice, iou)
    macro_dice: float
    macro_iou: float


def per_class_scores(pred: MultiClassMask, truth: MultiClassMask) -> PerClassScores:
    """One-vs-rest Dice/IoU per foreground class plus the unweighted mean."""
    if pred.labels.shape != truth.labels.shape:
        raise ShapeError(
            f"label image shapes differ: {pred.labels.shape} vs {truth.labels.shape}"
        )
    if pred.n_classes != truth.n_classes:
        raise ShapeError(
            f"class counts differ: {pred.n_classes} vs {truth.n_classes}"
        )
    rows = []
    for cls in range(1, truth.n_classes):
        p = BinaryMask(pred.labels == cls)
        t = BinaryMask(truth.labels == cls)
        rows.append((cls, dice(p, t), iou(p, t)))
    macro_dice = sum(r[1] for r in rows) / len(rows)
    macro_iou = sum(r[2] for r in rows) / len(rows)
    return PerClassScores(tuple(rows), macro_dice, macro_iou)


@dataclass(frozen=True)
class LabelPairScores:
    dice: float
    iou: float
    both_empty: bool


def label_image_scores(pred_labels: np.ndarray, truth_labels: np.ndarray) -> LabelPairScores:
    """Dice/IoU for a pair of label images of any class layout.

    Zero is background.  A single foreground value (e.g. 0/1 or 0/255
    masks) reduces to binary Dice/IoU on the nonzero pixels; several
    distinct foreground values are treated as classes (matched across
    the pair by value) and scored as the unweighted macro average.
    """
    pred_labels = np.asarray(pred_labels)
    truth_labels = np.asarray(truth_labels)
    if pred_labels.shape != truth_labels.shape:
        raise ShapeError(
            f"label image shapes differ: {pred_labels.shape} vs {truth_labels.shape}"
        )
    values = np.union1d(np.unique(pred_labels), np.unique(truth_labels))
    foreground = [int(v) for v in values if v != 0]
    if not foreground:
        return LabelPairScores(dice=1.0, iou=1.0, both_empty=True)
    if len(foreground) == 1:
        p = BinaryMask(pred_labels != 0)
        t = BinaryMask(truth_labels != 0)
        return LabelPairScores(dice=dice(p, t), iou=iou(p, t), both_empty=False)
    lut = {v: i + 1 for i, v in enumerate(foreground)}
    n_classes = len(foreground) + 1

    def relabel(arr: np.ndarray) -> np.ndarray:
        out = np.zeros(arr.shape, dtype=np.int64)
        for value, cls in lut.items():
            out[arr == value] = cls
        return out

    scores = per_class_scores(
        MultiClassMask(relabel(pred_labels), n_classes),
        MultiClassMask(relabel(truth_labels), n_classes),
    )
    return LabelPairScores(dice=scores.macro_dice, iou=scores.macro_iou, both_empty=False)


def _split_scores(samples: Sequence[ScoredSample]) -> tuple[np.ndarray, np.ndarray]:
    scores = np.array([s.score for s in samples], dtype=np.float64)
    labels = np.array([s.label for s in samples], dtype=np.int64)
    if not np.isfinite(scores).all():
        raise DomainError("scores must be finite")
    if not np.isin(labels, (0, 1)).all():
        raise DomainError("labels must be 0 or 1")
    return scores, labels


def auroc(samples: Sequence[ScoredSample]) -> float:
    """Mann-Whitney AUROC: P(random positive scored above random negative),
    tied pairs counting one half.  Computed via average ranks.
    """
    scores, labels = _split_scores(samples)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError(
            f"AUROC needs both classes present, got {n_pos} positives / {n_neg} negatives"
        )
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1
    rank_sum_pos = float(ranks[labels == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def auprc(samples: Sequence[ScoredSample]) -> float:
    """Step-wise average precision over descending-score cut points.

    Tied scores form a single block: precision is evaluated once per
    block against the block's cumulative counts.  The sum is exact
    (rational arithmetic), rounded to float at the end.
    """
    scores, labels = _split_scores(samples)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise DegenerateInputError("AUPRC needs at least one positive sample")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]

    total = Fraction(0)
    tp = fp = 0
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        block_tp = int(sorted_labels[i : j + 1].sum())
        block_fp = (j - i + 1) - block_tp
        tp += block_tp
        fp += block_fp
        if block_tp:
            total += Fraction(tp, tp + fp) * Fraction(block_tp, n_pos)
        i = j + 1
    return float(total)


def f1(counts: ConfusionCounts) -> float:
    """2 tp / (2 tp + fp + fn)."""
    denom = 2 * counts.tp + counts.fp + counts.fn
    if denom == 0:
        raise DegenerateInputError("F1 is undefined when tp = fp = fn = 0")
    return 2 * counts.tp / denom


def binarize(samples: Sequence[ScoredSample], threshold: float) -> ConfusionCounts:
    """Tally confusion counts with score >= threshold predicting positive."""
    scores, labels = _split_scores(samples)
    if not np.isfinite(threshold):
        raise DomainError("threshold must be finite")
    predicted = scores >= threshold
    actual = labels == 1
    return ConfusionCounts(
        tp=int(np.count_nonzero(predicted & actual)),
        fp=int(np.count_nonzero(predicted & ~actual)),
        fn=int(np.count_nonzero(~predicted & actual)),
        tn=int(np.count_nonzero(~predicted & ~actual)),
    )


def best_f1_threshold(samples: Sequence[ScoredSample]) -> float:
    """The threshold (chosen among observed scores) maximizing F1.

    Ties are broken toward the larger threshold so the choice is
    deterministic.
    """
    scores, labels = _split_scores(samples)
    if not (labels == 1).any():
        raise DegenerateInputError("threshold selection needs at least one positive")
    best = (-1.0, 0.0)
    for candidate in sorted(set(float(s) for s in scores), reverse=True):
        counts = binarize(samples, candidate)
        score = f1(counts) if (2 * counts.tp + counts.fp + counts.fn) else 0.0
        if score > best[0]:
            best = (score, candidate)
    return best[1]
