"""Corpus manifests, patient-level splitting, and prediction ingestion.

Manifest wire format (UTF-8, comma-delimited, one header line):

    image_id,patient_id,image_path,mask_path,label,source_tag

Segmentation entries carry mask_path and no label; classification
entries carry a binary label and no mask_path.  Relative paths are
resolved against the manifest file's directory.

Split output format: ``patient_id,split`` rows.  Classification
prediction format: ``sample_id,score,label`` rows (file name
``scores.csv`` inside a prediction directory).  Segmentation
predictions are one 8-bit label PNG/PGM per image, named
``<image_id>.png`` (``.pgm`` accepted as fallback).
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import imgio
from .errors import (
    DomainError,
    InfeasibleSplitError,
    ParseError,
    ShapeError,
)
from .image import NormalizedImage, quantize_array
from .metrics import BinaryMask, ScoredSample
from .rng import RandomStream, derive_key

MANIFEST_HEADER = ["image_id", "patient_id", "image_path", "mask_path", "label", "source_tag"]
SPLIT_NAMES = ("train", "val", "test")
SCORES_FILENAME = "scores.csv"

TASK_SEGMENTATION = "segmentation"
TASK_CLASSIFICATION = "binary-classification"


@dataclass(frozen=True)
class CorpusEntry:
    image_id: str
    patient_id: str
    image_path: Path
    mask_path: Path | None = None
    label: int | None = None
    source_tag: str = ""


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[CorpusEntry, ...]
    task_kind: str
    class_names: tuple[str, ...] = ("negative", "positive")

    def __post_init__(self):
        if self.task_kind not in (TASK_SEGMENTATION, TASK_CLASSIFICATION):
            raise DomainError(f"unknown task kind: {self.task_kind!r}")
        if self.task_kind == TASK_CLASSIFICATION and len(self.class_names) < 2:
            raise DomainError("classification needs at least two class names")
        seen: set[str] = set()
        for entry in self.entries:
            if entry.image_id in seen:
                raise ParseError(f"duplicate image_id in manifest: {entry.image_id!r}")
            seen.add(entry.image_id)
            has_mask = entry.mask_path is not None
            has_label = entry.label is not None
            if self.task_kind == TASK_SEGMENTATION and (not has_mask or has_label):
                raise ParseError(
                    f"entry {entry.image_id!r}: segmentation entries need a "
                    "mask_path and no label"
                )
            if self.task_kind == TASK_CLASSIFICATION and (has_mask or not has_label):
                raise ParseError(
                    f"entry {entry.image_id!r}: classification entries need a "
                    "label and no mask_path"
                )

    def patient_ids(self) -> list[str]:
        return sorted({e.patient_id for e in self.entries})


def read_manifest(path: str | Path, task_kind: str) -> CorpusManifest:
    path = Path(path)
    base = path.parent
    entries: list[CorpusEntry] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty manifest") from None
        if header != MANIFEST_HEADER:
            raise ParseError(
                f"{path}: bad header {header!r}, expected {','.join(MANIFEST_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise ParseError(f"{path} line {lineno}: expected {len(MANIFEST_HEADER)} fields")
            image_id, patient_id, image_path, mask_path, label, source_tag = (
                f.strip() for f in row
            )
            if not image_id or not patient_id or not image_path:
                raise ParseError(f"{path} line {lineno}: image_id, patient_id and image_path are required")
            parsed_label: int | None = None
            if label:
                if label not in ("0", "1"):
                    raise ParseError(f"{path} line {lineno}: label must be 0 or 1, got {label!r}")
                parsed_label = int(label)
            entries.append(
                CorpusEntry(
                    image_id=image_id,
                    patient_id=patient_id,
                    image_path=base / image_path,
                    mask_path=(base / mask_path) if mask_path else None,
                    label=parsed_label,
                    source_tag=source_tag,
                )
            )
    return CorpusManifest(entries=tuple(entries), task_kind=task_kind)


def write_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for e in manifest.entries:
        writer.writerow(
            [
                e.image_id,
                e.patient_id,
                str(e.image_path),
                str(e.mask_path) if e.mask_path else "",
                "" if e.label is None else str(e.label),
                e.source_tag,
            ]
        )
    path.write_text(buf.getvalue(), encoding="utf-8")


@dataclass(frozen=True)
class SplitAssignment:
    by_patient: dict[str, str]

    def split_of(self, patient_id: str) -> str:
        return self.by_patient[patient_id]

    def entries_in(self, manifest: CorpusManifest, split: str) -> list[CorpusEntry]:
        return [e for e in manifest.entries if self.by_patient.get(e.patient_id) == split]


def apportion(total: int, fractions: tuple[float, float, float]) -> list[int]:
    """Largest-remainder apportionment; remainder ties break by position."""
    targets = [f * total for f in fractions]
    counts = [int(np.floor(t)) for t in targets]
    remainders = [t - c for t, c in zip(targets, counts)]
    shortfall = total - sum(counts)
    order = sorted(range(len(fractions)), key=lambda k: (-remainders[k], k))
    for k in order[:shortfall]:
        counts[k] += 1
    return counts


def _shuffled(items: list[str], stream: RandomStream) -> list[str]:
    """Fisher-Yates driven by the counter-based stream (version-stable)."""
    items = list(items)
    for i in range(len(items) - 1, 0, -1):
        word = int(stream.words(np.array([i], dtype=np.uint64), 0)[0])
        j = word % (i + 1)  # modulo bias is negligible for corpus-scale n
        items[i], items[j] = items[j], items[i]
    return items


def split_corpus(
    manifest: CorpusManifest,
    fractions: tuple[float, float, float],
    seed: int,
    stratify_by_label: bool = False,
) -> SplitAssignment:
    """Assign every patient to exactly one of train/val/test.

    Patients are sorted before the seeded shuffle, so the split does not
    depend on manifest entry order.  Counts follow largest-remainder
    apportionment (within 1 of fraction * patient count); stratified
    splits additionally apportion positive patients so each split's
    prevalence is within one patient of the global rate.
    """
    if len(fractions) != 3:
        raise DomainError("expected exactly three split fractions")
    if any(f < 0 for f in fractions):
        raise DomainError("split fractions must be non-negative")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DomainError(f"split fractions must sum to 1, got {sum(fractions)}")

    patients = manifest.patient_ids()
    needed = sum(1 for f in fractions if f > 0)
    if len(patients) < needed:
        raise InfeasibleSplitError(
            f"{len(patients)} patients cannot fill {needed} non-empty splits"
        )

    totals = apportion(len(patients), fractions)

    if stratify_by_label:
        label_by_patient: dict[str, int] = {}
        for e in manifest.entries:
            if e.label is None:
                raise DomainError("stratified splitting requires labels on every entry")
            # a patient is positive if any of their images is
            label_by_patient[e.patient_id] = max(label_by_patient.get(e.patient_id, 0), e.label)
        positives = [p for p in patients if label_by_patient[p] == 1]
        negatives = [p for p in patients if label_by_patient[p] == 0]
        pos_counts = apportion(len(positives), fractions)
        # repair: a split cannot hold more positives than its total size
        for k in range(3):
            while pos_counts[k] > totals[k]:
                spare = max(range(3), key=lambda j: (totals[j] - pos_counts[j], -j))
                pos_counts[k] -= 1
                pos_counts[spare] += 1
        neg_counts = [t - p for t, p in zip(totals, pos_counts)]
        groups = [(positives, pos_counts), (negatives, neg_counts)]
    else:
        groups = [(patients, totals)]

    assignment: dict[str, str] = {}
    base = RandomStream(derive_key(seed, "patient-split"))
    for group_index, (members, counts) in enumerate(groups):
        shuffled = _shuffled(sorted(members), base.substream(group_index))
        start = 0
        for split_name, count in zip(SPLIT_NAMES, counts):
            for patient in shuffled[start : start + count]:
                assignment[patient] = split_name
            start += count
    return SplitAssignment(by_patient=assignment)


def write_split(assignment: SplitAssignment, path: str | Path) -> None:
    lines = ["patient_id,split"]
    for patient in sorted(assignment.by_patient):
        lines.append(f"{patient},{assignment.by_patient[patient]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_split(path: str | Path) -> SplitAssignment:
    path = Path(path)
    mapping: dict[str, str] = {}
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "patient_id,split":
            raise ParseError(f"{path}: bad split header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            patient, _, split = line.partition(",")
            if split not in SPLIT_NAMES:
                raise ParseError(f"{path} line {lineno}: unknown split {split!r}")
            mapping[patient] = split
    return SplitAssignment(by_patient=mapping)


@dataclass
class PredictionLoad:
    """Result of loading one prediction directory against a manifest.

    Nothing is dropped silently: every targeted entry lands either in
    the loaded maps or in ``missing``.
    """

    masks: dict[str, np.ndarray] = field(default_factory=dict)
    scores: dict[str, ScoredSample] = field(default_factory=dict)
    missing: list[str] = field(default_factory=list)

    @property
    def loaded_count(self) -> int:
        return len(self.masks) + len(self.scores)


def _truth_labels(entry: CorpusEntry) -> np.ndarray:
    return imgio.read_levels(entry.mask_path)


def load_predictions(
    manifest: CorpusManifest,
    pred_dir: str | Path,
    entries: list[CorpusEntry] | None = None,
) -> PredictionLoad:
    """Load per-entry predictions (label images or scores) for ``entries``.

    Missing predictions are collected, not raised; malformed files and
    shape mismatches raise with the offending entry/file named.
    """
    pred_dir = Path(pred_dir)
    targets = list(manifest.entries) if entries is None else entries
    result = PredictionLoad()

    if manifest.task_kind == TASK_SEGMENTATION:
        for entry in targets:
            candidate = None
            for suffix in (".png", ".pgm"):
                p = pred_dir / f"{entry.image_id}{suffix}"
                if p.exists():
                    candidate = p
                    break
            if candidate is None:
                result.missing.append(entry.image_id)
                continue
            pred = imgio.read_levels(candidate)
            truth = _truth_labels(entry)
            if pred.shape != truth.shape:
                raise ShapeError(
                    f"prediction for {entry.image_id!r} has shape {pred.shape}, "
                    f"ground truth is {truth.shape}"
                )
            result.masks[entry.image_id] = pred
        return result

    scores_path = pred_dir / SCORES_FILENAME
    rows: dict[str, ScoredSample] = {}
    if scores_path.exists():
        with scores_path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise ParseError(
                        f"{scores_path} line {lineno}: expected sample_id,score,label"
                    )
                sample_id, score_text, label_text = (p.strip() for p in parts)
                try:
                    score = float(score_text)
                except ValueError:
                    raise ParseError(
                        f"{scores_path} line {lineno}: bad score {score_text!r}"
                    ) from None
                if not 0.0 <= score <= 1.0:
                    raise ParseError(
                        f"{scores_path} line {lineno}: score {score} outside [0, 1]"
                    )
                if label_text not in ("0", "1"):
                    raise ParseError(
                        f"{scores_path} line {lineno}: label must be 0 or 1, got {label_text!r}"
                    )
                rows[sample_id] = ScoredSample(score=score, label=int(label_text))

    by_id = {e.image_id: e for e in targets}
    for sample_id, sample in rows.items():
        entry = by_id.get(sample_id)
        if entry is None:
            continue  # scores for entries outside the target split are ignored
        if entry.label is not None and entry.label != sample.label:
            raise ParseError(
                f"{scores_path}: label for {sample_id!r} ({sample.label}) "
                f"contradicts the manifest ({entry.label})"
            )
        result.scores[sample_id] = ScoredSample(score=sample.score, label=entry.label)
    for entry in targets:
        if entry.image_id not in result.scores:
            result.missing.append(entry.image_id)
    return result


def _otsu_level(levels: np.ndarray) -> tuple[int, bool]:
    """Otsu's threshold over the 256-level histogram.

    Returns (threshold, separable): foreground is level <= threshold.
    ``separable`` is False for single-mode (constant) images.
    """
    hist = np.bincount(levels.reshape(-1), minlength=256).astype(np.float64)
    total = hist.sum()
    omega = np.cumsum(hist) / total
    mu = np.cumsum(hist * np.arange(256)) / total
    mu_total = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu_total * omega - mu) ** 2 / (omega * (1.0 - omega))
    between = np.nan_to_num(between[:-1], nan=0.0, posinf=0.0)
    best = int(np.argmax(between))  # argmax takes the smallest index on ties
    return best, bool(between[best] > 0.0)


def reference_segmenter(img: NormalizedImage) -> BinaryMask:
    """Deterministic stand-in predictor: Otsu dark-region mask, largest
    two connected components retained.

    Exists purely so the sweep pipeline can run end-to-end without a
    trained model; its outputs carry no quantitative claim.
    """
    levels = quantize_array(img.pixels)
    threshold, separable = _otsu_level(levels)
    if not separable:
        warnings.warn("reference_segmenter: constant image, returning an empty mask")
        return BinaryMask(np.zeros(levels.shape, dtype=bool))
    dark = levels <= threshold
    labeled, count = ndimage.label(dark)
    if count == 0:
        return BinaryMask(np.zeros(levels.shape, dtype=bool))
    sizes = ndimage.sum_labels(np.ones_like(labeled), labeled, index=np.arange(1, count + 1))
    keep = np.argsort(-sizes, kind="stable")[:2] + 1
    return BinaryMask(np.isin(labeled, keep))
