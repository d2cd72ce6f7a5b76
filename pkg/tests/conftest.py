"""Shared fixtures, independent oracles, and acceptance-line reporting."""

from __future__ import annotations

import numpy as np
import pytest

from radnoise import imgio
from radnoise.corpus import CorpusEntry, CorpusManifest, TASK_CLASSIFICATION, TASK_SEGMENTATION

# ---------------------------------------------------------------------------
# Independent oracles (kept deliberately naive; never reuse engine code paths)
# ---------------------------------------------------------------------------


def auroc_pairwise_oracle(scores, labels) -> float:
    """Brute force over all (positive, negative) pairs, ties worth 0.5."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = float((pos[:, None] > neg[None, :]).sum())
    ties = float((pos[:, None] == neg[None, :]).sum())
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def overlap_counts_oracle(pred_bits, truth_bits) -> tuple[int, int, int]:
    """Pixel-by-pixel counting loop: (intersection, |pred|, |truth|)."""
    inter = a = b = 0
    for p, t in zip(np.asarray(pred_bits).reshape(-1), np.asarray(truth_bits).reshape(-1)):
        if p:
            a += 1
        if t:
            b += 1
        if p and t:
            inter += 1
    return inter, a, b


def dice_oracle(pred_bits, truth_bits) -> float:
    inter, a, b = overlap_counts_oracle(pred_bits, truth_bits)
    if a + b == 0:
        return 1.0
    return 2.0 * inter / (a + b)


def iou_oracle(pred_bits, truth_bits) -> float:
    inter, a, b = overlap_counts_oracle(pred_bits, truth_bits)
    union = a + b - inter
    if union == 0:
        return 1.0
    return inter / union


def poisson_chi2_pvalue(counts, lam) -> float:
    """Chi-square goodness of fit against the exact Poisson pmf.

    Bins with expected count below 5 are merged greedily from the left;
    the final bin absorbs the analytic upper tail.
    """
    from scipy import stats

    counts = np.asarray(counts)
    n = counts.size
    kmax = int(counts.max())
    observed = np.bincount(counts, minlength=kmax + 1).astype(np.float64)
    probs = stats.poisson.pmf(np.arange(kmax + 1), lam)
    tail = float(stats.poisson.sf(kmax, lam))

    merged_obs: list[float] = []
    merged_exp: list[float] = []
    acc_o = acc_e = 0.0
    for k in range(kmax + 1):
        acc_o += observed[k]
        acc_e += probs[k] * n
        if acc_e >= 5.0:
            merged_obs.append(acc_o)
            merged_exp.append(acc_e)
            acc_o = acc_e = 0.0
    merged_obs[-1] += acc_o
    merged_exp[-1] += acc_e + tail * n
    stat = float(((np.array(merged_obs) - np.array(merged_exp)) ** 2 / np.array(merged_exp)).sum())
    dof = len(merged_obs) - 1
    return float(stats.chi2.sf(stat, dof))


# ---------------------------------------------------------------------------
# Synthetic corpus builders
# ---------------------------------------------------------------------------


def blob_image(rng: np.random.Generator, size: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """A bright field with two dark elliptical blobs; returns (levels, mask)."""
    yy, xx = np.mgrid[0:size, 0:size]
    levels = np.full((size, size), 230, dtype=np.int32)
    levels += rng.integers(-12, 13, size=(size, size))
    mask = np.zeros((size, size), dtype=bool)
    for _ in range(2):
        cy, cx = rng.integers(size // 4, 3 * size // 4, size=2)
        ry, rx = rng.integers(size // 8, size // 5, size=2)
        blob = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        mask |= blob
    levels[mask] = 40 + rng.integers(-10, 11, size=int(mask.sum()))
    return np.clip(levels, 0, 255).astype(np.uint8), mask


def build_seg_corpus(root, n_images: int = 10, size: int = 64, seed: int = 123) -> CorpusManifest:
    """Write a synthetic segmentation corpus (images + masks) under root."""
    rng = np.random.default_rng(seed)
    images_dir = root / "images"
    masks_dir = root / "masks"
    images_dir.mkdir(parents=True, exist_ok=True)
    masks_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(n_images):
        levels, mask = blob_image(rng, size)
        image_path = images_dir / f"img{i:03d}.png"
        mask_path = masks_dir / f"img{i:03d}.png"
        imgio.write_levels(image_path, levels)
        imgio.write_levels(mask_path, mask.astype(np.uint8) * 255)
        entries.append(
            CorpusEntry(
                image_id=f"img{i:03d}",
                patient_id=f"p{i:03d}",
                image_path=image_path,
                mask_path=mask_path,
                source_tag="synthetic",
            )
        )
    return CorpusManifest(entries=tuple(entries), task_kind=TASK_SEGMENTATION)


def build_cls_manifest(labels: list[int], tmp_path) -> CorpusManifest:
    """Classification manifest; image paths are placeholders (eval never opens them)."""
    entries = tuple(
        CorpusEntry(
            image_id=f"s{i:04d}",
            patient_id=f"p{i:04d}",
            image_path=tmp_path / f"s{i:04d}.png",
            label=int(label),
            source_tag="synthetic",
        )
        for i, label in enumerate(labels)
    )
    return CorpusManifest(entries=entries, task_kind=TASK_CLASSIFICATION)


def scores_for_win_counts(win_counts: list[int], n_neg: int) -> tuple[list[float], list[int]]:
    """Scores with an exactly known AUROC: positive i outranks win_counts[i]
    of the n_neg negatives, with no ties anywhere."""
    scores = [(k + 1) / 100.0 for k in range(n_neg)]
    labels = [0] * n_neg
    for wins in win_counts:
        scores.append(wins / 100.0 + 0.005)
        labels.append(1)
    return scores, labels


# ---------------------------------------------------------------------------
# Acceptance-criteria reporting: one pass/fail line per criterion
# ---------------------------------------------------------------------------

_ACCEPTANCE: dict[str, tuple[str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): marks a test as one numbered acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        _ACCEPTANCE[marker.args[0]] = (report.outcome, report.duration)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        outcome, duration = _ACCEPTANCE[name]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {name} ({duration:.2f}s)")
