"""Severity sweeps over a corpus and diff-from-baseline reporting.

A sweep writes one corrupted image tree per ladder point, laid out as
``<out_dir>/sq<q>_se<e>/<image_id>.png`` with severities formatted to
two decimals (``sq10.00_se0.00``), plus a delimited index
``image_id,s_q,s_e,derived_seed,output_path``.

Per-image seeds derive from (global seed, image_id, s_q, s_e), so
generation order, worker count, and later ladder extensions never
perturb existing outputs.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import imgio
from .corpus import (
    TASK_SEGMENTATION,
    CorpusEntry,
    CorpusManifest,
    SplitAssignment,
    load_predictions,
)
from .errors import DegenerateInputError, DomainError, MissingBaselineError
from .image import QuantizedImage, normalize, quantize, resample
from .metrics import auprc, auroc, binarize, f1, label_image_scores
from .noise import NoiseSpec, inject
from .rng import derive_key

log = logging.getLogger(__name__)

DEFAULT_LEVELS = (0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0)

SEG_METRICS = ("dice", "iou")
CLS_METRICS = ("auroc", "auprc", "f1")

RECORD_HEADER = "task_id,s_q,s_e,metric,value,delta,n_samples,flags"
INDEX_HEADER = "image_id,s_q,s_e,derived_seed,output_path"

MONOTONE_FLAG = "monotone-degrading"


@dataclass(frozen=True)
class SeverityLadder:
    """Ordered severity grid; 0 on each axis is the baseline."""

    quantum_levels: tuple[float, ...] = DEFAULT_LEVELS
    electronic_levels: tuple[float, ...] = DEFAULT_LEVELS
    pairing: str = "axis"  # "axis" or "full"
    include_joint: bool = True  # add the (1, 1) point to axis sweeps

    def __post_init__(self):
        if self.pairing not in ("axis", "full"):
            raise DomainError(f"pairing must be 'axis' or 'full', got {self.pairing!r}")
        for name, levels in (
            ("quantum", self.quantum_levels),
            ("electronic", self.electronic_levels),
        ):
            if list(levels) != sorted(set(levels)):
                raise DomainError(f"{name} levels must be strictly ascending")
            if not levels or levels[0] != 0.0:
                raise DomainError(f"{name} levels must include 0 (the baseline)")
            if any(level < 0 for level in levels):
                raise DomainError(f"{name} levels must be non-negative")
        if any(0 < level < 1 for level in self.quantum_levels):
            raise DomainError(
                "quantum levels must lie in {0} union [1, inf): "
                "values below the calibration anchor are undefined"
            )

    def points(self) -> list[tuple[float, float]]:
        """Ladder points, sorted by (s_q, s_e); the baseline comes first."""
        if self.pairing == "full":
            pts = {(q, e) for q in self.quantum_levels for e in self.electronic_levels}
        else:
            pts = {(0.0, 0.0)}
            pts.update((q, 0.0) for q in self.quantum_levels)
            pts.update((0.0, e) for e in self.electronic_levels)
            if self.include_joint and 1.0 in self.quantum_levels and 1.0 in self.electronic_levels:
                pts.add((1.0, 1.0))
        return sorted(pts)


def point_dirname(s_q: float, s_e: float) -> str:
    return f"sq{s_q:.2f}_se{s_e:.2f}"


def derived_seed(global_seed: int, image_id: str, s_q: float, s_e: float) -> int:
    """Per-(image, ladder point) seed; stable under re-runs and re-orderings."""
    return derive_key(global_seed, "sweep", image_id, float(s_q), float(s_e))


@dataclass(frozen=True)
class EvalRecord:
    """One (task, ladder point, metric) measurement with its baseline delta."""

    task_id: str
    s_q: float
    s_e: float
    metric: str
    value: float
    delta: float
    n_samples: int
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class PerSampleRecord:
    """One per-sample measurement: per-image dice/iou for segmentation,
    the ingested score for classification."""

    task_id: str
    s_q: float
    s_e: float
    sample_id: str
    metric: str
    value: float


@dataclass(frozen=True)
class RobustnessCurve:
    """Metric-vs-severity points along one noise axis.

    ``points`` are (severity, value, delta) triples sorted by severity;
    the first point is the baseline, shared between the two axes.
    """

    task_id: str
    axis: str  # "quantum" or "electronic"
    metric: str
    points: tuple[tuple[float, float, float], ...]
    flags: tuple[str, ...] = ()


@dataclass
class SweepResult:
    index_rows: list[tuple[str, float, float, int, str]] = field(default_factory=list)
    written: int = 0
    rewritten: int = 0
    unchanged: int = 0
    failures: list[tuple[str, float, float, str]] = field(default_factory=list)


def _corrupt_one(task: tuple) -> tuple:
    """Worker body: one (image, ladder point) pair, pure function of args."""
    image_path, image_id, s_q, s_e, n0, sigma0, seed, out_path, resize_to = task
    try:
        levels = imgio.read_levels(image_path)
        img = normalize(QuantizedImage(levels))
        if resize_to is not None:
            img = resample(img, resize_to, resize_to)
        spec = NoiseSpec(s_q=s_q, s_e=s_e, n0=n0, sigma0=sigma0, seed=seed)
        realization = inject(img, spec)
        payload = imgio.encode_png(quantize(realization.corrupted).levels)
    except Exception as exc:  # noqa: BLE001 - worker reports, parent decides
        return (image_id, s_q, s_e, "failed", f"{type(exc).__name__}: {exc}")

    out = Path(out_path)
    if out.exists():
        if out.read_bytes() == payload:
            return (image_id, s_q, s_e, "unchanged", "")
        out.write_bytes(payload)
        return (image_id, s_q, s_e, "rewritten", "")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(payload)
    return (image_id, s_q, s_e, "written", "")


def generate_corrupted_corpus(
    manifest: CorpusManifest,
    ladder: SeverityLadder,
    base_spec: NoiseSpec,
    out_dir: str | Path,
    jobs: int = 1,
    resize_to: int | None = None,
) -> SweepResult:
    """Corrupt every manifest image at every ladder point.

    Output bytes are a pure function of (image bytes, base spec, ladder),
    independent of ``jobs``.  Unreadable images are reported as failures
    and the run continues.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = ladder.points()
    for s_q, s_e in points:
        (out_dir / point_dirname(s_q, s_e)).mkdir(exist_ok=True)

    tasks = []
    entries = sorted(manifest.entries, key=lambda e: e.image_id)
    for s_q, s_e in points:
        for entry in entries:
            seed = derived_seed(base_spec.seed, entry.image_id, s_q, s_e)
            out_path = out_dir / point_dirname(s_q, s_e) / f"{entry.image_id}.png"
            tasks.append(
                (
                    str(entry.image_path),
                    entry.image_id,
                    s_q,
                    s_e,
                    base_spec.n0,
                    base_spec.sigma0,
                    seed,
                    str(out_path),
                    resize_to,
                )
            )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_corrupt_one, tasks, chunksize=8))
    else:
        outcomes = [_corrupt_one(t) for t in tasks]

    result = SweepResult()
    for task, (image_id, s_q, s_e, status, message) in zip(tasks, outcomes):
        if status == "failed":
            result.failures.append((image_id, s_q, s_e, message))
            log.warning("sweep: %s at (%s, %s) failed: %s", image_id, s_q, s_e, message)
            continue
        if status == "written":
            result.written += 1
        elif status == "rewritten":
            result.rewritten += 1
        else:
            result.unchanged += 1
        result.index_rows.append((image_id, s_q, s_e, task[6], task[7]))

    result.index_rows.sort(key=lambda r: (r[1], r[2], r[0]))
    index_lines = [INDEX_HEADER]
    for image_id, s_q, s_e, seed, out_path in result.index_rows:
        rel = Path(out_path).relative_to(out_dir)
        index_lines.append(f"{image_id},{s_q:.2f},{s_e:.2f},{seed},{rel}")
    (out_dir / "sweep_index.csv").write_text("\n".join(index_lines) + "\n", encoding="utf-8")
    return result


def _point_metrics(
    manifest: CorpusManifest,
    entries: list[CorpusEntry],
    point_dir: Path,
    threshold: float,
) -> tuple[dict[str, float], int, tuple[str, ...], list[tuple[str, str, float]]] | None:
    """Metric values at one ladder point, or None if nothing was evaluable.

    Also returns per-sample rows: (sample_id, metric, value).
    """
    load = load_predictions(manifest, point_dir, entries)
    flags: list[str] = []
    if load.missing:
        flags.append(f"missing-predictions:{len(load.missing)}")
    per_sample: list[tuple[str, str, float]] = []

    if manifest.task_kind == TASK_SEGMENTATION:
        evaluated = []
        both_empty = 0
        for entry in sorted(entries, key=lambda e: e.image_id):
            pred = load.masks.get(entry.image_id)
            if pred is None:
                continue
            truth = imgio.read_levels(entry.mask_path)
            pair = label_image_scores(pred, truth)
            if pair.both_empty:
                both_empty += 1
            evaluated.append(pair)
            per_sample.append((entry.image_id, "dice", pair.dice))
            per_sample.append((entry.image_id, "iou", pair.iou))
        if not evaluated:
            return None
        if both_empty:
            flags.append(f"both-empty-pairs:{both_empty}")
        values = {
            "dice": sum(p.dice for p in evaluated) / len(evaluated),
            "iou": sum(p.iou for p in evaluated) / len(evaluated),
        }
        return values, len(evaluated), tuple(flags), per_sample

    ordered = [e for e in sorted(entries, key=lambda e: e.image_id) if e.image_id in load.scores]
    samples = [load.scores[e.image_id] for e in ordered]
    if not samples:
        return None
    per_sample = [(e.image_id, "score", s.score) for e, s in zip(ordered, samples)]
    values = {
        "auroc": auroc(samples),
        "auprc": auprc(samples),
        "f1": f1(binarize(samples, threshold)),
    }
    return values, len(samples), tuple(flags), per_sample


def evaluate_sweep(
    manifest: CorpusManifest,
    ladder: SeverityLadder,
    predictions_root: str | Path,
    task_id: str = "task",
    split: SplitAssignment | None = None,
    threshold: float = 0.5,
    per_sample_sink: list[PerSampleRecord] | None = None,
) -> list[EvalRecord]:
    """Compute metrics per ladder point and fill deltas against baseline.

    Evaluates the test split when a split assignment is given, otherwise
    every manifest entry.  A missing baseline directory is fatal;
    missing non-baseline points are skipped with a warning.  When
    ``per_sample_sink`` is given, per-sample rows (per-image dice/iou,
    per-sample scores) are appended to it.
    """
    predictions_root = Path(predictions_root)
    entries = split.entries_in(manifest, "test") if split else list(manifest.entries)
    if not entries:
        raise DegenerateInputError("no entries to evaluate (empty test split?)")
    metric_names = SEG_METRICS if manifest.task_kind == TASK_SEGMENTATION else CLS_METRICS

    baseline_dir = predictions_root / point_dirname(0.0, 0.0)
    baseline = None
    if baseline_dir.is_dir():
        baseline = _point_metrics(manifest, entries, baseline_dir, threshold)
    if baseline is None:
        raise MissingBaselineError(
            f"baseline predictions missing under {baseline_dir} "
            "(deltas are undefined without the (0, 0) point)"
        )
    base_values = baseline[0]

    records: list[EvalRecord] = []
    for s_q, s_e in ladder.points():
        point_dir = predictions_root / point_dirname(s_q, s_e)
        outcome = None
        if point_dir.is_dir():
            outcome = _point_metrics(manifest, entries, point_dir, threshold)
        if outcome is None:
            log.warning(
                "eval: no predictions for point (%s, %s) under %s; point skipped",
                s_q,
                s_e,
                point_dir,
            )
            continue
        values, n_samples, flags, per_sample = outcome
        if per_sample_sink is not None:
            per_sample_sink.extend(
                PerSampleRecord(task_id, s_q, s_e, sample_id, metric, value)
                for sample_id, metric, value in per_sample
            )
        for metric in metric_names:
            value = values[metric]
            records.append(
                EvalRecord(
                    task_id=task_id,
                    s_q=s_q,
                    s_e=s_e,
                    metric=metric,
                    value=value,
                    delta=value - base_values[metric],
                    n_samples=n_samples,
                    flags=flags,
                )
            )
    records.sort(key=lambda r: (r.task_id, r.s_q, r.s_e, metric_names.index(r.metric)))
    return records


def _axis_flags(points: list[tuple[float, float, float]]) -> tuple[str, ...]:
    values = [p[1] for p in points]
    if len(values) >= 2:
        non_increasing = all(b <= a for a, b in zip(values, values[1:]))
        if non_increasing and values[-1] < values[0]:
            return (MONOTONE_FLAG,)
    return ()


def build_curves(records: list[EvalRecord]) -> list[RobustnessCurve]:
    """One curve per (task, axis, metric); the baseline anchors both axes."""
    if not records:
        raise DegenerateInputError("cannot build curves from an empty record list")
    curves: list[RobustnessCurve] = []
    keys: list[tuple[str, str]] = []
    for r in records:
        if (r.task_id, r.metric) not in keys:
            keys.append((r.task_id, r.metric))
    for task_id, metric in keys:
        subset = [r for r in records if r.task_id == task_id and r.metric == metric]
        if not any(r.s_q == 0 and r.s_e == 0 for r in subset):
            raise DegenerateInputError(
                f"records for ({task_id}, {metric}) lack the (0, 0) baseline"
            )
        for axis, selector, severity in (
            ("quantum", lambda r: r.s_e == 0, lambda r: r.s_q),
            ("electronic", lambda r: r.s_q == 0, lambda r: r.s_e),
        ):
            axis_records = sorted((r for r in subset if selector(r)), key=severity)
            points = tuple((severity(r), r.value, r.delta) for r in axis_records)
            curves.append(
                RobustnessCurve(
                    task_id=task_id,
                    axis=axis,
                    metric=metric,
                    points=points,
                    flags=_axis_flags(list(points)),
                )
            )
    return curves


def write_per_sample(rows: list[PerSampleRecord], path: str | Path) -> None:
    lines = ["task_id,s_q,s_e,sample_id,metric,value"]
    for r in rows:
        lines.append(f"{r.task_id},{r.s_q:.2f},{r.s_e:.2f},{r.sample_id},{r.metric},{r.value:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_records(records: list[EvalRecord], path: str | Path) -> None:
    lines = [RECORD_HEADER]
    for r in records:
        flags = ";".join(r.flags)
        lines.append(
            f"{r.task_id},{r.s_q:.2f},{r.s_e:.2f},{r.metric},"
            f"{r.value:.6f},{r.delta:.6f},{r.n_samples},{flags}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_curves(curves: list[RobustnessCurve], out_dir: str | Path, meta: dict | None = None) -> list[Path]:
    """One structured-text (JSON) document per task, full-precision values."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    tasks: list[str] = []
    for c in curves:
        if c.task_id not in tasks:
            tasks.append(c.task_id)
    for task_id in tasks:
        doc = {
            "task_id": task_id,
            "conventions": dict(meta or {}),
            "curves": [
                {
                    "axis": c.axis,
                    "metric": c.metric,
                    "flags": list(c.flags),
                    "points": [
                        {"severity": sev, "value": value, "delta": delta}
                        for sev, value, delta in c.points
                    ],
                }
                for c in curves
                if c.task_id == task_id
            ],
        }
        path = out_dir / f"{task_id}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        written.append(path)
    return written


def write_summary(records: list[EvalRecord], path: str | Path, meta: dict | None = None) -> None:
    """Human-readable aligned-column table, one block per task."""
    lines = ["# sweep evaluation summary"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key}: {value}")
    tasks: list[str] = []
    for r in records:
        if r.task_id not in tasks:
            tasks.append(r.task_id)
    for task_id in tasks:
        subset = [r for r in records if r.task_id == task_id]
        metrics: list[str] = []
        for r in subset:
            if r.metric not in metrics:
                metrics.append(r.metric)
        lines.append(f"task: {task_id}")
        header = f"  {'s_q':>6}  {'s_e':>6}"
        for m in metrics:
            header += f"  {m:>10}  {m + '_diff':>12}"
        lines.append(header)
        points: list[tuple[float, float]] = []
        for r in subset:
            if (r.s_q, r.s_e) not in points:
                points.append((r.s_q, r.s_e))
        for s_q, s_e in points:
            row = f"  {s_q:>6.2f}  {s_e:>6.2f}"
            for m in metrics:
                rec = next(r for r in subset if r.s_q == s_q and r.s_e == s_e and r.metric == m)
                row += f"  {rec.value:>10.6f}  {rec.delta:>+12.6f}"
            lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
