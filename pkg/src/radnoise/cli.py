"""Command-line entry point wiring the pipeline stages together.

Subcommands: inject, sweep, eval, validate-noise, split.  All randomness
flows from the --seed flag (no ambient entropy), structured logs go to
stderr, and data artifacts go only to files, so runs compose and rerun
bit-identically.

Exit codes: 0 success, 1 I/O or data errors, 2 usage errors, 3
statistical validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    TASK_CLASSIFICATION,
    TASK_SEGMENTATION,
    read_manifest,
    read_split,
    split_corpus,
    write_split,
)
from .errors import (
    DegenerateInputError,
    DomainError,
    InfeasibleSplitError,
    RadnoiseError,
)
from .image import QuantizedImage, normalize, quantize
from .imgio import read_levels, write_levels
from .ladder import (
    DEFAULT_LEVELS,
    SeverityLadder,
    build_curves,
    evaluate_sweep,
    generate_corrupted_corpus,
    point_dirname,
    write_curves,
    write_per_sample,
    write_records,
    write_summary,
)
from .metrics import best_f1_threshold
from .noise import (
    DEFAULT_N0,
    DEFAULT_SIGMA0,
    NoiseSpec,
    format_photon_budget,
    inject,
    moment_checks,
    photon_budget,
    sigma_e,
)

log = logging.getLogger("radnoise")

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3

_TASK_KINDS = {"seg": TASK_SEGMENTATION, "cls": TASK_CLASSIFICATION}
_DEFAULT_LEVELS_TEXT = ",".join(f"{v:g}" for v in DEFAULT_LEVELS)


def _parse_levels(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise DomainError(f"bad severity level list {text!r}: {exc}") from exc


def _parse_fractions(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise DomainError(f"expected three fractions, got {text!r}")
    return (parts[0], parts[1], parts[2])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_run_metadata(path: Path, args: argparse.Namespace, digests: dict[str, str]) -> None:
    """Key-value run record; deliberately timestamp-free so reruns match."""
    lines = [f"version = {__version__}", f"subcommand = {args.command}"]
    for key in sorted(vars(args)):
        if key in ("command", "func", "verbose"):
            continue
        lines.append(f"{key} = {getattr(args, key)}")
    for name in sorted(digests):
        lines.append(f"sha256:{name} = {digests[name]}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _ladder_from_args(args: argparse.Namespace) -> SeverityLadder:
    return SeverityLadder(
        quantum_levels=_parse_levels(args.sq_levels),
        electronic_levels=_parse_levels(args.se_levels),
        pairing=args.grid,
    )


def _add_spec_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="global reproducibility seed")
    parser.add_argument("--n0", type=float, default=DEFAULT_N0,
                        help="baseline photons/pixel at quantum severity 1")
    parser.add_argument("--sigma0", type=float, default=DEFAULT_SIGMA0,
                        help="baseline Gaussian std in normalized intensity units")


def _add_ladder_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sq-levels", default=_DEFAULT_LEVELS_TEXT,
                        help="comma-separated quantum severities")
    parser.add_argument("--se-levels", default=_DEFAULT_LEVELS_TEXT,
                        help="comma-separated electronic severities")
    parser.add_argument("--grid", choices=("axis", "full"), default="axis",
                        help="axis sweep (plus the joint (1,1) point) or full grid")


def cmd_inject(args: argparse.Namespace) -> int:
    in_path = Path(args.image)
    if not in_path.exists():
        log.error("input image not found: %s", in_path)
        return EXIT_IO
    spec = NoiseSpec(s_q=args.sq, s_e=args.se, n0=args.n0, sigma0=args.sigma0, seed=args.seed)
    if spec.s_q >= 1:
        log.info("photons/pixel = %s", format_photon_budget(photon_budget(spec.s_q, spec.n0)))
    else:
        log.info("quantum source omitted (s_q = 0)")
    log.info("sigma_e = %s", sigma_e(spec.s_e, spec.sigma0))

    img = normalize(QuantizedImage(read_levels(in_path)))
    realization = inject(img, spec)
    write_levels(args.out, quantize(realization.corrupted).levels)
    log.info("wrote %s", args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.manifest, _TASK_KINDS[args.task])
    ladder = _ladder_from_args(args)
    spec = NoiseSpec(n0=args.n0, sigma0=args.sigma0, seed=args.seed)
    out_dir = Path(args.out)
    result = generate_corrupted_corpus(
        manifest, ladder, spec, out_dir, jobs=args.jobs, resize_to=args.resize
    )
    _write_run_metadata(
        out_dir / "run_metadata.txt", args, {"manifest": _sha256(Path(args.manifest))}
    )
    log.info(
        "%d files written, %d files rewritten, %d unchanged",
        result.written,
        result.rewritten,
        result.unchanged,
    )
    if result.failures:
        for image_id, s_q, s_e, message in result.failures:
            log.error("failed: %s at (%s, %s): %s", image_id, s_q, s_e, message)
        log.error("%d generation failures", len(result.failures))
        return EXIT_IO
    return EXIT_OK


def _resolve_threshold(args: argparse.Namespace, manifest, split) -> float:
    if args.threshold != "max-f1":
        try:
            return float(args.threshold)
        except ValueError:
            raise DomainError(
                f"--threshold must be a number or 'max-f1', got {args.threshold!r}"
            ) from None
    if manifest.task_kind != TASK_CLASSIFICATION:
        raise DomainError("--threshold max-f1 applies to classification tasks only")
    if split is None:
        raise DomainError("--threshold max-f1 needs --split to locate the validation set")
    from .corpus import load_predictions

    val_entries = split.entries_in(manifest, "val")
    if not val_entries:
        raise DomainError("--threshold max-f1: the split has no validation entries")
    baseline_dir = Path(args.pred_root) / point_dirname(0.0, 0.0)
    load = load_predictions(manifest, baseline_dir, val_entries)
    samples = [load.scores[e.image_id] for e in val_entries if e.image_id in load.scores]
    if not samples:
        raise DomainError("--threshold max-f1: no baseline scores for the validation set")
    chosen = best_f1_threshold(samples)
    log.info("threshold maximizing F1 on the validation split: %s", chosen)
    return chosen


def cmd_eval(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.manifest, _TASK_KINDS[args.task])
    ladder = _ladder_from_args(args)
    split = read_split(args.split) if args.split else None
    threshold = _resolve_threshold(args, manifest, split)
    task_id = args.task_id or Path(args.manifest).stem

    per_sample: list = []
    records = evaluate_sweep(
        manifest,
        ladder,
        args.pred_root,
        task_id=task_id,
        split=split,
        threshold=threshold,
        per_sample_sink=per_sample,
    )
    curves = build_curves(records)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "auprc_convention": "step-wise average precision (no trapezoidal interpolation)",
        "f1_threshold": threshold,
    }
    write_records(records, out_dir / "records.csv")
    write_per_sample(per_sample, out_dir / "per_sample.csv")
    write_curves(curves, out_dir / "curves", meta=meta)
    write_summary(records, out_dir / "summary.txt", meta=meta)
    _write_run_metadata(
        out_dir / "run_metadata.txt", args, {"manifest": _sha256(Path(args.manifest))}
    )
    log.info("wrote %d records for %d curves under %s", len(records), len(curves), out_dir)
    return EXIT_OK


def cmd_validate_noise(args: argparse.Namespace) -> int:
    spec = NoiseSpec(s_q=args.sq, s_e=args.se, n0=args.n0, sigma0=args.sigma0, seed=args.seed)
    results = moment_checks(
        spec, samples=args.samples, intensity=args.intensity, corrupt=args.corrupt_sampler
    )
    all_passed = True
    for check in results:
        print(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}")
        all_passed &= check.passed
    return EXIT_OK if all_passed else EXIT_VALIDATION


def cmd_split(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.manifest, _TASK_KINDS[args.task])
    assignment = split_corpus(
        manifest, _parse_fractions(args.fractions), args.seed, stratify_by_label=args.stratify
    )
    write_split(assignment, args.out)
    counts = {name: 0 for name in ("train", "val", "test")}
    for split_name in assignment.by_patient.values():
        counts[split_name] += 1
    log.info(
        "assigned %d patients: %d train / %d val / %d test -> %s",
        len(assignment.by_patient),
        counts["train"],
        counts["val"],
        counts["test"],
        args.out,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radnoise",
        description=(
            "Calibrated quantum (Poisson) and electronic (Gaussian) noise "
            "injection for grayscale radiographs, with severity sweeps and "
            "robustness evaluation."
        ),
    )
    parser.add_argument("--version", action="version", version=f"radnoise {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity")
    sub = parser.add_subparsers(dest="command", required=True)

    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("inject", formatter_class=fmt,
                       help="corrupt one image at a single severity pair")
    p.add_argument("image", help="input 8-bit grayscale PNG/PGM")
    p.add_argument("--out", required=True, help="output image path (.png or .pgm)")
    p.add_argument("--sq", type=float, default=0.0, help="quantum severity (0 omits)")
    p.add_argument("--se", type=float, default=0.0, help="electronic severity (0 omits)")
    _add_spec_flags(p)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("sweep", formatter_class=fmt,
                       help="generate corrupted corpora across a severity ladder")
    p.add_argument("--manifest", required=True, help="corpus manifest CSV")
    p.add_argument("--task", choices=("seg", "cls"), default="seg", help="task kind")
    p.add_argument("--out", required=True, help="output directory for the sweep tree")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--resize", type=int, default=None,
                   help="resample images to N x N before injection")
    _add_spec_flags(p)
    _add_ladder_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", formatter_class=fmt,
                       help="score external predictions across the ladder")
    p.add_argument("--manifest", required=True, help="corpus manifest CSV")
    p.add_argument("--task", choices=("seg", "cls"), default="seg", help="task kind")
    p.add_argument("--pred-root", required=True,
                   help="directory with per-point prediction subdirectories")
    p.add_argument("--out", required=True, help="output directory for reports")
    p.add_argument("--split", default=None,
                   help="patient_id,split file; evaluation uses the test split")
    p.add_argument("--task-id", default=None,
                   help="task label in reports (default: manifest stem)")
    p.add_argument("--threshold", default="0.5",
                   help="F1 threshold, or 'max-f1' to pick it on the validation split")
    _add_ladder_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("validate-noise", formatter_class=fmt,
                       help="Monte Carlo check of the noise moment and SNR laws")
    p.add_argument("--sq", type=float, default=2.0, help="quantum severity to validate")
    p.add_argument("--se", type=float, default=2.0, help="electronic severity to validate")
    p.add_argument("--samples", type=int, default=1_000_000, help="pixels per check")
    p.add_argument("--intensity", type=float, default=0.5, help="constant-field intensity")
    p.add_argument("--corrupt-sampler", action="store_true", help=argparse.SUPPRESS)
    _add_spec_flags(p)
    p.set_defaults(func=cmd_validate_noise)

    p = sub.add_parser("split", formatter_class=fmt,
                       help="patient-level train/val/test split")
    p.add_argument("--manifest", required=True, help="corpus manifest CSV")
    p.add_argument("--task", choices=("seg", "cls"), default="seg", help="task kind")
    p.add_argument("--fractions", default="0.7,0.15,0.15",
                   help="train,val,test fractions (must sum to 1)")
    p.add_argument("--stratify", action="store_true",
                   help="preserve class balance across splits (classification)")
    p.add_argument("--out", required=True, help="output split file")
    p.add_argument("--seed", type=int, default=0, help="global reproducibility seed")
    p.set_defaults(func=cmd_split)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DomainError, InfeasibleSplitError, DegenerateInputError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except RadnoiseError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
