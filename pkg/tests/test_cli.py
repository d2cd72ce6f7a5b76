"""CLI exit codes, logging contract, idempotence, and flag defaults."""

import numpy as np
import pytest

from conftest import build_seg_corpus
from radnoise import imgio
from radnoise.cli import main
from radnoise.corpus import read_split, write_manifest
from radnoise.ladder import point_dirname


@pytest.fixture()
def seg_corpus(tmp_path):
    manifest = build_seg_corpus(tmp_path, n_images=3, size=16)
    manifest_path = tmp_path / "manifest.csv"
    write_manifest(manifest, manifest_path)
    return manifest, manifest_path


def test_help_lists_paper_default_constants(capsys):
    for command in ("inject", "sweep"):
        with pytest.raises(SystemExit) as excinfo:
            main([command, "--help"])
        assert excinfo.value.code == 0
        text = capsys.readouterr().out
        if command == "inject":
            assert "1000" in text and "0.1" in text
        else:
            assert "0,1,2,4,6,8,10" in text


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as excinfo:
        main(["sweep"])  # missing required flags
    assert excinfo.value.code == 2


def test_inject_missing_input_exits_1(tmp_path, caplog):
    code = main(["inject", str(tmp_path / "missing.png"), "--out", str(tmp_path / "o.png")])
    assert code == 1
    assert any("missing.png" in m for m in caplog.messages)


def test_inject_identity_at_zero_severities(tmp_path):
    levels = np.random.default_rng(0).integers(0, 256, size=(16, 16), dtype=np.uint8)
    src = tmp_path / "in.png"
    dst = tmp_path / "out.png"
    imgio.write_levels(src, levels)
    assert main(["inject", str(src), "--out", str(dst), "--sq", "0", "--se", "0"]) == 0
    assert np.array_equal(imgio.read_levels(dst), levels)


def test_inject_logs_photon_budget(tmp_path, caplog):
    levels = np.full((8, 8), 128, dtype=np.uint8)
    src = tmp_path / "in.png"
    imgio.write_levels(src, levels)
    with caplog.at_level("INFO"):
        code = main([
            "inject", str(src), "--out", str(tmp_path / "o.png"),
            "--sq", "10", "--se", "0", "--seed", "1",
        ])
    assert code == 0
    assert any("photons/pixel = 10" in m for m in caplog.messages)


def test_inject_is_deterministic_across_runs(tmp_path):
    levels = np.random.default_rng(1).integers(0, 256, size=(16, 16), dtype=np.uint8)
    src = tmp_path / "in.png"
    imgio.write_levels(src, levels)
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    args = [str(src), "--sq", "4", "--se", "2", "--seed", "7"]
    assert main(["inject", *args, "--out", str(a)]) == 0
    assert main(["inject", *args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_default_ladder_writes_14_points(tmp_path, seg_corpus):
    _, manifest_path = seg_corpus
    out = tmp_path / "sweep"
    code = main(["sweep", "--manifest", str(manifest_path), "--out", str(out), "--seed", "3"])
    assert code == 0
    point_dirs = [p for p in out.iterdir() if p.is_dir()]
    assert len(point_dirs) == 14
    assert (out / "sweep_index.csv").exists()
    assert (out / "run_metadata.txt").exists()


def test_sweep_rerun_reports_zero_files_rewritten(tmp_path, seg_corpus, caplog):
    _, manifest_path = seg_corpus
    out = tmp_path / "sweep"
    args = ["sweep", "--manifest", str(manifest_path), "--out", str(out),
            "--seed", "3", "--sq-levels", "0,2", "--se-levels", "0"]
    assert main(args) == 0
    caplog.clear()
    with caplog.at_level("INFO"):
        assert main(args) == 0
    assert any("0 files rewritten" in m for m in caplog.messages)


def test_sweep_full_grid_point_count(tmp_path, seg_corpus):
    _, manifest_path = seg_corpus
    out = tmp_path / "grid"
    code = main([
        "sweep", "--manifest", str(manifest_path), "--out", str(out),
        "--seed", "3", "--grid", "full", "--sq-levels", "0,1,2", "--se-levels", "0,1",
    ])
    assert code == 0
    assert len([p for p in out.iterdir() if p.is_dir()]) == 6


def test_eval_cli_on_perfect_predictions(tmp_path, seg_corpus):
    manifest, manifest_path = seg_corpus
    preds = tmp_path / "preds"
    for point in ((0.0, 0.0), (0.0, 2.0)):
        d = preds / point_dirname(*point)
        d.mkdir(parents=True)
        for entry in manifest.entries:
            imgio.write_levels(d / f"{entry.image_id}.png", imgio.read_levels(entry.mask_path))
    out = tmp_path / "report"
    code = main([
        "eval", "--manifest", str(manifest_path), "--pred-root", str(preds),
        "--out", str(out), "--sq-levels", "0", "--se-levels", "0,2",
    ])
    assert code == 0
    lines = (out / "records.csv").read_text().splitlines()
    assert len(lines) == 1 + 4
    assert all(",1.000000,+0.000000," not in line for line in lines)  # delta prints unsigned
    assert all(",1.000000,0.000000," in line for line in lines[1:])
    assert (out / "curves" / "manifest.json").exists()
    assert (out / "summary.txt").exists()
    per_sample = (out / "per_sample.csv").read_text().splitlines()
    assert per_sample[0] == "task_id,s_q,s_e,sample_id,metric,value"
    assert len(per_sample) == 1 + 2 * 3 * 2  # 2 points x 3 images x (dice, iou)


def test_eval_missing_baseline_exits_1(tmp_path, seg_corpus, caplog):
    _, manifest_path = seg_corpus
    preds = tmp_path / "nothing"
    preds.mkdir()
    code = main([
        "eval", "--manifest", str(manifest_path), "--pred-root", str(preds),
        "--out", str(tmp_path / "report"),
    ])
    assert code == 1
    assert any("baseline" in m.lower() for m in caplog.messages)


def test_validate_noise_passes_and_corrupt_hook_fails(capsys):
    code = main(["validate-noise", "--samples", "120000", "--seed", "5"])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS quantum-variance" in out and "FAIL" not in out

    code = main(["validate-noise", "--samples", "120000", "--seed", "5", "--corrupt-sampler"])
    assert code == 3
    assert "FAIL" in capsys.readouterr().out


def test_validate_noise_rejects_tiny_sample_count():
    assert main(["validate-noise", "--samples", "10"]) == 2


def test_split_cli_round_trip(tmp_path, seg_corpus):
    _, manifest_path = seg_corpus
    out = tmp_path / "split.csv"
    code = main([
        "split", "--manifest", str(manifest_path), "--out", str(out),
        "--seed", "11", "--fractions", "0.34,0.33,0.33",
    ])
    assert code == 0
    assignment = read_split(out)
    assert len(assignment.by_patient) == 3


def test_split_cli_infeasible_exits_2(tmp_path):
    two_patients = build_seg_corpus(tmp_path / "single", n_images=2, size=16)
    tiny_path = tmp_path / "tiny.csv"
    write_manifest(two_patients, tiny_path)
    code = main([
        "split", "--manifest", str(tiny_path), "--out", str(tmp_path / "s.csv"),
        "--fractions", "0.4,0.3,0.3",
    ])
    assert code == 2


def _write_cls_fixture(tmp_path, labels, scores_by_point):
    """Manifest + per-point scores.csv files; returns (manifest_path, preds_root)."""
    from radnoise.corpus import CorpusEntry, CorpusManifest

    entries = tuple(
        CorpusEntry(
            image_id=f"s{i:03d}",
            patient_id=f"p{i:03d}",
            image_path=tmp_path / f"s{i:03d}.png",
            label=int(label),
        )
        for i, label in enumerate(labels)
    )
    manifest = CorpusManifest(entries=entries, task_kind="binary-classification")
    manifest_path = tmp_path / "cls_manifest.csv"
    write_manifest(manifest, manifest_path)
    preds = tmp_path / "cls_preds"
    for point, scores in scores_by_point.items():
        d = preds / point_dirname(*point)
        d.mkdir(parents=True, exist_ok=True)
        rows = [f"{e.image_id},{s},{e.label}" for e, s in zip(entries, scores)]
        (d / "scores.csv").write_text("\n".join(rows) + "\n")
    return manifest_path, preds


def test_eval_prints_worked_auroc_fixture_at_six_decimals(tmp_path):
    manifest_path, preds = _write_cls_fixture(
        tmp_path,
        labels=[0, 0, 1, 1],
        scores_by_point={(0.0, 0.0): [0.1, 0.4, 0.35, 0.8]},
    )
    out = tmp_path / "report"
    code = main([
        "eval", "--manifest", str(manifest_path), "--task", "cls",
        "--pred-root", str(preds), "--out", str(out),
        "--sq-levels", "0", "--se-levels", "0", "--task-id", "worked",
    ])
    assert code == 0
    lines = (out / "records.csv").read_text().splitlines()
    auroc_line = next(line for line in lines if ",auroc," in line)
    assert auroc_line.startswith("worked,0.00,0.00,auroc,0.750000,0.000000,4")


def test_eval_with_split_restricts_to_test_entries(tmp_path):
    # alternate labels so a stratified split puts one of each class per split
    labels = [1, 0, 1, 0, 1, 0]
    scores = [0.9, 0.2, 0.8, 0.3, 0.7, 0.4]
    manifest_path, preds = _write_cls_fixture(
        tmp_path, labels, {(0.0, 0.0): scores}
    )
    split_path = tmp_path / "split.csv"
    assert main([
        "split", "--manifest", str(manifest_path), "--task", "cls",
        "--out", str(split_path), "--seed", "2",
        "--fractions", "0.34,0.33,0.33", "--stratify",
    ]) == 0
    out = tmp_path / "report"
    code = main([
        "eval", "--manifest", str(manifest_path), "--task", "cls",
        "--pred-root", str(preds), "--out", str(out),
        "--sq-levels", "0", "--se-levels", "0", "--split", str(split_path),
    ])
    assert code == 0
    lines = (out / "records.csv").read_text().splitlines()[1:]
    assert lines and all(line.split(",")[6] == "2" for line in lines)  # 2 test samples


def test_eval_max_f1_threshold_needs_split(tmp_path):
    manifest_path, preds = _write_cls_fixture(
        tmp_path,
        labels=[0, 0, 1, 1],
        scores_by_point={(0.0, 0.0): [0.1, 0.4, 0.35, 0.8]},
    )
    code = main([
        "eval", "--manifest", str(manifest_path), "--task", "cls",
        "--pred-root", str(preds), "--out", str(tmp_path / "r"),
        "--sq-levels", "0", "--se-levels", "0", "--threshold", "max-f1",
    ])
    assert code == 2


def test_eval_max_f1_threshold_with_split(tmp_path, caplog):
    labels = [1, 0, 1, 0, 1, 0]
    scores = [0.9, 0.2, 0.8, 0.3, 0.7, 0.4]
    manifest_path, preds = _write_cls_fixture(tmp_path, labels, {(0.0, 0.0): scores})
    split_path = tmp_path / "split.csv"
    assert main([
        "split", "--manifest", str(manifest_path), "--task", "cls",
        "--out", str(split_path), "--seed", "2",
        "--fractions", "0.34,0.33,0.33", "--stratify",
    ]) == 0
    out = tmp_path / "report"
    with caplog.at_level("INFO"):
        code = main([
            "eval", "--manifest", str(manifest_path), "--task", "cls",
            "--pred-root", str(preds), "--out", str(out),
            "--sq-levels", "0", "--se-levels", "0",
            "--split", str(split_path), "--threshold", "max-f1",
        ])
    assert code == 0
    assert any("threshold maximizing F1" in m for m in caplog.messages)
    assert "f1_threshold" in (out / "summary.txt").read_text()


def test_sweep_resize_changes_output_dimensions(tmp_path, seg_corpus):
    _, manifest_path = seg_corpus
    out = tmp_path / "resized"
    code = main([
        "sweep", "--manifest", str(manifest_path), "--out", str(out),
        "--seed", "1", "--sq-levels", "0", "--se-levels", "0", "--resize", "8",
    ])
    assert code == 0
    produced = next((out / point_dirname(0.0, 0.0)).glob("*.png"))
    assert imgio.read_levels(produced).shape == (8, 8)


def test_sweep_identical_with_jobs_1_and_8(tmp_path, seg_corpus):
    _, manifest_path = seg_corpus
    out1, out8 = tmp_path / "j1", tmp_path / "j8"
    base = ["sweep", "--manifest", str(manifest_path), "--seed", "4",
            "--sq-levels", "0,4", "--se-levels", "0,2"]
    assert main([*base, "--out", str(out1), "--jobs", "1"]) == 0
    assert main([*base, "--out", str(out8), "--jobs", "8"]) == 0
    rel1 = sorted(p.relative_to(out1) for p in out1.rglob("*") if p.is_file())
    rel8 = sorted(p.relative_to(out8) for p in out8.rglob("*") if p.is_file())
    assert rel1 == rel8
    for rel in rel1:
        if rel.name == "run_metadata.txt":
            continue  # differs by the out/jobs flag values by construction
        assert (out1 / rel).read_bytes() == (out8 / rel).read_bytes()
