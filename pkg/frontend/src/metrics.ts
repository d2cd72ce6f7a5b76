/**
 * Metric bindings: every value is computed by the engine's evaluation
 * pipeline (single-point ladder at severity (0, 0)) and read back from
 * its full-precision curve export, so results match the engine exactly.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { BufferView } from "./buffers.js";
import { encodeGrayPng } from "./png.js";
import { CliOptions, runCli, withTempDir } from "./runner.js";

export interface ScoredSample {
  /** Prediction score in [0, 1]. */
  score: number;
  /** Ground-truth label. */
  label: 0 | 1;
}

const MANIFEST_HEADER = "image_id,patient_id,image_path,mask_path,label,source_tag";
const BASELINE_DIR = "sq0.00_se0.00";

function checkMask(view: BufferView, name: string): void {
  if (!(view.data instanceof Uint8Array)) {
    throw new Error(`${name} mask must be a Uint8Array label buffer`);
  }
  if (view.data.length !== view.height * view.width) {
    throw new Error(`${name} mask length does not match its dimensions`);
  }
}

function curveValue(reportDir: string, metric: string): number {
  const doc = JSON.parse(readFileSync(join(reportDir, "curves", "pair.json"), "utf-8"));
  const curve = doc.curves.find(
    (c: { axis: string; metric: string }) => c.axis === "quantum" && c.metric === metric,
  );
  if (!curve || !curve.points.length) {
    throw new Error(`engine report is missing the ${metric} curve`);
  }
  return curve.points[0].value;
}

function segMetric(
  metric: "dice" | "iou",
  pred: BufferView,
  truth: BufferView,
  options?: CliOptions,
): number {
  checkMask(pred, "prediction");
  checkMask(truth, "truth");
  if (pred.height !== truth.height || pred.width !== truth.width) {
    throw new Error(
      `mask shapes differ: ${pred.height}x${pred.width} vs ${truth.height}x${truth.width}`,
    );
  }
  return withTempDir((dir) => {
    const truthPath = join(dir, "truth.png");
    writeFileSync(truthPath, encodeGrayPng(truth.data as Uint8Array, truth.width, truth.height));
    const manifestPath = join(dir, "manifest.csv");
    writeFileSync(manifestPath, `${MANIFEST_HEADER}\nm0,p0,truth.png,truth.png,,noiseforge\n`);
    const pointDir = join(dir, "preds", BASELINE_DIR);
    mkdirSync(pointDir, { recursive: true });
    writeFileSync(
      join(pointDir, "m0.png"),
      encodeGrayPng(pred.data as Uint8Array, pred.width, pred.height),
    );
    const reportDir = join(dir, "report");
    runCli(
      [
        "eval",
        "--manifest", manifestPath,
        "--task", "seg",
        "--pred-root", join(dir, "preds"),
        "--out", reportDir,
        "--sq-levels", "0",
        "--se-levels", "0",
        "--task-id", "pair",
      ],
      options,
    );
    return curveValue(reportDir, metric);
  });
}

export function dice(pred: BufferView, truth: BufferView, options?: CliOptions): number {
  return segMetric("dice", pred, truth, options);
}

export function iou(pred: BufferView, truth: BufferView, options?: CliOptions): number {
  return segMetric("iou", pred, truth, options);
}

function rankingMetric(
  metric: "auroc" | "auprc",
  samples: ScoredSample[],
  options?: CliOptions,
): number {
  if (!samples.length) {
    throw new Error("need at least one scored sample");
  }
  for (const [i, sample] of samples.entries()) {
    if (!Number.isFinite(sample.score) || sample.score < 0 || sample.score > 1) {
      throw new Error(`sample ${i}: score must lie in [0, 1], got ${sample.score}`);
    }
    if (sample.label !== 0 && sample.label !== 1) {
      throw new Error(`sample ${i}: label must be 0 or 1, got ${sample.label}`);
    }
  }
  return withTempDir((dir) => {
    const ids = samples.map((_, i) => `s${String(i).padStart(4, "0")}`);
    const manifestRows = samples.map(
      (s, i) => `${ids[i]},p${ids[i]},${ids[i]}.png,,${s.label},noiseforge`,
    );
    const manifestPath = join(dir, "manifest.csv");
    writeFileSync(manifestPath, `${MANIFEST_HEADER}\n${manifestRows.join("\n")}\n`);
    const pointDir = join(dir, "preds", BASELINE_DIR);
    mkdirSync(pointDir, { recursive: true });
    const scoreRows = samples.map((s, i) => `${ids[i]},${s.score},${s.label}`);
    writeFileSync(join(pointDir, "scores.csv"), scoreRows.join("\n") + "\n");
    const reportDir = join(dir, "report");
    runCli(
      [
        "eval",
        "--manifest", manifestPath,
        "--task", "cls",
        "--pred-root", join(dir, "preds"),
        "--out", reportDir,
        "--sq-levels", "0",
        "--se-levels", "0",
        "--task-id", "pair",
      ],
      options,
    );
    return curveValue(reportDir, metric);
  });
}

export function auroc(samples: ScoredSample[], options?: CliOptions): number {
  return rankingMetric("auroc", samples, options);
}

export function auprc(samples: ScoredSample[], options?: CliOptions): number {
  return rankingMetric("auprc", samples, options);
}
