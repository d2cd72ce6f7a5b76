/** Noise injection over caller buffers, delegated to the engine CLI. */

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { BufferView, checkBuffer, levelsToFloat, toLevels } from "./buffers.js";
import { decodePgm, encodePgm } from "./pgm.js";
import { CliOptions, runCli, withTempDir } from "./runner.js";

export interface InjectOptions extends CliOptions {
  /** Baseline photons/pixel at quantum severity 1 (engine default 1000). */
  n0?: number;
  /** Baseline Gaussian std in normalized units (engine default 0.1). */
  sigma0?: number;
}

/**
 * Corrupt one image buffer at severities (sQ, sE) with the given seed.
 *
 * The buffer travels through the engine's 8-bit image interface, so the
 * result is byte-identical to running the CLI's `inject` on the same
 * pixels.  Float buffers are quantized on the way in (round half away
 * from zero, the engine's own rule) and mapped back to levels / 255 on
 * the way out.  The input buffer is never mutated; the output has the
 * same shape and dtype.
 */
export function boundInject(
  view: BufferView,
  sQ: number,
  sE: number,
  seed: number,
  options?: InjectOptions,
): BufferView {
  checkBuffer(view);
  if (!Number.isFinite(sQ) || !Number.isFinite(sE)) {
    throw new Error(`severities must be finite numbers, got (${sQ}, ${sE})`);
  }
  if (!Number.isSafeInteger(seed)) {
    throw new Error(`seed must be a safe integer, got ${seed}`);
  }
  const levels = toLevels(view);
  const outLevels = withTempDir((dir) => {
    const inPath = join(dir, "in.pgm");
    const outPath = join(dir, "out.pgm");
    writeFileSync(inPath, encodePgm(levels, view.width, view.height));
    const args = [
      "inject",
      inPath,
      "--out",
      outPath,
      "--sq",
      String(sQ),
      "--se",
      String(sE),
      "--seed",
      String(seed),
    ];
    if (options?.n0 !== undefined) args.push("--n0", String(options.n0));
    if (options?.sigma0 !== undefined) args.push("--sigma0", String(options.sigma0));
    runCli(args, options);
    const decoded = decodePgm(readFileSync(outPath));
    if (decoded.width !== view.width || decoded.height !== view.height) {
      throw new Error(
        `engine returned ${decoded.width}x${decoded.height} for a ` +
          `${view.width}x${view.height} input`,
      );
    }
    return decoded.levels;
  });
  const data = view.data instanceof Float64Array ? levelsToFloat(outLevels) : outLevels;
  return { height: view.height, width: view.width, data };
}
