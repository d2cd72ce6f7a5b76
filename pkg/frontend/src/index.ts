/**
 * noiseforge: Node bindings for the radnoise noise-injection pipeline.
 *
 * Everything stochastic or metric-bearing is delegated to the engine
 * through its public surfaces (the CLI and its file formats), so values
 * here are bit-identical to what the engine produces on its own.
 */

export { BufferView, checkBuffer, levelsToFloat, toLevels } from "./buffers.js";
export { boundInject, InjectOptions } from "./inject.js";
export { auprc, auroc, dice, iou, ScoredSample } from "./metrics.js";
export { decodePgm, encodePgm, GrayImage } from "./pgm.js";
export { crc32, encodeGrayPng } from "./png.js";
export { CliOptions } from "./runner.js";
export { photonBudget, sigmaE } from "./scalars.js";
