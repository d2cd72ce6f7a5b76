/**
 * Contiguous single-channel image buffers exchanged with the pipeline.
 *
 * Two layouts are supported: 8-bit levels (Uint8Array, 0-255) and
 * unit-interval reals (Float64Array, values in [0, 1]).  Buffers are
 * always row-major with length = height * width; callers' buffers are
 * never mutated.
 */

export interface BufferView {
  readonly height: number;
  readonly width: number;
  readonly data: Uint8Array | Float64Array;
}

export function checkBuffer(view: BufferView): void {
  const { height, width, data } = view;
  if (!Number.isInteger(height) || !Number.isInteger(width) || height < 1 || width < 1) {
    throw new Error(`buffer dimensions must be positive integers, got ${height}x${width}`);
  }
  if (!(data instanceof Uint8Array) && !(data instanceof Float64Array)) {
    throw new Error(
      "unsupported buffer dtype: expected Uint8Array (8-bit levels) or Float64Array (unit-interval reals)",
    );
  }
  const expected = height * width;
  if (data.length !== expected) {
    const channels = data.length / expected;
    if (Number.isInteger(channels) && channels > 1) {
      throw new Error(
        `buffer looks ${channels}-channel (length ${data.length} for ${height}x${width}); ` +
          "only single-channel grayscale buffers are supported",
      );
    }
    throw new Error(`buffer length ${data.length} does not match ${height}x${width}`);
  }
  if (data instanceof Float64Array) {
    for (let i = 0; i < data.length; i++) {
      const v = data[i];
      if (!Number.isFinite(v) || v < 0 || v > 1) {
        throw new Error(`float buffer value at index ${i} is outside [0, 1]: ${v}`);
      }
    }
  }
}

/** Quantize to 8-bit levels; floats round half away from zero, like the engine. */
export function toLevels(view: BufferView): Uint8Array {
  if (view.data instanceof Uint8Array) {
    return Uint8Array.from(view.data);
  }
  const out = new Uint8Array(view.data.length);
  for (let i = 0; i < view.data.length; i++) {
    out[i] = Math.floor(view.data[i] * 255 + 0.5);
  }
  return out;
}

export function levelsToFloat(levels: Uint8Array): Float64Array {
  const out = new Float64Array(levels.length);
  for (let i = 0; i < levels.length; i++) {
    out[i] = levels[i] / 255;
  }
  return out;
}
