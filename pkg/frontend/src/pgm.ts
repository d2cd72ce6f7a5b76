/** Binary PGM (P5, maxval 255) encoding and decoding. */

export interface GrayImage {
  width: number;
  height: number;
  levels: Uint8Array;
}

export function encodePgm(levels: Uint8Array, width: number, height: number): Buffer {
  if (levels.length !== width * height) {
    throw new Error(`pixel count ${levels.length} does not match ${width}x${height}`);
  }
  const header = Buffer.from(`P5\n${width} ${height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(levels)]);
}

export function decodePgm(data: Buffer): GrayImage {
  if (data.length < 2 || data[0] !== 0x50 || data[1] !== 0x35) {
    throw new Error("not a binary PGM file (expected magic 'P5')");
  }
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < data.length && isSpace(data[pos])) pos++;
    if (pos < data.length && data[pos] === 0x23 /* # */) {
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      continue;
    }
    const start = pos;
    while (pos < data.length && !isSpace(data[pos])) pos++;
    const token = data.subarray(start, pos).toString("ascii");
    if (!/^\d+$/.test(token)) {
      throw new Error(`malformed PGM header token: ${JSON.stringify(token)}`);
    }
    fields.push(Number(token));
  }
  pos++; // the single whitespace byte after maxval
  const [width, height, maxval] = fields;
  if (maxval !== 255) {
    throw new Error(`PGM maxval ${maxval} unsupported; expected 8-bit (255)`);
  }
  const expected = width * height;
  if (data.length - pos < expected) {
    throw new Error("PGM pixel data truncated");
  }
  return { width, height, levels: Uint8Array.from(data.subarray(pos, pos + expected)) };
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}
