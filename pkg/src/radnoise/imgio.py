"""Reading and writing 8-bit grayscale PNG and binary PGM (P5) files.

The codec is self-contained so that output bytes are a deterministic
function of pixel content alone (fixed zlib level, no ancillary chunks,
no timestamps).  Anything that is not single-channel 8-bit is rejected
with a clear error; multi-channel handling belongs to training stacks,
not this artifact.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

_COLOR_TYPE_NAMES = {
    0: "grayscale",
    2: "RGB",
    3: "palette",
    4: "grayscale+alpha",
    6: "RGBA",
}


def _chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
    )


def encode_png(levels: np.ndarray) -> bytes:
    """Encode 8-bit grayscale pixels as a minimal, deterministic PNG."""
    levels = _as_levels(levels)
    h, w = levels.shape
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0)
    raw = bytearray()
    for row in levels:
        raw.append(0)  # filter type None
        raw.extend(row.tobytes())
    idat = zlib.compress(bytes(raw), 9)
    return PNG_SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")


def _unfilter(data: bytes, h: int, w: int) -> np.ndarray:
    out = np.zeros((h, w), dtype=np.uint8)
    stride = w + 1
    if len(data) != h * stride:
        raise FormatError(f"PNG pixel data has {len(data)} bytes, expected {h * stride}")
    prev = np.zeros(w, dtype=np.int32)
    for r in range(h):
        ftype = data[r * stride]
        raw = np.frombuffer(data, dtype=np.uint8, count=w, offset=r * stride + 1).astype(np.int32)
        if ftype == 0:
            recon = raw
        elif ftype == 1:  # Sub: prefix sum mod 256
            recon = np.cumsum(raw, dtype=np.int64) & 0xFF
        elif ftype == 2:  # Up
            recon = (raw + prev) & 0xFF
        elif ftype == 3:  # Average (sequential in x)
            recon = np.zeros(w, dtype=np.int32)
            left = 0
            for x in range(w):
                left = (raw[x] + ((left + prev[x]) >> 1)) & 0xFF
                recon[x] = left
        elif ftype == 4:  # Paeth (sequential in x)
            recon = np.zeros(w, dtype=np.int32)
            left = 0
            upleft = 0
            for x in range(w):
                up = int(prev[x])
                p = left + up - upleft
                pa, pb, pc = abs(p - left), abs(p - up), abs(p - upleft)
                if pa <= pb and pa <= pc:
                    pred = left
                elif pb <= pc:
                    pred = up
                else:
                    pred = upleft
                left = (int(raw[x]) + pred) & 0xFF
                recon[x] = left
                upleft = up
        else:
            raise FormatError(f"PNG row uses unknown filter type {ftype}")
        out[r] = recon.astype(np.uint8)
        prev = recon.astype(np.int32)
    return out


def decode_png(data: bytes) -> np.ndarray:
    """Decode an 8-bit grayscale PNG into a uint8 (H, W) array."""
    if not data.startswith(PNG_SIGNATURE):
        raise FormatError("not a PNG file (bad signature)")
    pos = len(PNG_SIGNATURE)
    width = height = None
    idat = bytearray()
    while pos + 8 <= len(data):
        length, tag = struct.unpack(">I4s", data[pos : pos + 8])
        payload = data[pos + 8 : pos + 8 + length]
        pos += 12 + length
        if tag == b"IHDR":
            width, height, depth, color, _comp, _filt, interlace = struct.unpack(
                ">IIBBBBB", payload
            )
            if color != 0:
                name = _COLOR_TYPE_NAMES.get(color, f"type {color}")
                raise FormatError(
                    f"unsupported PNG color type: {name}; only single-channel "
                    "8-bit grayscale images are accepted"
                )
            if depth != 8:
                raise FormatError(f"unsupported PNG bit depth {depth}; expected 8")
            if interlace != 0:
                raise FormatError("interlaced PNG is not supported")
        elif tag == b"IDAT":
            idat.extend(payload)
        elif tag == b"IEND":
            break
    if width is None:
        raise FormatError("PNG is missing its IHDR chunk")
    if width < 1 or height < 1:
        raise DimensionError("PNG has a zero dimension")
    return _unfilter(zlib.decompress(bytes(idat)), height, width)


def encode_pgm(levels: np.ndarray) -> bytes:
    """Encode 8-bit grayscale pixels as binary PGM (P5, maxval 255)."""
    levels = _as_levels(levels)
    h, w = levels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + levels.tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    """Decode a binary PGM (P5) with maxval 255."""
    if not data.startswith(b"P5"):
        raise FormatError("not a binary PGM file (expected magic 'P5')")
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos] == ord("#"):
            while pos < len(data) and data[pos] != ord("\n"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise FormatError(f"malformed PGM header token: {token!r}")
        fields.append(int(token))
    pos += 1  # single whitespace byte after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise FormatError(f"PGM maxval {maxval} unsupported; expected 8-bit (255)")
    if w < 1 or h < 1:
        raise DimensionError("PGM has a zero dimension")
    if len(data) - pos < w * h:
        raise FormatError("PGM pixel data truncated")
    return np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos).reshape(h, w).copy()


def _as_levels(levels: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(levels, dtype=np.uint8)
    if arr.ndim != 2:
        raise FormatError(f"expected a 2-D grayscale array, got ndim={arr.ndim}")
    return arr


def read_levels(path: str | Path) -> np.ndarray:
    """Read an 8-bit grayscale image (PNG or PGM, sniffed by magic bytes)."""
    data = Path(path).read_bytes()
    if data.startswith(PNG_SIGNATURE):
        return decode_png(data)
    if data.startswith(b"P5"):
        return decode_pgm(data)
    raise FormatError(f"{path}: unrecognized image format (expected PNG or binary PGM)")


def write_levels(path: str | Path, levels: np.ndarray) -> None:
    """Write an 8-bit grayscale image; format chosen by file extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        payload = encode_png(levels)
    elif suffix == ".pgm":
        payload = encode_pgm(levels)
    else:
        raise FormatError(f"{path}: unsupported output extension (use .png or .pgm)")
    path.write_bytes(payload)
