"""Counter-based random streams and exact distribution samplers.

Every draw is a pure function of (stream key, slot, draw index): slot
``s``, draw ``t`` maps to the 64-bit counter ``(s << 24) | t``, which is
hashed with the stream key through a SplitMix64-style finalizer.  Nothing
is consumed implicitly, so results are independent of pixel iteration
order and of how work is scheduled across processes.

Keys are derived with BLAKE2b over a type-tagged encoding of the seed
material, which keeps derivation stable across platforms and Python
versions.
"""

from __future__ import annotations

import hashlib
import math
import struct

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15  # SplitMix64 stream increment

_GAMMA_U = np.uint64(_GAMMA)
_M1_U = np.uint64(0xBF58476D1CE4E5B9)
_M2_U = np.uint64(0x94D049BB133111EB)
_ONE_U = np.uint64(1)

DRAW_BITS = 24  # low bits of the counter index per-slot retries
MAX_SLOT = 1 << (64 - DRAW_BITS)
MAX_DRAW = 1 << DRAW_BITS

# Poisson sampler regime boundary: sequential-search inversion below,
# transformed rejection at or above.
_POISSON_SPLIT = 10.0
_INVERSION_CAP = 600
_REJECTION_CAP = 128


def _mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, vectorized over uint64 arrays."""
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= _M1_U
    x ^= x >> np.uint64(27)
    x *= _M2_U
    x ^= x >> np.uint64(31)
    return x


def derive_key(*parts: int | str | float | bytes) -> int:
    """Fold seed material into a 64-bit stream key.

    Each part is encoded with a type tag and length so that distinct
    part sequences can never collide byte-wise.
    """
    h = hashlib.blake2b(digest_size=8, person=b"radnoise.rng")
    for part in parts:
        if isinstance(part, bool):  # bool is an int subclass; refuse silently odd keys
            raise TypeError("bool is not valid key material")
        if isinstance(part, int):
            h.update(b"i" + struct.pack(">Q", part & _MASK64))
        elif isinstance(part, float):
            h.update(b"f" + struct.pack(">d", part))
        elif isinstance(part, str):
            raw = part.encode("utf-8")
            h.update(b"s" + struct.pack(">I", len(raw)) + raw)
        elif isinstance(part, bytes):
            h.update(b"b" + struct.pack(">I", len(part)) + part)
        else:
            raise TypeError(f"unsupported key material type: {type(part)!r}")
    return int.from_bytes(h.digest(), "big")


class RandomStream:
    """Stateless keyed stream with an optional sequential slot cursor.

    ``uniforms(slots, draw)`` is the core primitive.  ``take_slots`` is a
    convenience for samplers that just need n fresh independent slots.
    """

    __slots__ = ("key", "_cursor")

    def __init__(self, key: int):
        self.key = int(key) & _MASK64
        self._cursor = 0

    def substream(self, *parts: int | str | float | bytes) -> "RandomStream":
        """An independent stream keyed by this stream's key plus ``parts``."""
        return RandomStream(derive_key(self.key, *parts))

    def words(self, slots: np.ndarray, draw: int) -> np.ndarray:
        """Raw 64-bit hash words for an array of slots at one draw index."""
        if not 0 <= draw < MAX_DRAW:
            raise DomainError(f"draw index {draw} outside [0, {MAX_DRAW})")
        slots = np.asarray(slots, dtype=np.uint64)
        if slots.size and int(slots.max()) >= MAX_SLOT:
            raise DomainError(f"slot index exceeds {MAX_SLOT}")
        counter = (slots << np.uint64(DRAW_BITS)) | np.uint64(draw)
        return _mix64(np.uint64(self.key) + (counter + _ONE_U) * _GAMMA_U)

    def uniforms(self, slots: np.ndarray, draw: int) -> np.ndarray:
        """Doubles in the open interval (0, 1), one per slot."""
        w = self.words(slots, draw)
        return ((w >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)

    def take_slots(self, n: int) -> np.ndarray:
        """Reserve the next ``n`` cursor slots (for sequential sampling)."""
        start = self._cursor
        self._cursor += n
        if self._cursor > MAX_SLOT:
            raise DomainError("stream cursor exhausted")
        return np.arange(start, start + n, dtype=np.uint64)


def standard_normals(stream: RandomStream, slots: np.ndarray) -> np.ndarray:
    """One standard normal per slot via the Box-Muller transform.

    Consumes draw indices 0 and 1 of each slot.
    """
    u1 = stream.uniforms(slots, 0)
    u2 = stream.uniforms(slots, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _poisson_inversion(stream: RandomStream, lam: np.ndarray, slots: np.ndarray) -> np.ndarray:
    """Inversion by sequential CDF search; exact for small means.

    Consumes exactly one uniform per slot.  Termination is guaranteed:
    the CDF reaches 1.0 in double precision long before the iteration
    cap, while uniforms are strictly below 1.
    """
    u = stream.uniforms(slots, 0)
    k = np.zeros(lam.shape, dtype=np.int64)
    p = np.exp(-lam)
    cdf = p.copy()
    active = np.flatnonzero(u > cdf)
    iterations = 0
    while active.size:
        iterations += 1
        if iterations > _INVERSION_CAP:
            raise RuntimeError("Poisson inversion failed to terminate")
        k[active] += 1
        p[active] *= lam[active] / k[active]
        cdf[active] += p[active]
        active = active[u[active] > cdf[active]]
    return k


def _poisson_ptrs(stream: RandomStream, lam: np.ndarray, slots: np.ndarray) -> np.ndarray:
    """Transformed rejection (PTRS) for means >= 10; exact.

    Attempt ``t`` for a slot consumes draw indices ``2t`` and ``2t + 1``,
    so retries never perturb other slots' streams.
    """
    sqrt_lam = np.sqrt(lam)
    log_lam = np.log(lam)
    b = 0.931 + 2.53 * sqrt_lam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)

    out = np.zeros(lam.shape, dtype=np.int64)
    pending = np.arange(lam.size, dtype=np.int64)
    for attempt in range(_REJECTION_CAP):
        if not pending.size:
            return out
        u = stream.uniforms(slots[pending], 2 * attempt) - 0.5
        v = stream.uniforms(slots[pending], 2 * attempt + 1)
        us = 0.5 - np.abs(u)
        kf = np.floor((2.0 * a[pending] / us + b[pending]) * u + lam[pending] + 0.43)

        fast = (us >= 0.07) & (v <= v_r[pending])
        bad = (kf < 0) | ((us < 0.013) & (v > us))
        k_safe = np.maximum(kf, 0.0)
        lhs = np.log(v) + np.log(inv_alpha[pending]) - np.log(a[pending] / (us * us) + b[pending])
        rhs = -lam[pending] + kf * log_lam[pending] - gammaln(k_safe + 1.0)
        accept = fast | (~bad & (lhs <= rhs))

        out[pending[accept]] = kf[accept].astype(np.int64)
        pending = pending[~accept]
    raise RuntimeError("Poisson rejection failed to terminate")


def poisson_at_slots(stream: RandomStream, lam: np.ndarray, slots: np.ndarray) -> np.ndarray:
    """Exact Poisson counts, one per (lam, slot) pair.

    Routing: mean 0 gives 0; means below 10 use sequential-search
    inversion; larger means use transformed rejection.  No Gaussian
    approximation at any mean.
    """
    lam = np.asarray(lam, dtype=np.float64)
    slots = np.asarray(slots, dtype=np.uint64)
    if lam.shape != slots.shape:
        raise DomainError("lam and slots must have matching shapes")
    if not np.isfinite(lam).all() or (lam < 0).any():
        raise DomainError("Poisson mean must be finite and non-negative")

    out = np.zeros(lam.shape, dtype=np.int64)
    small = np.flatnonzero((lam > 0) & (lam < _POISSON_SPLIT))
    if small.size:
        out[small] = _poisson_inversion(stream, lam[small], slots[small])
    big = np.flatnonzero(lam >= _POISSON_SPLIT)
    if big.size:
        out[big] = _poisson_ptrs(stream, lam[big], slots[big])
    return out


def sample_poisson(lam: float, stream: RandomStream, size: int | None = None):
    """Draw exact Poisson counts with mean ``lam`` from ``stream``.

    Returns a scalar int when ``size`` is None, else an int64 array.
    Advances the stream's slot cursor, so successive calls are
    independent.
    """
    if not math.isfinite(lam) or lam < 0:
        raise DomainError(f"Poisson mean must be finite and non-negative, got {lam}")
    n = 1 if size is None else int(size)
    slots = stream.take_slots(n)
    counts = poisson_at_slots(stream, np.full(n, lam, dtype=np.float64), slots)
    if size is None:
        return int(counts[0])
    return counts
