"""Counter-based random streams.

Every uniform is a pure function of ``(master_seed, stream_index, position,
attempt)``: the seed is the Philox4x32-10 key and the other three fill the
128-bit counter. Nothing is carried between draws except a position cursor,
so a table row, a replicate or a worker chunk can be regenerated in any order
and at any batch size with bit-identical results.

Lanes 0-1 of a Philox block give uniform ``a``, lanes 2-3 give uniform ``b``.
Inversion samplers consume ``a`` at attempt 0; rejection samplers walk
attempts 0, 1, 2, ... using both lanes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MASK32 = np.uint64(0xFFFFFFFF)
MASK64 = 0xFFFFFFFFFFFFFFFF

_MUL_A = np.uint64(0xD2511F53)
_MUL_B = np.uint64(0xCD9E8D57)
_WEYL_A = 0x9E3779B9
_WEYL_B = 0xBB67AE85
_ROUNDS = 10

_TWO_POW_M53 = 2.0**-53


def philox4x32(counter, key) -> np.ndarray:
    """Philox4x32-10 block function.

    ``counter`` is a sequence of four arrays (or ints) of 32-bit words, ``key``
    a pair of 32-bit words. Returns an array of shape ``(4, ...)`` of 32-bit
    words held in uint64.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(*(np.asarray(c, dtype=np.uint64) for c in counter))
    c0, c1, c2, c3 = (c & MASK32 for c in (c0, c1, c2, c3))
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for r in range(_ROUNDS):
        prod0 = _MUL_A * c0
        prod1 = _MUL_B * c2
        hi0, lo0 = prod0 >> np.uint64(32), prod0 & MASK32
        hi1, lo1 = prod1 >> np.uint64(32), prod1 & MASK32
        c0, c1, c2, c3 = (
            hi1 ^ c1 ^ np.uint64(k0),
            lo1,
            hi0 ^ c3 ^ np.uint64(k1),
            lo0,
        )
        if r < _ROUNDS - 1:
            k0 = (k0 + _WEYL_A) & 0xFFFFFFFF
            k1 = (k1 + _WEYL_B) & 0xFFFFFFFF
    return np.stack([c0, c1, c2, c3])


def _to_unit(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    # 53 random bits mapped to the open interval (0, 1).
    bits = ((hi >> np.uint64(5)) << np.uint64(26)) | (lo >> np.uint64(6))
    return (bits.astype(np.float64) + 0.5) * _TWO_POW_M53


def _split_seed(master_seed: int) -> tuple[int, int]:
    master_seed = int(master_seed)
    if not 0 <= master_seed <= MASK64:
        raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    return master_seed & 0xFFFFFFFF, master_seed >> 32


def block_uniforms(master_seed: int, streams, positions, attempt=0) -> tuple[np.ndarray, np.ndarray]:
    """Two uniforms in (0, 1) per broadcast element of ``(streams, positions, attempt)``."""
    key = _split_seed(master_seed)
    streams = np.asarray(streams, dtype=np.uint64)
    positions = np.asarray(positions, dtype=np.uint64)
    attempt = np.asarray(attempt, dtype=np.uint64)
    out = philox4x32(
        (streams & MASK32, streams >> np.uint64(32), positions, attempt),
        key,
    )
    return _to_unit(out[0], out[1]), _to_unit(out[2], out[3])


def block_words(master_seed: int, streams, positions, attempt=0) -> np.ndarray:
    """Raw 64-bit words (lanes 0-1) at the given addresses."""
    key = _split_seed(master_seed)
    streams = np.asarray(streams, dtype=np.uint64)
    out = philox4x32(
        (streams & MASK32, streams >> np.uint64(32), np.asarray(positions, dtype=np.uint64), attempt),
        key,
    )
    return (out[1] << np.uint64(32)) | out[0]


@dataclass(frozen=True)
class Addresses:
    """A batch of draw slots: one ``(stream, position)`` per element.

    Samplers take an ``Addresses`` rather than a generator object so that the
    same code serves a single sequential stream and a whole reference table.
    """

    master_seed: int
    streams: np.ndarray
    positions: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return np.broadcast_shapes(self.streams.shape, self.positions.shape)

    def uniforms(self, attempt: int = 0) -> tuple[np.ndarray, np.ndarray]:
        return block_uniforms(self.master_seed, self.streams, self.positions, attempt)

    def subset(self, mask: np.ndarray) -> "Addresses":
        streams, positions = np.broadcast_arrays(self.streams, self.positions)
        return Addresses(self.master_seed, streams[mask], positions[mask])


@dataclass
class RngStream:
    """A single substream with a sequential position cursor.

    Two streams built from equal ``(master_seed, stream_index)`` produce the
    same sequence. The stream is single-owner state; share the index, not the
    object.
    """

    master_seed: int
    stream_index: int
    position: int = field(default=0)

    def __post_init__(self) -> None:
        _split_seed(self.master_seed)
        if not 0 <= int(self.stream_index) <= MASK64:
            raise ValueError(f"stream_index must be a 64-bit unsigned integer, got {self.stream_index}")

    def reserve(self, size: int) -> Addresses:
        """Claim the next ``size`` positions and return their addresses."""
        if size < 0:
            raise ValueError("size must be non-negative")
        positions = np.arange(self.position, self.position + size, dtype=np.uint64)
        self.position += size
        streams = np.full(size, self.stream_index, dtype=np.uint64)
        return Addresses(self.master_seed, streams, positions)

    def random(self, size: int | None = None):
        """Uniform draws on (0, 1), one position each."""
        u, _ = self.reserve(1 if size is None else size).uniforms()
        return float(u[0]) if size is None else u

    def random_raw(self) -> int:
        """One raw 64-bit word, e.g. for seeding a child computation."""
        addr = self.reserve(1)
        return int(block_words(self.master_seed, addr.streams, addr.positions)[0])


def derive_stream(master_seed: int, stream_index: int) -> RngStream:
    return RngStream(int(master_seed), int(stream_index))
