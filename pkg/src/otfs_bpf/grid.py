"""Frame dimensioning, QAM constellations and the deterministic randomness contract.

Grids are plain complex ndarrays of shape (N, M): axis 0 is the Doppler
index k, axis 1 is the delay index l.  Symbols are laid out row-major
(k outer, l inner) when mapped from a bit stream.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FrameParams",
    "Constellation",
    "SeedSpec",
    "map_bits",
    "demap",
    "random_bits",
]


@dataclass(frozen=True)
class FrameParams:
    """Dimensional constants of one OTFS frame.

    M delay bins per slot, N slots (Doppler bins) per frame, subcarrier
    spacing delta_f in Hz.  The slot duration is T = 1/delta_f exactly.
    cp_len is the frame-wise cyclic prefix length in samples at rate M/T
    (defaults to M, one full slot).  Q is the oversampling factor of the
    "analog" model: Q samples per T/M interval.
    """

    M: int
    N: int
    delta_f: float = 15e3
    cp_len: int | None = None
    Q: int = 16

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be positive integers")
        if self.delta_f <= 0:
            raise ValueError("delta_f must be positive")
        if self.Q < 2:
            raise ValueError("oversampling factor Q must be >= 2")
        if self.cp_len is None:
            object.__setattr__(self, "cp_len", self.M)
        if not 0 <= self.cp_len <= self.M * self.N:
            raise ValueError(f"cp_len {self.cp_len} out of range [0, {self.M * self.N}]")

    @property
    def T(self) -> float:
        """Slot duration in seconds (T * delta_f = 1)."""
        return 1.0 / self.delta_f

    @property
    def n_symbols(self) -> int:
        return self.M * self.N

    @property
    def sample_rate(self) -> float:
        """Lattice sample rate M/T in Hz."""
        return self.M * self.delta_f

    @property
    def dt(self) -> float:
        """Oversample spacing T/(Q*M) in seconds."""
        return self.T / (self.Q * self.M)

    @property
    def slot_ticks(self) -> int:
        """Oversamples per slot."""
        return self.Q * self.M


def _gray_to_index(g: int) -> int:
    """Invert the binary-reflected Gray code."""
    v = 0
    while g:
        v ^= g
        g >>= 1
    return v


@dataclass(frozen=True)
class Constellation:
    """Gray-labeled rectangular QAM constellation.

    points[label] is the complex point whose bit label is the integer
    ``label`` read MSB-first; the first half of the bits select the real
    axis, the second half the imaginary axis.  Level order is descending
    per axis, so the all-zero label maps to the most-positive corner
    (e.g. (1+1j)/sqrt(2) for unit-energy 4-QAM).
    """

    points: np.ndarray
    bits_per_symbol: int
    avg_energy: float = field(init=False)

    def __post_init__(self):
        if len(self.points) != 2 ** self.bits_per_symbol:
            raise ValueError("constellation size must be 2**bits_per_symbol")
        object.__setattr__(self, "avg_energy", float(np.mean(np.abs(self.points) ** 2)))
        if self.avg_energy <= 0:
            raise ValueError("constellation must carry energy")

    @classmethod
    def qam(cls, order: int, avg_energy: float = 1.0) -> "Constellation":
        """Square Gray-coded QAM of the given order, scaled to avg_energy."""
        bps = int(round(np.log2(order)))
        if 2 ** bps != order or bps % 2 != 0:
            raise ValueError(f"order {order} is not a square power of 4")
        half = bps // 2
        levels_per_axis = 2 ** half
        # descending odd levels; position p carries Gray code p ^ (p >> 1)
        amps = np.arange(levels_per_axis - 1, -levels_per_axis, -2, dtype=float)
        pts = np.empty(order, dtype=complex)
        for label in range(order):
            gi = label >> half
            gq = label & (levels_per_axis - 1)
            pts[label] = amps[_gray_to_index(gi)] + 1j * amps[_gray_to_index(gq)]
        pts *= np.sqrt(avg_energy / np.mean(np.abs(pts) ** 2))
        return cls(points=pts, bits_per_symbol=bps)


@dataclass(frozen=True)
class SeedSpec:
    """Counter-based random stream identity.

    Identical (master_seed, stream_id) pairs yield identical sequences on
    any platform; distinct stream_ids are statistically independent.
    """

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed % 2 ** 64, self.stream_id % 2 ** 64],
                       dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def substream(master_seed: int, *tags) -> np.random.Generator:
    """Generator for a named substream: tags (ints/floats/strings) are hashed
    into the 64-bit stream id."""
    digest = hashlib.blake2s(repr(tags).encode(), digest_size=8).digest()
    return SeedSpec(master_seed, int.from_bytes(digest, "little")).generator()


def random_bits(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.int8)


def map_bits(bits: np.ndarray, c: Constellation, p: FrameParams) -> np.ndarray:
    """Map a bit stream onto the (N, M) delay-Doppler grid, row-major in k."""
    bits = np.asarray(bits)
    expected = p.n_symbols * c.bits_per_symbol
    if bits.size != expected:
        raise ValueError(f"need {expected} bits for an {p.N}x{p.M} frame, got {bits.size}")
    groups = bits.reshape(-1, c.bits_per_symbol)
    labels = groups @ (1 << np.arange(c.bits_per_symbol - 1, -1, -1))
    return c.points[labels].reshape(p.N, p.M)


def demap(grid: np.ndarray, c: Constellation) -> np.ndarray:
    """Hard-decision demapping: nearest point in Euclidean distance, ties
    broken toward the lowest point index."""
    flat = np.asarray(grid).ravel()
    d2 = np.abs(flat[:, None] - c.points[None, :]) ** 2
    labels = d2.argmin(axis=1)
    shifts = np.arange(c.bits_per_symbol - 1, -1, -1)
    return ((labels[:, None] >> shifts) & 1).astype(np.int8).ravel()
