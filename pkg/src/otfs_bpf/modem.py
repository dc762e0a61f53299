"""Discrete lossless transforms between delay-Doppler, time-frequency and
sampled time domains, plus cyclic-prefix handling.

Conventions (all unitary, so every map here preserves energy):

  isfft:  TF[n,m] = (1/sqrt(MN)) sum_{k,l} X[k,l] exp(j2pi(nk/N - ml/M))
  idzt:   s[n*M+l] = (1/sqrt(N)) sum_k X[k,l] exp(j2pi nk/N)
  dzt:    X[k,l] = (1/sqrt(N)) sum_n s[n*M+l] exp(-j2pi nk/N)

The per-slot frequency<->time step uses the unitary M-point (I)DFT, which
makes the two transmit paths (isfft followed by per-slot IDFT, versus the
direct idzt) agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TimeFrame",
    "isfft",
    "sfft",
    "tf_to_time",
    "time_to_tf",
    "idzt",
    "dzt",
    "add_cp",
    "remove_cp",
]


@dataclass(frozen=True)
class TimeFrame:
    """One frame of samples at rate M/T: cp_len prefix samples followed by
    the M*N-sample body.  The prefix replicates the tail of the body."""

    samples: np.ndarray
    cp_len: int = 0

    def __post_init__(self):
        if self.cp_len < 0 or self.cp_len > len(self.samples):
            raise ValueError("cp_len out of range")

    @property
    def body(self) -> np.ndarray:
        return self.samples[self.cp_len:]


def isfft(X: np.ndarray) -> np.ndarray:
    """Delay-Doppler grid -> time-frequency grid (inverse symplectic FFT)."""
    return np.fft.fft(np.fft.ifft(X, axis=0, norm="ortho"), axis=1, norm="ortho")


def sfft(Ytf: np.ndarray) -> np.ndarray:
    """Time-frequency grid -> delay-Doppler grid; exact inverse of isfft."""
    return np.fft.fft(np.fft.ifft(Ytf, axis=1, norm="ortho"), axis=0, norm="ortho")


def tf_to_time(Xtf: np.ndarray) -> TimeFrame:
    """Per-slot unitary inverse DFT of the TF grid rows (multicarrier
    modulation of N slots with M subcarriers), body only."""
    slots = np.fft.ifft(Xtf, axis=1, norm="ortho")
    return TimeFrame(samples=slots.ravel(), cp_len=0)


def time_to_tf(f: TimeFrame, n_slots: int, m_bins: int) -> np.ndarray:
    """Per-slot unitary DFT, the receive-side counterpart of tf_to_time."""
    body = f.body.reshape(n_slots, m_bins)
    return np.fft.fft(body, axis=1, norm="ortho")


def idzt(X: np.ndarray) -> TimeFrame:
    """Delay-Doppler grid -> time samples (inverse discrete Zak transform),
    body only, no CP."""
    s = np.fft.ifft(X, axis=0, norm="ortho")  # (1/sqrt(N)) sum_k X e^{+j2pi nk/N}
    return TimeFrame(samples=s.ravel(), cp_len=0)


def dzt(f: TimeFrame | np.ndarray, n_slots: int | None = None) -> np.ndarray:
    """Time samples -> delay-Doppler grid (discrete Zak transform).

    Accepts a TimeFrame (its body is used) or a flat body array; n_slots
    must be given for a flat array whose slot count is ambiguous.
    """
    body = f.body if isinstance(f, TimeFrame) else np.asarray(f)
    if n_slots is None:
        raise ValueError("dzt needs n_slots to shape the body")
    if body.size % n_slots != 0:
        raise ValueError(f"body of {body.size} samples is not {n_slots} equal slots")
    y = body.reshape(n_slots, -1)
    return np.fft.fft(y, axis=0, norm="ortho")


def add_cp(f: TimeFrame, cp_len: int) -> TimeFrame:
    """Prefix the frame with a copy of its last cp_len body samples."""
    if f.cp_len != 0:
        raise ValueError("frame already carries a cyclic prefix")
    if not 0 <= cp_len <= f.body.size:
        raise ValueError(f"cp_len {cp_len} out of range [0, {f.body.size}]")
    if cp_len == 0:
        return f
    return TimeFrame(samples=np.concatenate([f.body[-cp_len:], f.body]), cp_len=cp_len)


def remove_cp(f: TimeFrame) -> TimeFrame:
    return TimeFrame(samples=f.body.copy(), cp_len=0)
