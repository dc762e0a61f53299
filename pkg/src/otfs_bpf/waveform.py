"""Oversampled "analog" model of the rectangular pulse-shaped frame.

Each T-duration slot is the cyclic (modulo-M) band-limited interpolation of
its own M samples, hard-gated by the rectangular slot window; the frame-wise
cyclic prefix is the gated tail of the last slot's interpolation, placed
before t=0.  The receiver low-pass filter is tabulated on the same
oversampling lattice and applied as a discrete convolution scaled by the
sample period, so filtering-then-sampling and the analytic interference
quadratures share one discretization.

sinc convention: unit peak with zeros at nonzero integer multiples of T/M,
i.e. sinc(u) = sin(pi*M*u/T) / (pi*M*u/T).  The interpolation sum over the
unbounded sample index is truncated at |offset| <= L2MAX_DEFAULT periods of
M samples.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal

from .grid import FrameParams
from .modem import TimeFrame

__all__ = [
    "AnalogWaveform",
    "FilterSpec",
    "L2MAX_DEFAULT",
    "to_analog",
    "design_lpf",
    "identity_filter",
    "apply_filter",
    "sample_at_grid",
    "psd_estimate",
    "write_psd_csv",
]

L2MAX_DEFAULT = 8  # interpolation / folding truncation, in periods of M samples


@dataclass(frozen=True)
class AnalogWaveform:
    """Uniformly oversampled complex baseband: samples[i] is the value at
    t = (start_tick + i) * dt, with dt = T/(Q*M).  Integer ticks keep every
    time origin exactly on the lattice."""

    samples: np.ndarray
    start_tick: int
    dt: float

    @property
    def t0(self) -> float:
        """Time of the first sample in seconds (negative over the CP)."""
        return self.start_tick * self.dt

    @property
    def end_tick(self) -> int:
        return self.start_tick + len(self.samples)


@dataclass(frozen=True)
class FilterSpec:
    """Receiver LPF tabulated at the oversampling rate.

    taps[i] = h((i - peak_index) * dt); the support [-th1, th2] is implied
    by the tap range and th1, th2 < slot duration.  A single tap of height
    1/dt at t=0 is the identity filter.
    """

    kind: str
    taps: np.ndarray
    peak_index: int
    dt: float
    bandwidth_hz: float
    th1: float
    th2: float

    def __post_init__(self):
        if not 0 <= self.peak_index < len(self.taps):
            raise ValueError("peak_index outside tap range")

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.taps).tobytes())
        h.update(np.float64(self.dt).tobytes())
        h.update(np.int64(self.peak_index).tobytes())
        return h.hexdigest()[:16]

    def value_at_tick(self, tick: np.ndarray) -> np.ndarray:
        """h at integer tick offsets from the peak; zero outside support."""
        idx = np.asarray(tick) + self.peak_index
        valid = (idx >= 0) & (idx < len(self.taps))
        return np.where(valid, self.taps[np.clip(idx, 0, len(self.taps) - 1)], 0.0)


@lru_cache(maxsize=8)
def _interp_weights(m_bins: int, q: int, l2max: int = L2MAX_DEFAULT) -> np.ndarray:
    """(Q*M, M) matrix of cyclic sinc-interpolation weights for one slot.

    Row t is the oversample at slot-relative time t*dt; column r collects
    every aliased copy s_n[(l')_M] with l' = l2*M + r, |l2| <= l2max.
    Rows at exact lattice offsets reduce to unit vectors, so interpolation
    is exact at the sample instants.
    """
    t = np.arange(q * m_bins) / q  # slot-relative time in units of T/M
    r = np.arange(m_bins)
    w = np.zeros((q * m_bins, m_bins))
    for l2 in range(-l2max, l2max + 1):
        w += np.sinc(t[:, None] - (l2 * m_bins + r)[None, :])
    return w


def to_analog(f: TimeFrame, p: FrameParams) -> AnalogWaveform:
    """Slot-windowed cyclic sinc interpolation of the framed samples.

    The output covers exactly the frame support [-cp_len*T/M, N*T); the
    waveform is zero outside, which apply_filter exploits.  Ticks on slot
    boundaries belong to the newer slot (half-open gating), so sampling the
    result on the lattice returns the framed samples exactly.
    """
    if f.body.size != p.n_symbols:
        raise ValueError(f"frame body has {f.body.size} samples, expected {p.n_symbols}")
    body = f.body.reshape(p.N, p.M)
    w = _interp_weights(p.M, p.Q)
    slots = body @ w.T  # (N, Q*M): slot n's oversamples
    pieces = [slots.ravel()]
    start = 0
    if f.cp_len:
        cp_ticks = f.cp_len * p.Q
        pieces.insert(0, w[p.slot_ticks - cp_ticks:, :] @ body[p.N - 1])
        start = -cp_ticks
    return AnalogWaveform(samples=np.concatenate(pieces), start_tick=start, dt=p.dt)


def design_lpf(p: FrameParams, th1: float | None = None, th2: float | None = None) -> FilterSpec:
    """Near-rectangular LPF of bandwidth M/T: a truncated sinc peaking at
    t=0 with support [-th1, th2] (both default to one slot duration T).
    No renormalization; the DC gain is ~1 by construction."""
    T = p.T
    th1 = T if th1 is None else th1
    th2 = T if th2 is None else th2
    if not (0 < th1 <= T * (1 + 1e-9) and 0 < th2 <= T * (1 + 1e-9)):
        raise ValueError("filter support must lie within one slot duration")
    n1 = round(th1 / p.dt)
    n2 = round(th2 / p.dt)
    k = np.arange(-n1, n2 + 1)
    taps = (p.M / T) * np.sinc(k / p.Q)
    return FilterSpec(kind="truncated_sinc", taps=taps, peak_index=n1, dt=p.dt,
                      bandwidth_hz=p.M / T, th1=th1, th2=th2)


def identity_filter(p: FrameParams) -> FilterSpec:
    """Discrete delta: convolution with it returns the input unchanged."""
    return FilterSpec(kind="custom", taps=np.array([1.0 / p.dt]), peak_index=0,
                      dt=p.dt, bandwidth_hz=np.inf, th1=0.5 * p.dt, th2=0.5 * p.dt)


def apply_filter(w: AnalogWaveform, h: FilterSpec) -> AnalogWaveform:
    """Discrete convolution on the oversampling lattice, scaled by the
    sample period so it approximates the continuous convolution integral.
    The non-causal peak at t=0 is absorbed into the output time origin
    (zero group delay)."""
    if abs(h.dt - w.dt) > 1e-12 * w.dt:
        raise ValueError("filter and waveform are tabulated on different lattices")
    y = signal.convolve(w.samples, h.taps, mode="full", method="auto") * w.dt
    return AnalogWaveform(samples=y, start_tick=w.start_tick - h.peak_index, dt=w.dt)


def sample_at_grid(w: AnalogWaveform, p: FrameParams) -> TimeFrame:
    """Pick the body samples at t = nT + l*T/M (every Q-th tick from t=0)."""
    ticks = np.arange(p.n_symbols) * p.Q
    idx = ticks - w.start_tick
    if idx[0] < 0 or idx[-1] >= len(w.samples):
        raise ValueError("waveform does not cover the sampling lattice")
    if abs(w.dt - p.dt) > 1e-12 * p.dt:
        raise ValueError("waveform lattice does not match the frame's T/(Q*M) grid")
    return TimeFrame(samples=w.samples[idx].copy(), cp_len=0)


def psd_estimate(w: AnalogWaveform, nfft: int, overlap: float = 0.5):
    """Averaged-periodogram power spectral density, normalized to its peak.

    Returns (freq_hz, psd_db) with a two-sided frequency axis in Hz and the
    density in dB relative to the strongest bin (dBc).
    """
    if nfft > len(w.samples):
        raise ValueError("nfft exceeds the waveform length")
    fs = 1.0 / w.dt
    freqs, pxx = signal.welch(w.samples, fs=fs, window="hann", nperseg=nfft,
                              noverlap=int(overlap * nfft), return_onesided=False,
                              detrend=False, scaling="density")
    freqs = np.fft.fftshift(freqs)
    pxx = np.fft.fftshift(pxx)
    pxx = np.maximum(pxx, np.finfo(float).tiny)
    psd_db = 10.0 * np.log10(pxx / pxx.max())
    return freqs, psd_db


def write_psd_csv(path, freq_hz: np.ndarray, psd_db: np.ndarray) -> None:
    """Two-column spectrum table."""
    with open(path, "w") as fh:
        fh.write("frequency_hz,psd_db\n")
        for f, v in zip(freq_hz, psd_db):
            fh.write(f"{f:.10e},{v:.10e}\n")
