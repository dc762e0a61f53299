"""Time-frequency dispersive channel on the oversampled waveform, AWGN at
the sampling rate, and random EVA + Jakes channel generation.

Path delays are integer multiples of T/M (integer multiples of Q oversample
ticks) and Dopplers integer multiples of 1/(N*T), so a channel can be
applied either to the analog waveform or, equivalently, to the discrete
frame samples; both forms are provided and tested against each other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .grid import FrameParams
from .modem import TimeFrame
from .waveform import AnalogWaveform

__all__ = [
    "ChannelSpec",
    "NoiseSpec",
    "apply_channel",
    "apply_channel_discrete",
    "add_awgn",
    "gen_eva_jakes",
    "EVA_DELAYS_NS",
    "EVA_POWERS_DB",
    "SPEED_OF_LIGHT",
]

# Extended Vehicular A power-delay profile (3GPP tapped-delay-line model)
EVA_DELAYS_NS = np.array([0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0])
EVA_POWERS_DB = np.array([0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9])

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class ChannelSpec:
    """P discrete paths on the delay-Doppler lattice: complex gain, delay in
    units of T/M, Doppler in units of 1/(N*T).  Delay taps may repeat;
    coincident taps superpose."""

    gains: np.ndarray         # (P,) complex
    delay_taps: np.ndarray    # (P,) int >= 0
    doppler_taps: np.ndarray  # (P,) int

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        d = np.atleast_1d(np.asarray(self.delay_taps, dtype=int))
        k = np.atleast_1d(np.asarray(self.doppler_taps, dtype=int))
        if not (len(g) == len(d) == len(k)) or len(g) == 0:
            raise ValueError("gains, delay_taps and doppler_taps must have equal nonzero length")
        if np.any(d < 0):
            raise ValueError("delay taps must be nonnegative")
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "delay_taps", d)
        object.__setattr__(self, "doppler_taps", k)

    @property
    def n_paths(self) -> int:
        return len(self.gains)

    @property
    def max_delay_tap(self) -> int:
        return int(self.delay_taps.max())

    @classmethod
    def identity(cls) -> "ChannelSpec":
        """The distortion-free spreading function: one unit path at (0, 0)."""
        return cls(gains=np.array([1.0 + 0.0j]), delay_taps=np.array([0]),
                   doppler_taps=np.array([0]))

    def to_json(self) -> str:
        paths = [{"gain_re": float(g.real), "gain_im": float(g.imag),
                  "delay_tap": int(d), "doppler_tap": int(k)}
                 for g, d, k in zip(self.gains, self.delay_taps, self.doppler_taps)]
        return json.dumps({"paths": paths}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ChannelSpec":
        data = json.loads(text)
        paths = data["paths"]
        return cls(gains=np.array([p["gain_re"] + 1j * p["gain_im"] for p in paths]),
                   delay_taps=np.array([p["delay_tap"] for p in paths]),
                   doppler_taps=np.array([p["doppler_tap"] for p in paths]))


@dataclass(frozen=True)
class NoiseSpec:
    """Per-sample complex noise variance n0 = sigma_s2 / 10^(EsN0_dB/10)."""

    es_over_n0_db: float
    sigma_s2: float = 1.0

    @property
    def n0(self) -> float:
        if np.isinf(self.es_over_n0_db):
            return 0.0
        return self.sigma_s2 / 10.0 ** (self.es_over_n0_db / 10.0)


def apply_channel(w: AnalogWaveform, ch: ChannelSpec, p: FrameParams) -> AnalogWaveform:
    """Superpose the delayed, Doppler-shifted path copies:

        r(t) = sum_i a_i exp(j2pi nu_i (t - tau_i)) s(t - tau_i)

    with tau_i = delay_tap * T/M and nu_i = doppler_tap / (N*T).  The output
    span is extended by the maximum delay so no path tail is clipped.
    """
    max_shift = ch.max_delay_tap * p.Q
    if max_shift >= len(w.samples) + p.slot_ticks:
        raise ValueError("path delay exceeds the waveform coverage")
    n_out = len(w.samples) + max_shift
    out = np.zeros(n_out, dtype=complex)
    ticks = w.start_tick + np.arange(n_out)
    for g, d, k in zip(ch.gains, ch.delay_taps, ch.doppler_taps):
        shift = d * p.Q
        phase = np.exp(2j * np.pi * k * (ticks - shift) / (p.N * p.slot_ticks))
        seg = out[shift:shift + len(w.samples)]
        seg += g * phase[shift:shift + len(w.samples)] * w.samples
    return AnalogWaveform(samples=out, start_tick=w.start_tick, dt=w.dt)


def apply_channel_discrete(f: TimeFrame, ch: ChannelSpec, p: FrameParams) -> TimeFrame:
    """Same channel on the rate-M/T frame samples (delays shift whole
    samples, Doppler ramps are evaluated at the sample instants).  Sample
    index c runs over [-cp_len, M*N); inputs before the prefix are zero,
    which only corrupts prefix outputs that the receiver discards."""
    n = len(f.samples)
    c_idx = np.arange(n) - f.cp_len  # sample index relative to the body start
    out = np.zeros(n, dtype=complex)
    for g, d, k in zip(ch.gains, ch.delay_taps, ch.doppler_taps):
        phase = np.exp(2j * np.pi * k * (c_idx - d) / (p.N * p.M))
        shifted = np.zeros(n, dtype=complex)
        shifted[d:] = f.samples[:n - d] if d else f.samples
        out += g * phase * shifted
    return TimeFrame(samples=out, cp_len=f.cp_len)


def add_awgn(f: TimeFrame, ns: NoiseSpec, rng: np.random.Generator) -> TimeFrame:
    """Add i.i.d. circular complex Gaussian noise of variance n0 per sample."""
    if ns.n0 == 0.0:
        return f
    scale = np.sqrt(ns.n0 / 2.0)
    noise = scale * (rng.standard_normal(len(f.samples))
                     + 1j * rng.standard_normal(len(f.samples)))
    return TimeFrame(samples=f.samples + noise, cp_len=f.cp_len)


def gen_eva_jakes(p: FrameParams, fc_hz: float = 5e9, v_kmh: float = 120.0,
                  rng: np.random.Generator | None = None) -> ChannelSpec:
    """Random EVA channel: tap delays from the EVA profile rounded to the
    T/M lattice, Rayleigh per-tap gains scaled to the profile powers (total
    mean power 1), and per-tap Doppler nu_max*cos(theta) with theta uniform,
    rounded to the 1/(N*T) lattice."""
    if rng is None:
        raise ValueError("gen_eva_jakes needs an explicit random generator")
    powers = 10.0 ** (EVA_POWERS_DB / 10.0)
    powers = powers / powers.sum()
    delays = np.round(EVA_DELAYS_NS * 1e-9 / (p.T / p.M)).astype(int)
    nu_max = fc_hz * (v_kmh / 3.6) / SPEED_OF_LIGHT
    theta = rng.uniform(0.0, 2.0 * np.pi, size=len(powers))
    doppler = np.round(nu_max * np.cos(theta) * p.N * p.T).astype(int)
    gains = np.sqrt(powers / 2.0) * (rng.standard_normal(len(powers))
                                     + 1j * rng.standard_normal(len(powers)))
    return ChannelSpec(gains=gains, delay_taps=delays, doppler_taps=doppler)
