"""Monte-Carlo BER experiments over the ideal / practical receiver pipelines.

One frame runs: bits -> DD grid -> time samples -> CP -> (channel) ->
[practical only: interpolate, receive-filter, resample] -> AWGN at the
sampling rate -> DD grid -> message-passing detection -> hard bits.

The ideal receiver samples the unfiltered waveform on the lattice, which
equals the discrete chain exactly (interpolation is exact at the sample
instants), so it is run in the discrete domain.  Noise enters after the
receiver front-end in both modes, at the same per-sample variance, so the
two pipelines differ only in signal distortion.

Every frame draws its randomness from named substreams of the master seed;
results are bit-identical across runs and worker counts.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (ChannelSpec, NoiseSpec, add_awgn, apply_channel,
                      apply_channel_discrete, gen_eva_jakes)
from .detector import build_effective_channel, mp_detect
from .grid import Constellation, FrameParams, SeedSpec, demap, map_bits, random_bits, substream
from .modem import TimeFrame, add_cp, dzt, idzt, remove_cp
from .waveform import FilterSpec, apply_filter, design_lpf, sample_at_grid, to_analog

__all__ = ["ExperimentConfig", "BerPoint", "run_ber_point", "sweep",
           "wilson_interval", "write_ber_csv"]

Z95 = 1.959963984540054


def wilson_interval(errors: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    phat = errors / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * np.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return (lo, hi)


@dataclass(frozen=True)
class ExperimentConfig:
    """One BER experiment.  min_bit_errors should be >= 100 for publishable
    points; smaller values are allowed for smoke runs."""

    p: FrameParams
    constellation: Constellation
    receiver_mode: str = "practical"          # "ideal" | "practical"
    channel_mode: str | ChannelSpec = "awgn"  # "awgn" | "eva_jakes" | fixed spec
    esn0_grid_db: tuple = (10.0,)
    min_bit_errors: int = 200
    max_frames: int = 1000
    seed: SeedSpec = field(default_factory=lambda: SeedSpec(0))
    fc_hz: float = 5e9
    v_kmh: float = 120.0
    damping: float = 0.7
    max_iter: int = 50
    batch_frames: int = 16
    filter_spec: FilterSpec | None = None

    def __post_init__(self):
        if self.receiver_mode not in ("ideal", "practical"):
            raise ValueError(f"unknown receiver_mode {self.receiver_mode!r}")
        if isinstance(self.channel_mode, str) and self.channel_mode not in ("awgn", "eva_jakes"):
            raise ValueError(f"unknown channel_mode {self.channel_mode!r}")
        if len(self.esn0_grid_db) == 0:
            raise ValueError("esn0 grid must not be empty")
        if self.max_frames < 1:
            raise ValueError("max_frames must be positive")

    @property
    def bits_per_frame(self) -> int:
        return self.p.n_symbols * self.constellation.bits_per_symbol

    def lpf(self) -> FilterSpec:
        return self.filter_spec if self.filter_spec is not None else design_lpf(self.p)

    def manifest_dict(self) -> dict:
        ch = self.channel_mode
        return {
            "M": self.p.M, "N": self.p.N, "delta_f": self.p.delta_f,
            "cp_len": self.p.cp_len, "Q": self.p.Q,
            "constellation_order": 2 ** self.constellation.bits_per_symbol,
            "sigma_s2": self.constellation.avg_energy,
            "receiver_mode": self.receiver_mode,
            "channel_mode": ch if isinstance(ch, str) else "fixed",
            "esn0_grid_db": list(self.esn0_grid_db),
            "min_bit_errors": self.min_bit_errors,
            "max_frames": self.max_frames,
            "master_seed": self.seed.master_seed,
            "fc_hz": self.fc_hz, "v_kmh": self.v_kmh,
            "damping": self.damping, "max_iter": self.max_iter,
            "filter_fingerprint": self.lpf().fingerprint if self.receiver_mode == "practical" else None,
        }


@dataclass(frozen=True)
class BerPoint:
    esn0_db: float
    bit_errors: int
    bits: int
    ber: float
    wilson_ci_95: tuple[float, float]
    frames_used: int


def _frame_channel(cfg: ExperimentConfig, esn0_db: float, frame: int) -> ChannelSpec:
    if isinstance(cfg.channel_mode, ChannelSpec):
        return cfg.channel_mode
    if cfg.channel_mode == "awgn":
        return ChannelSpec.identity()
    rng = substream(cfg.seed.master_seed, "chan", esn0_db, frame)
    return gen_eva_jakes(cfg.p, cfg.fc_hz, cfg.v_kmh, rng)


def _run_frame(cfg: ExperimentConfig, esn0_db: float, frame: int, ns: NoiseSpec,
               lpf: FilterSpec | None, fixed_channel_h) -> tuple[int, int]:
    p, c = cfg.p, cfg.constellation
    bits = random_bits(cfg.bits_per_frame, substream(cfg.seed.master_seed, "bits", esn0_db, frame))
    x = map_bits(bits, c, p)
    ch = _frame_channel(cfg, esn0_db, frame)
    if ch.max_delay_tap > p.cp_len:
        raise ValueError(f"cp_len {p.cp_len} is shorter than the channel delay "
                         f"spread ({ch.max_delay_tap} taps)")
    framed = add_cp(idzt(x), p.cp_len)
    if cfg.receiver_mode == "practical":
        w = to_analog(framed, p)
        if not (len(ch.gains) == 1 and ch.delay_taps[0] == 0 and ch.doppler_taps[0] == 0
                and ch.gains[0] == 1.0 + 0.0j):
            w = apply_channel(w, ch, p)
        w = apply_filter(w, lpf)
        y = sample_at_grid(w, p)
    else:
        r = apply_channel_discrete(framed, ch, p)
        y = remove_cp(r)
    y = add_awgn(y, ns, substream(cfg.seed.master_seed, "noise", esn0_db, frame))
    Y = dzt(y, n_slots=p.N)
    h_eff = fixed_channel_h if fixed_channel_h is not None else build_effective_channel(ch, p)
    n0 = max(ns.n0, 1e-12)
    xhat, _ = mp_detect(Y, h_eff, c, n0, damping=cfg.damping, max_iter=cfg.max_iter)
    bits_hat = demap(xhat, c)
    return int(np.count_nonzero(bits_hat != bits)), cfg.bits_per_frame


def run_ber_point(cfg: ExperimentConfig, esn0_db: float) -> BerPoint:
    """Accumulate frames until min_bit_errors or max_frames, in deterministic
    batches (frame index, not execution order, fixes every random draw)."""
    ns = NoiseSpec(es_over_n0_db=esn0_db, sigma_s2=cfg.constellation.avg_energy)
    lpf = cfg.lpf() if cfg.receiver_mode == "practical" else None
    fixed_h = None
    if isinstance(cfg.channel_mode, ChannelSpec):
        fixed_h = build_effective_channel(cfg.channel_mode, cfg.p)
    elif cfg.channel_mode == "awgn":
        fixed_h = build_effective_channel(ChannelSpec.identity(), cfg.p)
    errors = bits = frames = 0
    while frames < cfg.max_frames and errors < cfg.min_bit_errors:
        batch = range(frames, min(frames + cfg.batch_frames, cfg.max_frames))
        for fi in batch:
            e, b = _run_frame(cfg, esn0_db, fi, ns, lpf, fixed_h)
            errors += e
            bits += b
        frames = batch.stop
    ber = errors / bits if bits else 0.0
    return BerPoint(esn0_db=esn0_db, bit_errors=errors, bits=bits, ber=ber,
                    wilson_ci_95=wilson_interval(errors, bits), frames_used=frames)


def _point_worker(args) -> BerPoint:
    cfg, esn0_db = args
    return run_ber_point(cfg, esn0_db)


def sweep(cfg: ExperimentConfig, threads: int = 1) -> list[BerPoint]:
    """Run every Es/N0 grid point; point-level parallelism never changes the
    result because each point's frame seeds are fixed by (esn0, frame)."""
    points = list(cfg.esn0_grid_db)
    if threads > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(points))) as ex:
            return list(ex.map(_point_worker, [(cfg, e) for e in points]))
    return [run_ber_point(cfg, e) for e in points]


def write_ber_csv(path, points: list[BerPoint]) -> None:
    with open(path, "w") as fh:
        fh.write("esn0_db,ber,ci_lo,ci_hi,bits,frames\n")
        for pt in points:
            lo, hi = pt.wilson_ci_95
            fh.write(f"{pt.esn0_db:.6g},{pt.ber:.10e},{lo:.10e},{hi:.10e},"
                     f"{pt.bits},{pt.frames_used}\n")
