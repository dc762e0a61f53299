"""Command-line entry point: reproduces the interference maps, SIR map,
BER sweeps and PSD tables as CSV files, with a JSON run manifest alongside
every output.

Configuration precedence: command-line flags > config file > defaults.
A config file is flat ``key = value`` text (keys match the long flag names
with underscores); ``replay`` re-runs a previously written manifest and
reproduces its outputs byte-identically.

Exit codes: 0 success, 2 configuration error, 3 runtime numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .channel import ChannelSpec
from .grid import Constellation, FrameParams, SeedSpec, map_bits, random_bits, substream
from .harness import ExperimentConfig, sweep, write_ber_csv
from .interference import compute_dd_maps, fold_interference, measure_interference_mc
from .modem import add_cp, idzt
from .waveform import apply_filter, design_lpf, identity_filter, psd_estimate, to_analog

__all__ = ["main"]


class ConfigError(Exception):
    pass


class NumericError(Exception):
    pass


_COMMON = {
    "m": (int, 128), "n": (int, 16), "delta_f": (float, 15e3),
    "cp_len": (int, None), "q": (int, 16),
    "th1": (float, 1.0), "th2": (float, 1.0),          # in units of T
    "filter": (str, "truncated_sinc"),
    "seed": (int, 0), "threads": (int, 1), "out": (str, None),
}

_DEFAULTS = {
    "coeffs": dict(_COMMON),
    "iddi": dict(_COMMON, mc_frames=(int, 0)),
    "sir": dict(_COMMON),
    "ber": dict(_COMMON, esn0=(str, "0:18:2"), mode=(str, "practical"),
                channel=(str, "awgn"), frames=(int, 1000), min_errors=(int, 200),
                fc=(float, 5e9), v_kmh=(float, 120.0), damping=(float, 0.7),
                max_iter=(int, 50)),
    "psd": dict(_COMMON, nfft=(int, 4096), overlap=(float, 0.5)),
}


def _parse_value(key: str, raw: str, typ):
    if raw.lower() in ("none", ""):
        return None
    try:
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def _read_config_file(path: str, schema: dict) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for ln, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in schema:
            raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
        out[key] = _parse_value(key, raw, schema[key][0])
    return out


def _resolve(cmd: str, ns: argparse.Namespace) -> dict:
    schema = _DEFAULTS[cmd]
    cfg = {k: d for k, (_, d) in schema.items()}
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "func")}
    if getattr(ns, "config", None):
        cfg.update(_read_config_file(ns.config, schema))
    cfg.update(flags)
    if cfg.get("out") is None:
        raise ConfigError("an output path is required (--out)")
    return cfg


def _frame_params(cfg: dict) -> FrameParams:
    try:
        return FrameParams(M=cfg["m"], N=cfg["n"], delta_f=cfg["delta_f"],
                           cp_len=cfg["cp_len"], Q=cfg["q"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _filter_for(cfg: dict, p: FrameParams):
    if cfg["filter"] == "identity":
        return identity_filter(p)
    if cfg["filter"] == "truncated_sinc":
        try:
            return design_lpf(p, th1=cfg["th1"] * p.T, th2=cfg["th2"] * p.T)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown filter kind {cfg['filter']!r}")


def _check_finite(arr: np.ndarray, what: str, allow_inf: bool = False) -> None:
    bad = ~np.isfinite(arr)
    if allow_inf:
        bad &= ~np.isposinf(arr)
    if np.any(bad):
        raise NumericError(f"non-finite values in {what}")


def _parse_esn0(spec: str) -> tuple:
    try:
        if ":" in spec:
            start, stop, step = (float(s) for s in spec.split(":"))
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(start + i * step for i in range(n))
        return tuple(float(s) for s in spec.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad esn0 grid {spec!r}") from exc


def _write_manifest(cmd: str, cfg: dict, outputs: list, extra: dict | None = None) -> None:
    manifest = {
        "tool": "otfs-bpf",
        "version": __version__,
        "command": cmd,
        "config": cfg,
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    with open(outputs[0] + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_coeffs(cfg: dict):
    """CSV of the self-coupling magnitude and phase per grid point."""
    p = _frame_params(cfg)
    h = _filter_for(cfg, p)
    maps = compute_dd_maps(fold_interference(p, h))
    _check_finite(np.abs(maps.cself), "coupling map")
    with open(cfg["out"], "w") as fh:
        fh.write("k,l,mag,phase_rad\n")
        for k in range(p.N):
            for l in range(p.M):
                v = maps.cself[k, l]
                fh.write(f"{k},{l},{abs(v):.10e},{np.angle(v):.10e}\n")
    return [cfg["out"]], {"filter_fingerprint": h.fingerprint}


def cmd_iddi(cfg: dict):
    """CSV of the analytic interference power, optionally with a measured
    Monte-Carlo column."""
    p = _frame_params(cfg)
    h = _filter_for(cfg, p)
    tables = fold_interference(p, h)
    v = compute_dd_maps(tables).iddi
    _check_finite(v, "interference map")
    mc = None
    if cfg["mc_frames"] > 0:
        mc = measure_interference_mc(p, h, cfg["mc_frames"], cfg["seed"], tables=tables)
        _check_finite(mc, "measured interference map")
    with open(cfg["out"], "w") as fh:
        fh.write("k,l,v_analytic,v_mc\n" if mc is not None else "k,l,v_analytic\n")
        for k in range(p.N):
            for l in range(p.M):
                row = f"{k},{l},{v[k, l]:.10e}"
                if mc is not None:
                    row += f",{mc[k, l]:.10e}"
                fh.write(row + "\n")
    return [cfg["out"]], {"filter_fingerprint": h.fingerprint}


def cmd_sir(cfg: dict):
    """CSV of the per-grid-point SIR in dB ("inf" where interference-free)."""
    p = _frame_params(cfg)
    h = _filter_for(cfg, p)
    maps = compute_dd_maps(fold_interference(p, h))
    _check_finite(maps.sir_db, "SIR map", allow_inf=True)
    with open(cfg["out"], "w") as fh:
        fh.write("k,l,sir_db\n")
        for k in range(p.N):
            for l in range(p.M):
                v = maps.sir_db[k, l]
                fh.write(f"{k},{l},{'inf' if np.isposinf(v) else format(v, '.10e')}\n")
    return [cfg["out"]], {"filter_fingerprint": h.fingerprint}


def cmd_ber(cfg: dict):
    """BER sweep CSV over the Es/N0 grid."""
    p = _frame_params(cfg)
    channel = cfg["channel"]
    if channel not in ("awgn", "eva"):
        try:
            with open(channel) as fh:
                channel = ChannelSpec.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read channel spec {cfg['channel']!r}: {exc}") from exc
    elif channel == "eva":
        channel = "eva_jakes"
    if cfg["mode"] not in ("ideal", "practical"):
        raise ConfigError(f"unknown receiver mode {cfg['mode']!r}")
    filter_spec = _filter_for(cfg, p) if cfg["mode"] == "practical" else None
    try:
        ecfg = ExperimentConfig(
            p=p, constellation=Constellation.qam(4), receiver_mode=cfg["mode"],
            channel_mode=channel, esn0_grid_db=_parse_esn0(cfg["esn0"]),
            min_bit_errors=cfg["min_errors"], max_frames=cfg["frames"],
            seed=SeedSpec(cfg["seed"]), fc_hz=cfg["fc"], v_kmh=cfg["v_kmh"],
            damping=cfg["damping"], max_iter=cfg["max_iter"],
            filter_spec=filter_spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        points = sweep(ecfg, threads=cfg["threads"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_ber_csv(cfg["out"], points)
    extra = {"filter_fingerprint": filter_spec.fingerprint if filter_spec else None}
    return [cfg["out"]], extra


def cmd_psd(cfg: dict):
    """Power spectral density of one random frame, unfiltered and filtered."""
    p = _frame_params(cfg)
    h = _filter_for(cfg, p)
    c = Constellation.qam(4)
    rng = substream(cfg["seed"], "psd-frame")
    x = map_bits(random_bits(p.n_symbols * c.bits_per_symbol, rng), c, p)
    w = to_analog(add_cp(idzt(x), p.cp_len), p)
    if cfg["nfft"] > len(w.samples):
        raise ConfigError(f"nfft {cfg['nfft']} exceeds the frame length {len(w.samples)}")
    freq_u, psd_u = psd_estimate(w, cfg["nfft"], cfg["overlap"])
    freq_f, psd_f = psd_estimate(apply_filter(w, h), cfg["nfft"], cfg["overlap"])
    if len(freq_u) != len(freq_f) or np.abs(freq_u - freq_f).max() > 1e-6:
        raise NumericError("PSD frequency axes diverged")
    _check_finite(psd_u, "PSD")
    _check_finite(psd_f, "PSD")
    with open(cfg["out"], "w") as fh:
        fh.write("freq_hz,psd_db_unfiltered,psd_db_filtered\n")
        for fr, pu, pf in zip(freq_u, psd_u, psd_f):
            fh.write(f"{fr:.10e},{pu:.10e},{pf:.10e}\n")
    return [cfg["out"]], {"filter_fingerprint": h.fingerprint}


_RUNNERS = {"coeffs": cmd_coeffs, "iddi": cmd_iddi, "sir": cmd_sir,
            "ber": cmd_ber, "psd": cmd_psd}


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="flat key=value config file")
    sp.add_argument("--M", dest="m", type=int, help="delay bins per slot")
    sp.add_argument("--N", dest="n", type=int, help="Doppler bins / slots per frame")
    sp.add_argument("--delta-f", dest="delta_f", type=float, help="subcarrier spacing [Hz]")
    sp.add_argument("--cp-len", dest="cp_len", type=int, help="CP length in samples (default M)")
    sp.add_argument("--Q", dest="q", type=int, help="oversampling factor")
    sp.add_argument("--th1", type=float, help="filter support before t=0, in units of T")
    sp.add_argument("--th2", type=float, help="filter support after t=0, in units of T")
    sp.add_argument("--filter", choices=("truncated_sinc", "identity"))
    sp.add_argument("--seed", type=int, help="master seed")
    sp.add_argument("--threads", type=int, help="worker cap for sweeps")
    sp.add_argument("--out", help="output CSV path")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="otfs-bpf", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"otfs-bpf {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "coeffs": "self-coupling magnitude/phase map",
        "iddi": "average interference power map (analytic, optional Monte-Carlo)",
        "sir": "signal-to-interference ratio map",
        "ber": "bit-error-rate sweep",
        "psd": "power spectral density, unfiltered vs filtered",
    }
    for cmd, txt in helps.items():
        sp = sub.add_parser(cmd, help=txt, argument_default=argparse.SUPPRESS)
        _add_common(sp)
        if cmd == "iddi":
            sp.add_argument("--mc-frames", dest="mc_frames", type=int,
                            help="Monte-Carlo frames (0 = analytic only)")
        if cmd == "ber":
            sp.add_argument("--esn0", help="grid: 'a,b,c' or 'start:stop:step' [dB]")
            sp.add_argument("--mode", choices=("ideal", "practical"))
            sp.add_argument("--channel", help="awgn | eva | path to a channel JSON")
            sp.add_argument("--frames", type=int, help="max frames per point")
            sp.add_argument("--min-errors", dest="min_errors", type=int)
            sp.add_argument("--fc", type=float, help="carrier frequency [Hz]")
            sp.add_argument("--v-kmh", dest="v_kmh", type=float, help="relative speed [km/h]")
            sp.add_argument("--damping", type=float)
            sp.add_argument("--max-iter", dest="max_iter", type=int)
        if cmd == "psd":
            sp.add_argument("--nfft", type=int)
            sp.add_argument("--overlap", type=float)
    rp = sub.add_parser("replay", help="re-run a manifest and reproduce its outputs")
    rp.add_argument("manifest")
    return ap


def main(argv: list | None = None) -> int:
    ap = _build_parser()
    ns = ap.parse_args(argv)
    try:
        if ns.command == "replay":
            try:
                with open(ns.manifest) as fh:
                    man = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot load manifest {ns.manifest}: {exc}") from exc
            cmd, cfg = man["command"], man["config"]
        else:
            cmd = ns.command
            cfg = _resolve(cmd, ns)
        outputs, extra = _RUNNERS[cmd](cfg)
        _write_manifest(cmd, cfg, outputs, extra)
    except ConfigError as exc:
        print(f"otfs-bpf: config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"otfs-bpf: numeric error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
