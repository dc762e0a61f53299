#!/usr/bin/env python3
"""Drive the otfs-bpf CLI to produce the four figure datasets, then render
them with otfs-bpf-figs (if installed).

Default scale matches the interference-map setup (M=128, N=16) and the AWGN
BER comparison; --extended adds the doubly-selective EVA sweep (M=512, N=32,
several minutes).  Outputs land in --outdir (default ./figure_data).
"""

import argparse
import subprocess
import sys
from pathlib import Path


def run(args):
    print("+", " ".join(args))
    proc = subprocess.run(args)
    if proc.returncode != 0:
        sys.exit(proc.returncode)


def cli(*args):
    run([sys.executable, "-m", "otfs_bpf.cli", *args])


def figs(*args):
    run([sys.executable, "-m", "otfs_figs.cli", *args])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="figure_data")
    ap.add_argument("--seed", default="2024")
    ap.add_argument("--threads", default="1")
    ap.add_argument("--extended", action="store_true",
                    help="include the EVA doubly-selective BER sweep")
    ap.add_argument("--no-render", action="store_true",
                    help="produce CSVs only (skip the figure package)")
    ns = ap.parse_args()
    out = Path(ns.outdir)
    out.mkdir(parents=True, exist_ok=True)

    coeffs = out / "coeffs_m128_n16.csv"
    iddi = out / "iddi_m64_n16.csv"
    sir = out / "sir_m128_n16.csv"
    ber_ideal = out / "ber_awgn_ideal_m128_n16.csv"
    ber_practical = out / "ber_awgn_practical_m128_n16.csv"

    cli("coeffs", "--M", "128", "--N", "16", "--out", str(coeffs))
    cli("iddi", "--M", "64", "--N", "16", "--mc-frames", "500",
        "--seed", ns.seed, "--out", str(iddi))
    cli("sir", "--M", "128", "--N", "16", "--out", str(sir))
    for mode, path in (("ideal", ber_ideal), ("practical", ber_practical)):
        cli("ber", "--M", "128", "--N", "16", "--esn0", "0:18:2", "--mode", mode,
            "--frames", "50", "--min-errors", "200", "--seed", ns.seed,
            "--threads", ns.threads, "--out", str(path))

    curves = [(ber_ideal, "ideal"), (ber_practical, "practical")]
    if ns.extended:
        eva_prac = out / "ber_eva_practical_m512_n32.csv"
        eva_ideal = out / "ber_eva_ideal_m512_n32.csv"
        for mode, path in (("practical", eva_prac), ("ideal", eva_ideal)):
            cli("ber", "--M", "512", "--N", "32", "--cp-len", "32",
                "--channel", "eva", "--mode", mode, "--esn0", "0:20:4",
                "--frames", "32", "--min-errors", "200", "--seed", ns.seed,
                "--threads", ns.threads, "--out", str(path))
            curves.append((path, f"EVA {mode}"))

    if ns.no_render:
        return
    figs("--figure", "2", "--input", str(coeffs), "--out", str(out / "fig2_coupling.png"))
    figs("--figure", "3", "--input", str(iddi), "--out", str(out / "fig3_iddi.png"))
    figs("--figure", "4", "--input", str(sir), "--out", str(out / "fig4_sir.png"))
    fig5 = ["--figure", "5", "--out", str(out / "fig5_ber.png")]
    for path, label in curves:
        fig5 += ["--input", str(path), "--label", label]
    figs(*fig5)
    print(f"done: {out}/")


if __name__ == "__main__":
    main()
