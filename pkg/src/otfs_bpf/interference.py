"""Analytic engine for the receiver-filter interference on the DD grid.

A body sample in slot n sees leakage from the interpolated samples of the
preceding (q=-1), current (q=0) and succeeding (q=+1) slots through the
filter tails.  The per-pair leakage is

    i^(q)[l, l'] = integral over the q-th slot interval of
                   h(l*T/M - t') * sinc(t' - l'*T/M) dt'

evaluated as the same sample-period-scaled lattice sum the simulated
receiver uses (the integrand is band-limited, so the lattice sum is exact
up to the filter's truncation kinks).  Folding l' = l2*M + l1 over the
aliases gives the slot-to-slot tables; combining the three tables with the
Doppler-domain phases of the slot shifts (plus the frame-termination
correction on the succeeding slot) yields the complex coupling of source
grid point (k', l1) onto receive grid point (k, l), the per-point average
interference power, and the signal-to-interference ratio.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .grid import Constellation, FrameParams, map_bits, random_bits, substream
from .modem import add_cp, dzt, idzt
from .waveform import (L2MAX_DEFAULT, FilterSpec, apply_filter, sample_at_grid,
                       to_analog)

__all__ = [
    "InterferenceTables",
    "DDMaps",
    "interference_integral",
    "orthogonality_sum",
    "fold_interference",
    "deviation_coeff",
    "compute_dd_maps",
    "iddi_power",
    "sir_db_map",
    "measure_interference_mc",
    "write_map_csv",
    "write_map_meta",
]


@dataclass(frozen=True)
class InterferenceTables:
    """Folded leakage tables I^(q)[l, l1], q in {-1, 0, 1}, all real."""

    tables: np.ndarray  # (3, M, M), index [q+1]
    params: FrameParams
    filter_fingerprint: str
    l2max: int

    def q(self, qv: int) -> np.ndarray:
        if qv not in (-1, 0, 1):
            raise ValueError("q must be -1, 0 or 1")
        return self.tables[qv + 1]


@dataclass(frozen=True)
class DDMaps:
    """Self-coupling, average interference power, and SIR per grid point."""

    cself: np.ndarray   # (N, M) complex
    iddi: np.ndarray    # (N, M) real >= 0
    sir_db: np.ndarray  # (N, M) real, +inf where interference-free
    sigma_s2: float


def _segment_ticks(p: FrameParams, q: int):
    """Oversample ticks of the q-th slot interval [qT, (q+1)T), left-closed."""
    return q * p.slot_ticks + np.arange(p.slot_ticks)


def interference_integral(p: FrameParams, h: FilterSpec, q: int, l: int,
                          l_src: int) -> float:
    """Single leakage value i^(q)[l, l_src] (l_src may be any integer)."""
    if q not in (-1, 0, 1):
        raise ValueError("q must be -1, 0 or 1")
    if not 0 <= l < p.M:
        raise ValueError("l out of range")
    j = _segment_ticks(p, q)
    hv = h.value_at_tick(l * p.Q - j)
    sv = np.sinc(j / p.Q - l_src)
    return float(hv @ sv * p.dt)


def orthogonality_sum(p: FrameParams, h: FilterSpec, l: int, l_src: int) -> float:
    """sum_q i^(q)[l, l_src]; approximately delta[l - l_src] when the filter
    support is covered by the three slot intervals."""
    return sum(interference_integral(p, h, q, l, l_src) for q in (-1, 0, 1))


def fold_interference(p: FrameParams, h: FilterSpec,
                      l2max: int = L2MAX_DEFAULT) -> InterferenceTables:
    """Build all three M x M folded tables.

    The alias sum runs over l2 in [q - l2max, q + l2max]; beyond that the
    sinc tail contributes below the per-entry convergence checked in tests.
    """
    M, Q, QM = p.M, p.Q, p.slot_ticks
    out = np.empty((3, M, M))
    l_row = np.arange(M)[:, None]
    for q in (-1, 0, 1):
        j = _segment_ticks(p, q)
        hmat = h.value_at_tick(l_row * Q - j[None, :])          # (M, QM)
        x = j / Q
        smat = np.zeros((QM, M))
        for l2 in range(q - l2max, q + l2max + 1):
            smat += np.sinc(x[:, None] - (l2 * M + np.arange(M))[None, :])
        out[q + 1] = (hmat @ smat) * p.dt
    return InterferenceTables(tables=out, params=p,
                              filter_fingerprint=h.fingerprint, l2max=l2max)


def _phase_terms(n_slots: int, k: np.ndarray):
    theta = 2.0 * np.pi * np.asarray(k) / n_slots
    w_prev = np.exp(-1j * theta)
    w_next = np.exp(1j * theta) - np.exp(-1j * theta * (n_slots - 1)) / n_slots
    return w_prev, w_next


def deviation_coeff(tables: InterferenceTables, k_src: int, k_out: int,
                    l_out: int, l_src: int) -> complex:
    """Complex coupling of transmitted grid point (k_src, l_src) onto
    received grid point (k_out, l_out).

    On the diagonal Doppler branch (k_src == k_out) the three tables combine
    with the slot-shift phases; off the diagonal only the frame-termination
    correction of the succeeding slot leaks, with the phase set by the
    receive Doppler index."""
    N = tables.params.N
    im1 = tables.q(-1)[l_out, l_src]
    i0 = tables.q(0)[l_out, l_src]
    ip1 = tables.q(1)[l_out, l_src]
    theta = 2.0 * np.pi * k_out / N
    if k_src == k_out:
        w_prev, w_next = _phase_terms(N, np.array(k_out))
        return complex(i0 + im1 * w_prev + ip1 * w_next)
    return complex(-ip1 / N * np.exp(-1j * theta * (N - 1)))


def _coupling_matrix(tables: InterferenceTables, k: int) -> np.ndarray:
    """(M, M) diagonal-Doppler coupling matrix C[k, l, l1] for one k."""
    N = tables.params.N
    w_prev, w_next = _phase_terms(N, np.array(k))
    return tables.q(0) + tables.q(-1) * w_prev + tables.q(1) * w_next


def compute_dd_maps(tables: InterferenceTables, sigma_s2: float = 1.0) -> DDMaps:
    """Self-coupling map, average interference power and SIR (dB)."""
    if sigma_s2 <= 0:
        raise ValueError("sigma_s2 must be positive")
    p = tables.params
    N, M = p.N, p.M
    cself = np.empty((N, M), dtype=complex)
    v = np.empty((N, M))
    cross = (N - 1) / N ** 2 * (tables.q(1) ** 2).sum(axis=1)
    for k in range(N):
        ck = _coupling_matrix(tables, k)
        diag = np.diagonal(ck)
        cself[k] = diag
        a2 = np.abs(ck) ** 2
        v[k] = sigma_s2 * (a2.sum(axis=1) - np.abs(diag) ** 2) + sigma_s2 * cross
    with np.errstate(divide="ignore"):
        sir = np.where(v > 0.0, sigma_s2 * np.abs(cself) ** 2 / np.where(v > 0, v, 1.0),
                       np.inf)
        sir_db = np.where(np.isinf(sir), np.inf, 10.0 * np.log10(np.maximum(sir, 1e-300)))
    return DDMaps(cself=cself, iddi=v, sir_db=sir_db, sigma_s2=sigma_s2)


def iddi_power(tables: InterferenceTables, sigma_s2: float = 1.0) -> np.ndarray:
    """Average interference power map; depends on the constellation only
    through its mean symbol energy."""
    return compute_dd_maps(tables, sigma_s2).iddi


def sir_db_map(maps: DDMaps) -> np.ndarray:
    return maps.sir_db


def measure_interference_mc(p: FrameParams, h: FilterSpec, frames: int, seed: int,
                            c: Constellation | None = None,
                            tables: InterferenceTables | None = None) -> np.ndarray:
    """Monte-Carlo measurement of the per-grid-point interference power.

    Sends random 4-QAM frames (unit energy unless another constellation is
    given) through interpolation, receive filtering and lattice sampling
    with no channel and no noise, then averages |Y - Cself*X|^2 with the
    analytic self-coupling.  Needs cp_len == M: the analytic tables assume
    a full-slot cyclic prefix.
    """
    if p.cp_len != p.M:
        raise ValueError("interference analysis assumes a full-slot CP (cp_len == M)")
    if frames < 1:
        raise ValueError("need at least one frame")
    c = c or Constellation.qam(4)
    tables = tables or fold_interference(p, h)
    cself = compute_dd_maps(tables, c.avg_energy).cself
    acc = np.zeros((p.N, p.M))
    for fi in range(frames):
        rng = substream(seed, "mc-frame", fi)
        x = map_bits(random_bits(p.n_symbols * c.bits_per_symbol, rng), c, p)
        f = add_cp(idzt(x), p.cp_len)
        y = dzt(sample_at_grid(apply_filter(to_analog(f, p), h), p), n_slots=p.N)
        acc += np.abs(y - cself * x) ** 2
    return acc / frames


def write_map_csv(path, map2d: np.ndarray, value_name: str = "value") -> None:
    """Flat (k, l, value) export of an (N, M) map."""
    arr = np.asarray(map2d)
    with open(path, "w") as fh:
        fh.write(f"k,l,{value_name}\n")
        for k in range(arr.shape[0]):
            for l in range(arr.shape[1]):
                fh.write(f"{k},{l},{arr[k, l]:.10e}\n")


def write_map_meta(path, tables: InterferenceTables) -> None:
    meta = {
        "M": tables.params.M,
        "N": tables.params.N,
        "filter_fingerprint": tables.filter_fingerprint,
        "Q": tables.params.Q,
        "L2max": tables.l2max,
    }
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
