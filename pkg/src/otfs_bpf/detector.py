"""DD-domain detection for the reduced-CP integer-tap channel model.

The effective channel maps input grid point ((k-ki)_N, (l-li)_M) to output
(k, l) with coefficient a_i * exp(j2pi (l-li) ki / (MN)); outputs whose
delay wraps past the frame-wise CP (l < li) pick up the extra phase
exp(-j2pi (k-ki)/N).  This is the standard model of a rectangular-pulse
receiver with no front-end filter: the detector deliberately ignores any
band-limiting distortion.

mp_detect runs Gaussian-approximation message passing on the sparse factor
graph: observation nodes summarize the interference of all but the target
symbol as a Gaussian; variable nodes exchange damped symbol probabilities.
Convergence is declared when the posteriors stop moving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpec
from .grid import Constellation, FrameParams

__all__ = ["EffectiveChannel", "build_effective_channel", "mp_detect"]

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class EffectiveChannel:
    """Sparse linear map on the flattened (N*M,) DD symbol vector, stored as
    parallel edge arrays; each output row has at most P entries."""

    n_doppler: int
    n_delay: int
    obs_idx: np.ndarray   # (E,) int, flattened (k, l) of the output
    var_idx: np.ndarray   # (E,) int, flattened (k'', l'') of the input
    coeff: np.ndarray     # (E,) complex

    @property
    def n_points(self) -> int:
        return self.n_doppler * self.n_delay

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Y = H X for an (N, M) symbol grid."""
        xf = np.asarray(x).ravel()
        prod = self.coeff * xf[self.var_idx]
        yf = (np.bincount(self.obs_idx, weights=prod.real, minlength=self.n_points)
              + 1j * np.bincount(self.obs_idx, weights=prod.imag, minlength=self.n_points))
        return yf.reshape(self.n_doppler, self.n_delay)

    def permuted(self, perm: np.ndarray) -> "EffectiveChannel":
        """Relabel grid points by a permutation of the flattened index."""
        perm = np.asarray(perm)
        return EffectiveChannel(self.n_doppler, self.n_delay,
                                perm[self.obs_idx], perm[self.var_idx],
                                self.coeff.copy())


def build_effective_channel(ch: ChannelSpec, p: FrameParams) -> EffectiveChannel:
    """Edge list of the integer-tap reduced-CP input-output relation.
    Paths that round to the same (delay, Doppler) cell merge by gain
    superposition before edges are laid out."""
    merged: dict[tuple[int, int], complex] = {}
    for g, d, k in zip(ch.gains, ch.delay_taps, ch.doppler_taps):
        key = (int(d), int(k))
        merged[key] = merged.get(key, 0.0 + 0.0j) + complex(g)
    N, M = p.N, p.M
    kk, ll = np.meshgrid(np.arange(N), np.arange(M), indexing="ij")
    obs = (kk * M + ll).ravel()
    obs_parts, var_parts, coeff_parts = [], [], []
    for (d, kdop), g in sorted(merged.items()):
        coeff = g * np.exp(2j * np.pi * (ll - d) * kdop / (M * N))
        wrap = ll < d
        coeff = np.where(wrap, coeff * np.exp(-2j * np.pi * (kk - kdop) / N), coeff)
        var = ((kk - kdop) % N) * M + (ll - d) % M
        obs_parts.append(obs)
        var_parts.append(var.ravel())
        coeff_parts.append(coeff.ravel())
    return EffectiveChannel(n_doppler=N, n_delay=M,
                            obs_idx=np.concatenate(obs_parts),
                            var_idx=np.concatenate(var_parts),
                            coeff=np.concatenate(coeff_parts))


def _bincount_c(idx: np.ndarray, w: np.ndarray, n: int) -> np.ndarray:
    return (np.bincount(idx, weights=w.real, minlength=n)
            + 1j * np.bincount(idx, weights=w.imag, minlength=n))


def mp_detect(Y: np.ndarray, H: EffectiveChannel, c: Constellation, n0: float,
              damping: float = 0.7, max_iter: int = 50,
              tol: float = 1e-5) -> tuple[np.ndarray, int]:
    """Message-passing detection; returns (hard-decision symbol grid, iterations).

    Probabilities are floored at 1e-12 to keep the log domain finite; ties
    in the final decision resolve to the lowest constellation index.
    """
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    if not 0 < damping <= 1:
        raise ValueError("damping must be in (0, 1]")
    pts = c.points
    n_sym = len(pts)
    yf = np.asarray(Y).ravel()
    n_points = H.n_points
    e = len(H.obs_idx)
    abs2 = np.abs(H.coeff) ** 2
    pts_e2 = np.abs(pts) ** 2

    p_msg = np.full((e, n_sym), 1.0 / n_sym)
    belief_prev = np.full((n_points, n_sym), 1.0 / n_sym)
    decisions = None
    iters = 0
    for iters in range(1, max_iter + 1):
        # observation side: Gaussian summary of everyone except the target
        mean_e = p_msg @ pts
        var_e = (p_msg @ pts_e2) - np.abs(mean_e) ** 2
        sum_mean = _bincount_c(H.obs_idx, H.coeff * mean_e, n_points)
        sum_var = np.bincount(H.obs_idx, weights=abs2 * var_e, minlength=n_points) + n0
        mu_excl = sum_mean[H.obs_idx] - H.coeff * mean_e
        var_excl = np.maximum(sum_var[H.obs_idx] - abs2 * var_e, n0 * 1e-3)
        resid = yf[H.obs_idx] - mu_excl
        # per-edge symbol log-likelihoods
        diff = resid[:, None] - H.coeff[:, None] * pts[None, :]
        loglik = -(diff.real ** 2 + diff.imag ** 2) / var_excl[:, None]
        # variable side: combine, then remove own contribution per edge
        belief_log = np.zeros((n_points, n_sym))
        np.add.at(belief_log, H.var_idx, loglik)
        ext = belief_log[H.var_idx] - loglik
        ext -= ext.max(axis=1, keepdims=True)
        p_new = np.exp(ext)
        p_new /= p_new.sum(axis=1, keepdims=True)
        p_new = np.maximum(p_new, PROB_FLOOR)
        p_new /= p_new.sum(axis=1, keepdims=True)
        p_msg = damping * p_new + (1.0 - damping) * p_msg

        belief_log -= belief_log.max(axis=1, keepdims=True)
        belief = np.exp(belief_log)
        belief /= belief.sum(axis=1, keepdims=True)
        delta = np.abs(belief - belief_prev).max()
        belief_prev = belief
        decisions = belief.argmax(axis=1)
        if delta < tol:
            break
    sym = pts[decisions].reshape(H.n_doppler, H.n_delay)
    return sym, iters
