"""CSV-to-PNG rendering for the four standard figures.

Figure ids and expected input schemas (exactly the otfs-bpf CLI contracts):

  2: coupling map       k,l,mag,phase_rad        -> two heatmap panels
  3: interference power k,l,v_analytic[,v_mc]    -> one or two heatmap panels
                                                    (measured upper, analytic lower)
  4: SIR map            k,l,sir_db               -> one heatmap, color scale
                                                    clipped to [-10, 40] dB
  5: BER curves         esn0_db,ber,ci_lo,ci_hi,bits,frames (one CSV per curve)
                                                 -> log-y curves with CI whiskers

Heatmaps put the delay index on x and the Doppler index on y.  Color scales
are fixed per figure so renders of different runs are comparable, and the
output bytes depend only on the input tables.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["FigureRecipe", "SchemaError", "render"]

# interference power panels are shown in dB relative to unit symbol energy
IDDI_DB_RANGE = (-40.0, 0.0)
SIR_DB_RANGE = (-10.0, 40.0)


class SchemaError(Exception):
    """Input CSV does not match the documented schema."""


@dataclass(frozen=True)
class FigureRecipe:
    figure_id: int
    inputs: tuple
    output: str
    labels: tuple = field(default=())

    def __post_init__(self):
        if self.figure_id not in (2, 3, 4, 5):
            raise SchemaError(f"unknown figure id {self.figure_id}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")
        if self.figure_id != 5 and len(self.inputs) != 1:
            raise SchemaError(f"figure {self.figure_id} takes exactly one input CSV")


def _read_csv(path, expected_any: list) -> tuple:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: empty file") from None
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if header not in expected_any:
        raise SchemaError(f"{path}: header {header} does not match any of {expected_any}")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    width = len(header)
    if any(len(r) != width for r in rows):
        raise SchemaError(f"{path}: ragged rows")
    return header, rows


def _grid_columns(path, header, rows, value_cols):
    """Parse a (k, l, values...) table into dense (N, M) arrays; the grid
    must be complete."""
    try:
        k = np.array([int(r[0]) for r in rows])
        l = np.array([int(r[1]) for r in rows])
        vals = [np.array([float(r[i]) for r in rows]) for i in value_cols]
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric cell ({exc})") from exc
    n, m = k.max() + 1, l.max() + 1
    if len(rows) != n * m or len(set(zip(k.tolist(), l.tolist()))) != n * m:
        raise SchemaError(f"{path}: incomplete {n}x{m} grid ({len(rows)} rows)")
    out = []
    for v in vals:
        g = np.empty((n, m))
        g[k, l] = v
        out.append(g)
    return out


def _heat(ax, grid, title, vmin, vmax, cmap="viridis"):
    im = ax.imshow(grid, origin="lower", aspect="auto", vmin=vmin, vmax=vmax,
                   cmap=cmap, extent=(-0.5, grid.shape[1] - 0.5, -0.5, grid.shape[0] - 0.5))
    ax.set_xlabel("delay index l")
    ax.set_ylabel("Doppler index k")
    ax.set_title(title)
    return im


def _render_coupling(recipe):
    header, rows = _read_csv(recipe.inputs[0], [["k", "l", "mag", "phase_rad"]])
    mag, phase = _grid_columns(recipe.inputs[0], header, rows, (2, 3))
    fig, axes = plt.subplots(2, 1, figsize=(6.4, 7.2))
    im0 = _heat(axes[0], mag, "self-coupling magnitude", 0.0, 1.1)
    fig.colorbar(im0, ax=axes[0], label="|C|")
    im1 = _heat(axes[1], phase, "self-coupling phase", -np.pi, np.pi, cmap="twilight")
    fig.colorbar(im1, ax=axes[1], label="rad")
    return fig


def _render_iddi(recipe):
    path = recipe.inputs[0]
    header, rows = _read_csv(path, [["k", "l", "v_analytic"],
                                    ["k", "l", "v_analytic", "v_mc"]])
    if len(header) == 4:
        v_ana, v_mc = _grid_columns(path, header, rows, (2, 3))
        panels = [("measured (simulation)", v_mc), ("analytic", v_ana)]
    else:
        (v_ana,) = _grid_columns(path, header, rows, (2,))
        panels = [("analytic", v_ana)]
    fig, axes = plt.subplots(len(panels), 1, figsize=(6.4, 3.8 * len(panels)),
                             squeeze=False)
    for ax, (title, grid) in zip(axes[:, 0], panels):
        with np.errstate(divide="ignore"):
            db = 10.0 * np.log10(np.maximum(grid, 1e-30))
        im = _heat(ax, np.clip(db, *IDDI_DB_RANGE), f"interference power, {title}",
                   *IDDI_DB_RANGE, cmap="magma")
        fig.colorbar(im, ax=ax, label="dB")
    return fig


def _render_sir(recipe):
    path = recipe.inputs[0]
    header, rows = _read_csv(path, [["k", "l", "sir_db"]])
    rows = [[r[0], r[1], "1e30" if r[2] == "inf" else r[2]] for r in rows]
    (sir,) = _grid_columns(path, header, rows, (2,))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    im = _heat(ax, np.clip(sir, *SIR_DB_RANGE), "signal-to-interference ratio",
               *SIR_DB_RANGE, cmap="viridis")
    fig.colorbar(im, ax=ax, label="dB")
    return fig


def _render_ber(recipe):
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    schema = [["esn0_db", "ber", "ci_lo", "ci_hi", "bits", "frames"]]
    labels = list(recipe.labels) + [None] * (len(recipe.inputs) - len(recipe.labels))
    plotted = False
    for path, label in zip(recipe.inputs, labels):
        header, rows = _read_csv(path, schema)
        try:
            es = np.array([float(r[0]) for r in rows])
            ber = np.array([float(r[1]) for r in rows])
            lo = np.array([float(r[2]) for r in rows])
            hi = np.array([float(r[3]) for r in rows])
        except ValueError as exc:
            raise SchemaError(f"{path}: non-numeric cell ({exc})") from exc
        mask = ber > 0
        if not mask.any():
            continue
        yerr = np.vstack([ber[mask] - np.maximum(lo[mask], 1e-300),
                          hi[mask] - ber[mask]])
        ax.errorbar(es[mask], ber[mask], yerr=np.maximum(yerr, 0.0), marker="o",
                    capsize=3, label=label or path)
        plotted = True
    if not plotted:
        raise SchemaError("no curve has a positive BER point to draw")
    ax.set_yscale("log")
    ax.set_xlabel("Es/N0 [dB]")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return fig


_RENDERERS = {2: _render_coupling, 3: _render_iddi, 4: _render_sir, 5: _render_ber}


def render(recipe: FigureRecipe) -> str:
    """Render one figure to recipe.output (PNG); returns the output path."""
    fig = _RENDERERS[recipe.figure_id](recipe)
    try:
        fig.savefig(recipe.output, dpi=130)
    finally:
        plt.close(fig)
    return recipe.output
