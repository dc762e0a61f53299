"""Command line for the figure renderer.

    otfs-bpf-figs --figure 4 --input sir.csv --out fig4.png
    otfs-bpf-figs --figure 5 --input ideal.csv --label ideal \\
                  --input practical.csv --label practical --out fig5.png

Exits 0 on success, 2 on schema or argument problems.
"""

from __future__ import annotations

import argparse
import sys

from .render import FigureRecipe, SchemaError, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="otfs-bpf-figs", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--figure", type=int, required=True, choices=(2, 3, 4, 5),
                    help="figure id: 2 coupling, 3 interference, 4 SIR, 5 BER")
    ap.add_argument("--input", action="append", required=True,
                    help="input CSV (repeatable for figure 5)")
    ap.add_argument("--label", action="append", default=[],
                    help="curve label, one per --input (figure 5)")
    ap.add_argument("--out", required=True, help="output PNG path")
    ns = ap.parse_args(argv)
    try:
        recipe = FigureRecipe(figure_id=ns.figure, inputs=tuple(ns.input),
                              output=ns.out, labels=tuple(ns.label))
        render(recipe)
    except SchemaError as exc:
        print(f"otfs-bpf-figs: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
