"""Renders the coupling / interference / SIR heatmaps and the BER curves
from the otfs-bpf CSV outputs."""

from .render import FigureRecipe, SchemaError, render

__version__ = "0.1.0"
