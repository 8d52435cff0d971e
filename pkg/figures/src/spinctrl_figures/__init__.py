"""Figure rendering for spinctrl CSV outputs."""

__version__ = "0.1.0"

from .render import FigureSpec, SchemaError, build_figure, render
