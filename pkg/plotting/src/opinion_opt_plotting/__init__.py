"""Figure rendering for opinion-opt sweep and trace CSVs."""

from .figures import KINDS, FigureSpec, render

__version__ = "0.1.0"
