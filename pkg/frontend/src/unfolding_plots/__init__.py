"""Static figures for unfolding-model outputs, driven by their CSV files."""

from .figures import KINDS, FigureSpec, extract_series, render
from .schemas import SchemaError

__version__ = "0.1.0"
