"""feasiplot: figure rendering for feasilab experiment tables."""

from .figures import FIGURE_KINDS, PlotSpec, below_diagonal, fit_log_slope, render
from .tables import SchemaError, Table, read_table

__version__ = "0.1.0"
