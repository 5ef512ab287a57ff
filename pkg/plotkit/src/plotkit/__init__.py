"""Publication figures from clasp stats.csv files.

plotkit talks to the engine only through its CSV artifacts: it parses
stats.csv, validates the schema, and renders the numbers it finds. It
never recomputes any statistic, so a figure is a pure function of its
input files.
"""

from .tables import STATS_COLUMNS, SchemaError, StatsRow, StatsTable, read_stats
from .figures import plot_chamfer_boxes, plot_likelihood, read_metadata

__all__ = [
    "STATS_COLUMNS",
    "SchemaError",
    "StatsRow",
    "StatsTable",
    "read_stats",
    "plot_chamfer_boxes",
    "plot_likelihood",
    "read_metadata",
]

__version__ = "0.1.0"
