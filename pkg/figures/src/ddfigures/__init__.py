"""Paper-style panels rendered from ddregister CSV/JSON outputs."""

from .render import PANELS, render
from .schema import REQUIRED_COLUMNS, SchemaError, read_table

__version__ = "0.1.0"
