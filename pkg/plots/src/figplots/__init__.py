"""Read-only figure rendering for logical-ZNE CSV artifacts."""

from .render import SchemaError, render

__version__ = "0.1.0"
