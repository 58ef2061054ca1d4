"""Shared bits for CSV-driven rendering."""

TOKEN_LIMIT = "TokenLimit"


class SchemaError(ValueError):
    """The CSV does not conform to the expected graphbench schema."""
