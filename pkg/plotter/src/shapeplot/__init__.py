"""CSV-to-figure renderer for shaping sweep results."""

__version__ = "0.1.0"
