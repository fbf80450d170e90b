"""Multi-agent natural-language query engine for NFL data."""

__version__ = "0.1.0"
