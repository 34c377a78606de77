"""AS-level Internet topology reconstruction and per-country funnelling analysis."""

__version__ = "0.1.0"
