"""Decoders for every external file format the pipeline reads.

All parsers are pure functions over streams and safe to run in parallel on
distinct files.
"""

from .atlas import parse_atlas_traceroute
from .errors import ParseError, RecordError, TruncatedError
from .geolite import GeoBlock, GeoTable, parse_geolite_blocks
from .mrt import parse_mrt
from .registry import parse_as2org, parse_delegated_extended, parse_roas, parse_state_owned
from .textdump import parse_path_text, parse_text_dump
from .vdem import parse_vdem

__all__ = [
    "GeoBlock",
    "GeoTable",
    "ParseError",
    "RecordError",
    "TruncatedError",
    "parse_as2org",
    "parse_atlas_traceroute",
    "parse_delegated_extended",
    "parse_geolite_blocks",
    "parse_mrt",
    "parse_path_text",
    "parse_roas",
    "parse_state_owned",
    "parse_text_dump",
    "parse_vdem",
]
