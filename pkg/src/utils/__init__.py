"""
Shared utilities: logging setup, counter-based random streams, an
order-preserving thread map and coefficient-group helpers.
"""

from .groups import as_group, complement, parse_group_spec
from .logging import setup_logging
from .parallel import ordered_map
from .rng import counter_stream, derive_seed, normal_block, standard_normals, uniform_open

__all__ = [
    "setup_logging",
    "ordered_map",
    "counter_stream",
    "derive_seed",
    "normal_block",
    "standard_normals",
    "uniform_open",
    "as_group",
    "complement",
    "parse_group_spec",
]
