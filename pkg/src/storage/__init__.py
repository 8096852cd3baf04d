"""
Storage package for local artifacts: the binary array cache, dataset ingestion
and result writers.
"""

from .cache_client import CacheClient, array_key
from .dataset_io import cache_dataset, load_cached_dataset, load_dataset, read_matrix_csv, write_matrix_csv
from .result_writer import ResultWriter, read_json_artifact

__all__ = [
    "CacheClient",
    "array_key",
    "load_dataset",
    "read_matrix_csv",
    "write_matrix_csv",
    "cache_dataset",
    "load_cached_dataset",
    "ResultWriter",
    "read_json_artifact",
]
