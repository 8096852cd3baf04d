from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from src.config import logger
from src.exceptions import DimensionMismatch, InputNotFound, NonFinite
from src.solvers.dataset import Dataset

from .cache_client import CacheClient

PathLike = Union[str, Path]


def read_matrix_csv(path: PathLike) -> np.ndarray:
    """
    Read a headerless numeric CSV file.

    Args:
        path: CSV file

    Returns:
        np.ndarray: Float matrix, one row per line

    Raises:
        InputNotFound: If the file does not exist
        NonFinite: If an entry is empty, non-numeric, NaN or Inf
    """
    path = Path(path)
    if not path.is_file():
        raise InputNotFound(f"Input file not found: {path}", path=str(path))
    try:
        frame = pd.read_csv(path, header=None, dtype=np.float64, skip_blank_lines=True,
                            float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise DimensionMismatch(f"Input file is empty: {path}", path=str(path))
    except ValueError as e:
        raise NonFinite(f"Non-numeric entry in {path}: {str(e)}", path=str(path))
    values = frame.to_numpy()
    if not np.all(np.isfinite(values)):
        raise NonFinite(f"Missing or non-finite entries in {path}", path=str(path))
    logger.debug(f"Read {values.shape[0]}x{values.shape[1]} matrix from {path}")
    return values


def load_dataset(x_path: PathLike, y_path: PathLike) -> Dataset:
    """Dataset from a design CSV and a single-column response CSV."""
    X = read_matrix_csv(x_path)
    Y = read_matrix_csv(y_path)
    if Y.ndim == 2 and Y.shape[1] != 1:
        raise DimensionMismatch(f"Response file must have a single column, got {Y.shape[1]}",
                                path=str(y_path))
    dataset = Dataset(X=X, Y=Y.reshape(-1))
    logger.info(f"Loaded dataset with n={dataset.n}, p={dataset.p}")
    return dataset


def write_matrix_csv(path: PathLike, values: np.ndarray) -> str:
    """Headerless CSV with 17 significant digits."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    pd.DataFrame(values).to_csv(path, header=False, index=False, float_format="%.17g", lineterminator="\n")
    return str(path)


def cache_dataset(dataset: Dataset, cache: Optional[CacheClient] = None) -> str:
    """Store ``dataset`` in the binary cache and return its key."""
    cache = cache or CacheClient()
    key = f"datasets/{dataset.fingerprint(include_response=True)}"
    if not cache.exists(key):
        cache.upload_arrays(key, X=dataset.X, Y=dataset.Y)
    return key


def load_cached_dataset(key: str, cache: Optional[CacheClient] = None) -> Dataset:
    cache = cache or CacheClient()
    arrays = cache.download_arrays(key)
    if arrays is None:
        raise InputNotFound(f"No cached dataset under {key}", key=key)
    return Dataset(X=arrays["X"], Y=arrays["Y"])
