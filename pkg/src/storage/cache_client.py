from pathlib import Path
from typing import Dict, List, Optional
import hashlib
import os
import tempfile

import numpy as np

from src.config import settings, logger


def array_key(*arrays: np.ndarray) -> str:
    """Short hex digest identifying the contents of ``arrays``."""
    digest = hashlib.md5()
    for array in arrays:
        array = np.ascontiguousarray(np.asarray(array, dtype=np.float64))
        digest.update(str(array.shape).encode())
        digest.update(array.tobytes())
    return digest.hexdigest()


class CacheClient:
    """Binary array cache in a local directory.

    Entries are ``.npz`` files addressed by slash-separated names such as
    ``precision/<dataset>_<lambdas>``. Writes go through a temporary file and an
    atomic rename, so concurrent writers of the same entry are harmless.
    """

    def __init__(self, cache_dir: Optional[str] = None):
        self.cache_dir = Path(cache_dir or os.environ.get("HDINFER_CACHE_DIR") or settings.CACHE_DIR)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        logger.debug(f"Initialized cache client in: {self.cache_dir}")

    def _path(self, name: str) -> Path:
        return self.cache_dir / f"{name}.npz"

    def exists(self, name: str) -> bool:
        return self._path(name).is_file()

    def upload_arrays(self, name: str, **arrays: np.ndarray) -> str:
        """
        Store arrays under ``name``.

        Args:
            name: Entry name, may contain ``/`` separators
            **arrays: Arrays to store

        Returns:
            str: Path of the written entry
        """
        target = self._path(name)
        target.parent.mkdir(parents=True, exist_ok=True)
        handle, temp_path = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
        try:
            with os.fdopen(handle, "wb") as stream:
                np.savez(stream, **arrays)
            os.replace(temp_path, target)
        except Exception:
            if os.path.exists(temp_path):
                os.remove(temp_path)
            raise
        logger.debug(f"Cached {name} ({len(arrays)} arrays)")
        return str(target)

    def download_arrays(self, name: str) -> Optional[Dict[str, np.ndarray]]:
        """
        Load the arrays stored under ``name``.

        Returns:
            Dict of arrays, or None on a cache miss or an unreadable entry
        """
        path = self._path(name)
        if not path.is_file():
            return None
        try:
            with np.load(path, allow_pickle=False) as archive:
                arrays = {key: archive[key] for key in archive.files}
        except (OSError, ValueError) as e:
            logger.warning(f"Ignoring unreadable cache entry {name}: {str(e)}")
            return None
        logger.debug(f"Cache hit for {name}")
        return arrays

    def list_entries(self, prefix: str = "") -> List[str]:
        """Names of the cached entries starting with ``prefix``."""
        names = sorted(
            path.relative_to(self.cache_dir).as_posix()[: -len(".npz")]
            for path in self.cache_dir.rglob("*.npz")
        )
        return [name for name in names if name.startswith(prefix)]

    def delete_entry(self, name: str) -> None:
        path = self._path(name)
        if path.is_file():
            path.unlink()
            logger.info(f"Deleted cache entry {name}")
