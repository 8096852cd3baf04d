from pathlib import Path
from typing import Any, Dict, Iterable, Optional
import hashlib
import json
import uuid

import numpy as np
import pandas as pd

from src import __version__
from src.config import logger


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


class ResultWriter:
    """Writes run artifacts into one output directory.

    Every JSON artifact embeds the run configuration and a provenance block; CSV
    tables carry the same information as ``#`` header lines. Names are plain
    file names, so nothing is written outside ``out_dir``.
    """

    def __init__(self, out_dir: str, run_config: Dict[str, Any]):
        self.out_dir = Path(out_dir)
        self.run_config = _to_jsonable(run_config)
        self.run_id = self._generate_run_id(self.run_config)

        # Ensure the output directory exists
        self.out_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Writing results to {self.out_dir} (run {self.run_id})")

    def _generate_run_id(self, run_config: Dict[str, Any]) -> str:
        """
        Generate a deterministic UUID based on the run configuration.

        Args:
            run_config: Configuration of the run

        Returns:
            str: Deterministic UUID
        """
        config_hash = hashlib.md5(json.dumps(run_config, sort_keys=True).encode()).hexdigest()
        return str(uuid.UUID(config_hash))

    def _target(self, name: str) -> Path:
        if Path(name).name != name or name in ("", ".", ".."):
            raise ValueError(f"Artifact name must be a plain file name, got {name!r}")
        return self.out_dir / name

    @property
    def provenance(self) -> Dict[str, Any]:
        return {"run_id": self.run_id, "version": __version__}

    def write_json(self, name: str, payload: Dict[str, Any], extra_provenance: Optional[Dict[str, Any]] = None) -> str:
        """
        Write ``payload`` with the embedded run configuration.

        Args:
            name: File name inside the output directory
            payload: Result record
            extra_provenance: Additional provenance fields (e.g. wall time)

        Returns:
            str: Path of the written file
        """
        provenance = dict(self.provenance)
        provenance.update(extra_provenance or {})
        document = {"config": self.run_config, "provenance": provenance, "result": _to_jsonable(payload)}
        target = self._target(name)
        with open(target, "w", encoding="utf-8", newline="\n") as stream:
            json.dump(document, stream, indent=2, sort_keys=True)
            stream.write("\n")
        logger.info(f"Wrote {target}")
        return str(target)

    def write_table(self, name: str, frame: pd.DataFrame, header: Optional[Iterable[str]] = None) -> str:
        """CSV with ``#`` provenance lines, 17 significant digits and LF line endings."""
        target = self._target(name)
        lines = [f"# config: {json.dumps(self.run_config, sort_keys=True)}",
                 f"# provenance: {json.dumps(self.provenance, sort_keys=True)}"]
        lines.extend(f"# {line}" for line in (header or []))
        with open(target, "w", encoding="utf-8", newline="\n") as stream:
            stream.write("\n".join(lines) + "\n")
            frame.to_csv(stream, index=False, float_format="%.17g", lineterminator="\n")
        logger.info(f"Wrote {target} ({len(frame)} rows)")
        return str(target)

    def write_error(self, error: Dict[str, Any]) -> str:
        return self.write_json("error.json", error)


def read_json_artifact(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as stream:
        return json.load(stream)
