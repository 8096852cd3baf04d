from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from src.config import logger
from src.exceptions import InvalidAlpha


class Variant(str, Enum):
    """Max-type statistic: (non-)studentized, one- or two-sided."""

    NST_ONE_SIDED = "NST_one_sided"
    NST_TWO_SIDED = "NST_two_sided"
    ST_ONE_SIDED = "ST_one_sided"
    ST_TWO_SIDED = "ST_two_sided"

    @property
    def studentized(self) -> bool:
        return self.value.startswith("ST")

    @property
    def two_sided(self) -> bool:
        return self.value.endswith("two_sided")

    @classmethod
    def from_flags(cls, studentized: bool, two_sided: bool = True) -> "Variant":
        prefix = "ST" if studentized else "NST"
        suffix = "two_sided" if two_sided else "one_sided"
        return cls(f"{prefix}_{suffix}")


def check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(alpha)
    return float(alpha)


@dataclass
class BootstrapDistribution:
    """Sorted bootstrap draws of a max-type statistic over a coefficient group."""

    draws: np.ndarray
    variant: Variant
    group: np.ndarray
    seed: int
    kind: str = "multiplier"
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.draws = np.sort(np.asarray(self.draws, dtype=np.float64))
        self.group = np.asarray(self.group, dtype=np.intp)
        self.variant = Variant(self.variant)
        if not np.all(np.isfinite(self.draws)):
            raise ValueError("Bootstrap draws must be finite")

    @property
    def B(self) -> int:
        return int(self.draws.size)

    def critical_value(self, alpha: float) -> float:
        return critical_value(self, alpha)

    def p_value(self, statistic: float) -> float:
        """Fraction of draws at or above ``statistic``."""
        return float(np.mean(self.draws >= statistic))

    def save(self, path: Union[str, Path]) -> str:
        """Write draws and metadata to an ``.npz`` file."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as stream:
            np.savez(stream, draws=self.draws, group=self.group, seed=np.int64(self.seed),
                     variant=np.array(self.variant.value), kind=np.array(self.kind))
        logger.info(f"Saved {self.B} bootstrap draws to {path}")
        return str(path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BootstrapDistribution":
        with np.load(path, allow_pickle=False) as archive:
            return cls(draws=archive["draws"], variant=Variant(str(archive["variant"])),
                       group=archive["group"], seed=int(archive["seed"]), kind=str(archive["kind"]))

    def to_dict(self, one_based: bool = False) -> Dict[str, Any]:
        offset = 1 if one_based else 0
        return {
            "variant": self.variant.value,
            "kind": self.kind,
            "B": self.B,
            "seed": int(self.seed),
            "group_size": int(self.group.size),
            "group": [int(j) + offset for j in self.group],
        }


def critical_value(dist: BootstrapDistribution, alpha: float) -> float:
    """
    Empirical inf-quantile: the ``ceil((1 - alpha) B)``-th smallest draw.

    Args:
        dist: Bootstrap distribution
        alpha: Level in (0, 1)

    Returns:
        float: Smallest draw whose empirical CDF reaches ``1 - alpha``
    """
    alpha = check_alpha(alpha)
    # round first so that e.g. 0.95 * 1000 lands on 950 and not 951
    rank = int(np.ceil(round((1.0 - alpha) * dist.B, 9)))
    rank = min(max(rank, 1), dist.B)
    return float(dist.draws[rank - 1])
