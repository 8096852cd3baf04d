from typing import Iterable, Optional

import numpy as np

from src.bootstrap.distribution import BootstrapDistribution, Variant
from src.bootstrap.multiplier import MultiplierBootstrap
from src.utils.groups import as_group

from .estimator import GlmDesparsifiedFit


def glm_bootstrap(fit: GlmDesparsifiedFit, group: Optional[Iterable[int]], B: Optional[int] = None,
                  seed: int = 0, studentized: bool = False,
                  threads: Optional[int] = None) -> BootstrapDistribution:
    """
    Two-sided multiplier bootstrap with per-observation scores ``(Theta_j^T x_i) L'(y_i, x_i^T beta_hat) e_i``.

    Args:
        fit: De-biased convex-loss fit
        group: Coefficient indices (None for all)
        B: Number of draws
        seed: Stream seed
        studentized: Divide by ``sqrt(w_jj)``

    Returns:
        BootstrapDistribution
    """
    group = as_group(group, fit.p)
    engine = MultiplierBootstrap(fit.bootstrap_scores(group), omega_diag=np.asarray(fit.w_diag)[group],
                                 B=B, seed=seed, threads=threads)
    dist = engine.distribution(None, Variant.from_flags(studentized, two_sided=True))
    dist.group = group
    dist.metadata["loss"] = "glm"
    return dist
