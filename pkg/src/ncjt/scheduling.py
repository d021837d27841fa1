"""Intra-cluster frequency reuse (FR) against coordinated scheduling (CS).

Under CS the inactive cluster members stay silent, so the only change to the
analysis is that intra-cluster interference drops out of the Gamma fit. The
resource saving ``delta`` is the mean fraction of cluster members that are
not serving the user and can therefore reuse the resource under FR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fading as fad
from .errors import DomainError
from .laplace import active_fraction
from .sinr import CdfCurve, cdf_curve
from .specfun import gamma_lower


@dataclass(frozen=True)
class SchedulingReport:
    delta: float
    fr_curve: CdfCurve
    cs_curve: CdfCurve
    sup_gap: float


def delta_saving(model, alpha, edge_threshold):
    """1 - E[min(1, (g / T~)^(2/alpha))]; independent of density and radius."""
    if not alpha > 2:
        raise DomainError("path loss exponent must exceed 2")
    if not edge_threshold >= 0:
        raise DomainError("edge threshold must be nonnegative")
    if edge_threshold == 0:
        return 0.0
    if math.isinf(edge_threshold):
        return 1.0
    if isinstance(model, fad.Exponential):
        d = 2.0 / alpha
        x = edge_threshold
        return -math.expm1(-x) - x**-d * gamma_lower(1.0 + d, x)
    return 1.0 - active_fraction(model, edge_threshold, alpha)


def compare_fr_cs(scn, betas):
    betas = np.asarray(betas, dtype=float)
    if betas.size == 0:
        raise DomainError("empty threshold grid")
    fr = cdf_curve(scn.with_(scheduling="FR"), betas)
    cs = cdf_curve(scn.with_(scheduling="CS"), betas)
    delta = delta_saving(scn.fading, scn.alpha, scn.edge_threshold)
    return SchedulingReport(delta, fr, cs, float(np.max(fr.approx - cs.approx)))


def empirical_delta(samples):
    """Mean idle fraction over trials with a nonempty cluster: (estimate, standard error, discarded)."""
    n = samples.cluster_count
    keep = n > 0
    ratio = (n[keep] - samples.active_count[keep]) / n[keep]
    if ratio.size < 2:
        raise DomainError("need at least two trials with a nonempty cluster")
    return float(ratio.mean()), float(ratio.std(ddof=1) / math.sqrt(ratio.size)), int((~keep).sum())
