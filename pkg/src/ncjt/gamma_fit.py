"""Gamma moment matching of interference plus noise.

The denominator of the SINR, ``J_C + J_Cbar + 1/snr``, is replaced by a Gamma
variable with the same mean and variance. Moments follow from Campbell's
theorem over the cluster disk (inactive members only) and the PPP outside it.
With a fixed cluster size the inactive members form a binomial process, so
their contribution uses the exact i.i.d.-sum moments instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError
from .fading import clipped_moment_1, clipped_moment_2


@dataclass(frozen=True)
class GammaFit:
    shape: float
    scale: float

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def variance(self):
        return self.shape * self.scale**2


def fit(mean, variance):
    if not (mean > 0 and variance > 0):
        raise DomainError("Gamma fit needs positive mean and variance")
    return GammaFit(shape=mean * mean / variance, scale=variance / mean)


def out_cluster_moments(scn):
    """Mean and variance of the interference from BSs outside the cluster disk."""
    lam, a, D = scn.density, scn.alpha, scn.radius
    mean = 2.0 * math.pi * lam / (a - 2.0) * D ** (2.0 - a)
    var = math.pi * lam / (a - 1.0) * scn.fading.second_moment() * D ** (2.0 - 2.0 * a)
    return mean, var


def inactive_power_moments(scn):
    """First two moments of one inactive member's power, ``E[X 1(X < T)]`` and ``E[X^2 1(X < T)]``.

    The member is uniform in the cluster disk; X = g * r^-alpha.
    """
    a, D, T = scn.alpha, scn.radius, scn.threshold
    if T == 0:
        return 0.0, 0.0
    delta = 2.0 / a
    edge = scn.edge_threshold
    below = scn.fading.partial_moment
    area = D * D
    m1 = 2.0 / (a - 2.0) * (T ** (1.0 - delta) * float(below(delta, edge)) - D ** (2.0 - a) * float(below(1.0, edge)))
    m2 = 1.0 / (a - 1.0) * (T ** (2.0 - delta) * float(below(delta, edge)) - D ** (2.0 - 2.0 * a) * float(below(2.0, edge)))
    return max(m1, 0.0) / area, max(m2, 0.0) / area


def intra_cluster_moments(scn):
    """Mean and variance of J_C; zero under coordinated scheduling."""
    if scn.scheduling == "CS" or scn.threshold == 0:
        return 0.0, 0.0
    m1, m2 = inactive_power_moments(scn)
    if scn.conditional:
        K = scn.cluster_size
        return K * m1, K * max(m2 - m1 * m1, 0.0)
    n = scn.mean_cluster_size
    return n * m1, n * m2


def interference_moments(scn, *, include_csi=True):
    """Mean and variance of J_C + J_Cbar (+ J_CSI) + 1/snr."""
    if scn.scheduling == "FR" and not scn.conditional:
        # single Campbell integral over the whole plane
        pref = 2.0 * math.pi * scn.density / (scn.alpha - 2.0)
        mean = pref * clipped_moment_1(scn.fading, scn.radius, scn.threshold, scn.alpha)
        var = math.pi * scn.density / (scn.alpha - 1.0) * clipped_moment_2(scn.fading, scn.radius, scn.threshold, scn.alpha)
    else:
        mo, vo = out_cluster_moments(scn)
        mi, vi = intra_cluster_moments(scn)
        mean, var = mo + mi, vo + vi
    if include_csi and scn.pilots is not None:
        from .csi import CsiContext, jcsi_moments

        mc, vc = jcsi_moments(scn, CsiContext.build(scn))
        mean, var = mean + mc, var + vc
    return mean + 1.0 / scn.snr, var


@lru_cache(maxsize=512)
def fit_scenario(scn, *, include_csi=True):
    return fit(*interference_moments(scn, include_csi=include_csi))
