"""SINR distribution: truncated Laplace series with a Gamma-matched denominator.

With the denominator replaced by Gamma(k, theta) and ``s0 = 1/(theta beta)``,

    P(SINR <= beta) = E[Q(k, s0 P)],

where Q is the regularized upper incomplete Gamma function. For an integer
shape ``n``, ``E[Q(n, s0 P)] = sum_{m<n} F_m(s0) s0^m / m!`` with ``F_m`` the
sign-normalized Laplace stack of the useful power. Since Q is increasing in
its first argument, truncating at floor(k) and ceil(k) brackets the CDF, and
the approximation interpolates linearly in k between the two sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from . import laplace
from .errors import DomainError, QuadratureError
from .gamma_fit import fit_scenario
from .laplace import DEFAULT_CAP, active_fraction
from .scenario import db_to_linear

DEFAULT_BETA_DB = np.linspace(-15.0, 25.0, 81)
POISSON_MASS = 1.0 - 1e-8


class CdfPoint(NamedTuple):
    lower: float
    approx: float
    upper: float
    gap: float


class TailEstimate(NamedTuple):
    value: float
    truncation: float


@dataclass
class CdfCurve:
    """Probabilities on a grid of linear SINR thresholds.

    For analytic curves ``gap`` holds the order-floor(k) summand, which equals
    ``upper - lower``. Empirical curves carry identical lower/approx/upper.
    """

    grid: np.ndarray
    lower: np.ndarray
    approx: np.ndarray
    upper: np.ndarray
    gap: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def check(self, tol=1e-9):
        lo, ap, up = self.lower, self.approx, self.upper
        if np.any(lo < -tol) or np.any(up > 1 + tol):
            raise DomainError("CDF values outside [0, 1]")
        if np.any(lo > ap + tol) or np.any(ap > up + tol):
            raise DomainError("CDF bounds out of order")
        for name, col in (("lower", lo), ("approx", ap), ("upper", up)):
            if np.any(np.diff(col) < -tol):
                raise DomainError(f"{name} CDF is not nondecreasing")
        if self.gap is not None and np.any(np.abs(up - lo - self.gap) > tol):
            raise DomainError("bound gap differs from the stored summand")
        return self

    def rows(self):
        return zip(self.grid, self.lower, self.approx, self.upper)


def _numerator_stack(scn, s0, m_max, cap):
    if scn.pilots is None:
        return laplace.signal_laplace_derivatives(scn, s0, m_max, cap=cap)
    from .csi import CsiContext, csi_numerator_laplace_derivatives

    return csi_numerator_laplace_derivatives(scn, CsiContext.build(scn), s0, m_max, cap=cap)


def _order_window(shape):
    lo = math.floor(shape)
    hi = math.ceil(shape)
    return lo, hi, shape - lo


def _series_point(scn, beta, gfit, cap):
    k = gfit.shape
    lo, hi, frac = _order_window(k)
    m_max = hi - 1
    if m_max > cap:
        from .errors import DerivativeCapError

        raise DerivativeCapError(m_max, cap)
    stack = _numerator_stack(scn, 1.0 / (gfit.scale * beta), m_max, cap)
    log_t = stack.log_terms()
    lower = float(np.exp(logsumexp(log_t[:lo]))) if lo > 0 else 0.0
    gap = float(np.exp(log_t[lo])) if hi > lo else 0.0
    lower = min(lower, 1.0)
    upper = min(lower + gap, 1.0)
    gap = upper - lower
    return CdfPoint(lower, lower + frac * gap, upper, gap)


def poisson_cluster_weights(mean, mass=POISSON_MASS):
    """(K, P(K)) for K = 0, 1, ... until the cumulative mass reaches ``mass``."""
    ks, ws = [], []
    total = 0.0
    K = 0
    while total < mass:
        w = math.exp(-mean + K * math.log(mean) - math.lgamma(K + 1.0)) if mean > 0 else float(K == 0)
        ks.append(K)
        ws.append(w)
        total += w
        K += 1
        if K > mean + 50.0 * math.sqrt(mean + 1.0) + 50:
            break
    return ks, ws


def cdf_point(scn, beta, *, cap=DEFAULT_CAP):
    """Lower bound, approximation, upper bound and bound gap at one threshold."""
    if not beta > 0:
        raise DomainError("SINR threshold must be positive")
    if math.isinf(scn.threshold):
        # no member can serve; the interference fit is moot
        return CdfPoint(1.0, 1.0, 1.0, 0.0)
    if scn.pilots is not None and not scn.conditional:
        acc = np.zeros(4)
        for K, w in zip(*poisson_cluster_weights(scn.mean_cluster_size)):
            if K == 0:
                acc += w * np.array([1.0, 1.0, 1.0, 0.0])
            else:
                acc += w * np.array(cdf_point(scn.with_(cluster_size=K), beta, cap=cap))
        acc[:3] = np.minimum(acc[:3], 1.0)
        return CdfPoint(*map(float, acc))
    return _series_point(scn, beta, fit_scenario(scn), cap)


def cdf_bounds(scn, beta, *, cap=DEFAULT_CAP):
    p = cdf_point(scn, beta, cap=cap)
    return p.lower, p.upper


def cdf_approx(scn, beta, *, cap=DEFAULT_CAP):
    return cdf_point(scn, beta, cap=cap).approx


def cdf_curve(scn, betas=None, *, cap=DEFAULT_CAP):
    """Analytic CdfCurve on a grid of linear thresholds (default -15..25 dB, 81 points)."""
    betas = db_to_linear(DEFAULT_BETA_DB) if betas is None else np.asarray(betas, dtype=float)
    pts = [cdf_point(scn, b, cap=cap) for b in betas]
    lower, approx, upper, gap = (np.array(col) for col in zip(*pts))
    meta = {"kind": "analytic", "scenario": scn.digest()}
    if scn.pilots is None or scn.conditional:
        g = fit_scenario(scn)
        meta.update(shape=g.shape, scale=g.scale)
    return CdfCurve(betas, lower, approx, upper, gap, meta).check()


def cdf_tail_remainder(scn, beta, m_hi, *, cap=DEFAULT_CAP):
    """``1 - sum_{ceil(k) <= m < m_hi}`` of the series terms, plus the truncation bound.

    The terms sum to one over all m, so the reported ``truncation`` (the mass
    not reached by orders below ``m_hi``) bounds the distance to the full
    complement; it shrinks monotonically as ``m_hi`` grows.
    """
    if scn.pilots is not None and not scn.conditional:
        raise DomainError("tail remainder needs a fixed cluster size under imperfect CSI")
    gfit = fit_scenario(scn)
    start = math.ceil(gfit.shape)
    if m_hi < start:
        raise DomainError("m_hi must be at least ceil(k)")
    if m_hi - 1 > cap:
        from .errors import DerivativeCapError

        raise DerivativeCapError(m_hi - 1, cap)
    if m_hi == start:
        stack_terms = np.exp(
            _numerator_stack(scn, 1.0 / (gfit.scale * beta), m_hi - 1, cap).log_terms()
        ) if m_hi > 0 else np.empty(0)
        return TailEstimate(1.0, max(0.0, 1.0 - float(np.sum(stack_terms))))
    terms = np.exp(_numerator_stack(scn, 1.0 / (gfit.scale * beta), m_hi - 1, cap).log_terms())
    tail = float(np.sum(terms[start:]))
    return TailEstimate(max(0.0, 1.0 - tail), max(0.0, 1.0 - float(np.sum(terms))))


def outage_atom(scn):
    """P(P = 0): probability that no cluster member is active."""
    covered = active_fraction(scn.fading, scn.edge_threshold, scn.alpha)
    if scn.conditional:
        return (1.0 - covered) ** scn.cluster_size
    return math.exp(-scn.mean_cluster_size * covered)


def rate_cdf(scn, tau, *, cap=DEFAULT_CAP):
    """P(log2(1 + SINR) <= tau); tau = 0 gives the atom at zero useful power."""
    if tau < 0:
        raise DomainError("rate threshold must be nonnegative")
    if tau == 0:
        return outage_atom(scn)
    return cdf_approx(scn, math.expm1(tau * math.log(2.0)), cap=cap)


def mean_spectral_efficiency(scn, *, cap=DEFAULT_CAP, tail=1e-6, epsabs=1e-4):
    """E[log2(1 + SINR)] by integrating the complementary rate CDF."""

    def ccdf(tau):
        return 1.0 - rate_cdf(scn, tau, cap=cap)

    tau_max = 8.0
    while ccdf(tau_max) >= tail:
        tau_max += 8.0
        if tau_max > 1024:
            raise QuadratureError("rate CDF does not reach its tail level", None, None)
    if ccdf(0.0) < tail:
        return 0.0
    val, err, info = integrate.quad(ccdf, 0.0, tau_max, epsabs=epsabs, epsrel=0.0, limit=200, full_output=1)[:3]
    if err > epsabs:
        raise QuadratureError(f"spectral efficiency integral did not converge ({val} +- {err})", val, err)
    return val
