"""Imperfect receiver-side channel knowledge under pilot-based MMSE estimation.

A link with path gain ``t = r^-alpha`` is estimated with error variance
``1 / (1 + t b)``, where ``b = (N_pilot / K) / (E[J_Cbar] + 1/snr)`` is the
per-BS pilot budget over the mean estimation noise. The estimation error
removes ``sigma^2 g t`` from the useful power of an active link and adds it
to the interference. The analysis keeps the two parts independent and moves
the residual into the Gamma-matched denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from . import fading as fad
from .errors import DomainError
from .gamma_fit import out_cluster_moments
from .laplace import _GL_W, _GL_X, DEFAULT_CAP, compose_power, log_grid
from .specfun import hyp2f1_special

T_SPAN = 40.0


@dataclass(frozen=True)
class CsiContext:
    cluster_size: int
    pilots: float
    pilot_gain: float
    mean_out_cluster: float

    @classmethod
    def build(cls, scn, pilots=None, cluster_size=None):
        K = cluster_size if cluster_size is not None else scn.cluster_size
        n = pilots if pilots is not None else scn.pilots
        if K is None or K < 1:
            raise DomainError("imperfect-CSI analysis needs a fixed cluster size")
        if n is None or not n > 0:
            raise DomainError("pilot count must be positive")
        mean_out = mean_out_cluster_interference(scn)
        return cls(int(K), float(n), (n / K) / (mean_out + 1.0 / scn.snr), mean_out)


def mean_out_cluster_interference(scn):
    return out_cluster_moments(scn)[0]


def mmse_factor(ctx, link_gain):
    """Estimation error variance of a link with path gain ``link_gain``."""
    return 1.0 / (1.0 + np.asarray(link_gain, dtype=float) * ctx.pilot_gain)


def _reach_power(scn, g):
    """min(D^alpha, g/T): the alpha-th power of the radius within which a member with mark g is active."""
    cap = scn.radius**scn.alpha
    if scn.threshold == 0:
        return cap
    return min(cap, g / scn.threshold)


def jcsi_moments(scn, ctx):
    """Mean and variance of the residual interference from estimation errors."""
    b = ctx.pilot_gain
    d = scn.delta
    D2 = scn.radius**2
    K = ctx.cluster_size
    if scn.threshold == 0:
        # every member is active anywhere in the disk
        reach = scn.radius**scn.alpha
        mu = reach**d * hyp2f1_special(1, d, reach / b) / (b * D2)
        m2 = scn.fading.second_moment() * reach**d * hyp2f1_special(2, d, reach / b) / (b * b * D2)
        return K * mu, max(K * (m2 - mu * mu), 0.0)
    brk = [scn.edge_threshold]

    def first(g):
        rho_a = _reach_power(scn, g)
        return g * rho_a**d * hyp2f1_special(1, d, rho_a / b)

    def second(g):
        rho_a = _reach_power(scn, g)
        return g * g * rho_a**d * hyp2f1_special(2, d, rho_a / b)

    mu = fad.expect(scn.fading, first, epsrel=1e-10, breakpoints=brk) / (b * D2)
    m2 = fad.expect(scn.fading, second, epsrel=1e-10, breakpoints=brk) / (b * b * D2)
    return K * mu, max(K * (m2 - mu * mu), 0.0)


# ---------------------------------------------------------------------------
# numerator Laplace transform
# ---------------------------------------------------------------------------

def _t_grid(scn, s):
    lo = -scn.alpha * math.log(scn.radius)
    hi = max(lo, -math.log(s)) + T_SPAN / scn.delta
    return log_grid(lo, hi, (-math.log(s),), 0.25)


class _Kernel:
    """E[g^m e^{-u g}; g >= y] and E[1 - e^{-u g}; g >= y] for the scenario's fading law.

    Continuous laws use a panel grid in log g. Panels entirely above the cut
    log y reuse the shared nodes; the panel holding the cut gets its own
    Gauss-Legendre nodes on the remaining piece, so the indicator costs no
    accuracy.
    """

    def __init__(self, fading):
        self.fading = fading
        if not isinstance(fading, (fad.Exponential, fad.Deterministic)):
            u_lo, u_hi = fading.log_support()
            n_panels = max(1, math.ceil((u_hi - u_lo) / 0.25))
            self.edges = np.linspace(u_lo, u_hi, n_panels + 1)
            half = 0.5 * np.diff(self.edges)
            mid = 0.5 * (self.edges[:-1] + self.edges[1:])
            lg = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
            self.panel = np.repeat(np.arange(n_panels), len(_GL_X))
            self.g = np.exp(lg)
            self.log_g = lg
            self.log_w = self._log_weights(lg, (half[:, None] * _GL_W[None, :]).ravel())

    def _log_weights(self, lg, w):
        with np.errstate(divide="ignore"):
            return np.log(w) + np.log(self.fading.pdf(np.exp(lg))) + lg

    def _split(self, y):
        """Shared-node mask and per-row partial-panel nodes (log g, log weight) for cuts at y."""
        with np.errstate(divide="ignore"):
            cut = np.clip(np.log(y), self.edges[0], self.edges[-1])
        j = np.clip(np.searchsorted(self.edges, cut, side="right") - 1, 0, len(self.edges) - 2)
        mask = self.panel[None, :] > j[:, None]
        top = self.edges[j + 1]
        half = 0.5 * (top - cut)
        lg = (0.5 * (top + cut))[:, None] + half[:, None] * _GL_X[None, :]
        lw = self._log_weights(lg, np.maximum(half, 0.0)[:, None] * _GL_W[None, :])
        return mask, lg, lw

    def log_moments(self, m_max, u, y):
        """Rows m = 1..m_max of log E[g^m e^{-u g}; g >= y] on arrays u, y."""
        out = np.empty((m_max, len(u)))
        if isinstance(self.fading, fad.Exponential):
            # Gamma(m+1, x) = m Gamma(m, x) + x^m e^-x, all terms positive
            x = y * (1.0 + u)
            with np.errstate(divide="ignore"):
                log_x = np.log(x)
            prev = -x
            shrink = np.log1p(u)
            for m in range(1, m_max + 1):
                prev = np.logaddexp(math.log(m) + prev, m * log_x - x)
                out[m - 1] = prev - (m + 1.0) * shrink
            return out
        if isinstance(self.fading, fad.Deterministic):
            out[:] = np.where(y <= 1.0, -u, -np.inf)[None, :]
            return out
        mask, p_lg, p_lw = self._split(y)
        p_g = np.exp(p_lg)
        for m in range(1, m_max + 1):
            full = m * self.log_g[None, :] - u[:, None] * self.g[None, :] + self.log_w[None, :]
            part = m * p_lg - u[:, None] * p_g + p_lw
            out[m - 1] = logsumexp(np.concatenate([np.where(mask, full, -np.inf), part], axis=1), axis=1)
        return out

    def complement(self, u, y):
        """E[1 - e^{-u g}; g >= y]."""
        if isinstance(self.fading, fad.Exponential):
            return np.exp(-y) * (u - np.expm1(-y * u)) / (1.0 + u)
        if isinstance(self.fading, fad.Deterministic):
            return np.where(y <= 1.0, -np.expm1(-u), 0.0)
        mask, p_lg, p_lw = self._split(y)
        full = -np.expm1(-u[:, None] * self.g[None, :]) * np.exp(self.log_w)[None, :]
        part = -np.expm1(-u[:, None] * np.exp(p_lg)) * np.exp(p_lw)
        return np.sum(np.where(mask, full, 0.0), axis=1) + np.sum(part, axis=1)


def _effective_gain(t, b):
    # (1 - sigma^2) t = t^2 / (t + 1/b)
    return t * t / (t + 1.0 / b)


def csi_member_terms(scn, ctx, s, m_max):
    """(1 - phi, [log (-d/ds)^m phi for m = 1..m_max]) for one member's effective useful power."""
    if not s > 0:
        raise DomainError("Laplace argument must be positive")
    kernel = _Kernel(scn.fading)
    lt, w = _t_grid(scn, s)
    t = np.exp(lt)
    v = _effective_gain(t, ctx.pilot_gain)
    u = s * v
    y = scn.threshold / t
    pref = 2.0 / (scn.alpha * scn.radius**2)
    # t^(-1 - 2/alpha) dt = t^(-2/alpha) d(log t)
    log_base = np.log(w) - scn.delta * lt
    comp = pref * float(np.sum(np.exp(log_base) * kernel.complement(u, y)))
    if m_max == 0:
        return min(max(comp, 0.0), 1.0), np.empty(0)
    orders = np.arange(1, m_max + 1)[:, None]
    kern = kernel.log_moments(m_max, u, y)
    logs = math.log(pref) + logsumexp(log_base[None, :] + orders * np.log(v)[None, :] + kern, axis=1)
    return min(max(comp, 0.0), 1.0), logs


def csi_numerator_laplace(scn, ctx, s):
    comp, _ = csi_member_terms(scn, ctx, s, 0)
    return math.exp(ctx.cluster_size * math.log1p(-comp)) if comp < 1 else 0.0


def csi_numerator_laplace_derivatives(scn, ctx, s0, m_max, *, cap=DEFAULT_CAP):
    from .errors import DerivativeCapError
    from .laplace import DerivativeStack

    if m_max > cap:
        raise DerivativeCapError(m_max, cap)
    comp, logs = csi_member_terms(scn, ctx, s0, m_max)
    log_phi = math.log1p(-comp) if comp < 1 else -np.inf
    return DerivativeStack(float(s0), compose_power(log_phi, logs, ctx.cluster_size))


# ---------------------------------------------------------------------------
# spectral efficiency against the cluster size
# ---------------------------------------------------------------------------

def cluster_radius_for(scn, K):
    """Radius whose disk holds K BSs on average."""
    return math.sqrt(K / (scn.density * math.pi))


def avg_se_vs_K(scn, K_range, pilots):
    """E[R] for each cluster size K; ``pilots=None`` gives the perfect-CSI curve.

    The cluster disk grows with K so that it holds K BSs on average, and the
    activation threshold keeps its absolute (linear) value.
    """
    from .sinr import mean_spectral_efficiency

    out = []
    for K in K_range:
        scn_k = scn.with_(cluster_size=int(K), radius=cluster_radius_for(scn, K), pilots=pilots)
        out.append(mean_spectral_efficiency(scn_k))
    return np.array(out)
