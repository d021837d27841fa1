"""Laplace transform of the useful (joint) signal power and its derivatives.

Conventions: everything is evaluated at a real positive argument ``s`` and
``F(s) = E[exp(-s P)]``. The stack entry of order m is
``F_m(s) = (-d/ds)^m F(s) = E[P^m exp(-s P)] >= 0``; with that sign
normalization every intermediate quantity is positive and all compositions
run in the log domain.

For one cluster member uniform in the disk of radius D, with received power
X = g r^-alpha counted only when X >= T, the per-member transform is
``phi(s) = E[exp(-s X 1(X >= T))]``. Under a Poisson cluster
``F = exp(-lambda pi D^2 (1 - phi))``; under a fixed cluster size K,
``F = phi^K``. The order-m derivatives of the exponent are

    G_m(s) = (2/alpha) lambda pi s^-(m - 2/alpha)
             * int_{sT}^inf z^(m - 2/alpha - 1) e^-z H(z D^alpha / s) dz,

with ``H(x) = E[g^(2/alpha); g < x]`` (the Fubini-swapped form of the
expectation of an upper incomplete Gamma function). The integral is done by
composite Gauss-Legendre in ``v = log z`` on one grid shared by all orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DerivativeCapError, DomainError
from .specfun import complete_bell_log_from_log, partial_bell_log_table

DEFAULT_CAP = 300

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class DerivativeStack:
    """``log_values[m] = log F_m(eval_point)``; -inf encodes an exact zero."""

    eval_point: float
    log_values: np.ndarray

    def __len__(self):
        return len(self.log_values)

    @property
    def values(self):
        return np.exp(self.log_values)

    @property
    def order(self):
        return len(self.log_values) - 1

    def log_terms(self):
        """log of F_m(s0) s0^m / m!, the normalized series terms."""
        m = np.arange(len(self.log_values))
        with np.errstate(invalid="ignore"):
            out = self.log_values + m * math.log(self.eval_point) - gammaln(m + 1.0)
        return np.where(np.isneginf(self.log_values), -np.inf, out)

    def terms(self):
        return np.exp(self.log_terms())


def log_grid(lo, hi, breaks=(), width=0.25):
    """Composite 16-point Gauss-Legendre nodes and weights on [lo, hi]."""
    if not hi > lo:
        return np.empty(0), np.empty(0)
    cuts = sorted({lo, hi, *(b for b in breaks if lo < b < hi)})
    edges = [np.linspace(a, b, max(1, math.ceil((b - a) / width)) + 1)[:-1] for a, b in zip(cuts[:-1], cuts[1:])]
    edges = np.append(np.concatenate(edges), hi)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    weights = (half[:, None] * _GL_W[None, :]).ravel()
    return nodes, weights


def _check_s(s):
    if not s > 0:
        raise DomainError("Laplace argument must be positive")


def _gain_floor(fading):
    lo, _ = fading.log_support()
    return lo


def log_moment_integrals(scn, s, m_max):
    """log of ``int_{sT}^inf z^(m - 2/alpha - 1) e^-z H(z D^alpha / s) dz`` for m = 1..m_max."""
    _check_s(s)
    if m_max < 1:
        return np.empty(0)
    delta = scn.delta
    orders = np.arange(1, m_max + 1)
    a = orders - delta
    z_t = s * scn.threshold
    if not math.isfinite(z_t):
        return np.full(m_max, -np.inf)
    log_c = math.log(s) - scn.alpha * math.log(scn.radius)
    v_floor = log_c + _gain_floor(scn.fading)
    v_lo = max(math.log(z_t), v_floor) if z_t > 0 else v_floor
    z_ref = max(a[-1], math.exp(v_lo))
    v_hi = math.log(z_ref + 60.0 + 15.0 * math.sqrt(z_ref + 1.0))
    # resolve both the Gamma peak (width ~ 1/sqrt(a)) and the e^-z decay from a far lower limit
    width = min(0.25, 1.5 / math.sqrt(a[-1] + 1.0), 3.0 / math.exp(v_lo))
    breaks = [log_c]
    if z_t > 0:
        breaks.append(math.log(z_t))
    v, w = log_grid(v_lo, v_hi, breaks, width)
    z = np.exp(v)
    base = np.log(w) - z + scn.fading.log_partial_moment(delta, z / math.exp(log_c))
    # dz = z dv, so z^(a-1) dz = z^a dv
    return logsumexp(a[:, None] * v[None, :] + base[None, :], axis=1)


def log_exponent_derivatives(scn, s, m_max, *, per_member=None):
    """log G_m(s) for m = 1..m_max.

    ``per_member`` (default: the scenario's cluster mode) replaces lambda pi by
    D^-2, giving the derivatives ``E[X^m e^{-sX}; X >= T]`` of a single member.
    """
    if per_member is None:
        per_member = scn.conditional
    log_i = log_moment_integrals(scn, s, m_max)
    a = np.arange(1, m_max + 1) - scn.delta
    intensity = scn.radius ** -2 if per_member else scn.density * math.pi
    return math.log(2.0 / scn.alpha * intensity) - a * math.log(s) + log_i


def exponent_derivatives(scn, s, m_max, *, per_member=None):
    if m_max < 1:
        raise DomainError("m_max must be at least 1")
    return np.exp(log_exponent_derivatives(scn, s, m_max, per_member=per_member))


def active_fraction(fading, edge_threshold, alpha):
    """E[min(1, (g / T~)^(2/alpha))]: the mean fraction of the disk in which a member is active."""
    if edge_threshold == 0:
        return 1.0
    delta = 2.0 / alpha
    x = edge_threshold
    return float(fading.sf(x) + x**-delta * fading.partial_moment(delta, x))


def member_complement(scn, s):
    """1 - phi(s) for one cluster member."""
    _check_s(s)
    delta = scn.delta
    fading = scn.fading
    z_t = s * scn.threshold
    if not math.isfinite(z_t):
        return 0.0
    log_c = math.log(s) - scn.alpha * math.log(scn.radius)
    c = math.exp(log_c)

    def covered(z):
        # E[min(1, (g c / z)^delta)]
        x = z / c
        with np.errstate(divide="ignore", over="ignore"):
            return fading.sf(x) + np.exp(-delta * np.log(x) + fading.log_partial_moment(delta, x))

    total = 0.0
    if z_t > 0:
        total += -math.expm1(-z_t) * active_fraction(fading, scn.edge_threshold, scn.alpha)
    v_floor = log_c + _gain_floor(fading)
    z_a = math.exp(v_floor)
    if z_a > z_t:
        # below z_a every member still covers the whole disk
        total += math.exp(-z_t) * -math.expm1(-(z_a - z_t))
    z_lo = max(z_t, z_a)
    v_lo = math.log(z_lo)
    v_hi = math.log(z_lo + 60.0)
    v, w = log_grid(v_lo, v_hi, [log_c], min(0.25, 3.0 / z_lo))
    z = np.exp(v)
    total += float(np.sum(w * z * np.exp(-z) * covered(z)))
    return min(max(total, 0.0), 1.0)


def signal_laplace_conditional(scn, s):
    K = scn.cluster_size
    if K is None:
        raise DomainError("scenario has no fixed cluster size")
    comp = member_complement(scn, s)
    return math.exp(K * math.log1p(-comp)) if comp < 1 else 0.0


def signal_laplace_unconditional(scn, s):
    return math.exp(-scn.mean_cluster_size * member_complement(scn, s))


def signal_laplace(scn, s):
    if scn.conditional:
        return signal_laplace_conditional(scn, s)
    return signal_laplace_unconditional(scn, s)


def compose_unconditional(log_f0, log_g):
    """Stack of exp(-G) from log F and log of the exponent derivatives (complete Bell)."""
    bell = complete_bell_log_from_log(log_g).log_values
    return log_f0 + bell


def compose_power(log_phi, log_phi_derivs, K):
    """Stack of phi^K from log phi and log of (-d/ds)^m phi (partial Bell)."""
    m_max = len(log_phi_derivs)
    out = np.empty(m_max + 1)
    out[0] = K * log_phi
    if m_max == 0:
        return out
    j_max = min(m_max, K)
    table = partial_bell_log_table(log_phi_derivs, m_max, j_max)
    j = np.arange(1, j_max + 1)
    # K (K-1) ... (K-j+1) phi^(K-j)
    with np.errstate(invalid="ignore"):
        coef = gammaln(K + 1.0) - gammaln(K - j + 1.0) + (K - j) * log_phi
    for m in range(1, m_max + 1):
        out[m] = logsumexp(coef[: min(m, K)] + table[m, 1 : min(m, K) + 1])
    return out


def signal_laplace_derivatives(scn, s0, m_max, *, cap=DEFAULT_CAP):
    """DerivativeStack of orders 0..m_max at the evaluation point s0."""
    _check_s(s0)
    if m_max < 0:
        raise DomainError("m_max must be nonnegative")
    if m_max > cap:
        raise DerivativeCapError(m_max, cap)
    comp = member_complement(scn, s0)
    log_g = log_exponent_derivatives(scn, s0, m_max) if m_max else np.empty(0)
    if scn.conditional:
        log_phi = math.log1p(-comp) if comp < 1 else -np.inf
        log_values = compose_power(log_phi, log_g, scn.cluster_size)
    else:
        log_values = compose_unconditional(-scn.mean_cluster_size * comp, log_g)
    return DerivativeStack(float(s0), np.asarray(log_values))
