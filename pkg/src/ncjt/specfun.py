"""Special functions behind the analytical formulas.

Incomplete gamma functions are evaluated with the classic split: a power
series for the lower function when ``x <= a + 1`` and a Lentz continued
fraction for the upper function otherwise, plus a dedicated small-``a``
expansion that avoids cancelling against ``Gamma(a)``. Every routine has a
log-domain variant because the derivative orders used by the CDF series push
``a`` into the hundreds.

All functions accept scalars or numpy arrays (broadcast together) and return
a float for scalar input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError

_EPS = 1e-17
_TINY = 1e-300
_MAX_ITER = 10_000


def _prepare(a, x):
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    scalar = a.ndim == 0 and x.ndim == 0
    a, x = np.broadcast_arrays(a, x)
    if np.any(~(a > 0)):
        raise DomainError("incomplete gamma requires a > 0")
    if np.any(~(x >= 0)):
        raise DomainError("incomplete gamma requires x >= 0")
    return a.ravel().copy(), x.ravel().copy(), a.shape, scalar


def _finish(out, shape, scalar):
    out = out.reshape(shape)
    return float(out) if scalar else out


def _log_lower_series(a, x):
    """log gamma(a, x) by the power series; x > 0."""
    term = np.ones_like(x)
    total = np.ones_like(x)
    active = np.arange(x.size)
    n = 0
    while active.size and n < _MAX_ITER:
        n += 1
        term[active] *= x[active] / (a[active] + n)
        total[active] += term[active]
        done = term[active] < _EPS * total[active]
        active = active[~done]
    return a * np.log(x) - x - np.log(a) + np.log(total)


def _log_upper_cf(a, x):
    """log Gamma(a, x) by the modified Lentz continued fraction; x > 0."""
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / np.where(np.abs(b) < _TINY, _TINY, b)
    h = d.copy()
    active = np.arange(x.size)
    i = 0
    while active.size and i < _MAX_ITER:
        i += 1
        aa = a[active]
        an = -i * (i - aa)
        b[active] += 2.0
        dd = an * d[active] + b[active]
        dd = np.where(np.abs(dd) < _TINY, _TINY, dd)
        cc = b[active] + an / c[active]
        cc = np.where(np.abs(cc) < _TINY, _TINY, cc)
        dd = 1.0 / dd
        delta = dd * cc
        d[active] = dd
        c[active] = cc
        h[active] *= delta
        active = active[np.abs(delta - 1.0) >= _EPS * 4]
    return a * np.log(x) - x + np.log(h)


def _upper_small_a(a, x):
    """Gamma(a, x) for a < 1 and 0 < x <= 1.5 without cancellation against Gamma(a)."""
    log_x = np.log(x)
    head = (np.expm1(gammaln(1.0 + a)) - np.expm1(a * log_x)) / a
    term = np.ones_like(x)
    total = np.zeros_like(x)
    n = 0
    active = np.arange(x.size)
    while active.size and n < _MAX_ITER:
        n += 1
        term[active] *= -x[active] / n
        contrib = term[active] / (a[active] + n)
        total[active] += contrib
        active = active[np.abs(contrib) >= _EPS * np.maximum(np.abs(total[active]), 1e-300)]
    return head - np.exp(a * log_x) * total


def _regions(a, x):
    zero = x == 0
    far = np.isinf(x)
    small_a = (a < 1) & (x <= 1.5) & ~zero
    cf = ((x > a + 1) | ((a < 1) & (x > 1.5))) & ~(zero | far)
    series = ~(zero | far | small_a | cf)
    return zero, far, small_a, cf, series


def log_gamma_upper(a, x):
    """Natural log of the upper incomplete gamma function Gamma(a, x)."""
    a, x, shape, scalar = _prepare(a, x)
    out = np.empty_like(x)
    lg = gammaln(a)
    zero, far, small_a, cf, series = _regions(a, x)
    out[zero] = lg[zero]
    out[far] = -np.inf
    if small_a.any():
        out[small_a] = np.log(_upper_small_a(a[small_a], x[small_a]))
    if cf.any():
        out[cf] = _log_upper_cf(a[cf], x[cf])
    if series.any():
        low = _log_lower_series(a[series], x[series])
        out[series] = lg[series] + np.log1p(-np.exp(low - lg[series]))
    return _finish(out, shape, scalar)


def log_gamma_lower(a, x):
    """Natural log of the lower incomplete gamma function gamma(a, x); -inf at x = 0."""
    a, x, shape, scalar = _prepare(a, x)
    out = np.empty_like(x)
    lg = gammaln(a)
    zero = x == 0
    far = np.isinf(x)
    use_series = ((x <= a + 1) | (x <= 1.5)) & ~zero
    use_cf = ~(zero | far | use_series)
    out[zero] = -np.inf
    out[far] = lg[far]
    if use_series.any():
        out[use_series] = _log_lower_series(a[use_series], x[use_series])
    if use_cf.any():
        up = _log_upper_cf(a[use_cf], x[use_cf])
        out[use_cf] = lg[use_cf] + np.log1p(-np.exp(up - lg[use_cf]))
    return _finish(out, shape, scalar)


def gamma_upper(a, x):
    """Upper incomplete gamma function Gamma(a, x) = int_x^inf t^(a-1) e^-t dt.

    Overflows to ``inf`` once Gamma(a) itself exceeds the double range
    (a above ~171); use :func:`log_gamma_upper` there.
    """
    with np.errstate(over="ignore"):
        out = np.exp(log_gamma_upper(a, x))
    return float(out) if np.ndim(out) == 0 else out


def gamma_lower(a, x):
    """Lower incomplete gamma function gamma(a, x) = Gamma(a) - Gamma(a, x)."""
    with np.errstate(over="ignore"):
        out = np.exp(log_gamma_lower(a, x))
    return float(out) if np.ndim(out) == 0 else out


def gamma_p(a, x):
    """Regularized lower incomplete gamma P(a, x), i.e. the Gamma(a, 1) CDF."""
    lg = gammaln(a)
    out = np.exp(log_gamma_lower(a, x) - lg)
    return float(out) if np.ndim(out) == 0 else out


def gamma_q(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    lg = gammaln(a)
    out = np.exp(log_gamma_upper(a, x) - lg)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Gaussian hypergeometric function, restricted pattern 2F1(a, b; 1 + b; -z)
# ---------------------------------------------------------------------------

def _hyp2f1_pfaff(a, b, z):
    # 2F1(a, b; 1+b; -z) = (1+z)^-a 2F1(a, 1; 1+b; z/(1+z))
    w = z / (1.0 + z)
    term = np.ones_like(z)
    total = np.ones_like(z)
    active = np.arange(z.size)
    n = 0
    while active.size and n < _MAX_ITER:
        term[active] *= (a + n) / (1.0 + b + n) * w[active]
        total[active] += term[active]
        n += 1
        active = active[term[active] >= _EPS * total[active]]
    return total * (1.0 + z) ** (-a)


def _hyp2f1_large(a, b, z):
    # reflection of the integral representation about u = z t, expanded in 1/z
    lead = b * math.pi / math.sin(math.pi * b) * z ** (-b)
    if a == 2:
        lead *= 1.0 - b
    total = np.zeros_like(z)
    power = np.ones_like(z) / z ** a
    active = np.arange(z.size)
    n = 0
    while active.size and n < _MAX_ITER:
        coef = (n + 1.0) if a == 2 else 1.0
        contrib = (-1) ** n * coef * power[active] / (n + a - b)
        total[active] += contrib
        power[active] /= z[active]
        n += 1
        active = active[np.abs(contrib) >= _EPS * np.abs(total[active])]
    return lead - b * total


def hyp2f1_special(a, b, z):
    """Evaluate 2F1(a, b; 1 + b; -z) for a in {1, 2}, 0 < b < 1 and z >= 0.

    This is ``b * int_0^1 t^(b-1) (1 + z t)^(-a) dt``; values lie in (0, 1].
    """
    if a not in (1, 2):
        raise DomainError("hyp2f1_special supports a in {1, 2} only")
    if not 0.0 < b < 1.0:
        raise DomainError("hyp2f1_special requires 0 < b < 1")
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_flat = np.atleast_1d(z_arr).ravel()
    if np.any(~(z_flat >= 0)):
        raise DomainError("hyp2f1_special requires z >= 0")
    out = np.ones_like(z_flat)
    mid = (z_flat > 0) & (z_flat <= 3.0)
    big = z_flat > 3.0
    if mid.any():
        out[mid] = _hyp2f1_pfaff(a, b, z_flat[mid])
    if big.any():
        out[big] = _hyp2f1_large(a, b, z_flat[big])
    return float(out[0]) if scalar else out.reshape(z_arr.shape)


# ---------------------------------------------------------------------------
# Bell polynomials in the log domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BellStack:
    """Natural logs of complete Bell polynomials B_0 .. B_m."""

    log_values: np.ndarray

    def __len__(self):
        return len(self.log_values)

    @property
    def values(self):
        return np.exp(self.log_values)


def _log_binom_row(n):
    k = np.arange(n + 1)
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _check_positive(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError("Bell arguments must be a 1-d sequence")
    if np.any(~(x > 0)):
        raise DomainError("Bell polynomials are implemented for positive arguments only")
    return x


def complete_bell_log_from_log(log_x):
    """Complete Bell polynomials from log-arguments ``log_x[i] = log x_(i+1)``.

    Uses B_(n+1) = sum_k C(n, k) B_(n-k) x_(k+1); every term is positive so the
    log-sum-exp is exact in sign.
    """
    log_x = np.asarray(log_x, dtype=float)
    m = log_x.size
    out = np.empty(m + 1)
    out[0] = 0.0
    for n in range(m):
        k = np.arange(n + 1)
        out[n + 1] = logsumexp(_log_binom_row(n) + out[n - k] + log_x[k])
    return BellStack(out)


def complete_bell_log(x):
    """log B_n(x_1, ..., x_n) for n = 0..len(x), positive arguments."""
    x = _check_positive(x)
    return complete_bell_log_from_log(np.log(x))


def partial_bell_log_table(log_x, n_max, j_max):
    """Table ``T[n, j] = log B_(n,j)(x_1, ...)`` for 0 <= n <= n_max, 0 <= j <= j_max.

    Built from exponential generating functions: B_(n,j)/n! is the t^n
    coefficient of f(t)^j / j! with f(t) = sum_i x_i t^i / i!, so each column is
    a log-domain convolution of the previous one with x_i / i!. Entries that are
    identically zero hold -inf.
    """
    log_x = np.asarray(log_x, dtype=float)
    if log_x.size < n_max:
        raise DomainError("need at least n_max Bell arguments")
    i = np.arange(1, n_max + 1)
    log_a = np.full(n_max + 1, -np.inf)
    log_a[1:] = log_x[:n_max] - gammaln(i + 1.0)
    egf = np.full((n_max + 1, j_max + 1), -np.inf)
    egf[0, 0] = 0.0
    n_idx = np.arange(n_max + 1)[:, None]
    i_idx = np.arange(1, n_max + 1)[None, :]
    prev_pos = n_idx - i_idx
    valid = prev_pos >= 0
    prev_pos = np.where(valid, prev_pos, 0)
    with np.errstate(invalid="ignore"):
        for j in range(1, j_max + 1):
            prev = egf[:, j - 1]
            terms = np.where(valid, log_a[1:][None, :] + prev[prev_pos], -np.inf)
            egf[:, j] = logsumexp(terms, axis=1) - math.log(j)
    return egf + gammaln(np.arange(n_max + 1) + 1.0)[:, None]


def partial_bell_log(x, n, j):
    """log of the partial Bell polynomial B_(n,j)(x_1, ..., x_(n-j+1))."""
    if not 1 <= j <= n:
        raise DomainError("partial Bell polynomial requires 1 <= j <= n")
    x = _check_positive(x)
    if x.size < n - j + 1:
        raise DomainError("partial Bell polynomial needs n - j + 1 arguments")
    log_x = np.full(n, 0.0)
    log_x[: min(n, x.size)] = np.log(x[:n])
    # arguments beyond n - j + 1 never enter B_(n,j); pad with 1
    return float(partial_bell_log_table(log_x, n, j)[n, j])
