"""Unit-mean power fading laws.

Each model exposes what the analysis needs from the fading mark ``g``:
truncated power moments ``E[g^p; g < x]`` (and the upper counterpart), the
distribution function, sampling, and generic expectations ``E[f(g)]``. The
clipped moments that enter the Gamma fit are built from the truncated
moments; :func:`expect` gives an independent quadrature route to the same
numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.special import gammaln, log_ndtr, ndtr, roots_genlaguerre

from . import specfun
from .errors import DomainError, QuadratureError

SIGMA_DB_TO_LN = math.log(10.0) / 10.0


class FadingModel:
    """Base class: a unit-mean distribution of the power fading gain."""

    name = "abstract"

    def second_moment(self):
        raise NotImplementedError

    def moment(self, p):
        """E[g^p]."""
        raise NotImplementedError

    def partial_moment(self, p, x):
        """E[g^p; g < x], vectorized over ``x``."""
        raise NotImplementedError

    def upper_partial_moment(self, p, x):
        """E[g^p; g >= x], vectorized over ``x``."""
        return self.moment(p) - self.partial_moment(p, x)

    def log_partial_moment(self, p, x):
        """log E[g^p; g < x]; -inf where the truncated moment vanishes."""
        with np.errstate(divide="ignore"):
            return np.log(self.partial_moment(p, x))

    def cdf(self, x):
        return self.partial_moment(0.0, x)

    def sf(self, x):
        return self.upper_partial_moment(0.0, x)

    def pdf(self, g):
        raise NotImplementedError

    def sample(self, rng, size=None):
        raise NotImplementedError

    def log_support(self):
        """Interval in log g outside which the density is negligible (< 1e-25 mass)."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    @property
    def is_atomic(self):
        return False


@dataclass(frozen=True)
class Exponential(FadingModel):
    """Rayleigh fading: g ~ Exp(1)."""

    name = "exponential"

    def second_moment(self):
        return 2.0

    def moment(self, p):
        return math.gamma(1.0 + p)

    def partial_moment(self, p, x):
        x = np.asarray(x, dtype=float)
        out = specfun.gamma_lower(1.0 + p, np.maximum(x, 0.0))
        return out

    def upper_partial_moment(self, p, x):
        x = np.asarray(x, dtype=float)
        return specfun.gamma_upper(1.0 + p, np.maximum(x, 0.0))

    def log_partial_moment(self, p, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        out = np.full(x.shape, -np.inf)
        pos = x > 0
        out[pos] = specfun.log_gamma_lower(1.0 + p, x[pos])
        return out if out.ndim else float(out)

    def cdf(self, x):
        return -np.expm1(-np.maximum(np.asarray(x, dtype=float), 0.0))

    def sf(self, x):
        return np.exp(-np.maximum(np.asarray(x, dtype=float), 0.0))

    def pdf(self, g):
        g = np.asarray(g, dtype=float)
        return np.where(g >= 0, np.exp(-np.abs(g)), 0.0)

    def sample(self, rng, size=None):
        return rng.standard_exponential(size)

    def log_support(self):
        return (-60.0, math.log(70.0))

    def to_dict(self):
        return {"type": self.name}


@dataclass(frozen=True)
class Deterministic(FadingModel):
    """No fading: g = 1 with probability one."""

    name = "deterministic"

    def second_moment(self):
        return 1.0

    def moment(self, p):
        return 1.0

    def partial_moment(self, p, x):
        return np.where(np.asarray(x, dtype=float) > 1.0, 1.0, 0.0)

    def upper_partial_moment(self, p, x):
        return np.where(np.asarray(x, dtype=float) > 1.0, 0.0, 1.0)

    def pdf(self, g):
        raise DomainError("deterministic fading has no density")

    def sample(self, rng, size=None):
        return np.ones(size) if size is not None else 1.0

    def log_support(self):
        return (0.0, 0.0)

    def to_dict(self):
        return {"type": self.name}

    @property
    def is_atomic(self):
        return True


@dataclass(frozen=True)
class Lognormal(FadingModel):
    """Mean-normalized lognormal shadowing, ``sigma_db`` is the dB standard deviation."""

    sigma_db: float
    name = "lognormal"

    def __post_init__(self):
        if not self.sigma_db > 0:
            raise DomainError("lognormal sigma_db must be positive")

    @property
    def sigma(self):
        return self.sigma_db * SIGMA_DB_TO_LN

    def second_moment(self):
        return math.exp(self.sigma**2)

    def moment(self, p):
        s = self.sigma
        return math.exp(0.5 * p * (p - 1.0) * s * s)

    def partial_moment(self, p, x):
        s = self.sigma
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(x) + 0.5 * s * s) / s - p * s
        return self.moment(p) * ndtr(z)

    def upper_partial_moment(self, p, x):
        s = self.sigma
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(x) + 0.5 * s * s) / s - p * s
        return self.moment(p) * ndtr(-z)

    def log_partial_moment(self, p, x):
        s = self.sigma
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(x) + 0.5 * s * s) / s - p * s
        return 0.5 * p * (p - 1.0) * s * s + log_ndtr(z)

    def pdf(self, g):
        s = self.sigma
        g = np.asarray(g, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (np.log(g) + 0.5 * s * s) / s
            out = np.exp(-0.5 * z * z) / (g * s * math.sqrt(2.0 * math.pi))
        return np.where(g > 0, out, 0.0)

    def sample(self, rng, size=None):
        s = self.sigma
        return np.exp(s * rng.standard_normal(size) - 0.5 * s * s)

    def log_support(self):
        s = self.sigma
        return (-0.5 * s * s - 11.0 * s, -0.5 * s * s + 11.0 * s)

    def to_dict(self):
        return {"type": self.name, "sigma_db": self.sigma_db}


@dataclass(frozen=True)
class NakagamiLognormal(FadingModel):
    """Composite fading g = G * L, G ~ Gamma(m, 1/m) (Nakagami-m power), L lognormal.

    Functionals of ``g`` are lognormal closed forms mixed over G with a
    generalized Gauss-Laguerre rule adapted to the Gamma(m) weight.
    """

    m_shape: float
    sigma_db: float
    name = "nakagami_lognormal"
    nodes: int = 96

    def __post_init__(self):
        if not self.m_shape >= 0.5:
            raise DomainError("Nakagami shape must be >= 0.5")
        if not self.sigma_db > 0:
            raise DomainError("lognormal sigma_db must be positive")

    @cached_property
    def _shadow(self):
        return Lognormal(self.sigma_db)

    @cached_property
    def _rule(self):
        x, w = roots_genlaguerre(self.nodes, self.m_shape - 1.0)
        # G = x / m with density m^m G^(m-1) e^(-m G) / Gamma(m)
        return x / self.m_shape, w / math.exp(gammaln(self.m_shape))

    def second_moment(self):
        return (1.0 + 1.0 / self.m_shape) * self._shadow.second_moment()

    def moment(self, p):
        m = self.m_shape
        return math.exp(gammaln(m + p) - gammaln(m) - p * math.log(m)) * self._shadow.moment(p)

    def _mix(self, fn, x):
        x = np.asarray(x, dtype=float)
        gvals, w = self._rule
        shape = x.shape
        flat = x.reshape(-1, 1)
        vals = fn(gvals[None, :], flat)
        return (vals @ w).reshape(shape)

    def partial_moment(self, p, x):
        shadow = self._shadow
        return self._mix(lambda gg, xx: gg**p * shadow.partial_moment(p, xx / gg), x)

    def upper_partial_moment(self, p, x):
        shadow = self._shadow
        return self._mix(lambda gg, xx: gg**p * shadow.upper_partial_moment(p, xx / gg), x)

    def pdf(self, g):
        shadow = self._shadow
        g = np.asarray(g, dtype=float)
        return self._mix(lambda gg, xx: shadow.pdf(xx / gg) / gg, g)

    def sample(self, rng, size=None):
        m = self.m_shape
        return rng.gamma(m, 1.0 / m, size) * self._shadow.sample(rng, size)

    def log_support(self):
        lo, hi = self._shadow.log_support()
        m = self.m_shape
        return (lo - 40.0 / m - 5.0, hi + math.log(1.0 + 40.0 / m))

    def to_dict(self):
        return {"type": self.name, "m_shape": self.m_shape, "sigma_db": self.sigma_db}


def from_dict(cfg):
    """Build a model from a ``{"type": ..., ...}`` mapping."""
    cfg = dict(cfg)
    kind = cfg.pop("type", None)
    builders = {
        "exponential": Exponential,
        "deterministic": Deterministic,
        "lognormal": Lognormal,
        "nakagami_lognormal": NakagamiLognormal,
    }
    if kind not in builders:
        raise DomainError(f"unknown fading type {kind!r}")
    try:
        return builders[kind](**cfg)
    except TypeError as exc:
        raise DomainError(f"bad parameters for fading {kind!r}: {exc}") from None


# ---------------------------------------------------------------------------
# expectations
# ---------------------------------------------------------------------------

def expect(model, f, lo=0.0, hi=math.inf, epsrel=1e-10, breakpoints=()):
    """E[f(g); lo <= g < hi] by adaptive quadrature in u = log g.

    Deterministic fading is a point mass and returns f(1) (or 0 outside the
    window). Raises :class:`QuadratureError` carrying the partial value when
    the relative tolerance is not met.
    """
    if model.is_atomic:
        return float(f(1.0)) if lo <= 1.0 < hi else 0.0
    u_lo, u_hi = model.log_support()
    if lo > 0:
        u_lo = max(u_lo, math.log(lo))
    if math.isfinite(hi):
        u_hi = min(u_hi, math.log(hi))
    if u_hi <= u_lo:
        return 0.0
    cuts = sorted({u_lo, u_hi, *(math.log(b) for b in breakpoints if b > 0 and u_lo < math.log(b) < u_hi)})

    def integrand(u):
        g = math.exp(u)
        return f(g) * float(model.pdf(g)) * g

    total = 0.0
    err = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        # further subdivision keeps quad's 21-point rule well inside each bump
        pieces = np.linspace(a, b, max(2, int(math.ceil((b - a) / 2.0)) + 1))
        for p, q in zip(pieces[:-1], pieces[1:]):
            val, e, *rest = integrate.quad(integrand, p, q, epsabs=0.0, epsrel=epsrel, limit=200, full_output=1)
            total += val
            err += e
    if err > max(epsrel * abs(total), 1e-300) * 10:
        raise QuadratureError(f"expectation did not converge (estimate {total}, error {err})", total, err)
    return total


def clipped_moment_1(model, D, T, alpha):
    """E[g * min(D^alpha, g/T)^(2/alpha - 1)]."""
    _check(D, T, alpha)
    if T == 0:
        return D ** (2.0 - alpha)
    edge = T * D**alpha
    delta = 2.0 / alpha
    return float(T ** (1.0 - delta) * model.partial_moment(delta, edge) + D ** (2.0 - alpha) * model.upper_partial_moment(1.0, edge))


def clipped_moment_2(model, D, T, alpha):
    """E[g^2 * min(D^alpha, g/T)^(2/alpha - 2)]."""
    _check(D, T, alpha)
    if T == 0:
        return model.second_moment() * D ** (2.0 - 2.0 * alpha)
    edge = T * D**alpha
    delta = 2.0 / alpha
    return float(T ** (2.0 - delta) * model.partial_moment(delta, edge) + D ** (2.0 - 2.0 * alpha) * model.upper_partial_moment(2.0, edge))


def _check(D, T, alpha):
    if not alpha > 2:
        raise DomainError("path loss exponent must exceed 2")
    if not D > 0:
        raise DomainError("cooperation radius must be positive")
    if not T >= 0:
        raise DomainError("activation threshold must be nonnegative")
