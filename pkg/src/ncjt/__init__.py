"""SINR distribution of non-coherent joint transmission in Poisson networks.

The core is in linear units throughout. dB and per-km^2 conversions live in
:mod:`ncjt.config` and the command line front end.
"""

from .errors import DerivativeCapError, DomainError, NcjtError, QuadratureError
from .fading import Deterministic, Exponential, Lognormal, NakagamiLognormal
from .gamma_fit import GammaFit, fit_scenario
from .scenario import Scenario, db_to_linear, linear_to_db, per_km2
from .sinr import cdf_approx, cdf_bounds, cdf_curve, mean_spectral_efficiency, rate_cdf

__version__ = "0.1.0"

__all__ = [
    "DerivativeCapError",
    "Deterministic",
    "DomainError",
    "Exponential",
    "GammaFit",
    "Lognormal",
    "NakagamiLognormal",
    "NcjtError",
    "QuadratureError",
    "Scenario",
    "cdf_approx",
    "cdf_bounds",
    "cdf_curve",
    "db_to_linear",
    "fit_scenario",
    "linear_to_db",
    "mean_spectral_efficiency",
    "per_km2",
    "rate_cdf",
]
