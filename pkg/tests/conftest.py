import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from ncjt.gamma_fit import fit_scenario
from ncjt.scenario import Scenario, db_to_linear, per_km2


def richardson_derivative(f, x, order, h, levels=4):
    """Derivative of ``f`` at ``x`` from central differences at h, h/2, ... with Richardson extrapolation.

    The central stencil for any order has an error series in even powers of h.
    Works in float or, if ``f`` returns mpmath numbers, in mpmath precision.
    """
    weights = central_weights(order)
    half = len(weights) // 2
    table = []
    for i in range(levels):
        hi = h / 2**i
        vals = [f(x + k * hi) for k in range(-half, half + 1)]
        conv = _converter(vals[0])
        row = [sum(conv(w) * v for w, v in zip(weights, vals)) / hi**order]
        for j in range(1, i + 1):
            fac = 4**j
            row.append((fac * row[j - 1] - table[i - 1][j - 1]) / (fac - 1))
        table.append(row)
    return table[-1][-1]


def _converter(sample):
    if isinstance(sample, mpmath.mpf):
        return lambda q: mpmath.mpf(q.numerator) / q.denominator
    return float


def central_weights(order):
    """Exact weights of the narrowest central stencil for the given derivative order."""
    half = (order + 1) // 2
    offsets = range(-half, half + 1)
    n = 2 * half + 1
    # solve sum_k w_k k^j = order! [j == order] by Gauss-Jordan over the rationals
    rows = [[Fraction(k) ** j for k in offsets] + [Fraction(math.factorial(order) if j == order else 0)] for j in range(n)]
    for c in range(n):
        p = next(r for r in range(c, n) if rows[r][c] != 0)
        rows[c], rows[p] = rows[p], rows[c]
        piv = rows[c][c]
        rows[c] = [v / piv for v in rows[c]]
        for r in range(n):
            if r != c and rows[r][c] != 0:
                fac = rows[r][c]
                rows[r] = [a - fac * b for a, b in zip(rows[r], rows[c])]
    return [rows[i][n] for i in range(n)]


def reference_scenario(alpha=4.5, **kw):
    """14 BS/km^2, 300 m cluster, 0 dB edge threshold, 162 dB transmit SNR; overrides by keyword."""
    kw.setdefault("density", per_km2(14))
    kw.setdefault("snr", db_to_linear(162))
    return Scenario.from_edge_threshold(db_to_linear(kw.pop("edge_db", 0.0)), radius=kw.pop("radius", 300.0), alpha=alpha, **kw)


def integer_shape_scenario(scn, target=None):
    """Copy of ``scn`` whose Gamma shape is exactly an integer, by tuning the transmit SNR.

    Adding noise 1/snr raises the mean and leaves the variance unchanged, so the
    shape can be pushed up to ``ceil(k)``.
    """
    base = fit_scenario(scn)
    target = target or math.ceil(base.shape + 1e-9)
    var = base.variance
    mean_wo_noise = base.mean - 1.0 / scn.snr
    noise = math.sqrt(target * var) - mean_wo_noise
    for _ in range(400):
        cand = scn.with_(snr=1.0 / noise)
        k = fit_scenario(cand).shape
        if k == target:
            return cand
        noise = math.nextafter(noise, math.inf if k < target else -math.inf)
    raise RuntimeError("could not hit an integer shape")


@pytest.fixture
def reference_scn():
    return reference_scenario()
