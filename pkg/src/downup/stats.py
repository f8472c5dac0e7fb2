"""Total variation, chi-square with cell pooling, autocorrelation time."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.stats import chi2 as _chi2

__all__ = [
    "tv_distance",
    "chi_square_test",
    "integrated_autocorrelation_time",
    "fit_power_law",
]

POOL_THRESHOLD = 5.0


def tv_distance(p: dict, q: dict):
    """1/2 sum over outcomes of |p - q|; inputs are outcome -> mass maps.

    Count maps are normalised first.  Exact if both sides are rational.
    """
    p = _normalise(p)
    q = _normalise(q)
    keys = set(p) | set(q)
    zero = 0
    total = sum(abs(p.get(k, zero) - q.get(k, zero)) for k in keys)
    return total / 2


def _normalise(d: dict) -> dict:
    total = sum(d.values())
    if total == 0:
        raise ValueError("empty distribution")
    if isinstance(total, int):
        total = Fraction(total)
    return {k: v / total for k, v in d.items()}


def chi_square_test(observed: dict, reference: dict, pool_below: float = POOL_THRESHOLD):
    """Goodness of fit of observed counts against a reference law.

    ``reference`` maps outcomes to probabilities (or to counts, which are
    normalised).  Cells with expected count below ``pool_below`` are pooled
    into a single cell, together with all reference mass never observed.
    Returns a dict with the statistic, degrees of freedom and p-value.
    """
    n = sum(observed.values())
    if n <= 0:
        raise ValueError("no observations")
    ref = {k: float(v) for k, v in _normalise(reference).items()}
    leftover_mass = 1.0 - sum(ref.get(k, 0.0) for k in observed)
    cells = []
    pooled_obs, pooled_exp = 0.0, max(leftover_mass, 0.0) * n
    for k, c in observed.items():
        e = ref.get(k, 0.0) * n
        if e < pool_below:
            pooled_obs += c
            pooled_exp += e
        else:
            cells.append((c, e))
    if pooled_exp > 0:
        cells.append((pooled_obs, pooled_exp))
    elif pooled_obs > 0:
        # observed outcomes the reference assigns zero mass: infinite statistic
        return {"chi2": math.inf, "dof": max(len(cells) - 1, 1), "p": 0.0}
    if len(cells) < 2:
        return {"chi2": 0.0, "dof": 0, "p": 1.0}
    stat = sum((c - e) ** 2 / e for c, e in cells)
    dof = len(cells) - 1
    return {"chi2": stat, "dof": dof, "p": float(_chi2.sf(stat, dof))}


def integrated_autocorrelation_time(series, max_lag: int | None = None) -> float:
    """Integrated autocorrelation time 1 + 2 sum rho(t).

    Uses Geyer's initial positive sequence rule: lag pairs are summed while
    the pairwise sums stay positive.  Returns a value in units of the
    series' sampling interval (>= 1 for an uncorrelated series).
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 4:
        raise ValueError("series too short")
    x = x - x.mean()
    var = float(np.dot(x, x)) / n
    if var == 0:
        return 1.0
    if max_lag is None:
        max_lag = n // 2
    # FFT autocovariance
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, m)
    acov = np.fft.irfft(f * np.conjugate(f), m)[: max_lag + 1] / n
    rho = acov / acov[0]
    tau = 1.0
    t = 1
    while t + 1 <= max_lag:
        pair = rho[t] + rho[t + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
        t += 2
    return float(tau)


def fit_power_law(xs, ys) -> tuple[float, float]:
    """Least-squares fit of log y = a log x + b; returns (exponent, prefactor)."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    a, b = np.polyfit(lx, ly, 1)
    return float(a), float(math.exp(b))
