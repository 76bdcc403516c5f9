"""Special functions backing the likelihood formulas.

The only nontrivial implementation here is the Jacobi theta function of
the third kind, which the count and phase distributions evaluate across
the full range of dephasing strengths.  Error functions and log-gamma
are delegated to scipy; the module keeps them behind its own names so
the rest of the package has a single import point with domain checks.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray
from scipy import special as _sp

__all__ = ["theta3", "erf", "log_gamma"]

# Nome at which the direct cosine series and the wrapped-Gaussian form
# are equally cheap; below it the series needs at most four terms.
_REGIME_SPLIT = math.exp(-math.pi)

# exp(-(6.5 pi)^2 / pi) ~ 1e-58, so |k| <= 6 images always suffice once
# the argument is reduced to [-pi/2, pi/2].
_MAX_IMAGES = 6


def theta3(u, q):
    """Jacobi theta function of the third kind.

    Evaluates ``sum_n q**(n*n) * exp(2j*n*u)`` for real ``u`` and nome
    ``0 <= q < 1``.  The result is real and ``pi``-periodic in ``u``.

    Parameters
    ----------
    u : float or array_like
        Argument(s); any real value is reduced into a period.
    q : float or array_like
        Nome(s) in ``[0, 1)``; broadcast against ``u``.

    Returns
    -------
    float or ndarray
        Theta values, always nonnegative.

    Notes
    -----
    Two representations are used.  For ``q <= exp(-pi)`` the cosine
    series ``1 + 2*sum_n q**(n*n)*cos(2*n*u)`` is summed until the next
    term falls below ``1e-16`` of the running total.  For larger nomes
    the series converges slowly and the modular (wrapped Gaussian) form

        ``theta3(u, exp(-a)) = sqrt(pi/a) * sum_k exp(-(u - k*pi)**2/a)``

    takes over.  Both branches keep the absolute error below 1e-12 on
    the overlap region.
    """
    u_arr = np.asarray(u, dtype=float)
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr < 0.0) or np.any(q_arr >= 1.0):
        raise ValueError("theta3 nome must lie in [0, 1)")
    u_b, q_b = np.broadcast_arrays(u_arr, q_arr)
    out = np.empty(u_b.shape, dtype=float)
    small = q_b <= _REGIME_SPLIT
    if np.any(small):
        out[small] = _theta3_series(u_b[small], q_b[small])
    if not np.all(small):
        big = ~small
        out[big] = _theta3_wrapped(u_b[big], q_b[big])
    if np.ndim(u) == 0 and np.ndim(q) == 0:
        return float(out)
    return out


def _theta3_series(u: NDArray, q: NDArray) -> NDArray:
    # Direct series; for q <= exp(-pi) at most four terms contribute.
    acc = np.ones_like(u)
    n = 1
    while True:
        term = 2.0 * q ** (n * n)
        if np.all(term < 1e-16 * acc):
            break
        acc += term * np.cos(2.0 * n * u)
        n += 1
    return acc


def _theta3_wrapped(u: NDArray, q: NDArray) -> NDArray:
    a = -np.log(q)
    u_red = u - math.pi * np.round(u / math.pi)
    total = np.zeros_like(u)
    for k in range(-_MAX_IMAGES, _MAX_IMAGES + 1):
        total += np.exp(-((u_red - k * math.pi) ** 2) / a)
    return np.sqrt(math.pi / a) * total


def erf(x):
    """Error function; scalar in, scalar out, arrays pass through."""
    res = _sp.erf(x)
    if np.ndim(x) == 0:
        return float(res)
    return res


def log_gamma(x):
    """Natural log of the gamma function for strictly positive arguments.

    Raises ``ValueError`` on nonpositive input instead of returning the
    analytic continuation, because every caller feeds counts.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("log_gamma requires strictly positive arguments")
    res = _sp.gammaln(x_arr)
    if np.ndim(x) == 0:
        return float(res)
    return res
