"""Grid-based Bayesian inference over the classicalization time.

Posteriors live on a log-uniform grid and are represented by their
natural-log density per unit time, normalized by the trapezoid rule on
the linear axis.  The objective Jeffreys prior is the square root of
the experiment's Fisher information; generic Fisher evaluation uses
Gauss-Legendre quadrature over the outcome space with analytic
parameter derivatives where the model permits and five-point central
differences otherwise.
"""
from __future__ import annotations

import dataclasses
import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import DegeneratePriorError, NumericError
from .likelihood import (
    BecMziConfig,
    CompositeModel,
    NestedMziConfig,
    SingleAtomConfig,
    TalbotLauRun,
    _bec_nome,
    _sa_mean_var,
    _tl_success_profile,
    admissible_length_window,
    effective_dephasing_scale,
    log_likelihood_profile,
    n_observations,
)
from .mmm import MmmParams
from .special import theta3

__all__ = [
    "TauGrid",
    "Posterior",
    "FisherProfile",
    "fisher_information",
    "fisher_curve",
    "jeffreys_prior",
    "jeffreys_single_atom",
    "flat_prior",
    "posterior_update",
    "odds_ratio",
    "quantile",
    "fwhm",
    "hellinger",
    "min_hellinger",
    "HellingerFit",
    "macroscopicity",
    "MacroscopicityResult",
    "SigmaPoint",
    "default_sigma_q_values",
    "convergence_report",
    "ConvergenceReport",
]

_MIN_GRID_SIZE = 200
_FD_REL_STEP = 1e-4


# ---------------------------------------------------------------------------
# Grid and posterior containers


@dataclass(frozen=True)
class TauGrid:
    """Strictly increasing grid of classicalization times in seconds."""

    points: NDArray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < _MIN_GRID_SIZE:
            raise ValueError(f"grid needs at least {_MIN_GRID_SIZE} points")
        if not np.all(np.isfinite(pts)) or pts[0] <= 0.0:
            raise ValueError("grid points must be positive and finite")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("grid points must increase strictly")
        pts.setflags(write=False)

    @classmethod
    def log_spaced(
        cls, tau_min: float = 1e2, tau_max: float = 1e22, n: int = 1200
    ) -> "TauGrid":
        if tau_min <= 0.0 or tau_max <= tau_min:
            raise ValueError("need 0 < tau_min < tau_max")
        return cls(np.geomspace(tau_min, tau_max, n))

    @property
    def size(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class Posterior:
    """Normalized density over a TauGrid, stored as natural-log values."""

    grid: TauGrid
    log_density: NDArray

    def __post_init__(self) -> None:
        ld = np.asarray(self.log_density, dtype=float)
        object.__setattr__(self, "log_density", ld)
        if ld.shape != self.grid.points.shape:
            raise ValueError("log-density must match the grid")
        ld.setflags(write=False)

    @property
    def density(self) -> NDArray:
        return np.exp(self.log_density)

    def cdf_nodes(self) -> NDArray:
        """Trapezoid CDF evaluated at the grid nodes; starts 0, ends 1."""
        p = self.density
        dt = np.diff(self.grid.points)
        inc = 0.5 * (p[1:] + p[:-1]) * dt
        c = np.concatenate([[0.0], np.cumsum(inc)])
        if c[-1] <= 0.0:
            raise NumericError("posterior mass vanished")
        return c / c[-1]


@dataclass(frozen=True)
class FisherProfile:
    """Fisher information evaluated along a TauGrid."""

    grid: TauGrid
    values: NDArray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.grid.points.shape:
            raise ValueError("values must match the grid")
        vals.setflags(write=False)


def _normalized(grid: TauGrid, log_density: NDArray) -> Posterior:
    ld = np.asarray(log_density, dtype=float)
    finite = np.isfinite(ld)
    if not np.any(finite):
        raise NumericError("density underflowed everywhere on the grid")
    peak = float(np.max(ld[finite]))
    w = np.exp(np.where(finite, ld - peak, -np.inf))
    norm = float(np.trapezoid(w, grid.points))
    if not (norm > 0.0 and math.isfinite(norm)):
        raise NumericError("density is not normalizable on the grid")
    return Posterior(grid, ld - peak - math.log(norm))


# ---------------------------------------------------------------------------
# Fisher information


@functools.lru_cache(maxsize=8)
def _leggauss(n: int) -> tuple[NDArray, NDArray]:
    return np.polynomial.legendre.leggauss(n)


def _fd_stencil(fn, tau: NDArray, richardson_tol: float = 0.05):
    """Five-point central derivative of ``fn`` along tau.

    ``fn`` maps a tau array to an array whose leading axis is tau.  The
    relative step is 1e-4; a coarse-step recomputation provides a
    Richardson error estimate and a warning if it looks unconverged.
    The tolerance compares against the largest derivative on the grid,
    so it flags broken derivatives, not percent-level truncation at the
    steepest nodes.
    """
    tau = np.asarray(tau, dtype=float)
    h = _FD_REL_STEP * tau

    def shift(mult: float):
        return fn(tau + mult * h)

    f1m, f1p = shift(-1.0), shift(1.0)
    f2m, f2p = shift(-2.0), shift(2.0)
    f4m, f4p = shift(-4.0), shift(4.0)
    hh = h.reshape(h.shape + (1,) * (f1p.ndim - 1))
    d_fine = (f2m - 8.0 * f1m + 8.0 * f1p - f2p) / (12.0 * hh)
    d_coarse = (f4m - 8.0 * f2m + 8.0 * f2p - f4p) / (24.0 * hh)
    scale = np.max(np.abs(d_fine))
    if scale > 0.0:
        err = np.max(np.abs(d_fine - d_coarse)) / (15.0 * scale)
        if err > richardson_tol:
            warnings.warn(
                f"finite-difference derivative poorly converged (est {err:.2g})",
                stacklevel=3,
            )
    return d_fine


def _fisher_tl(run: TalbotLauRun, tau: NDArray, sigma_q: float) -> NDArray:
    if not run.bins:
        raise ValueError("Fisher information needs the scan design")
    p, dp = _tl_success_profile(run, tau, sigma_q, with_derivative=True)
    totals = np.array([b.n_plus + b.n_minus for b in run.bins])
    return totals @ (dp**2 / (p * (1.0 - p)))


def _fisher_single_atom_quadrature(
    config: SingleAtomConfig, tau: NDArray, sigma_q: float, nodes: int = 128
) -> NDArray:
    """Outcome-space quadrature of the squared score for the Gaussian
    count model; the derivative chain is analytic."""
    if not config.bins:
        raise ValueError("Fisher information needs the bin design")
    tau = np.asarray(tau, dtype=float)
    z, w = _leggauss(nodes)
    out = np.empty(tau.shape)
    for sl in _chunks(tau.size, 128):
        mean, var = _sa_mean_var(config, tau[sl], sigma_q)
        dmean, dvar = _sa_mean_var_derivs(config, tau[sl], sigma_q)
        half = 12.0 * np.sqrt(var)
        x = mean[..., None] + half[..., None] * z  # (chunk, bins, nodes)
        resid = x - mean[..., None]
        v = var[..., None]
        dens = np.exp(-(resid**2) / (2.0 * v)) / np.sqrt(2.0 * math.pi * v)
        score = resid * dmean[..., None] / v + (
            resid**2 / v - 1.0
        ) * dvar[..., None] / (2.0 * v)
        integrand = dens * score**2
        out[sl] = np.sum(integrand @ w * half, axis=1)
    return out


def _sa_mean_var_derivs(
    config: SingleAtomConfig, tau: NDArray, sigma_q: float
) -> tuple[NDArray, NDArray]:
    """Analytic tau derivatives of the per-bin count mean and variance."""
    tau = np.asarray(tau, dtype=float)
    gamma_scaled = effective_dephasing_scale(config, sigma_q)
    damp = np.exp(-gamma_scaled * config.t / (2.0 * tau))[:, None]
    cos_k = np.cos(config.phases())[None, :]
    totals = np.array([b.n_total for b in config.bins])[None, :]
    p = 0.5 - cos_k * damp / 4.0
    dp = -cos_k * damp * gamma_scaled * config.t / (8.0 * tau[:, None] ** 2)
    dmean = totals * dp
    dvar = totals * (1.0 - 2.0 * p) * dp
    return dmean, dvar


def _sa_fisher_closed(
    config: SingleAtomConfig, tau: NDArray, sigma_q: float
) -> NDArray:
    """Closed-form Fisher information of the Gaussian count model.

    For a Gaussian with parameter-dependent mean and variance the
    information is ``mean'**2 / var + var'**2 / (2 var**2)`` per bin.
    """
    if not config.bins:
        raise ValueError("Fisher information needs the bin design")
    mean, var = _sa_mean_var(config, tau, sigma_q)
    dmean, dvar = _sa_mean_var_derivs(config, tau, sigma_q)
    per_bin = dmean**2 / var + dvar**2 / (2.0 * var**2)
    return per_bin.sum(axis=1)


def _fisher_bec(
    config: BecMziConfig, tau: NDArray, sigma_q: float, nodes: int = 256
) -> NDArray:
    """Quadrature over the folded phase variable, which carries the same
    information as the count with a smooth integrand."""
    tau = np.asarray(tau, dtype=float)
    z, w = _leggauss(nodes)
    delta = 0.5 * math.pi * z  # nodes in (-pi/2, pi/2)
    weight = 0.5 * math.pi * w
    gamma_scaled = effective_dephasing_scale(config, sigma_q)

    def dens(tau_arr: NDArray) -> NDArray:
        gamma_t = gamma_scaled / tau_arr * config.interference_time
        nome = _bec_nome(config, gamma_t)[:, None]
        lhs = theta3((delta[None, :] - config.phi) / 2.0, nome)
        rhs = theta3((math.pi - delta[None, :] - config.phi) / 2.0, nome)
        return (lhs + rhs) / (2.0 * math.pi)

    d = _fd_stencil(dens, tau)
    p = dens(tau)
    return _score_quadrature(d, p) @ weight


def _score_quadrature(d: NDArray, p: NDArray) -> NDArray:
    # Where the density underflows to zero so does its derivative, and
    # the squared-score integrand carries no weight there.
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = d**2 / p
    return np.where(p > 0.0, integrand, 0.0)


def _fisher_nested(
    config: NestedMziConfig, tau: NDArray, sigma_q: float, nodes: int = 256
) -> NDArray:
    """Per-shot information times the number of shots; the phase-offset
    invariance of the wrapped density makes every shot identical."""
    shots = len(config.shots)
    if shots == 0:
        raise ValueError("Fisher information needs the shot count")
    tau = np.asarray(tau, dtype=float)
    z, w = _leggauss(nodes)
    phi = math.pi * z
    weight = math.pi * w
    gamma_scaled = effective_dephasing_scale(config, sigma_q)

    def dens(tau_arr: NDArray) -> NDArray:
        gamma_t = gamma_scaled / tau_arr * config.interference_time
        nome = np.exp(-2.0 / config.n_atoms - gamma_t)[:, None]
        return theta3(phi[None, :] / 2.0, nome) / (2.0 * math.pi)

    d = _fd_stencil(dens, tau)
    p = dens(tau)
    return shots * (_score_quadrature(d, p) @ weight)


@functools.singledispatch
def _fisher_profile_raw(model, tau: NDArray, sigma_q: float) -> NDArray:
    raise TypeError(f"unsupported model type {type(model)!r}")


_fisher_profile_raw.register(TalbotLauRun)(_fisher_tl)
_fisher_profile_raw.register(SingleAtomConfig)(_fisher_single_atom_quadrature)
_fisher_profile_raw.register(BecMziConfig)(_fisher_bec)
_fisher_profile_raw.register(NestedMziConfig)(_fisher_nested)


@_fisher_profile_raw.register
def _(model: CompositeModel, tau: NDArray, sigma_q: float) -> NDArray:
    tau = np.asarray(tau, dtype=float)
    total = np.zeros(tau.shape)
    for m in model.models:
        total = total + _fisher_profile_raw(m, tau, sigma_q)
    return total


def fisher_information(model, params: MmmParams) -> float:
    """Fisher information about the classicalization time at ``params``.

    Bernoulli-type models (Talbot-Lau) use their closed form; continuum
    models integrate the squared score over the outcome domain by
    Gauss-Legendre quadrature.
    """
    value = float(
        _fisher_profile_raw(model, np.array([params.tau_e]), params.sigma_q)[0]
    )
    if not math.isfinite(value) or value < 0.0:
        raise NumericError("Fisher information evaluation failed")
    return value


def fisher_curve(model, grid: TauGrid, sigma_q: float) -> FisherProfile:
    """Fisher information along a grid."""
    values = _fisher_profile_raw(model, grid.points, sigma_q)
    if not np.all(np.isfinite(values)) or np.any(values < 0.0):
        raise NumericError("Fisher information evaluation failed on the grid")
    return FisherProfile(grid, values)


# ---------------------------------------------------------------------------
# Priors and posterior updates


def _sqrt_fisher_prior(grid: TauGrid, fisher: NDArray) -> Posterior:
    if float(np.max(fisher)) <= 0.0:
        raise DegeneratePriorError(
            "Fisher information vanishes identically; no objective prior"
        )
    with np.errstate(divide="ignore"):
        ld = 0.5 * np.log(fisher)
    return _normalized(grid, ld)


def jeffreys_prior(model, grid: TauGrid, sigma_q: float) -> Posterior:
    """Objective prior proportional to the square root of the Fisher
    information of the full experiment design."""
    return _sqrt_fisher_prior(grid, fisher_curve(model, grid, sigma_q).values)


def jeffreys_single_atom(
    config: SingleAtomConfig, grid: TauGrid, sigma_q: float
) -> Posterior:
    """Closed-form objective prior for the binned single-atom model.

    Same contract as :func:`jeffreys_prior` but evaluated from the
    analytic Gaussian-model information instead of outcome quadrature.
    """
    fisher = _sa_fisher_closed(config, grid.points, sigma_q)
    if not np.all(np.isfinite(fisher)):
        raise NumericError("Fisher information evaluation failed on the grid")
    return _sqrt_fisher_prior(grid, fisher)


def flat_prior(grid: TauGrid) -> Posterior:
    """Uniform prior density over the grid's linear axis."""
    return _normalized(grid, np.zeros(grid.size))


def posterior_update(prior: Posterior, model, sigma_q: float) -> Posterior:
    """Multiply a prior by the model's likelihood and renormalize.

    A model without recorded data leaves the prior unchanged.
    """
    if n_observations(model) == 0:
        return prior
    ll = log_likelihood_profile(model, prior.grid.points, sigma_q)
    return _normalized(prior.grid, prior.log_density + ll)


# ---------------------------------------------------------------------------
# Posterior functionals


def quantile(post: Posterior, alpha: float) -> float:
    """Inverse of the trapezoid CDF, linear within a grid cell."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    c = post.cdf_nodes()
    pts = post.grid.points
    idx = int(np.searchsorted(c, alpha, side="left"))
    if idx <= 0:
        return float(pts[0])
    if idx >= c.size:
        return float(pts[-1])
    width = c[idx] - c[idx - 1]
    if width <= 0.0:
        return float(pts[idx])
    frac = (alpha - c[idx - 1]) / width
    return float(pts[idx - 1] + frac * (pts[idx] - pts[idx - 1]))


def odds_ratio(post: Posterior, tau_star: float) -> float:
    """Posterior odds of ``tau <= tau_star`` against ``tau > tau_star``."""
    pts = post.grid.points
    if not pts[0] <= tau_star <= pts[-1]:
        raise ValueError("tau_star must lie within the grid")
    c = float(np.interp(tau_star, pts, post.cdf_nodes()))
    if c >= 1.0:
        return math.inf
    return c / (1.0 - c)


def fwhm(post: Posterior) -> float:
    """Full width at half maximum on the linear time axis.

    Uses the outermost crossings of the half-maximum level; if the
    density never drops below the level on one side, the grid edge
    stands in for the crossing and a warning is emitted.
    """
    p = post.density
    pts = post.grid.points
    k = int(np.argmax(p))
    if k == 0 or k == p.size - 1:
        raise NumericError("density is maximal at a grid boundary")
    half = p[k] / 2.0

    above = p >= half
    left = pts[0]
    rising = np.nonzero(~above[:-1] & above[1:])[0]
    if rising.size:
        i = int(rising[0])
        left = _cross(pts[i], pts[i + 1], p[i], p[i + 1], half)
    else:
        warnings.warn("half-maximum level not crossed on the left", stacklevel=2)
    right = pts[-1]
    falling = np.nonzero(above[:-1] & ~above[1:])[0]
    if falling.size:
        j = int(falling[-1])
        right = _cross(pts[j], pts[j + 1], p[j], p[j + 1], half)
    else:
        warnings.warn("half-maximum level not crossed on the right", stacklevel=2)
    return float(right - left)


def _cross(x0: float, x1: float, y0: float, y1: float, level: float) -> float:
    return x0 + (level - y0) / (y1 - y0) * (x1 - x0)


def hellinger(post: Posterior, tau0: float, fisher0: float) -> float:
    """Hellinger distance between the posterior and a Gaussian reference.

    The reference has mean ``tau0`` and variance ``1/fisher0`` and is
    evaluated on the grid without renormalization, so mass it places at
    negative times counts as discrepancy.
    """
    if fisher0 <= 0.0:
        raise ValueError("reference Fisher information must be positive")
    if tau0 <= 0.0:
        raise ValueError("reference location must be positive")
    pts = post.grid.points
    var = 1.0 / fisher0
    log_g = -((pts - tau0) ** 2) / (2.0 * var) - 0.5 * math.log(
        2.0 * math.pi * var
    )
    sq_diff = (np.exp(0.5 * log_g) - np.exp(0.5 * post.log_density)) ** 2
    h2 = 0.5 * float(np.trapezoid(sq_diff, pts))
    return min(math.sqrt(max(h2, 0.0)), 1.0)


@dataclass(frozen=True)
class HellingerFit:
    """Best Gaussian-reference match to a posterior."""

    h_min: float
    tau0: float
    fisher0: float
    at_boundary: bool


def min_hellinger(
    post: Posterior, model, sigma_q: float, coarse: int = 64
) -> HellingerFit:
    """Minimize the Hellinger distance over the reference location.

    A coarse log-spaced scan brackets the minimum, then a golden-section
    refinement narrows the location to a relative 1e-3.  If the scan
    minimum sits on the grid boundary the boundary value is returned
    with ``at_boundary`` set.
    """

    def objective(tau0: float) -> float:
        fisher0 = fisher_information(model, MmmParams(tau0, sigma_q))
        if fisher0 <= 0.0:
            return 1.0
        return hellinger(post, tau0, fisher0)

    pts = post.grid.points
    scan = np.geomspace(pts[0], pts[-1], coarse)
    values = [objective(t) for t in scan]
    k = int(np.argmin(values))
    if k == 0 or k == coarse - 1:
        tau0 = float(scan[k])
        return HellingerFit(values[k], tau0, _safe_fisher(model, tau0, sigma_q), True)

    lo, hi = math.log(scan[k - 1]), math.log(scan[k + 1])
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - inv_phi * (b - a)
    c2 = a + inv_phi * (b - a)
    f1, f2 = objective(math.exp(c1)), objective(math.exp(c2))
    while (b - a) > math.log1p(1e-3):
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - inv_phi * (b - a)
            f1 = objective(math.exp(c1))
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + inv_phi * (b - a)
            f2 = objective(math.exp(c2))
    tau0 = math.exp(0.5 * (a + b))
    return HellingerFit(objective(tau0), tau0, _safe_fisher(model, tau0, sigma_q), False)


def _safe_fisher(model, tau0: float, sigma_q: float) -> float:
    try:
        return fisher_information(model, MmmParams(tau0, sigma_q))
    except NumericError:
        return math.nan


@dataclass(frozen=True)
class ConvergenceReport:
    """Posterior-shape diagnostics for the summary table."""

    fwhm: float
    gaussian_fwhm: float
    h_min: float
    tau0: float
    at_boundary: bool


def convergence_report(post: Posterior, model, sigma_q: float) -> ConvergenceReport:
    """FWHM of the posterior, FWHM of its best Gaussian reference and
    the minimized Hellinger distance."""
    fit = min_hellinger(post, model, sigma_q)
    width = fwhm(post)
    gaussian_width = (
        2.0 * math.sqrt(2.0 * math.log(2.0) / fit.fisher0)
        if fit.fisher0 > 0.0
        else math.nan
    )
    return ConvergenceReport(width, gaussian_width, fit.h_min, fit.tau0, fit.at_boundary)


# ---------------------------------------------------------------------------
# Macroscopicity


@dataclass(frozen=True)
class SigmaPoint:
    """Rejection quantile at one momentum-width setting."""

    sigma_q: float
    tau_m: float
    mu: float
    phi: float | None
    skipped: bool


@dataclass(frozen=True)
class MacroscopicityResult:
    """Maximized macroscopicity with its supporting posterior."""

    mu_m: float
    sigma_q_star: float
    tau_m: float
    phi_star: float | None
    posterior: Posterior
    prior: Posterior
    per_sigma: tuple[SigmaPoint, ...]
    no_update: bool


def default_sigma_q_values(model, n: int = 25) -> NDArray:
    """Log-spaced momentum widths spanning the recorded validity window
    with a small interior margin."""
    lo, hi = admissible_length_window(model)
    if hi / lo > 81.0:
        lo, hi = 3.0 * lo, hi / 3.0
    lengths = np.geomspace(lo, hi, n)
    from .constants import HBAR

    return np.sort(HBAR / lengths)


def _with_phi(model, phi: float):
    if isinstance(model, BecMziConfig):
        return dataclasses.replace(model, phi=phi)
    if isinstance(model, CompositeModel):
        return dataclasses.replace(
            model, models=tuple(_with_phi(m, phi) for m in model.models)
        )
    return model


def _has_phi_nuisance(model) -> bool:
    if isinstance(model, BecMziConfig):
        return True
    if isinstance(model, CompositeModel):
        return any(_has_phi_nuisance(m) for m in model.models)
    return False


def macroscopicity(
    model,
    grid: TauGrid,
    sigma_q_values=None,
    alpha: float = 0.05,
    phi_grid=None,
    use_closed_form_prior: bool = True,
) -> MacroscopicityResult:
    """Macroscopicity reached by the experiment's data.

    For every momentum width the Jeffreys-prior posterior is formed and
    its ``alpha`` rejection quantile extracted; the reported value is
    the base-10 log of the largest quantile in seconds.  BEC models
    carry an unknown working-point phase, scanned on a uniform grid
    (default 256 points) and resolved by maximizing the macroscopicity.

    Momentum widths at which the prior degenerates are skipped with a
    warning; if all fail, the error propagates.
    """
    if sigma_q_values is None:
        sigma_q_values = default_sigma_q_values(model)
    sigma_q_values = np.asarray(sigma_q_values, dtype=float)
    if sigma_q_values.size == 0:
        raise ValueError("need at least one momentum width")
    if phi_grid is None and _has_phi_nuisance(model):
        phi_grid = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)

    no_update = n_observations(model) == 0
    points: list[SigmaPoint] = []
    best: tuple[float, Posterior, Posterior] | None = None
    last_error: Exception | None = None
    for sq in sigma_q_values:
        try:
            tau_m, phi_best, post, prior = _best_quantile_at_sigma(
                model, grid, float(sq), alpha, phi_grid, use_closed_form_prior
            )
        except (NumericError, ValueError) as exc:
            warnings.warn(
                f"skipping sigma_q={sq:g}: {exc}", stacklevel=2
            )
            last_error = exc
            points.append(SigmaPoint(float(sq), math.nan, math.nan, None, True))
            continue
        mu = math.log10(tau_m)
        points.append(SigmaPoint(float(sq), tau_m, mu, phi_best, False))
        if best is None or tau_m > best[0]:
            best = (tau_m, post, prior)
            best_point = points[-1]
    if best is None:
        raise NumericError(
            f"macroscopicity failed at every momentum width: {last_error}"
        )
    return MacroscopicityResult(
        mu_m=best_point.mu,
        sigma_q_star=best_point.sigma_q,
        tau_m=best_point.tau_m,
        phi_star=best_point.phi,
        posterior=best[1],
        prior=best[2],
        per_sigma=tuple(points),
        no_update=no_update,
    )


def _best_quantile_at_sigma(
    model,
    grid: TauGrid,
    sigma_q: float,
    alpha: float,
    phi_grid,
    use_closed_form_prior: bool,
):
    candidates = [None] if phi_grid is None else list(phi_grid)
    best = None
    for phi in candidates:
        variant = model if phi is None else _with_phi(model, float(phi))
        prior = _model_prior(variant, grid, sigma_q, use_closed_form_prior)
        post = posterior_update(prior, variant, sigma_q)
        tau_m = quantile(post, alpha)
        if best is None or tau_m > best[0]:
            best = (tau_m, phi, post, prior)
    tau_m, phi, post, prior = best
    return tau_m, (None if phi is None else float(phi)), post, prior


def _model_prior(
    model, grid: TauGrid, sigma_q: float, use_closed_form: bool
) -> Posterior:
    if use_closed_form and isinstance(model, SingleAtomConfig):
        return jeffreys_single_atom(model, grid, sigma_q)
    return jeffreys_prior(model, grid, sigma_q)


def _chunks(total: int, size: int):
    for start in range(0, total, size):
        yield slice(start, min(start + size, total))
