"""Experiment models and their likelihoods.

Four experiment families are supported:

* Talbot-Lau interferometers with blocked-count (fair-sampling)
  detection, in stationary or pulsed scanning mode;
* single-shot BEC Mach-Zehnder interferometers read out by the atom
  number in one port;
* nested (branch-resolving) Mach-Zehnder interferometers read out by a
  relative phase per shot;
* repeated single-atom Mach-Zehnder runs with binned port counts and
  optional dark-count noise.

Each family is a frozen dataclass carrying geometry, working point and
count data; module functions evaluate signals, densities and
log-likelihoods, plus vectorized profiles over a classicalization-time
grid which the inference layer consumes.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .constants import ELECTRON_MASS, HBAR, MIN_COHERENCE_LENGTH
from .errors import DataInconsistencyError, NumericError
from .mmm import (
    MmmParams,
    ParticleSpec,
    _visibility_bracket,
    arm_separation,
    dephasing_knee_length,
    scaled_dephasing_rate,
    talbot_time,
    visibility_ratio,
)
from .special import log_gamma, theta3

__all__ = [
    "CountBin",
    "VelocityBin",
    "TalbotLauRun",
    "BecMziConfig",
    "NestedMziConfig",
    "SingleAtomBin",
    "SingleAtomConfig",
    "CompositeModel",
    "infer_blocked_stationary",
    "infer_blocked_pulsed",
    "tl_signal",
    "loglik_talbot_lau",
    "binomial_count_pmf",
    "dephased_count_pmf",
    "bec_count_pdf",
    "bec_density_grid",
    "branch_phase_pdf",
    "phase_diff_pdf",
    "loglik_bec",
    "loglik_nested",
    "loglik_single_atom",
    "log_likelihood",
    "log_likelihood_profile",
    "n_observations",
    "admissible_length_window",
    "effective_dephasing_scale",
]

BEC_GRID_SIZE = 4096


# ---------------------------------------------------------------------------
# Experiment configurations


@dataclass(frozen=True)
class CountBin:
    """One scan position of a Talbot-Lau run.

    ``n_minus`` is the inferred blocked count and may be non-integral
    for pulsed-mode bookkeeping.
    """

    x_s: float
    n_plus: float
    n_minus: float

    def __post_init__(self) -> None:
        if self.n_plus < 0.0 or self.n_minus < 0.0:
            raise ValueError("counts must be nonnegative")


@dataclass(frozen=True)
class VelocityBin:
    """Velocity class of a Talbot-Lau run: weight, flight time, base visibility."""

    weight: float
    time_of_flight: float
    base_visibility: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("velocity weight must lie in [0, 1]")
        if self.time_of_flight <= 0.0:
            raise ValueError("time of flight must be positive")
        if not 0.0 < self.base_visibility <= 1.0:
            raise ValueError("base visibility must lie in (0, 1]")


@dataclass(frozen=True)
class TalbotLauRun:
    """Talbot-Lau interferometer run at one laser power.

    The base visibilities and the alignment offset ``delta_x_offset``
    are inputs taken from the configuration, never fitted here.
    """

    particle: ParticleSpec
    grating_period: float
    f1: float
    f3: float
    delta_x_offset: float
    velocity_bins: tuple[VelocityBin, ...]
    bins: tuple[CountBin, ...]
    mode: str = "stationary"
    label: str = ""

    def __post_init__(self) -> None:
        if self.grating_period <= 0.0:
            raise ValueError("grating period must be positive")
        for f in (self.f1, self.f3):
            if not 0.0 < f < 1.0:
                raise ValueError("open fractions must lie in (0, 1)")
        if self.mode not in ("stationary", "pulsed"):
            raise ValueError("mode must be 'stationary' or 'pulsed'")
        if not self.velocity_bins:
            raise ValueError("at least one velocity bin is required")
        total = sum(b.weight for b in self.velocity_bins)
        if abs(total - 1.0) > 1e-9:
            raise ValueError("velocity-bin weights must sum to 1")


@dataclass(frozen=True)
class BecMziConfig:
    """Single-BEC Mach-Zehnder runs read out by one-port atom counts."""

    particle: ParticleSpec
    n_atoms: int
    delta_p: float
    separation_time: float
    interference_time: float
    w_x: float
    w_y: float
    phi: float
    shots: tuple[float, ...] = ()
    plateau_extension: bool = True
    label: str = ""

    def __post_init__(self) -> None:
        if self.n_atoms < 2:
            raise ValueError("need at least two atoms")
        if self.n_atoms < 100:
            warnings.warn(
                "atom numbers below 100 strain the continuum count density",
                stacklevel=2,
            )
        for name in ("delta_p", "separation_time", "interference_time"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.w_x < 0.0 or self.w_y < 0.0:
            raise ValueError("wave-packet widths must be nonnegative")
        for s in self.shots:
            if not 0.0 <= s <= self.n_atoms:
                raise ValueError("shot counts must lie in [0, n_atoms]")

    def arm_sep(self) -> float:
        return arm_separation(
            self.delta_p, self.separation_time, self.particle.mass
        )


@dataclass(frozen=True)
class NestedMziConfig:
    """Nested Mach-Zehnder runs read out by a branch phase difference."""

    particle: ParticleSpec
    n_atoms: int
    delta_p_inner: float
    interference_time: float
    w_x: float
    w_y: float
    shots: tuple[float, ...] = ()
    delta_phi_true: tuple[float, ...] = ()
    plateau_extension: bool = True
    label: str = ""

    def __post_init__(self) -> None:
        if self.n_atoms < 2:
            raise ValueError("need at least two atoms")
        if self.n_atoms < 100:
            warnings.warn(
                "atom numbers below 100 strain the phase density",
                stacklevel=2,
            )
        if self.delta_p_inner <= 0.0 or self.interference_time <= 0.0:
            raise ValueError("momentum splitting and time must be positive")
        if self.w_x < 0.0 or self.w_y < 0.0:
            raise ValueError("wave-packet widths must be nonnegative")
        if len(self.shots) != len(self.delta_phi_true):
            raise ValueError("each shot needs a matching working-point phase")
        for s in self.shots:
            if not -math.pi <= s <= math.pi:
                raise ValueError("phase shots must lie in [-pi, pi]")

    def arm_sep(self) -> float:
        return arm_separation(
            self.delta_p_inner, self.interference_time, self.particle.mass
        )


@dataclass(frozen=True)
class SingleAtomBin:
    """One time bin of a repeated single-atom run."""

    k: int
    n_total: float
    n_a: float

    def __post_init__(self) -> None:
        if self.n_total <= 0.0:
            raise ValueError("bin atom number must be positive")
        if not 0.0 <= self.n_a <= self.n_total:
            raise ValueError("port counts must lie in [0, n_total]")


@dataclass(frozen=True)
class SingleAtomConfig:
    """Binned single-atom Mach-Zehnder runs with dark-count noise."""

    particle: ParticleSpec
    omega: float
    t: float
    delta_t: float
    sigma_dark: float
    delta_x: float
    w_x: float
    w_y: float
    bins: tuple[SingleAtomBin, ...] = ()
    plateau_extension: bool = True
    label: str = ""

    def __post_init__(self) -> None:
        if self.omega <= 0.0 or self.t <= 0.0 or self.delta_t <= 0.0:
            raise ValueError("omega, t and delta_t must be positive")
        if self.sigma_dark < 0.0:
            raise ValueError("sigma_dark must be nonnegative")
        if self.delta_x <= 0.0:
            raise ValueError("arm separation must be positive")
        if self.w_x < 0.0 or self.w_y < 0.0:
            raise ValueError("wave-packet widths must be nonnegative")

    def arm_sep(self) -> float:
        return self.delta_x

    def phases(self) -> NDArray:
        ks = np.array([b.k for b in self.bins], dtype=float)
        return self.omega * (self.t + ks * self.delta_t)


@dataclass(frozen=True)
class CompositeModel:
    """Several independent runs analyzed jointly."""

    models: tuple = field(default_factory=tuple)
    label: str = ""

    def __post_init__(self) -> None:
        if not self.models:
            raise ValueError("composite model needs at least one member")


# ---------------------------------------------------------------------------
# Blocked-count bookkeeping


def infer_blocked_stationary(
    positions: NDArray, n_plus: NDArray, n_periods: int, f3: float
) -> tuple[CountBin, ...]:
    """Reconstruct blocked counts for a stationary scan.

    Fair sampling fixes the number of molecules per scan position at
    ``N_tot / (M * f3)`` with ``M`` the number of positions spanning the
    full scan, so the blocked count is that total minus the transmitted
    count.

    Raises
    ------
    DataInconsistencyError
        If any inferred blocked count comes out negative.
    """
    positions = np.asarray(positions, dtype=float)
    n_plus = np.asarray(n_plus, dtype=float)
    if positions.shape != n_plus.shape:
        raise ValueError("positions and counts must align")
    if n_periods != positions.size:
        raise ValueError("scan-position count must match the stated span")
    if np.any(n_plus < 0.0):
        raise DataInconsistencyError("negative transmitted counts")
    per_position = float(np.sum(n_plus)) / (n_periods * f3)
    out = []
    for x, np_i in zip(positions, n_plus):
        n_minus = per_position - float(np_i)
        if n_minus < 0.0:
            raise DataInconsistencyError(
                f"blocked count at x_s={x:g} is negative ({n_minus:g})"
            )
        out.append(CountBin(float(x), float(np_i), n_minus))
    return tuple(out)


def infer_blocked_pulsed(n_plus: float, n_zero: float, f3: float) -> float:
    """Blocked count ``n_zero / f3 - n_plus`` for one pulsed window."""
    if n_plus < 0.0 or n_zero < 0.0:
        raise DataInconsistencyError("negative counts")
    n_minus = n_zero / f3 - n_plus
    if n_minus < 0.0:
        raise DataInconsistencyError(
            f"blocked count is negative ({n_minus:g}); "
            "reference window undercounts the transmitted molecules"
        )
    return n_minus


# ---------------------------------------------------------------------------
# Talbot-Lau signal and likelihood


def tl_signal(x_s: float, params: MmmParams, run: TalbotLauRun) -> float:
    """Mean detection signal at scan position ``x_s``.

    Velocity-averaged sinusoid ``f1*f3*(1 + V*sin(2*pi*(x_s+dx)/d))``
    with the visibility reduced by the modification.
    """
    v_eff = 0.0
    for b in run.velocity_bins:
        v_eff += (
            b.weight
            * b.base_visibility
            * visibility_ratio(
                params, run.particle.mass, run.grating_period, b.time_of_flight
            )
        )
    if v_eff > 1.0:
        raise NumericError("effective visibility exceeds 1")
    phase = 2.0 * math.pi * (x_s + run.delta_x_offset) / run.grating_period
    return run.f1 * run.f3 * (1.0 + v_eff * math.sin(phase))


def _tl_success_profile(
    run: TalbotLauRun, tau: NDArray, sigma_q: float, with_derivative: bool = False
):
    """Pass probabilities ``p_b(tau)`` for every bin, optionally with
    their analytic tau derivatives.  Shapes are ``(n_bins, n_tau)``."""
    mass = run.particle.mass
    t_talbot = talbot_time(mass, run.grating_period)
    tau = np.asarray(tau, dtype=float)
    coeffs = np.array([b.weight * b.base_visibility for b in run.velocity_bins])
    betas = np.array(
        [
            2.0
            * b.time_of_flight
            * mass**2
            / ELECTRON_MASS**2
            * _visibility_bracket(
                run.grating_period
                * sigma_q
                * b.time_of_flight
                / (HBAR * t_talbot)
            )
            for b in run.velocity_bins
        ]
    )
    decays = np.exp(-betas[:, None] / tau[None, :])
    v_eff = coeffs @ decays  # (n_tau,)
    if np.any(v_eff > 1.0):
        raise NumericError("effective visibility exceeds 1")
    x = np.array([b.x_s for b in run.bins])
    sines = np.sin(
        2.0 * math.pi * (x + run.delta_x_offset) / run.grating_period
    )
    p = run.f3 * (1.0 + sines[:, None] * v_eff[None, :])
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise NumericError("pass probability left (0, 1); check f3 and V0")
    if not with_derivative:
        return p, None
    dv = (coeffs[:, None] * decays * betas[:, None]).sum(axis=0) / tau**2
    dp = run.f3 * sines[:, None] * dv[None, :]
    return p, dp


def loglik_talbot_lau(run: TalbotLauRun, params: MmmParams) -> float:
    """Log-likelihood of the blocked-count data of one run."""
    if not run.bins:
        return 0.0
    ll = _tl_loglik_profile(run, np.array([params.tau_e]), params.sigma_q)
    return float(ll[0])


def _tl_loglik_profile(
    run: TalbotLauRun, tau: NDArray, sigma_q: float
) -> NDArray:
    if not run.bins:
        return np.zeros(np.asarray(tau, dtype=float).shape)
    p, _ = _tl_success_profile(run, tau, sigma_q)
    n_plus = np.array([b.n_plus for b in run.bins])
    n_minus = np.array([b.n_minus for b in run.bins])
    return n_plus @ np.log(p) + n_minus @ np.log1p(-p)


# ---------------------------------------------------------------------------
# Count distributions


def binomial_count_pmf(n_a, n_atoms: int, phi: float):
    """Probability of ``n_a`` atoms in one port of an undephased
    ``n_atoms``-atom interferometer at phase ``phi``.

    Evaluated in log space so that atom numbers up to 1e4 sum to one at
    full double precision.
    """
    n_a = np.asarray(n_a)
    if np.any(n_a != np.round(n_a)):
        raise ValueError("counts must be integers")
    n = n_a.astype(float)
    if np.any(n < 0) or np.any(n > n_atoms):
        raise ValueError("counts must lie in [0, n_atoms]")
    c2 = math.cos(phi / 2.0) ** 2
    s2 = math.sin(phi / 2.0) ** 2
    log_choose = (
        log_gamma(n_atoms + 1.0) - log_gamma(n + 1.0) - log_gamma(n_atoms - n + 1.0)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = (
            log_choose
            + n * np.log(c2 if c2 > 0.0 else 0.0)
            + (n_atoms - n) * np.log(s2 if s2 > 0.0 else 0.0)
        )
    # 0 * log(0) corners: a vanishing amplitude contributes only when
    # its exponent is zero.
    log_p = np.where(np.isnan(log_p), -np.inf, log_p)
    if c2 == 0.0:
        log_p = np.where(n == 0.0, (n_atoms - n) * math.log(s2), log_p)
    if s2 == 0.0:
        log_p = np.where(n == n_atoms, n * math.log(c2), log_p)
    out = np.exp(log_p)
    if np.ndim(n_a) == 0:
        return float(out)
    return out


def dephased_count_pmf(n_a, n_atoms: int):
    """Port-count probability after complete dephasing.

    The discrete arcsine-type law
    ``Gamma(n+1/2)Gamma(N-n+1/2) / (pi Gamma(n+1)Gamma(N-n+1))``.
    """
    n_a = np.asarray(n_a)
    if np.any(n_a != np.round(n_a)):
        raise ValueError("counts must be integers")
    n = n_a.astype(float)
    if np.any(n < 0) or np.any(n > n_atoms):
        raise ValueError("counts must lie in [0, n_atoms]")
    log_p = (
        log_gamma(n + 0.5)
        + log_gamma(n_atoms - n + 0.5)
        - math.log(math.pi)
        - log_gamma(n + 1.0)
        - log_gamma(n_atoms - n + 1.0)
    )
    out = np.exp(log_p)
    if np.ndim(n_a) == 0:
        return float(out)
    return out


def _bec_nome(config: BecMziConfig, gamma_p_t) -> NDArray:
    return np.exp(-1.0 / (2.0 * config.n_atoms) - np.asarray(gamma_p_t) / 2.0)


def _bec_shape(n, n_atoms: int, phi: float, nome):
    """Unnormalized continuum count density; broadcasts n against nome."""
    n = np.asarray(n, dtype=float)
    x = 2.0 * n / n_atoms - 1.0
    delta = np.arcsin(x)
    cos_d = np.sqrt(np.maximum(1.0 - x * x, 0.0))
    pair = theta3((delta - phi) / 2.0, nome) + theta3(
        (math.pi - delta - phi) / 2.0, nome
    )
    return pair / (2.0 * math.pi * cos_d)


def _bec_grid_points(n_atoms: int) -> NDArray:
    cell = n_atoms / BEC_GRID_SIZE
    return (np.arange(BEC_GRID_SIZE) + 0.5) * cell


def bec_density_grid(
    config: BecMziConfig, params: MmmParams
) -> tuple[NDArray, NDArray]:
    """Normalized count density on the standard evaluation grid.

    Returns the midpoint grid over ``(0, n_atoms)`` (endpoints excluded
    by half a cell) and the density renormalized to unit integral on it.
    """
    gamma_t = (
        effective_dephasing_scale(config, params.sigma_q)
        / params.tau_e
        * config.interference_time
    )
    nome = float(_bec_nome(config, gamma_t))
    grid = _bec_grid_points(config.n_atoms)
    shape = _bec_shape(grid, config.n_atoms, config.phi, nome)
    cell = config.n_atoms / BEC_GRID_SIZE
    norm = float(np.sum(shape)) * cell
    if not norm > 0.0:
        raise NumericError("count density normalization vanished")
    return grid, shape / norm


def bec_count_pdf(n_a, config: BecMziConfig, params: MmmParams):
    """Continuum count density at ``n_a``, normalized on the standard grid.

    ``n_a`` must lie strictly inside ``(0, n_atoms)``; the density has
    integrable square-root singularities at the edges.
    """
    n_arr = np.asarray(n_a, dtype=float)
    if np.any(n_arr <= 0.0) or np.any(n_arr >= config.n_atoms):
        raise ValueError("counts must lie strictly inside (0, n_atoms)")
    gamma_t = (
        effective_dephasing_scale(config, params.sigma_q)
        / params.tau_e
        * config.interference_time
    )
    nome = float(_bec_nome(config, gamma_t))
    grid = _bec_grid_points(config.n_atoms)
    cell = config.n_atoms / BEC_GRID_SIZE
    norm = float(np.sum(_bec_shape(grid, config.n_atoms, config.phi, nome))) * cell
    out = _bec_shape(n_arr, config.n_atoms, config.phi, nome) / norm
    if np.ndim(n_a) == 0:
        return float(out)
    return out


def branch_phase_pdf(phi_meas, phi_true: float, n_atoms: int, gamma_p: float, t: float):
    """Density of one measured branch phase on ``[-pi, pi]``.

    A wrapped distribution whose nome combines the finite-atom-number
    phase spread of a half-sized condensate with the dephasing exponent.
    """
    _check_phase_args(n_atoms, gamma_p, t)
    nome = math.exp(-1.0 / n_atoms - gamma_p * t / 2.0)
    out = theta3((np.asarray(phi_meas) - phi_true) / 2.0, nome) / (2.0 * math.pi)
    if np.ndim(phi_meas) == 0:
        return float(out)
    return out


def phase_diff_pdf(dphi, dphi_true: float, n_atoms: int, gamma_p: float, t: float):
    """Density of the branch phase difference on ``[-pi, pi]``.

    The nome is the square of the single-branch nome (doubled variance),
    as required for the difference of two independent branch phases.
    """
    _check_phase_args(n_atoms, gamma_p, t)
    nome = math.exp(-2.0 / n_atoms - gamma_p * t)
    out = theta3((np.asarray(dphi) - dphi_true) / 2.0, nome) / (2.0 * math.pi)
    if np.ndim(dphi) == 0:
        return float(out)
    return out


def _check_phase_args(n_atoms: int, gamma_p: float, t: float) -> None:
    if n_atoms < 2:
        raise ValueError("need at least two atoms")
    if gamma_p < 0.0 or t < 0.0:
        raise ValueError("dephasing rate and time must be nonnegative")


# ---------------------------------------------------------------------------
# Mach-Zehnder log-likelihoods


def loglik_bec(config: BecMziConfig, params: MmmParams) -> float:
    """Log-likelihood of the recorded one-port counts."""
    if not config.shots:
        raise ValueError("no shots recorded")
    ll = _bec_loglik_profile(config, np.array([params.tau_e]), params.sigma_q)
    return float(ll[0])


def _clipped_shots(config: BecMziConfig) -> NDArray:
    shots = np.asarray(config.shots, dtype=float)
    clipped = np.clip(shots, 1.0, config.n_atoms - 1.0)
    if np.any(clipped != shots):
        warnings.warn(
            "shots at the count boundaries were clipped into [1, N - 1]",
            stacklevel=3,
        )
    return clipped


def _bec_loglik_profile(
    config: BecMziConfig, tau: NDArray, sigma_q: float
) -> NDArray:
    tau = np.asarray(tau, dtype=float)
    shots = _clipped_shots(config)
    gamma_t = (
        effective_dephasing_scale(config, sigma_q)
        / tau
        * config.interference_time
    )
    grid = _bec_grid_points(config.n_atoms)
    cell = config.n_atoms / BEC_GRID_SIZE
    out = np.empty(tau.shape)
    for sl in _chunks(tau.size, 256):
        nome = _bec_nome(config, gamma_t[sl])[:, None]
        dens = _bec_shape(grid[None, :], config.n_atoms, config.phi, nome)
        norm = dens.sum(axis=1) * cell
        at_shots = _bec_shape(shots[None, :], config.n_atoms, config.phi, nome)
        # Shots far outside a sharply peaked prediction underflow to
        # zero density; the resulting -inf is the correct log-likelihood.
        with np.errstate(divide="ignore"):
            out[sl] = np.log(at_shots).sum(axis=1) - shots.size * np.log(norm)
    return out


def loglik_nested(config: NestedMziConfig, params: MmmParams) -> float:
    """Log-likelihood of the per-shot branch phase differences."""
    if not config.shots:
        raise ValueError("no shots recorded")
    ll = _nested_loglik_profile(config, np.array([params.tau_e]), params.sigma_q)
    return float(ll[0])


def _nested_loglik_profile(
    config: NestedMziConfig, tau: NDArray, sigma_q: float
) -> NDArray:
    tau = np.asarray(tau, dtype=float)
    gamma_t = (
        effective_dephasing_scale(config, sigma_q)
        / tau
        * config.interference_time
    )
    nome = np.exp(-2.0 / config.n_atoms - gamma_t)[:, None]
    offsets = np.asarray(config.shots) - np.asarray(config.delta_phi_true)
    dens = theta3(offsets[None, :] / 2.0, nome) / (2.0 * math.pi)
    # Offsets far outside a narrow spread underflow to zero density;
    # -inf is the correct log-likelihood there.
    with np.errstate(divide="ignore"):
        return np.log(dens).sum(axis=1)


def loglik_single_atom(config: SingleAtomConfig, params: MmmParams) -> float:
    """Log-likelihood of the binned single-atom port counts."""
    if not config.bins:
        raise ValueError("no bins recorded")
    ll = _sa_loglik_profile(config, np.array([params.tau_e]), params.sigma_q)
    return float(ll[0])


def _sa_mean_var(
    config: SingleAtomConfig, tau: NDArray, sigma_q: float
) -> tuple[NDArray, NDArray]:
    """Per-bin mean and variance of the port counts; shape (n_tau, n_bins)."""
    tau = np.asarray(tau, dtype=float)
    gamma_t = (
        effective_dephasing_scale(config, sigma_q) / tau * config.t
    )
    damp = np.exp(-gamma_t / 2.0)[:, None]
    cos_k = np.cos(config.phases())[None, :]
    totals = np.array([b.n_total for b in config.bins])[None, :]
    p = 0.5 - cos_k * damp / 4.0
    mean = totals * p
    var = totals * p * (1.0 - p) + config.sigma_dark**2
    return mean, var


def _sa_loglik_profile(
    config: SingleAtomConfig, tau: NDArray, sigma_q: float
) -> NDArray:
    mean, var = _sa_mean_var(config, tau, sigma_q)
    counts = np.array([b.n_a for b in config.bins])[None, :]
    log_pdf = -((counts - mean) ** 2) / (2.0 * var) - 0.5 * np.log(
        2.0 * math.pi * var
    )
    return log_pdf.sum(axis=1)


# ---------------------------------------------------------------------------
# Model-generic dispatch


@functools.singledispatch
def log_likelihood(model, params: MmmParams) -> float:
    """Log-likelihood of a model's data at the given parameters."""
    raise TypeError(f"unsupported model type {type(model)!r}")


log_likelihood.register(TalbotLauRun)(loglik_talbot_lau)
log_likelihood.register(BecMziConfig)(loglik_bec)
log_likelihood.register(NestedMziConfig)(loglik_nested)
log_likelihood.register(SingleAtomConfig)(loglik_single_atom)


@log_likelihood.register
def _(model: CompositeModel, params: MmmParams) -> float:
    return sum(log_likelihood(m, params) for m in model.models)


@functools.singledispatch
def log_likelihood_profile(model, tau, sigma_q: float) -> NDArray:
    """Vectorized log-likelihood over a classicalization-time array."""
    raise TypeError(f"unsupported model type {type(model)!r}")


log_likelihood_profile.register(TalbotLauRun)(_tl_loglik_profile)
log_likelihood_profile.register(BecMziConfig)(_bec_loglik_profile)
log_likelihood_profile.register(NestedMziConfig)(_nested_loglik_profile)
log_likelihood_profile.register(SingleAtomConfig)(_sa_loglik_profile)


@log_likelihood_profile.register
def _(model: CompositeModel, tau, sigma_q: float) -> NDArray:
    tau = np.asarray(tau, dtype=float)
    total = np.zeros(tau.shape)
    for m in model.models:
        total = total + log_likelihood_profile(m, tau, sigma_q)
    return total


@functools.singledispatch
def n_observations(model) -> int:
    """Number of recorded elementary observations."""
    raise TypeError(f"unsupported model type {type(model)!r}")


@n_observations.register
def _(model: TalbotLauRun) -> int:
    return int(round(sum(b.n_plus + b.n_minus for b in model.bins)))


@n_observations.register
def _(model: BecMziConfig) -> int:
    return len(model.shots)


@n_observations.register
def _(model: NestedMziConfig) -> int:
    return len(model.shots)


@n_observations.register
def _(model: SingleAtomConfig) -> int:
    return len(model.bins)


@n_observations.register
def _(model: CompositeModel) -> int:
    return sum(n_observations(m) for m in model.models)


@functools.lru_cache(maxsize=None)
def _knee_length(delta_x: float, w_x: float, w_y: float) -> float:
    return dephasing_knee_length(delta_x, w_x, w_y)


def effective_dephasing_scale(model, sigma_q):
    """Dimensionless ``dephasing_rate * tau_e`` for a Mach-Zehnder model.

    With the plateau extension enabled (the default), momentum widths
    beyond the peak of the suppression factor are held at the peak
    value, mirroring the assumption of monitored losses.  Vectorized
    over ``sigma_q``.
    """
    delta_x = model.arm_sep()
    sigma_q = np.asarray(sigma_q, dtype=float)
    if model.plateau_extension:
        knee = _knee_length(delta_x, model.w_x, model.w_y)
        sigma_q = np.minimum(sigma_q, HBAR / knee)
    out = scaled_dephasing_rate(
        sigma_q, delta_x, model.w_x, model.w_y, model.particle.mass
    )
    if np.ndim(out) == 0 and not isinstance(out, float):
        return float(out)
    return out


@functools.singledispatch
def admissible_length_window(model) -> tuple[float, float]:
    """Coherence-length window in which the model formulas are trusted.

    Recorded for reporting and for default search windows; values
    outside it are not rejected.
    """
    raise TypeError(f"unsupported model type {type(model)!r}")


@admissible_length_window.register
def _(model: TalbotLauRun) -> tuple[float, float]:
    t_talbot = talbot_time(model.particle.mass, model.grating_period)
    hi = min(
        model.grating_period * b.time_of_flight / t_talbot
        for b in model.velocity_bins
    )
    return (MIN_COHERENCE_LENGTH, hi)


def _mzi_window(model) -> tuple[float, float]:
    lo = max(MIN_COHERENCE_LENGTH, model.w_x, model.w_y)
    return (lo, model.arm_sep())


admissible_length_window.register(BecMziConfig)(_mzi_window)
admissible_length_window.register(NestedMziConfig)(_mzi_window)
admissible_length_window.register(SingleAtomConfig)(_mzi_window)


@admissible_length_window.register
def _(model: CompositeModel) -> tuple[float, float]:
    windows = [admissible_length_window(m) for m in model.models]
    return (max(w[0] for w in windows), min(w[1] for w in windows))


def _chunks(total: int, size: int):
    for start in range(0, total, size):
        yield slice(start, min(start + size, total))
