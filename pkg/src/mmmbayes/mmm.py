"""Observable consequences of the minimal macrorealist modification.

The modification is parametrized by a classicalization time ``tau_e``
and a momentum-width parameter ``sigma_q`` (the associated coherence
length is ``hbar/sigma_q``); the position-width parameter is fixed to
zero throughout this package.  This module turns those parameters into
the quantities the likelihoods consume: fringe-visibility reduction for
Talbot-Lau interferometers and the phase-diffusion rate for the
Mach-Zehnder-type experiments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .constants import ELECTRON_MASS, HBAR, MIN_COHERENCE_LENGTH, PLANCK_H
from .special import erf

__all__ = [
    "MmmParams",
    "ParticleSpec",
    "talbot_time",
    "visibility_ratio",
    "dephasing_rate",
    "scaled_dephasing_rate",
    "dephasing_knee_length",
    "arm_separation",
    "single_atom_port_prob",
]

_MAX_SIGMA_Q = HBAR / MIN_COHERENCE_LENGTH


@dataclass(frozen=True)
class MmmParams:
    """Model parameters: classicalization time (s) and momentum width (kg m/s).

    ``sigma_s`` is carried for completeness but must be zero; only the
    zero position-width family is implemented.
    """

    tau_e: float
    sigma_q: float
    sigma_s: float = 0.0

    def __post_init__(self) -> None:
        if not (self.tau_e > 0.0 and math.isfinite(self.tau_e)):
            raise ValueError("tau_e must be positive and finite")
        if not (self.sigma_q > 0.0 and math.isfinite(self.sigma_q)):
            raise ValueError("sigma_q must be positive and finite")
        if self.sigma_q > _MAX_SIGMA_Q * (1.0 + 1e-12):
            raise ValueError(
                "sigma_q exceeds the bound hbar / sigma_q >= 10 fm"
            )
        if self.sigma_s != 0.0:
            raise ValueError("only sigma_s = 0 is supported")

    @property
    def coherence_length(self) -> float:
        """hbar / sigma_q in meters."""
        return HBAR / self.sigma_q


@dataclass(frozen=True)
class ParticleSpec:
    """Interfering particle: mass in kg plus an optional label."""

    mass: float
    name: str = ""

    def __post_init__(self) -> None:
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise ValueError("particle mass must be positive and finite")


def talbot_time(mass: float, grating_period: float) -> float:
    """Talbot time ``m * d**2 / h`` for a particle behind a grating."""
    if mass <= 0.0 or grating_period <= 0.0:
        raise ValueError("mass and grating period must be positive")
    return mass * grating_period**2 / PLANCK_H


def _visibility_bracket(a):
    """Suppression bracket ``1 - sqrt(pi/2)/a * erf(a/sqrt(2))``.

    ``a`` is the dimensionless combination of grating period, momentum
    width and flight time; small arguments switch to the series
    ``a**2/6 - a**4/40`` to avoid cancellation.
    """
    a = np.asarray(a, dtype=float)
    small = a < 1e-4
    safe = np.where(small, 1.0, a)
    direct = 1.0 - math.sqrt(math.pi / 2.0) / safe * erf(safe / math.sqrt(2.0))
    series = a**2 / 6.0 - a**4 / 40.0
    out = np.where(small, series, direct)
    if out.ndim == 0:
        return float(out)
    return out


def visibility_ratio(
    params: MmmParams,
    mass: float,
    grating_period: float,
    time_of_flight: float,
) -> float:
    """Fringe-visibility reduction factor in a Talbot-Lau interferometer.

    Parameters
    ----------
    params : MmmParams
        Modification parameters.
    mass : float
        Particle mass in kg.
    grating_period : float
        Grating period in m.
    time_of_flight : float
        Flight time between consecutive gratings in s.

    Returns
    -------
    float
        Ratio of modified to unmodified sinusoidal visibility, in (0, 1].
    """
    if time_of_flight <= 0.0:
        raise ValueError("time of flight must be positive")
    t_talbot = talbot_time(mass, grating_period)
    a = grating_period * params.sigma_q * time_of_flight / (HBAR * t_talbot)
    rate = 2.0 * time_of_flight * mass**2 / (params.tau_e * ELECTRON_MASS**2)
    return math.exp(-rate * _visibility_bracket(a))


def _dephasing_shape(sigma_q, delta_x: float, w_x: float, w_y: float):
    """Dimensionless momentum-kick suppression factor, in [0, 1)."""
    sigma_q = np.asarray(sigma_q, dtype=float)
    num = 1.0 - np.exp(
        -(delta_x**2) * sigma_q**2 / (4.0 * sigma_q**2 * w_x**2 + 2.0 * HBAR**2)
    )
    den = np.sqrt(
        (1.0 + 2.0 * sigma_q**2 * w_x**2 / HBAR**2)
        * (1.0 + 2.0 * sigma_q**2 * w_y**2 / HBAR**2)
    )
    out = num / den
    if out.ndim == 0:
        return float(out)
    return out


def dephasing_rate(
    params: MmmParams,
    delta_x: float,
    w_x: float,
    w_y: float,
    mass: float,
) -> float:
    """Phase-diffusion rate (1/s) between two separated wave packets.

    ``delta_x`` is the time-averaged arm separation, ``w_x`` and ``w_y``
    the transverse wave-packet widths.  The rate scales as ``1/tau_e``
    and saturates at ``2 m**2 / (tau_e m_e**2)`` when the coherence
    length lies between the packet widths and the separation.
    """
    if delta_x <= 0.0:
        raise ValueError("arm separation must be positive")
    if w_x < 0.0 or w_y < 0.0:
        raise ValueError("wave-packet widths must be nonnegative")
    prefactor = 2.0 * mass**2 / (params.tau_e * ELECTRON_MASS**2)
    return prefactor * _dephasing_shape(params.sigma_q, delta_x, w_x, w_y)


def scaled_dephasing_rate(
    sigma_q, delta_x: float, w_x: float, w_y: float, mass: float
):
    """Dimensionless ``dephasing_rate * tau_e``; vectorized over sigma_q."""
    if delta_x <= 0.0:
        raise ValueError("arm separation must be positive")
    if w_x < 0.0 or w_y < 0.0:
        raise ValueError("wave-packet widths must be nonnegative")
    prefactor = 2.0 * mass**2 / ELECTRON_MASS**2
    return prefactor * _dephasing_shape(sigma_q, delta_x, w_x, w_y)


def dephasing_knee_length(delta_x: float, w_x: float, w_y: float) -> float:
    """Coherence length at which the suppression factor peaks.

    Below this length the physical rate declines again; analyses that
    assume monitored losses hold the rate at its peak value instead,
    and this function supplies the matching cutoff.
    """
    if w_x <= 0.0 and w_y <= 0.0:
        # Pointlike packets: the shape grows monotonically toward
        # sigma_q -> infinity, so the cutoff is the relativistic bound.
        return MIN_COHERENCE_LENGTH

    def neg_shape(log_ell: float) -> float:
        ell = math.exp(log_ell)
        return -_dephasing_shape(HBAR / ell, delta_x, w_x, w_y)

    lo = math.log(MIN_COHERENCE_LENGTH)
    hi = math.log(10.0 * delta_x)
    scan = np.linspace(lo, hi, 512)
    best = scan[int(np.argmin([neg_shape(v) for v in scan]))]
    step = (hi - lo) / 511.0
    res = optimize.minimize_scalar(
        neg_shape,
        bounds=(max(lo, best - 2 * step), min(hi, best + 2 * step)),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return math.exp(res.x)


def arm_separation(delta_p: float, time_of_flight: float, mass: float) -> float:
    """Time-averaged separation ``delta_p * T / (2 sqrt(3) m)`` of two arms.

    ``delta_p`` is the momentum-transfer splitting of the interferometer
    and ``T`` the total interrogation time of the triangular trajectory.
    """
    if delta_p <= 0.0 or time_of_flight <= 0.0 or mass <= 0.0:
        raise ValueError("delta_p, time of flight and mass must be positive")
    return delta_p * time_of_flight / (2.0 * math.sqrt(3.0) * mass)


def single_atom_port_prob(phi: float, gamma_p: float, t: float):
    """Exit-port probability ``1/2 - cos(phi) exp(-gamma_p t / 2) / 4``.

    Stays within [1/4, 3/4] for any phase and any nonnegative dephasing
    exponent; vectorized over ``phi`` and ``gamma_p``.
    """
    if t < 0.0:
        raise ValueError("interrogation time must be nonnegative")
    gamma_p = np.asarray(gamma_p, dtype=float)
    if np.any(gamma_p < 0.0):
        raise ValueError("dephasing rate must be nonnegative")
    out = 0.5 - np.cos(phi) * np.exp(-gamma_p * t / 2.0) / 4.0
    if out.ndim == 0:
        return float(out)
    return out
