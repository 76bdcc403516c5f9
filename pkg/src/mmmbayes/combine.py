"""Two-parameter likelihood maps and their combination across experiments.

A map tabulates the log-likelihood of one experiment on a grid of
classicalization time (rows) versus coherence length ``hbar/sigma_q``
(columns).  Maps from different experiments combine by addition once
their axes agree, which keeps the combination exactly order-independent
through a canonical summing order.
"""
from __future__ import annotations

import hashlib
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .constants import HBAR, MIN_COHERENCE_LENGTH, NEUTRON_ELECTRON_MASS_RATIO
from .errors import NumericError
from .likelihood import log_likelihood_profile
from .mmm import MmmParams

__all__ = [
    "Map2D",
    "CslPoint",
    "default_tau_axis",
    "default_length_axis",
    "loglik_map",
    "combine_maps",
    "map_posterior",
    "map_peak",
    "marginal_tau",
    "marginal_length",
    "csl_params",
]


@dataclass(frozen=True)
class Map2D:
    """Scalar field over the (time, coherence-length) grid.

    ``values[i, j]`` belongs to ``tau[i]`` and ``length[j]``.  Depending
    on provenance the field is a log-likelihood or a normalized
    log-density; both share this container.
    """

    label: str
    tau: NDArray
    length: NDArray
    values: NDArray

    def __post_init__(self) -> None:
        tau = np.asarray(self.tau, dtype=float)
        length = np.asarray(self.length, dtype=float)
        values = np.asarray(self.values, dtype=float)
        for name, axis in (("tau", tau), ("length", length)):
            if axis.ndim != 1 or axis.size < 2:
                raise ValueError(f"{name} axis needs at least two points")
            if axis[0] <= 0.0 or not np.all(np.isfinite(axis)):
                raise ValueError(f"{name} axis must be positive and finite")
            if np.any(np.diff(axis) <= 0.0):
                raise ValueError(f"{name} axis must increase strictly")
        if values.shape != (tau.size, length.size):
            raise ValueError("values must have shape (len(tau), len(length))")
        for arr, name in ((tau, "tau"), (length, "length"), (values, "values")):
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.values).tobytes())
        return digest.hexdigest()


@dataclass(frozen=True)
class CslPoint:
    """Collapse-rate and correlation-length coordinates of a parameter
    point in the continuous-localization convention."""

    collapse_rate: float
    correlation_length: float


def default_tau_axis(n: int = 300) -> NDArray:
    return np.geomspace(1e2, 1e22, n)


def default_length_axis(n: int = 200) -> NDArray:
    return np.geomspace(MIN_COHERENCE_LENGTH, 1.0, n)


def loglik_map(
    model,
    tau_axis: NDArray | None = None,
    length_axis: NDArray | None = None,
    threads: int = 1,
    label: str | None = None,
) -> Map2D:
    """Tabulate the model's log-likelihood over the parameter grid.

    Columns evaluate independently and may run on a thread pool; the
    assembly order is fixed by column index, so the result does not
    depend on ``threads``.  Columns that fail numerically are recorded
    as minus infinity and counted in a warning.
    """
    tau = default_tau_axis() if tau_axis is None else np.asarray(tau_axis, float)
    length = (
        default_length_axis() if length_axis is None else np.asarray(length_axis, float)
    )
    if threads < 1:
        raise ValueError("threads must be at least 1")
    if label is None:
        label = getattr(model, "label", "") or ""

    def column(ell: float) -> NDArray:
        try:
            col = log_likelihood_profile(model, tau, HBAR / ell)
        except NumericError:
            return np.full(tau.shape, -np.inf)
        return np.where(np.isfinite(col) | (col == -np.inf), col, -np.inf)

    if threads == 1:
        columns = [column(ell) for ell in length]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            columns = list(pool.map(column, length))
    values = np.stack(columns, axis=1)
    bad = ~np.isfinite(values)
    if np.any(bad):
        warnings.warn(
            f"{int(np.count_nonzero(bad))} map nodes failed and carry no weight",
            stacklevel=2,
        )
    if not np.any(np.isfinite(values)):
        raise NumericError("likelihood failed on the whole map")
    return Map2D(label, tau, length, values)


def combine_maps(maps) -> Map2D:
    """Sum log-likelihood maps over experiments.

    Inputs must share both axes exactly.  Maps are first ordered by
    label and content hash, making the result bit-for-bit independent
    of the argument order.
    """
    maps = list(maps)
    if not maps:
        raise ValueError("need at least one map")
    first = maps[0]
    for m in maps[1:]:
        if not (
            np.array_equal(m.tau, first.tau)
            and np.array_equal(m.length, first.length)
        ):
            raise ValueError("maps must share identical axes")
    ordered = sorted(maps, key=lambda m: (m.label, m.content_hash()))
    total = np.array(ordered[0].values)
    for m in ordered[1:]:
        total = total + m.values
    label = " + ".join(m.label or "unlabeled" for m in ordered)
    return Map2D(label, first.tau, first.length, total)


def _axis_weights(axis: NDArray) -> NDArray:
    # Trapezoid weights on the linear axis.
    w = np.zeros(axis.size)
    d = np.diff(axis)
    w[:-1] += d / 2.0
    w[1:] += d / 2.0
    return w


def map_posterior(m: Map2D, boundary_mass_limit: float = 0.2) -> Map2D:
    """Normalize a log-likelihood map into a flat-prior log-density.

    The density is per unit time times length on the linear axes.  If
    more than ``boundary_mass_limit`` of the mass sits in the outermost
    rows or columns the grid truncates the posterior and the result
    would be misleading, so a numeric error is raised.
    """
    finite = np.isfinite(m.values)
    if not np.any(finite):
        raise NumericError("map carries no finite likelihood")
    peak = float(np.max(m.values[finite]))
    rel = np.exp(np.where(finite, m.values - peak, -np.inf))
    weights = np.outer(_axis_weights(m.tau), _axis_weights(m.length))
    norm = float(np.sum(rel * weights))
    if not (norm > 0.0 and math.isfinite(norm)):
        raise NumericError("map posterior is not normalizable")
    mass = rel * weights / norm
    edge = np.zeros(m.values.shape, dtype=bool)
    edge[0, :] = edge[-1, :] = True
    edge[:, 0] = edge[:, -1] = True
    edge_mass = float(np.sum(mass[edge]))
    if edge_mass > boundary_mass_limit:
        raise NumericError(
            f"{edge_mass:.0%} of the posterior mass sits on the grid boundary"
        )
    log_density = np.where(finite, m.values - peak - math.log(norm), -np.inf)
    return Map2D(m.label, m.tau, m.length, log_density)


def map_peak(m: Map2D) -> tuple[int, int]:
    """Grid indices of the map's maximum value."""
    flat = int(np.argmax(np.where(np.isfinite(m.values), m.values, -np.inf)))
    return np.unravel_index(flat, m.values.shape)  # type: ignore[return-value]


def marginal_tau(posterior_map: Map2D) -> tuple[NDArray, NDArray]:
    """Marginal density over time, integrated across coherence length."""
    dens = np.exp(posterior_map.values)
    marg = np.trapezoid(dens, posterior_map.length, axis=1)
    return np.array(posterior_map.tau), marg


def marginal_length(posterior_map: Map2D) -> tuple[NDArray, NDArray]:
    """Marginal density over coherence length, integrated across time."""
    dens = np.exp(posterior_map.values)
    marg = np.trapezoid(dens, posterior_map.tau, axis=0)
    return np.array(posterior_map.length), marg


def csl_params(params: MmmParams) -> CslPoint:
    """Continuous-localization coordinates of a parameter point.

    The collapse rate refers to a nucleon, hence the squared
    neutron-to-electron mass ratio over the classicalization time; the
    correlation length is the coherence length over ``sqrt(2)``.
    """
    rate = NEUTRON_ELECTRON_MASS_RATIO**2 / params.tau_e
    return CslPoint(rate, params.coherence_length / math.sqrt(2.0))
