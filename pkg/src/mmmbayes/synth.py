"""Synthetic datasets drawn from the experiment likelihoods.

Each sampler takes a design (a model object without recorded data),
true modification parameters and a seed, and returns a copy of the
design carrying sampled data.  Sampling goes through the same model
internals the likelihoods use, so a sampled dataset is exactly
distributed according to the model it will be scored against; the one
exception is the detector-noise rounding and clipping noted on the
single-atom sampler.

Generators are NumPy PCG64 streams; record ``numpy-pcg64`` plus the
seed alongside written datasets so runs can be reproduced.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
from numpy.typing import NDArray

from .likelihood import (
    BecMziConfig,
    CountBin,
    NestedMziConfig,
    SingleAtomBin,
    SingleAtomConfig,
    TalbotLauRun,
    _tl_success_profile,
    bec_density_grid,
    effective_dephasing_scale,
)
from .mmm import MmmParams, single_atom_port_prob

__all__ = [
    "RNG_KIND",
    "sample_talbot_lau",
    "sample_bec",
    "sample_nested",
    "sample_single_atom",
]

RNG_KIND = "numpy-pcg64"

_PHASE_CELLS = 4096


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_talbot_lau(
    design: TalbotLauRun,
    params: MmmParams,
    positions: NDArray,
    counts_per_position,
    seed,
) -> TalbotLauRun:
    """Draw port counts at the given mask positions.

    ``counts_per_position`` is the per-position number of effective
    trials (scalar or array); the plus count is binomial in the port
    probability and the minus count is the remainder, matching the
    fair-sampling reconstruction.  Any bins already present on the
    design are replaced.  For a pulsed-mode design, keep the product of
    ``f3`` and the trial count an integer so the laser-off count the
    data file stores reconstructs the trials exactly.
    """
    positions = np.atleast_1d(np.asarray(positions, dtype=float))
    if positions.size == 0:
        raise ValueError("need at least one mask position")
    trials = np.broadcast_to(
        np.asarray(counts_per_position, dtype=int), positions.shape
    )
    if np.any(trials <= 0):
        raise ValueError("counts per position must be positive")
    rng = _as_generator(seed)
    probe = dataclasses.replace(
        design, bins=tuple(CountBin(x, 0, 0) for x in positions)
    )
    p, _ = _tl_success_profile(probe, np.array([params.tau_e]), params.sigma_q)
    n_plus = rng.binomial(trials, p[:, 0])
    bins = tuple(
        CountBin(x, int(np_), int(n - np_))
        for x, np_, n in zip(positions, n_plus, trials)
    )
    return dataclasses.replace(design, bins=bins)


def sample_bec(
    design: BecMziConfig, params: MmmParams, n_shots: int, seed
) -> BecMziConfig:
    """Draw per-shot atom counts from the interference count density.

    Inverse-CDF sampling on the same grid the likelihood normalizes on;
    samples stay within the grid's interior span.
    """
    if n_shots <= 0:
        raise ValueError("need a positive number of shots")
    rng = _as_generator(seed)
    grid, density = bec_density_grid(design, params)
    cell = grid[1] - grid[0]
    edges = np.concatenate([[grid[0] - cell / 2.0], grid + cell / 2.0])
    cdf = np.concatenate([[0.0], np.cumsum(density * cell)])
    cdf /= cdf[-1]
    shots = np.interp(rng.random(n_shots), cdf, edges)
    shots = np.clip(shots, grid[0], grid[-1])
    return dataclasses.replace(design, shots=tuple(float(s) for s in shots))


def sample_nested(
    design: NestedMziConfig,
    params: MmmParams,
    n_shots: int,
    seed,
    delta_phi_true: NDArray | None = None,
) -> NestedMziConfig:
    """Draw phase-difference readings around the per-shot true phases.

    The spread follows the wrapped density of the branch-phase
    difference; true phases default to a uniform draw over a period.
    """
    if n_shots <= 0:
        raise ValueError("need a positive number of shots")
    rng = _as_generator(seed)
    if delta_phi_true is None:
        delta_phi_true = rng.uniform(-math.pi, math.pi, n_shots)
    else:
        delta_phi_true = np.asarray(delta_phi_true, dtype=float)
        if delta_phi_true.shape != (n_shots,):
            raise ValueError("delta_phi_true must provide one phase per shot")
    gamma_t = (
        effective_dephasing_scale(design, params.sigma_q)
        / params.tau_e
        * design.interference_time
    )
    nome = math.exp(-2.0 / design.n_atoms - gamma_t)
    offsets = _sample_wrapped(rng, nome, n_shots)
    shots = offsets + delta_phi_true
    shots = np.mod(shots + math.pi, 2.0 * math.pi) - math.pi
    return dataclasses.replace(
        design,
        shots=tuple(float(s) for s in shots),
        delta_phi_true=tuple(float(d) for d in delta_phi_true),
    )


def _sample_wrapped(rng: np.random.Generator, nome: float, n: int) -> NDArray:
    """Inverse-CDF draw from the centered wrapped density with the given
    nome, on a period-wide grid."""
    from .special import theta3

    edges = np.linspace(-math.pi, math.pi, _PHASE_CELLS + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    density = theta3(mids / 2.0, nome) / (2.0 * math.pi)
    cdf = np.concatenate([[0.0], np.cumsum(density)]) * (edges[1] - edges[0])
    cdf /= cdf[-1]
    return np.interp(rng.random(n), cdf, edges)


def sample_single_atom(
    design: SingleAtomConfig,
    params: MmmParams,
    n_bins: int,
    atoms_per_bin,
    seed,
) -> SingleAtomConfig:
    """Draw binned port counts with detector noise.

    Counts are binomial in the port probability; detector noise adds a
    rounded zero-mean Gaussian of width ``sigma_dark``.  The sum is
    clipped into ``[0, atoms]`` so the record stays a valid count, which
    truncates the noise tail when the rate sits near a port extreme.
    """
    if n_bins <= 0:
        raise ValueError("need a positive number of bins")
    k = np.arange(n_bins)
    totals = np.broadcast_to(np.asarray(atoms_per_bin, dtype=int), k.shape)
    if np.any(totals <= 0):
        raise ValueError("atoms per bin must be positive")
    rng = _as_generator(seed)
    gamma_p = effective_dephasing_scale(design, params.sigma_q) / params.tau_e
    phases = design.omega * (design.t + k * design.delta_t)
    p = single_atom_port_prob(phases, gamma_p, design.t)
    counts = rng.binomial(totals, p).astype(float)
    if design.sigma_dark > 0.0:
        counts += np.round(rng.normal(0.0, design.sigma_dark, n_bins))
    counts = np.clip(counts, 0.0, totals.astype(float))
    bins = tuple(
        SingleAtomBin(int(kk), int(n), int(c))
        for kk, n, c in zip(k, totals, counts)
    )
    return dataclasses.replace(design, bins=bins)
