"""Command-line interface.

Subcommands cover the analysis pipeline end to end: ``simulate`` writes
synthetic datasets, ``prior`` and ``posterior`` produce distribution
tables, ``macroscopicity`` reduces a dataset to its headline number,
``map2d`` tabulates and combines two-parameter likelihood maps, and
``gnuplot`` emits plot scripts for the written tables.

Exit codes: 0 on success, 2 for configuration problems, 3 for numeric
failures, 4 for unreadable or inconsistent data files.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys

import numpy as np

from . import dataio, synth
from .combine import combine_maps, loglik_map, map_posterior
from .config import ExperimentConfig, load_experiment, parse_quantity
from .constants import HBAR
from .errors import ConfigError, DataInconsistencyError, MmmBayesError, NumericError
from .inference import (
    TauGrid,
    _with_phi,
    convergence_report,
    jeffreys_prior,
    jeffreys_single_atom,
    macroscopicity,
    posterior_update,
    quantile,
)
from .likelihood import (
    BecMziConfig,
    CompositeModel,
    NestedMziConfig,
    SingleAtomConfig,
    TalbotLauRun,
)
from .mmm import MmmParams

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmmbayes",
        description="Bayesian bounds on classical trajectory models "
        "from interference experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    prior = sub.add_parser("prior", help="write the objective prior for a design")
    _add_common(prior, data=False)
    prior.add_argument(
        "--coherence-length",
        required=True,
        metavar="QTY",
        help='coherence length hbar/sigma_q, e.g. "8 cm"',
    )
    prior.add_argument(
        "--data",
        action="append",
        default=None,
        metavar="FILE",
        help="dataset fixing the observation design where the config "
        "alone does not (mask scans, binned counts)",
    )
    prior.set_defaults(func=cmd_prior)

    post = sub.add_parser("posterior", help="update the prior with recorded data")
    _add_common(post, data=True)
    post.add_argument("--coherence-length", required=True, metavar="QTY")
    post.add_argument("--quantile", type=float, default=0.05, metavar="ALPHA")
    post.set_defaults(func=cmd_posterior)

    macro = sub.add_parser("macroscopicity", help="reduce a dataset to mu_m")
    _add_common(macro, data=True)
    macro.add_argument("--grid-length", metavar="MIN:MAX:N", default=None)
    macro.add_argument("--quantile", type=float, default=0.05, metavar="ALPHA")
    macro.add_argument(
        "--phi-grid",
        type=int,
        default=256,
        metavar="N",
        help="working-point scan size for condensate models",
    )
    macro.add_argument(
        "--posterior-out",
        default=None,
        metavar="FILE",
        help="also write the posterior behind the reported value",
    )
    macro.set_defaults(func=cmd_macroscopicity)

    map2d = sub.add_parser("map2d", help="tabulate and combine likelihood maps")
    map2d.add_argument("--config", action="append", required=True, metavar="FILE")
    map2d.add_argument("--data", action="append", required=True, metavar="FILE")
    map2d.add_argument("--out", required=True, metavar="FILE")
    map2d.add_argument("--grid-tau", metavar="MIN:MAX:N", default=None)
    map2d.add_argument("--grid-length", metavar="MIN:MAX:N", default=None)
    map2d.add_argument("--threads", type=int, default=1)
    map2d.add_argument("--cache", default=None, metavar="FILE")
    map2d.add_argument(
        "--normalize",
        action="store_true",
        help="write a flat-prior log-density instead of the raw log-likelihood",
    )
    map2d.set_defaults(func=cmd_map2d)

    sim = sub.add_parser("simulate", help="write a synthetic dataset")
    sim.add_argument("--config", required=True, metavar="FILE")
    sim.add_argument("--out", required=True, metavar="FILE")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--tau-e", required=True, metavar="QTY", help='e.g. "1e12 s"')
    sim.add_argument("--coherence-length", required=True, metavar="QTY")
    sim.add_argument("--shots", type=int, default=None)
    sim.add_argument("--positions", type=int, default=None)
    sim.add_argument("--counts-per-position", type=int, default=None)
    sim.add_argument("--bins", type=int, default=None)
    sim.add_argument("--atoms-per-bin", type=int, default=None)
    sim.set_defaults(func=cmd_simulate)

    plot = sub.add_parser("gnuplot", help="write a plot script for a table")
    plot.add_argument(
        "--kind", choices=("distribution", "map"), required=True
    )
    plot.add_argument("--table", required=True, metavar="FILE")
    plot.add_argument("--out", required=True, metavar="FILE")
    plot.set_defaults(func=cmd_gnuplot)

    return parser


def _add_common(sub: argparse.ArgumentParser, data: bool) -> None:
    sub.add_argument("--config", required=True, metavar="FILE")
    if data:
        sub.add_argument(
            "--data",
            action="append",
            required=True,
            metavar="FILE",
            help="dataset for the configured experiment; repeatable",
        )
    sub.add_argument("--out", required=True, metavar="FILE")
    sub.add_argument("--grid-tau", metavar="MIN:MAX:N", default=None)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataInconsistencyError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 4
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except MmmBayesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


# ---------------------------------------------------------------------------
# Shared pieces


def _tau_grid(spec: str | None) -> TauGrid:
    if spec is None:
        return TauGrid.log_spaced()
    lo, hi, n = _parse_grid_spec(spec, "--grid-tau")
    try:
        return TauGrid.log_spaced(lo, hi, n)
    except ValueError as exc:
        raise ConfigError(f"--grid-tau: {exc}") from exc


def _length_axis(spec: str | None):
    if spec is None:
        return None
    lo, hi, n = _parse_grid_spec(spec, "--grid-length")
    if not 0.0 < lo < hi:
        raise ConfigError("--grid-length: need 0 < MIN < MAX")
    if n < 2:
        raise ConfigError("--grid-length: need at least two points")
    return np.geomspace(lo, hi, n)


def _parse_grid_spec(spec: str, flag: str) -> tuple[float, float, int]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"{flag} expects MIN:MAX:N, got {spec!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"{flag} expects MIN:MAX:N, got {spec!r}") from exc


def _sigma_from_length_flag(value: str) -> float:
    length = parse_quantity(value, "length", "--coherence-length")
    if length <= 0.0:
        raise ConfigError("--coherence-length must be positive")
    return HBAR / length


def _attach(experiment: ExperimentConfig, path: str):
    model = experiment.model
    if isinstance(model, TalbotLauRun):
        if model.mode == "stationary" and experiment.scan_periods is None:
            raise ConfigError(
                f"{experiment.source}: stationary data needs scan_periods"
            )
        return dataio.talbot_lau_run_from_csv(model, path, experiment.scan_periods)
    if isinstance(model, BecMziConfig):
        return dataio.bec_config_from_csv(model, path)
    if isinstance(model, NestedMziConfig):
        return dataio.nested_config_from_csv(model, path)
    if isinstance(model, SingleAtomConfig):
        return dataio.single_atom_config_from_csv(model, path)
    raise ConfigError(f"cannot attach data to {type(model).__name__}")


def _attached_model(experiment: ExperimentConfig, paths):
    models = [_attach(experiment, p) for p in paths]
    if len(models) == 1:
        return models[0]
    return CompositeModel(tuple(models), label=experiment.label)


def _design_prior(model, grid: TauGrid, sigma_q: float):
    if isinstance(model, SingleAtomConfig):
        return jeffreys_single_atom(model, grid, sigma_q)
    return jeffreys_prior(model, grid, sigma_q)


def _provenance(experiment: ExperimentConfig, **extra):
    base = {
        "kind": experiment.kind,
        "label": experiment.label,
        "config_hash": experiment.config_hash,
    }
    base.update(extra)
    return base


# ---------------------------------------------------------------------------
# Subcommands


def cmd_prior(args) -> int:
    experiment = load_experiment(args.config)
    grid = _tau_grid(args.grid_tau)
    sigma_q = _sigma_from_length_flag(args.coherence_length)
    if args.data:
        model = _attached_model(experiment, args.data)
    else:
        model = _design_model_for_prior(experiment)
    prior = _design_prior(model, grid, sigma_q)
    dataio.write_distribution_csv(
        args.out,
        prior,
        provenance=_provenance(
            experiment, content="jeffreys_prior", sigma_q_kg_m_s=sigma_q
        ),
    )
    return 0


def _design_model_for_prior(experiment: ExperimentConfig):
    """Priors need the observation design.  Condensate models carry it
    in the config; a nested design only needs a shot count, where one
    placeholder shot stands in because the normalized prior does not
    depend on the count.  The scan-type kinds keep theirs in the data
    file, so they require ``--data``."""
    model = experiment.model
    if isinstance(model, BecMziConfig):
        return model
    if isinstance(model, NestedMziConfig):
        if model.shots:
            return model
        return dataclasses.replace(model, shots=(0.0,), delta_phi_true=(0.0,))
    raise ConfigError(
        f"{experiment.source}: a {experiment.kind} prior needs the "
        "observation design; pass the dataset via --data"
    )


def cmd_posterior(args) -> int:
    experiment = load_experiment(args.config)
    grid = _tau_grid(args.grid_tau)
    sigma_q = _sigma_from_length_flag(args.coherence_length)
    if not 0.0 < args.quantile < 1.0:
        raise ConfigError("--quantile must lie in (0, 1)")
    model = _attached_model(experiment, args.data)
    prior = _design_prior(model, grid, sigma_q)
    post = posterior_update(prior, model, sigma_q)
    tau_m = quantile(post, args.quantile)
    dataio.write_distribution_csv(
        args.out,
        post,
        include_relative=True,
        provenance=_provenance(
            experiment,
            content="posterior",
            sigma_q_kg_m_s=sigma_q,
            quantile_level=args.quantile,
            tau_quantile_s=tau_m,
        ),
    )
    print(f"tau at {args.quantile:g} quantile: {tau_m:.6e} s")
    return 0


def cmd_macroscopicity(args) -> int:
    experiment = load_experiment(args.config)
    grid = _tau_grid(args.grid_tau)
    if not 0.0 < args.quantile < 1.0:
        raise ConfigError("--quantile must lie in (0, 1)")
    if args.phi_grid < 1:
        raise ConfigError("--phi-grid must be positive")
    model = _attached_model(experiment, args.data)
    lengths = _length_axis(args.grid_length)
    sigma_values = None if lengths is None else np.sort(HBAR / lengths)
    phi_grid = np.linspace(0.0, 2.0 * math.pi, args.phi_grid, endpoint=False)
    result = macroscopicity(
        model,
        grid,
        sigma_q_values=sigma_values,
        alpha=args.quantile,
        phi_grid=phi_grid if _is_bec_like(model) else None,
    )
    report = convergence_report(result.posterior, _frozen_phi(model, result), result.sigma_q_star)
    summary = {
        "mu_m": result.mu_m,
        "sigma_q_star": result.sigma_q_star,
        "tau_m": result.tau_m,
        "fwhm": report.fwhm,
        "gaussian_fwhm": report.gaussian_fwhm,
        "hellinger_min": report.h_min,
    }
    dataio.write_summary_csv(
        args.out,
        summary,
        provenance=_provenance(experiment, content="macroscopicity"),
    )
    if args.posterior_out:
        dataio.write_distribution_csv(
            args.posterior_out,
            result.posterior,
            include_relative=True,
            provenance=_provenance(
                experiment, content="posterior", sigma_q_kg_m_s=result.sigma_q_star
            ),
        )
    print(
        f"mu_m = {result.mu_m:.3f} at hbar/sigma_q = "
        f"{HBAR / result.sigma_q_star:.3e} m (tau_m = {result.tau_m:.3e} s)"
    )
    return 0


def _is_bec_like(model) -> bool:
    if isinstance(model, BecMziConfig):
        return True
    if isinstance(model, CompositeModel):
        return any(_is_bec_like(m) for m in model.models)
    return False


def _frozen_phi(model, result):
    if result.phi_star is None:
        return model
    return _with_phi(model, result.phi_star)


def cmd_map2d(args) -> int:
    if len(args.config) != len(args.data):
        raise ConfigError("map2d needs exactly one --data per --config")
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    grid = _tau_grid(args.grid_tau)
    lengths = _length_axis(args.grid_length)
    maps = []
    for config_path, data_path in zip(args.config, args.data):
        experiment = load_experiment(config_path)
        model = _attach(experiment, data_path)
        maps.append(
            loglik_map(
                model,
                tau_axis=grid.points,
                length_axis=lengths,
                threads=args.threads,
                label=experiment.label or experiment.kind,
            )
        )
    combined = maps[0] if len(maps) == 1 else combine_maps(maps)
    if args.normalize:
        combined = map_posterior(combined)
    dataio.write_map_csv(args.out, combined)
    if args.cache:
        dataio.write_map_cache(args.cache, combined)
    return 0


def cmd_simulate(args) -> int:
    experiment = load_experiment(args.config)
    tau_e = parse_quantity(args.tau_e, "time", "--tau-e")
    sigma_q = _sigma_from_length_flag(args.coherence_length)
    try:
        params = MmmParams(tau_e, sigma_q)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    provenance = _provenance(
        experiment,
        seed=args.seed,
        rng=synth.RNG_KIND,
        tau_e_true_s=tau_e,
        sigma_q_true_kg_m_s=sigma_q,
    )
    model = experiment.model
    if isinstance(model, TalbotLauRun):
        _simulate_talbot_lau(args, experiment, params, provenance)
    elif isinstance(model, BecMziConfig):
        if args.shots is None:
            raise ConfigError("simulate needs --shots for this experiment kind")
        sampled = synth.sample_bec(model, params, args.shots, args.seed)
        dataio.write_bec_csv(args.out, sampled.shots, provenance)
    elif isinstance(model, NestedMziConfig):
        if args.shots is None:
            raise ConfigError("simulate needs --shots for this experiment kind")
        sampled = synth.sample_nested(model, params, args.shots, args.seed)
        dataio.write_nested_csv(args.out, sampled.shots, sampled.delta_phi_true, provenance)
    elif isinstance(model, SingleAtomConfig):
        if args.bins is None or args.atoms_per_bin is None:
            raise ConfigError(
                "simulate needs --bins and --atoms-per-bin for this experiment kind"
            )
        sampled = synth.sample_single_atom(
            model, params, args.bins, args.atoms_per_bin, args.seed
        )
        dataio.write_single_atom_csv(args.out, sampled.bins, provenance)
    else:
        raise ConfigError(f"cannot simulate {experiment.kind}")
    return 0


def _simulate_talbot_lau(args, experiment, params, provenance) -> None:
    model = experiment.model
    if args.positions is None or args.counts_per_position is None:
        raise ConfigError(
            "simulate needs --positions and --counts-per-position "
            "for this experiment kind"
        )
    if experiment.scan_periods is None:
        raise ConfigError(f"{experiment.source}: simulate needs scan_periods")
    span = experiment.scan_periods * model.grating_period
    positions = (np.arange(args.positions) + 0.5) / args.positions * span
    sampled = synth.sample_talbot_lau(
        model, params, positions, args.counts_per_position, args.seed
    )
    n_plus = np.array([b.n_plus for b in sampled.bins])
    if model.mode == "pulsed":
        totals = np.array([b.n_plus + b.n_minus for b in sampled.bins])
        n_zero = np.round(model.f3 * totals).astype(int)
    else:
        n_zero = None
    dataio.write_talbot_lau_csv(args.out, positions, n_plus, n_zero, provenance)


_GNUPLOT_DIST = """\
# Plot script for a distribution table; run: gnuplot {out}
set datafile separator comma
set datafile commentschars '#'
set logscale x
set xlabel 'classicalization time tau_e (s)'
set ylabel 'density (1/s)'
set grid
plot '{table}' using 1:2 with lines title 'density'
pause -1
"""

_GNUPLOT_MAP = """\
# Plot script for a likelihood map; run: gnuplot {out}
set datafile separator comma
set datafile commentschars '#'
set logscale xy
set xlabel 'classicalization time tau_e (s)'
set ylabel 'coherence length hbar/sigma_q (m)'
set view map
set pm3d interpolate 0,0
splot '{table}' using 1:2:3 with pm3d notitle
pause -1
"""


def cmd_gnuplot(args) -> int:
    template = _GNUPLOT_DIST if args.kind == "distribution" else _GNUPLOT_MAP
    text = template.format(table=args.table, out=args.out)
    dataio._atomic_write(args.out, text.encode())
    return 0


if __name__ == "__main__":
    sys.exit(main())
