"""File formats: measurement CSVs, distribution tables, map caches.

All text artifacts are comma-separated with a leading block of ``#``
comment lines carrying provenance (seed, generator kind, true
parameters, config hash).  Floats are written with ``repr`` so a
read-back reproduces the binary values exactly.  Writers stage into a
temporary file and rename, so readers never observe partial output.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import os
import struct
import tempfile
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .combine import Map2D
from .errors import DataInconsistencyError
from .inference import Posterior, TauGrid
from .likelihood import (
    BecMziConfig,
    CountBin,
    NestedMziConfig,
    SingleAtomBin,
    SingleAtomConfig,
    TalbotLauRun,
    infer_blocked_pulsed,
    infer_blocked_stationary,
)

__all__ = [
    "write_talbot_lau_csv",
    "read_talbot_lau_csv",
    "talbot_lau_run_from_csv",
    "write_bec_csv",
    "read_bec_csv",
    "bec_config_from_csv",
    "write_nested_csv",
    "read_nested_csv",
    "nested_config_from_csv",
    "write_single_atom_csv",
    "read_single_atom_csv",
    "single_atom_config_from_csv",
    "write_distribution_csv",
    "read_distribution_csv",
    "write_summary_csv",
    "read_summary_csv",
    "write_map_csv",
    "read_map_csv",
    "write_map_cache",
    "read_map_cache",
]

_CACHE_MAGIC = b"MMMMAP2D"
_CACHE_VERSION = 1


# ---------------------------------------------------------------------------
# Low-level helpers


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _render_csv(
    kind: str,
    header: Sequence[str],
    rows,
    provenance: Mapping[str, object] | None,
) -> bytes:
    buf = io.StringIO()
    buf.write(f"# mmmbayes {kind}\n")
    for key, value in (provenance or {}).items():
        buf.write(f"# {key} = {_fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else _fmt(v) for v in row])
    return buf.getvalue().encode()


def _parse_csv(path: str, expected_header: Sequence[str]):
    provenance: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise DataInconsistencyError(f"cannot read {path}: {exc}") from exc
    body: list[str] = []
    for line in lines:
        if line.startswith("#"):
            text = line[1:].strip()
            if "=" in text:
                key, _, value = text.partition("=")
                provenance[key.strip()] = value.strip()
            continue
        if line.strip():
            body.append(line)
    if not body:
        raise DataInconsistencyError(f"{path} holds no table")
    rows = list(csv.reader(body))
    header = [h.strip() for h in rows[0]]
    if header != list(expected_header):
        raise DataInconsistencyError(
            f"{path} header {header} does not match {list(expected_header)}"
        )
    return provenance, rows[1:]


def _column(rows, idx: int, path: str, name: str, allow_blank: bool = False):
    out = []
    for i, row in enumerate(rows):
        try:
            cell = row[idx].strip()
        except IndexError:
            raise DataInconsistencyError(
                f"{path} row {i + 2} is missing column {name}"
            ) from None
        if cell == "":
            if allow_blank:
                out.append(None)
                continue
            raise DataInconsistencyError(f"{path} row {i + 2} has empty {name}")
        try:
            out.append(float(cell))
        except ValueError:
            raise DataInconsistencyError(
                f"{path} row {i + 2} has non-numeric {name}: {cell!r}"
            ) from None
    return out


def _require_counts(values, path: str, name: str) -> NDArray:
    arr = np.asarray(values, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0):
        raise DataInconsistencyError(f"{path}: {name} must be nonnegative")
    if np.any(arr != np.round(arr)):
        raise DataInconsistencyError(f"{path}: {name} must be whole counts")
    return arr


# ---------------------------------------------------------------------------
# Measurement files

_TL_HEADER = ("x_s_m", "n_plus", "n_zero")
_BEC_HEADER = ("shot_id", "n_a")
_NESTED_HEADER = ("shot_id", "delta_phi_rad", "delta_phi_true_rad")
_SA_HEADER = ("k", "N_k", "n_a")


def write_talbot_lau_csv(
    path: str,
    positions: NDArray,
    n_plus: NDArray,
    n_zero: NDArray | None = None,
    provenance: Mapping[str, object] | None = None,
) -> None:
    """Write a mask-scan count table.

    ``n_zero`` (the laser-off counts) is only present for pulsed-mode
    data; stationary files leave the column blank.
    """
    positions = np.asarray(positions, dtype=float)
    n_plus = np.asarray(n_plus)
    if n_zero is not None and len(n_zero) != positions.size:
        raise ValueError("n_zero must match the number of positions")
    if n_plus.shape != positions.shape:
        raise ValueError("n_plus must match the number of positions")
    rows = [
        (x, int(p), None if n_zero is None else int(n_zero[i]))
        for i, (x, p) in enumerate(zip(positions, n_plus))
    ]
    _atomic_write(path, _render_csv("talbot_lau", _TL_HEADER, rows, provenance))


def read_talbot_lau_csv(path: str):
    """Return ``(provenance, positions, n_plus, n_zero_or_None)``."""
    provenance, rows = _parse_csv(path, _TL_HEADER)
    positions = np.asarray(_column(rows, 0, path, "x_s_m"), dtype=float)
    n_plus = _require_counts(_column(rows, 1, path, "n_plus"), path, "n_plus")
    zeros = _column(rows, 2, path, "n_zero", allow_blank=True)
    if all(z is None for z in zeros):
        n_zero = None
    elif any(z is None for z in zeros):
        raise DataInconsistencyError(f"{path}: n_zero must be all blank or all set")
    else:
        n_zero = _require_counts(zeros, path, "n_zero")
    if not np.all(np.isfinite(positions)):
        raise DataInconsistencyError(f"{path}: positions must be finite")
    return provenance, positions, n_plus, n_zero


def talbot_lau_run_from_csv(
    design: TalbotLauRun, path: str, scan_periods: int | None = None
) -> TalbotLauRun:
    """Attach counts from a file to a scan design.

    Stationary files need ``scan_periods`` for the fair-sampling
    reconstruction of the blocked counts; pulsed files reconstruct per
    row from the laser-off column.
    """
    _, positions, n_plus, n_zero = read_talbot_lau_csv(path)
    if design.mode == "stationary":
        if n_zero is not None:
            raise DataInconsistencyError(
                f"{path} carries laser-off counts but the design is stationary"
            )
        if scan_periods is None:
            raise ValueError("stationary reconstruction needs scan_periods")
        bins = infer_blocked_stationary(positions, n_plus, scan_periods, design.f3)
    else:
        if n_zero is None:
            raise DataInconsistencyError(
                f"{path} lacks laser-off counts required by a pulsed design"
            )
        bins = tuple(
            CountBin(float(x), float(p), infer_blocked_pulsed(p, z, design.f3))
            for x, p, z in zip(positions, n_plus, n_zero)
        )
    return dataclasses.replace(design, bins=bins)


def write_bec_csv(
    path: str,
    shots: Sequence[float],
    provenance: Mapping[str, object] | None = None,
) -> None:
    rows = [(i, float(s)) for i, s in enumerate(shots)]
    _atomic_write(path, _render_csv("bec_mzi", _BEC_HEADER, rows, provenance))


def read_bec_csv(path: str):
    """Return ``(provenance, shots)``."""
    provenance, rows = _parse_csv(path, _BEC_HEADER)
    shots = np.asarray(_column(rows, 1, path, "n_a"), dtype=float)
    if np.any(~np.isfinite(shots)) or np.any(shots < 0.0):
        raise DataInconsistencyError(f"{path}: n_a must be finite and nonnegative")
    return provenance, shots


def bec_config_from_csv(design: BecMziConfig, path: str) -> BecMziConfig:
    _, shots = read_bec_csv(path)
    if np.any(shots > design.n_atoms):
        raise DataInconsistencyError(
            f"{path}: shot exceeds the configured atom number"
        )
    return dataclasses.replace(design, shots=tuple(float(s) for s in shots))


def write_nested_csv(
    path: str,
    shots: Sequence[float],
    delta_phi_true: Sequence[float],
    provenance: Mapping[str, object] | None = None,
) -> None:
    if len(shots) != len(delta_phi_true):
        raise ValueError("need one true phase per shot")
    rows = [(i, float(s), float(d)) for i, (s, d) in enumerate(zip(shots, delta_phi_true))]
    _atomic_write(path, _render_csv("nested_mzi", _NESTED_HEADER, rows, provenance))


def read_nested_csv(path: str):
    """Return ``(provenance, shots, delta_phi_true)``."""
    provenance, rows = _parse_csv(path, _NESTED_HEADER)
    shots = np.asarray(_column(rows, 1, path, "delta_phi_rad"), dtype=float)
    true = np.asarray(_column(rows, 2, path, "delta_phi_true_rad"), dtype=float)
    for name, arr in (("delta_phi_rad", shots), ("delta_phi_true_rad", true)):
        if np.any(~np.isfinite(arr)):
            raise DataInconsistencyError(f"{path}: {name} must be finite")
    return provenance, shots, true


def nested_config_from_csv(design: NestedMziConfig, path: str) -> NestedMziConfig:
    _, shots, true = read_nested_csv(path)
    return dataclasses.replace(
        design,
        shots=tuple(float(s) for s in shots),
        delta_phi_true=tuple(float(d) for d in true),
    )


def write_single_atom_csv(
    path: str,
    bins: Sequence[SingleAtomBin],
    provenance: Mapping[str, object] | None = None,
) -> None:
    rows = [(b.k, b.n_total, b.n_a) for b in bins]
    _atomic_write(path, _render_csv("single_atom", _SA_HEADER, rows, provenance))


def read_single_atom_csv(path: str):
    """Return ``(provenance, bins)``."""
    provenance, rows = _parse_csv(path, _SA_HEADER)
    k = _require_counts(_column(rows, 0, path, "k"), path, "k")
    totals = _require_counts(_column(rows, 1, path, "N_k"), path, "N_k")
    counts = _require_counts(_column(rows, 2, path, "n_a"), path, "n_a")
    if np.any(counts > totals):
        raise DataInconsistencyError(f"{path}: n_a exceeds N_k")
    bins = tuple(
        SingleAtomBin(int(kk), int(n), int(c)) for kk, n, c in zip(k, totals, counts)
    )
    return provenance, bins


def single_atom_config_from_csv(
    design: SingleAtomConfig, path: str
) -> SingleAtomConfig:
    _, bins = read_single_atom_csv(path)
    return dataclasses.replace(design, bins=bins)


# ---------------------------------------------------------------------------
# Distributions and summaries

_DIST_HEADER = ("tau_e_seconds", "density", "log_density")


def write_distribution_csv(
    path: str,
    post: Posterior,
    include_relative: bool = False,
    provenance: Mapping[str, object] | None = None,
) -> None:
    """Write a density table; ``include_relative`` appends a column with
    the density scaled to its maximum for direct plotting."""
    header = _DIST_HEADER + (("p_over_max",) if include_relative else ())
    dens = post.density
    peak = float(np.max(dens))
    rows = []
    for i, t in enumerate(post.grid.points):
        row = [float(t), float(dens[i]), float(post.log_density[i])]
        if include_relative:
            row.append(float(dens[i] / peak))
        rows.append(row)
    _atomic_write(path, _render_csv("distribution", header, rows, provenance))


def read_distribution_csv(path: str):
    """Return ``(provenance, posterior)`` rebuilt from the stored
    log-density without renormalizing."""
    expected = _DIST_HEADER
    if _peek_header(path) != list(_DIST_HEADER):
        expected = _DIST_HEADER + ("p_over_max",)
    provenance, rows = _parse_csv(path, expected)
    tau = np.asarray(_column(rows, 0, path, "tau_e_seconds"), dtype=float)
    log_density = np.asarray(_column(rows, 2, path, "log_density"), dtype=float)
    return provenance, Posterior(TauGrid(tau), log_density)


def _peek_header(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                if line.startswith("#") or not line.strip():
                    continue
                return [h.strip() for h in next(csv.reader([line]))]
    except OSError as exc:
        raise DataInconsistencyError(f"cannot read {path}: {exc}") from exc
    raise DataInconsistencyError(f"{path} holds no table")


_SUMMARY_HEADER = ("key", "value")


def write_summary_csv(
    path: str,
    values: Mapping[str, float],
    provenance: Mapping[str, object] | None = None,
) -> None:
    rows = [(k, float(v)) for k, v in values.items()]
    _atomic_write(path, _render_csv("summary", _SUMMARY_HEADER, rows, provenance))


def read_summary_csv(path: str):
    """Return ``(provenance, dict)``."""
    provenance, rows = _parse_csv(path, _SUMMARY_HEADER)
    out: dict[str, float] = {}
    for i, row in enumerate(rows):
        if len(row) != 2:
            raise DataInconsistencyError(f"{path} row {i + 2} is malformed")
        try:
            out[row[0].strip()] = float(row[1])
        except ValueError:
            raise DataInconsistencyError(
                f"{path} row {i + 2} has non-numeric value"
            ) from None
    return provenance, out


# ---------------------------------------------------------------------------
# Parameter maps

_MAP_HEADER = (
    "tau_e_seconds",
    "hbar_over_sigma_q_m",
    "log_lik",
    "csl_lambda_hz",
    "csl_rc_m",
)


def write_map_csv(
    path: str, m: Map2D, provenance: Mapping[str, object] | None = None
) -> None:
    """Long-format table of the map with the collapse-model coordinates
    of every node appended for direct replotting."""
    from .constants import NEUTRON_ELECTRON_MASS_RATIO

    sqrt2 = float(np.sqrt(2.0))
    rows = []
    for i, t in enumerate(m.tau):
        rate = NEUTRON_ELECTRON_MASS_RATIO**2 / t
        for j, ell in enumerate(m.length):
            rows.append((float(t), float(ell), float(m.values[i, j]), rate, ell / sqrt2))
    base = dict(provenance or {})
    base.setdefault("label", m.label)
    _atomic_write(path, _render_csv("map2d", _MAP_HEADER, rows, base))


def read_map_csv(path: str):
    """Return ``(provenance, Map2D)``; rows must form a complete grid in
    row-major order."""
    provenance, rows = _parse_csv(path, _MAP_HEADER)
    tau_col = np.asarray(_column(rows, 0, path, "tau_e_seconds"), dtype=float)
    len_col = np.asarray(_column(rows, 1, path, "hbar_over_sigma_q_m"), dtype=float)
    val_col = np.asarray(_column(rows, 2, path, "log_lik"), dtype=float)
    tau = np.unique(tau_col)
    length = np.unique(len_col)
    if tau.size * length.size != val_col.size:
        raise DataInconsistencyError(f"{path}: rows do not form a complete grid")
    expect_tau = np.repeat(tau, length.size)
    expect_len = np.tile(length, tau.size)
    if not (np.array_equal(tau_col, expect_tau) and np.array_equal(len_col, expect_len)):
        raise DataInconsistencyError(f"{path}: rows are not in row-major grid order")
    values = val_col.reshape(tau.size, length.size)
    return provenance, Map2D(provenance.get("label", ""), tau, length, values)


def write_map_cache(path: str, m: Map2D) -> None:
    """Binary map snapshot for fast reload; see :func:`read_map_cache`."""
    label = m.label.encode()
    parts = [
        _CACHE_MAGIC,
        struct.pack("<B", _CACHE_VERSION),
        struct.pack("<I", len(label)),
        label,
        struct.pack("<II", m.tau.size, m.length.size),
        struct.pack(
            "<4d",
            float(m.tau[0]),
            float(m.tau[-1]),
            float(m.length[0]),
            float(m.length[-1]),
        ),
        np.ascontiguousarray(m.tau, dtype="<f8").tobytes(),
        np.ascontiguousarray(m.length, dtype="<f8").tobytes(),
        np.ascontiguousarray(m.values, dtype="<f8").tobytes(),
    ]
    _atomic_write(path, b"".join(parts))


def read_map_cache(path: str) -> Map2D:
    try:
        with open(path, "rb") as handle:
            blob = handle.read()
    except OSError as exc:
        raise DataInconsistencyError(f"cannot read {path}: {exc}") from exc
    view = memoryview(blob)

    def take(n: int) -> memoryview:
        nonlocal view
        if len(view) < n:
            raise DataInconsistencyError(f"{path} is truncated")
        head, view = view[:n], view[n:]
        return head

    if bytes(take(len(_CACHE_MAGIC))) != _CACHE_MAGIC:
        raise DataInconsistencyError(f"{path} is not a map cache")
    (version,) = struct.unpack("<B", take(1))
    if version != _CACHE_VERSION:
        raise DataInconsistencyError(f"{path} has unsupported cache version {version}")
    (label_len,) = struct.unpack("<I", take(4))
    label = bytes(take(label_len)).decode()
    n_tau, n_len = struct.unpack("<II", take(8))
    bounds = struct.unpack("<4d", take(32))
    tau = np.frombuffer(take(8 * n_tau), dtype="<f8").copy()
    length = np.frombuffer(take(8 * n_len), dtype="<f8").copy()
    values = (
        np.frombuffer(take(8 * n_tau * n_len), dtype="<f8")
        .reshape(n_tau, n_len)
        .copy()
    )
    if len(view):
        raise DataInconsistencyError(f"{path} carries trailing bytes")
    if (tau[0], tau[-1], length[0], length[-1]) != bounds:
        raise DataInconsistencyError(f"{path}: stored bounds disagree with axes")
    return Map2D(label, tau, length, values)
