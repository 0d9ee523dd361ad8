#!/usr/bin/env python3
"""
Spectra, truncation convergence, cross-gauge deviations and parameter sweeps.

Every routine takes a gauge_models.ModelConfig and returns plain data
(dataclasses or row lists) that cli.py turns into CSV/JSON artifacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from multiprocessing.dummy import Pool
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from common import ConfigError, SolverError, error_code, resolve_settings
from gauge_models import ModeSpec, ModelConfig, build_hamiltonian
from multimode import coupling_integral, field_hamiltonian, multimode_gauge_unitary
from numal import RealVector, eigvalsh_lowest, max_abs_diff, spectrum_distance
from quantum_ops import embed, identity, pauli
from schrodinger1d import TlsParams

SWEEP_PARAMETERS: Tuple[str, ...] = ("eta", "eps", "omega_ph", "k_mode")
SWEEP_METRICS: Tuple[str, ...] = ("levels", "deviation", "coupling")

# Slack allowed when checking that residuals do not grow across doublings.
MONOTONE_SLACK: float = 1e-12


@dataclass(frozen=True)
class SpectrumResult:
    """
    Lowest eigenvalues at the truncation `n_used` (first mode's N).

    history holds (N, residual) for every doubling that was compared.
    """

    eigenvalues: RealVector
    n_used: int
    converged: bool
    residual: float
    history: Tuple[Tuple[int, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.residual < 0 or math.isnan(self.residual):
            raise SolverError(f"residual must be >= 0, got {self.residual}")

    @property
    def residuals(self) -> List[float]:
        return [r for _, r in self.history]


@dataclass(frozen=True)
class DeviationRow:
    eta: float
    gi_deviation: float
    linearized_deviation: float
    n_gi: int
    n_dipole: int
    n_linearized: int

    HEADER = (
        "eta",
        "gi_deviation",
        "linearized_deviation",
        "n_coulomb_gi",
        "n_dipole",
        "n_linearized",
    )

    def as_row(self) -> List[Any]:
        return [
            self.eta,
            self.gi_deviation,
            self.linearized_deviation,
            self.n_gi,
            self.n_dipole,
            self.n_linearized,
        ]


@dataclass(frozen=True)
class SweepTable:
    header: List[str]
    rows: List[List[Any]]

    @property
    def failures(self) -> int:
        return sum(1 for row in self.rows if row[-1] != "ok")


def _check_levels(cfg: ModelConfig, k: int) -> None:
    if k < 1:
        raise ConfigError(f"number of levels must be >= 1, got {k}")
    if k > cfg.dimension:
        raise ConfigError(f"requested {k} levels of a {cfg.dimension}-dimensional model")


def spectrum(cfg: ModelConfig, k: int) -> SpectrumResult:
    """
    Lowest k eigenvalues at the configured truncation (single shot).
    """
    _check_levels(cfg, k)
    values = eigvalsh_lowest(build_hamiltonian(cfg), k)
    return SpectrumResult(eigenvalues=values, n_used=cfg.dims[0], converged=False, residual=0.0)


def converge_truncation(
    cfg: ModelConfig, k: int, tol: Optional[float] = None, max_dim: Optional[int] = None
) -> SpectrumResult:
    """
    Double every Fock truncation until the k lowest eigenvalues move by at most
    tol between successive truncations, or the composite cap is reached.

    The returned spectrum is the one at the finer truncation of the last pair.
    """
    settings = resolve_settings(max_dim=max_dim if max_dim is not None else cfg.max_dim)
    tol = settings["converge_tol"] if tol is None else tol
    if not tol > 0:
        raise ConfigError(f"convergence tolerance must be > 0, got {tol}")
    cap = settings["max_dim"]
    if k < 1:
        raise ConfigError(f"number of levels must be >= 1, got {k}")

    # the builders check the same cap as the doubling loop
    current = replace(cfg, max_dim=cap)
    while current.dimension < k:
        current = current.doubled()
    if current.dimension > cap:
        raise SolverError(f"{k} levels need dimension {current.dimension} above the cap {cap}")

    previous = spectrum(current, k).eigenvalues
    history: List[Tuple[int, float]] = []
    while True:
        finer = current.doubled()
        if finer.dimension > cap:
            residual = history[-1][1] if history else math.inf
            print(
                f"[warn] {cfg.gauge}: not converged at N={current.dims[0]} "
                f"(cap {cap}, residual {residual:.3e})"
            )
            return SpectrumResult(previous, current.dims[0], False, residual, tuple(history))
        values = spectrum(finer, k).eigenvalues
        residual = float(np.max(np.abs(values - previous)))
        history.append((finer.dims[0], residual))
        print(f"[converge] {cfg.gauge} N={finer.dims[0]} residual={residual:.3e}")
        if residual <= tol:
            return SpectrumResult(values, finer.dims[0], True, residual, tuple(history))
        current, previous = finer, values


def is_monotone(result: SpectrumResult, slack: float = MONOTONE_SLACK) -> bool:
    residuals = result.residuals
    return all(b <= a + slack for a, b in zip(residuals, residuals[1:]))


def _converged(cfg: ModelConfig, k: int, tol: float, max_dim: Optional[int]) -> SpectrumResult:
    result = converge_truncation(cfg, k, tol, max_dim)
    if not result.converged:
        raise SolverError(
            f"{cfg.gauge} spectrum did not converge (residual {result.residual:.3e} > {tol:.1e})"
        )
    return result


def deviation_at(
    cfg: ModelConfig, k: int, tol: Optional[float] = None, max_dim: Optional[int] = None
) -> DeviationRow:
    """
    Cross-gauge deviations at one coupling; each gauge converged on its own.
    """
    tol = resolve_settings()["converge_tol"] if tol is None else tol
    gi = _converged(cfg.with_gauge("coulomb_gi"), k, tol, max_dim)
    dipole = _converged(cfg.with_gauge("dipole"), k, tol, max_dim)
    linear = _converged(cfg.with_gauge("coulomb_linearized"), k, tol, max_dim)
    return DeviationRow(
        eta=cfg.eta,
        gi_deviation=spectrum_distance(gi.eigenvalues, dipole.eigenvalues, k),
        linearized_deviation=spectrum_distance(linear.eigenvalues, dipole.eigenvalues, k),
        n_gi=gi.n_used,
        n_dipole=dipole.n_used,
        n_linearized=linear.n_used,
    )


def gauge_deviation(
    tls: TlsParams,
    mode: ModeSpec,
    eta_grid: Sequence[float],
    k: int,
    tol: Optional[float] = None,
    max_dim: Optional[int] = None,
) -> List[DeviationRow]:
    """
    One row per eta: max_i |E_i(coulomb_gi) - E_i(dipole)| and the same for
    the linearized baseline. A0 is rescaled per row so that q (a/2) A0 = eta.
    """
    if not eta_grid:
        raise ConfigError("eta grid must not be empty")
    base = ModelConfig(tls=tls, modes=(mode,), gauge="coulomb_gi", max_dim=max_dim)
    rows = []
    for eta in eta_grid:
        row = deviation_at(base.with_eta(float(eta)), k, tol, max_dim)
        print(
            f"[gauge-check] eta={row.eta:.4g} gi={row.gi_deviation:.3e} "
            f"linearized={row.linearized_deviation:.3e}"
        )
        rows.append(row)
    return rows


def similarity_deviation(cfg: ModelConfig, family: str = "rho_z") -> float:
    """
    Sorted-spectrum distance between H and U^dagger H U at the same truncation.
    """
    h = build_hamiltonian(cfg)
    u = multimode_gauge_unitary(cfg.tls, cfg.modes, family, cfg.dipole_approx, cfg.max_dim)
    conjugated = u.conj().T @ h @ u
    return spectrum_distance(np.linalg.eigvalsh(h), np.linalg.eigvalsh(conjugated))


def construction_deviation(cfg: ModelConfig) -> float:
    """
    |H_gi - U (eps/2 rho_z - Delta/2 rho_x) U^dagger - H_field|_max for the
    gauge-invariant builder, U = exp(i Phi rho_z / 2).
    """
    dims = cfg.dims
    u = multimode_gauge_unitary(cfg.tls, cfg.modes, "rho_z", cfg.dipole_approx, cfg.max_dim)
    bare = 0.5 * cfg.tls.eps * pauli("rho", "z") - 0.5 * cfg.tls.delta * pauli("rho", "x")
    total = int(np.prod(dims, dtype=np.int64))
    h_field = field_hamiltonian([m.omega_ph for m in cfg.modes], dims)
    expected = u @ embed(bare, identity(total)) @ u.conj().T + embed(identity(2), h_field)
    return max_abs_diff(build_hamiltonian(cfg.with_gauge("coulomb_gi")), expected)


def apply_parameter(cfg: ModelConfig, parameter: str, value: float) -> ModelConfig:
    """
    A copy of cfg with one sweep parameter set (first mode for mode parameters).
    """
    if parameter == "eta":
        return cfg.with_eta(value)
    if parameter == "eps":
        tls = replace(cfg.tls, eps=value, omega_q=math.hypot(cfg.tls.delta, value))
        return replace(cfg, tls=tls)
    first = cfg.modes[0]
    if parameter == "omega_ph":
        first = replace(first, omega_ph=value)
    elif parameter == "k_mode":
        if first.profile is None:
            raise ConfigError("k_mode sweeps need a mode profile")
        first = replace(first, profile=first.profile.with_k(value))
    else:
        raise ConfigError(f"unknown sweep parameter {parameter!r}")
    return replace(cfg, modes=(first,) + cfg.modes[1:])


def sweep_header(parameter: str, metric: str, k: int) -> List[str]:
    if metric not in SWEEP_METRICS:
        raise ConfigError(f"unknown sweep metric {metric!r}; expected one of {SWEEP_METRICS}")
    if metric == "levels":
        columns = [f"E{i}" for i in range(k)] + ["n_used", "converged", "residual"]
    elif metric == "deviation":
        columns = list(DeviationRow.HEADER[1:])
    else:
        columns = ["eta_k"]
    return [parameter] + columns + ["status"]


def _coupling_value(cfg: ModelConfig) -> float:
    # the line integral over the profile, whatever the dipole_approx flag of the model
    mode = cfg.modes[0]
    if mode.profile is None:
        return mode.coupling(cfg.tls)
    return coupling_integral(mode.shape(), cfg.tls, method="quadrature")


def _sweep_point(
    cfg: ModelConfig,
    parameter: str,
    metric: str,
    value: float,
    k: int,
    tol: Optional[float],
    energy_scale: float,
    width: int,
) -> List[Any]:
    try:
        point = apply_parameter(cfg, parameter, value)
        if metric == "levels":
            result = converge_truncation(point, k, tol)
            values: List[Any] = [float(e) / energy_scale for e in result.eigenvalues]
            values += [result.n_used, str(result.converged).lower(), result.residual / energy_scale]
        elif metric == "deviation":
            row = deviation_at(point, k, tol)
            values = [row.gi_deviation / energy_scale, row.linearized_deviation / energy_scale]
            values += [row.n_gi, row.n_dipole, row.n_linearized]
        else:
            values = [_coupling_value(point)]
        return [value] + values + ["ok"]
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"[warn] {parameter}={value:.6g}: {exc}")
        return [value] + [float("nan")] * (width - 2) + [f"error:{error_code(exc)}"]


def sweep(
    cfg: ModelConfig,
    parameter: str,
    grid: Sequence[float],
    metric: str = "levels",
    k: int = 4,
    tol: Optional[float] = None,
    workers: int = 1,
    energy_scale: float = 1.0,
) -> SweepTable:
    """
    Evaluate one metric on every grid point; rows follow grid order and a
    failing point is recorded in its status column instead of aborting.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {parameter!r}")
    values = [float(v) for v in grid]
    if not values or not all(math.isfinite(v) for v in values):
        raise ConfigError("sweep grid must be finite and non-empty")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    header = sweep_header(parameter, metric, k)

    def point(value: float) -> List[Any]:
        return _sweep_point(cfg, parameter, metric, value, k, tol, energy_scale, len(header))

    print(f"[sweep] {parameter} x {len(values)} points, metric={metric}, workers={workers}")
    if workers == 1:
        rows = [point(v) for v in values]
    else:
        with Pool(workers) as pool:
            rows = pool.map(point, values)
    table = SweepTable(header=header, rows=rows)
    print(f"[summary] {len(rows) - table.failures} ok, {table.failures} failed")
    return table
