#!/usr/bin/env python3
"""
Command-line entry point for the gauge-rabi toolkit.

    gauge-rabi <reduce|spectrum|gauge-check|cutoff|converge|sweep|plot> --config run.json
               [--out DIR] [--json]

Every command writes its tables to the output directory together with a
`<command>.manifest.json` (echoed config, library versions, wall time and
the sha256 of each artifact). Exit codes: 0 ok, 2 config, 3 numeric, 4 data/io.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from analysis import (  # noqa: E402
    DeviationRow,
    converge_truncation,
    gauge_deviation,
    spectrum,
    sweep,
)
from common import (  # noqa: E402
    ConfigError,
    DataError,
    SolverError,
    ensure_dir,
    read_csv,
    resolve_settings,
    write_csv,
    write_json,
)
from gauge_models import GAUGES, ModelConfig, ModeSpec  # noqa: E402
from multimode import COUPLING_METHODS, ModeProfile, cutoff_scan  # noqa: E402
from quantum_ops import FockSpace  # noqa: E402
from schrodinger1d import Grid1D, PotentialSpec, TlsParams, reduce_potential  # noqa: E402

COMMANDS: Tuple[str, ...] = (
    "reduce",
    "spectrum",
    "gauge-check",
    "cutoff",
    "converge",
    "sweep",
    "plot",
)
UNITS: Tuple[str, ...] = ("natural", "absolute")
DEFAULT_LEVELS: int = 6
DEFAULT_FOCK: int = 8
SVG_HASH_SALT: str = "gauge-rabi"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_DATA = 4

_TOP_KEYS = {
    "units",
    "potential",
    "grid",
    "tls",
    "modes",
    "eta",
    "gauge",
    "dipole_approx",
    "oversample",
    "levels",
    "tolerances",
    "max_dim",
    "workers",
    "gauge_check",
    "cutoff",
    "sweep",
    "plot",
    "output",
}


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    grid: Tuple[float, ...]
    metric: str = "levels"


@dataclass(frozen=True)
class CutoffSpec:
    k_values: Tuple[float, ...]
    method: str = "quadrature"


@dataclass(frozen=True)
class PlotSpec:
    csv: Path
    x: str
    y: Tuple[str, ...]


@dataclass(frozen=True)
class RunConfig:
    """
    A validated run config. `raw` keeps the parsed JSON for the manifest echo.
    """

    raw: Dict[str, Any]
    units: str = "natural"
    potential: Optional[PotentialSpec] = None
    grid: Optional[Grid1D] = None
    tls: Optional[TlsParams] = None
    modes: Tuple[ModeSpec, ...] = ()
    eta: Optional[float] = None
    gauge: str = "coulomb_gi"
    dipole_approx: bool = True
    oversample: int = 1
    levels: int = DEFAULT_LEVELS
    converge_tol: Optional[float] = None
    max_dim: Optional[int] = None
    workers: int = 1
    eta_grid: Tuple[float, ...] = ()
    cutoff: Optional[CutoffSpec] = None
    sweep: Optional[SweepSpec] = None
    plot: Optional[PlotSpec] = None
    out_dir: Optional[Path] = None

    @property
    def energy_scale(self) -> float:
        if self.units == "natural" and self.modes:
            return self.modes[0].omega_ph
        return 1.0


def _keys(block: Any, allowed: Sequence[str], where: str) -> Dict[str, Any]:
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    return block


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where} must be finite")
    return float(value)


def _integer(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    return value


def _numbers(value: Any, where: str) -> Tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{where} must be a non-empty list of numbers")
    return tuple(_number(v, f"{where}[{i}]") for i, v in enumerate(value))


def _samples(value: Any, where: str) -> Tuple[Tuple[float, float], ...]:
    if not isinstance(value, list):
        raise ConfigError(f"{where} must be a list of [x, value] pairs")
    pairs = []
    for i, pair in enumerate(value):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"{where}[{i}] must be an [x, value] pair")
        pairs.append((_number(pair[0], f"{where}[{i}]"), _number(pair[1], f"{where}[{i}]")))
    return tuple(pairs)


def _parse_potential(block: Any) -> PotentialSpec:
    b = _keys(block, ("kind", "V0", "x0", "tilt", "m", "q", "samples"), "potential")
    if "kind" not in b:
        raise ConfigError("potential.kind is required")
    return PotentialSpec(
        kind=str(b["kind"]),
        V0=_number(b.get("V0", 0.0), "potential.V0"),
        x0=_number(b.get("x0", 1.0), "potential.x0"),
        tilt=_number(b.get("tilt", 0.0), "potential.tilt"),
        m=_number(b.get("m", 1.0), "potential.m"),
        q=_number(b.get("q", 1.0), "potential.q"),
        samples=_samples(b.get("samples", []), "potential.samples"),
    )


def _parse_grid(block: Any) -> Grid1D:
    b = _keys(block, ("x_min", "x_max", "n"), "grid")
    missing = [k for k in ("x_min", "x_max", "n") if k not in b]
    if missing:
        raise ConfigError(f"grid is missing {', '.join(missing)}")
    return Grid1D(
        _number(b["x_min"], "grid.x_min"),
        _number(b["x_max"], "grid.x_max"),
        _integer(b["n"], "grid.n"),
    )


def _parse_tls(block: Any) -> TlsParams:
    b = _keys(block, ("delta", "eps", "a", "q"), "tls")
    if "delta" not in b:
        raise ConfigError("tls.delta is required")
    return TlsParams.from_gap(
        delta=_number(b["delta"], "tls.delta"),
        eps=_number(b.get("eps", 0.0), "tls.eps"),
        a=_number(b.get("a", 1.0), "tls.a"),
        q=_number(b.get("q", 1.0), "tls.q"),
    )


def _parse_profile(block: Any, where: str) -> ModeProfile:
    b = _keys(block, ("kind", "k", "phase", "samples"), where)
    return ModeProfile(
        kind=str(b.get("kind", "constant")),
        k=_number(b.get("k", 0.0), f"{where}.k"),
        phase=_number(b.get("phase", 0.0), f"{where}.phase"),
        samples=_samples(b.get("samples", []), f"{where}.samples"),
    )


def _parse_modes(block: Any) -> Tuple[ModeSpec, ...]:
    if not isinstance(block, list) or not block:
        raise ConfigError("modes must be a non-empty list")
    modes = []
    for i, entry in enumerate(block):
        where = f"modes[{i}]"
        b = _keys(entry, ("omega_ph", "A0", "n_max", "profile"), where)
        profile = _parse_profile(b["profile"], f"{where}.profile") if "profile" in b else None
        modes.append(
            ModeSpec(
                omega_ph=_number(b.get("omega_ph", 1.0), f"{where}.omega_ph"),
                A0=_number(b.get("A0", 0.0), f"{where}.A0"),
                fock=FockSpace(_integer(b.get("n_max", DEFAULT_FOCK), f"{where}.n_max")),
                profile=profile,
            )
        )
    return tuple(modes)


def _parse_cutoff(block: Any) -> CutoffSpec:
    b = _keys(block, ("k_values", "k_min", "k_max", "points", "method"), "cutoff")
    method = str(b.get("method", "quadrature"))
    if method not in COUPLING_METHODS:
        raise ConfigError(f"cutoff.method must be one of {', '.join(COUPLING_METHODS)}")
    if "k_values" in b:
        return CutoffSpec(_numbers(b["k_values"], "cutoff.k_values"), method)
    if not all(k in b for k in ("k_min", "k_max", "points")):
        raise ConfigError("cutoff needs k_values or k_min, k_max and points")
    points = _integer(b["points"], "cutoff.points")
    if points < 1:
        raise ConfigError("cutoff.points must be >= 1")
    k_min = _number(b["k_min"], "cutoff.k_min")
    k_max = _number(b["k_max"], "cutoff.k_max")
    grid = np.linspace(k_min, k_max, points)
    return CutoffSpec(tuple(float(k) for k in grid), method)


def _parse_plot(block: Any, base: Path) -> PlotSpec:
    b = _keys(block, ("csv", "x", "y"), "plot")
    if not all(k in b for k in ("csv", "x", "y")):
        raise ConfigError("plot needs csv, x and y")
    ys = b["y"] if isinstance(b["y"], list) else [b["y"]]
    if not ys:
        raise ConfigError("plot.y must name at least one column")
    csv_path = Path(str(b["csv"]))
    if not csv_path.is_absolute():
        csv_path = base / csv_path
    return PlotSpec(csv_path, str(b["x"]), tuple(map(str, ys)))


def parse_run_config(raw: Any, base: Optional[Path] = None) -> RunConfig:
    """
    Validate a decoded JSON document into a RunConfig; unknown keys are rejected.
    """
    b = _keys(raw, sorted(_TOP_KEYS), "config")
    base = base or Path.cwd()
    units = str(b.get("units", "natural"))
    if units not in UNITS:
        raise ConfigError(f"units must be one of {', '.join(UNITS)}")
    if "tls" in b and "potential" in b:
        raise ConfigError("give either a tls block or a potential block, not both")
    gauge = str(b.get("gauge", "coulomb_gi"))
    if gauge not in GAUGES:
        raise ConfigError(f"gauge must be one of {', '.join(GAUGES)}")
    dipole_approx = b.get("dipole_approx", True)
    if not isinstance(dipole_approx, bool):
        raise ConfigError("dipole_approx must be true or false")

    converge_tol = None
    if "tolerances" in b:
        tolerances = _keys(b["tolerances"], ("converge",), "tolerances")
        if "converge" in tolerances:
            converge_tol = _number(tolerances["converge"], "tolerances.converge")

    eta_grid: Tuple[float, ...] = ()
    if "gauge_check" in b:
        check = _keys(b["gauge_check"], ("eta_grid",), "gauge_check")
        eta_grid = _numbers(check.get("eta_grid"), "gauge_check.eta_grid")

    sweep_spec = None
    if "sweep" in b:
        s = _keys(b["sweep"], ("parameter", "grid", "metric"), "sweep")
        if "parameter" not in s:
            raise ConfigError("sweep.parameter is required")
        sweep_spec = SweepSpec(
            parameter=str(s["parameter"]),
            grid=_numbers(s.get("grid"), "sweep.grid"),
            metric=str(s.get("metric", "levels")),
        )

    out_dir = None
    if "output" in b:
        out = _keys(b["output"], ("dir",), "output")
        if "dir" in out:
            out_dir = Path(str(out["dir"]))
            out_dir = out_dir if out_dir.is_absolute() else base / out_dir

    levels = _integer(b.get("levels", DEFAULT_LEVELS), "levels")
    if levels < 1:
        raise ConfigError("levels must be >= 1")

    return RunConfig(
        raw=raw,
        units=units,
        potential=_parse_potential(b["potential"]) if "potential" in b else None,
        grid=_parse_grid(b["grid"]) if "grid" in b else None,
        tls=_parse_tls(b["tls"]) if "tls" in b else None,
        modes=_parse_modes(b["modes"]) if "modes" in b else (),
        eta=_number(b["eta"], "eta") if "eta" in b else None,
        gauge=gauge,
        dipole_approx=dipole_approx,
        oversample=_integer(b.get("oversample", 1), "oversample"),
        levels=levels,
        converge_tol=converge_tol,
        max_dim=_integer(b["max_dim"], "max_dim") if "max_dim" in b else None,
        workers=_integer(b.get("workers", 1), "workers"),
        eta_grid=eta_grid,
        cutoff=_parse_cutoff(b["cutoff"]) if "cutoff" in b else None,
        sweep=sweep_spec,
        plot=_parse_plot(b["plot"], base) if "plot" in b else None,
        out_dir=out_dir,
    )


def load_run_config(path: Path) -> RunConfig:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: line {exc.lineno}: {exc.msg}") from exc
    return parse_run_config(raw, base=path.parent)


def resolve_tls(run: RunConfig) -> TlsParams:
    """
    TLS parameters from the tls block, or by reducing the potential.
    """
    if run.tls is not None:
        return run.tls
    if run.potential is None:
        raise ConfigError("config needs a tls block or a potential block")
    if run.grid is None:
        raise ConfigError("a potential block needs a grid block")
    params, _ = reduce_potential(run.potential, run.grid)
    return params


def build_model(run: RunConfig) -> ModelConfig:
    if not run.modes:
        raise ConfigError("config needs a modes block")
    cfg = ModelConfig(
        tls=resolve_tls(run),
        modes=run.modes,
        gauge=run.gauge,
        dipole_approx=run.dipole_approx,
        oversample=run.oversample,
        max_dim=run.max_dim,
    )
    return cfg.with_eta(run.eta) if run.eta is not None else cfg


@dataclass
class RunContext:
    command: str
    out_dir: Path
    json_mirror: bool
    config_path: Optional[Path]
    raw_config: Dict[str, Any]
    started: float = field(default_factory=time.perf_counter)
    started_utc: str = field(
        default_factory=lambda: datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    )
    artifacts: List[Path] = field(default_factory=list)
    warnings: int = 0

    def emit_table(self, stem: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        path = self.out_dir / f"{stem}.csv"
        write_csv(path, header, rows)
        self.artifacts.append(path)
        if self.json_mirror:
            mirror = self.out_dir / f"{stem}.json"
            write_json(mirror, {"header": list(header), "rows": [_jsonable(r) for r in rows]})
            self.artifacts.append(mirror)
        print(f"[{self.command}] wrote {path}")
        return path

    def emit_json(self, stem: str, payload: Any) -> Path:
        path = self.out_dir / f"{stem}.json"
        write_json(path, payload)
        self.artifacts.append(path)
        return path

    def finish(self) -> Path:
        manifest = {
            "command": self.command,
            "config_path": str(self.config_path) if self.config_path else None,
            "config": self.raw_config,
            "versions": _versions(),
            "started_utc": self.started_utc,
            "wall_time_s": round(time.perf_counter() - self.started, 6),
            "warnings": self.warnings,
            "artifacts": {p.name: _sha256(p) for p in self.artifacts},
        }
        path = self.out_dir / f"{self.command}.manifest.json"
        write_json(path, manifest)
        return path


def _jsonable(row: Sequence[Any]) -> List[Any]:
    return [None if isinstance(v, float) and not math.isfinite(v) else v for v in row]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _package_version(name: str) -> str:
    try:
        return metadata.version(name)
    except metadata.PackageNotFoundError:
        return "unknown"


def _versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": _package_version("scipy"),
        "matplotlib": matplotlib.__version__,
        "gauge-rabi": _package_version("gauge-rabi"),
    }


def cmd_reduce(run: RunConfig, ctx: RunContext) -> int:
    if run.potential is None or run.grid is None:
        raise ConfigError("reduce needs potential and grid blocks")
    params, report = reduce_potential(run.potential, run.grid, eta=run.eta)
    payload: Dict[str, Any] = {
        "tls": params.to_json(),
        "delta_minus_2t": params.delta - 2.0 * params.t,
    }
    if report is not None:
        payload["validity"] = {"verdict": report.verdict.value, "ratio": report.ratio}
    ctx.emit_json("reduce", payload)
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def cmd_spectrum(run: RunConfig, ctx: RunContext) -> int:
    cfg = build_model(run)
    result = spectrum(cfg, run.levels)
    scale = run.energy_scale
    rows = [[i, float(e) / scale] for i, e in enumerate(result.eigenvalues)]
    ctx.emit_table("spectrum", ["level", "energy"], rows)
    return EXIT_OK


def cmd_converge(run: RunConfig, ctx: RunContext) -> int:
    cfg = build_model(run)
    result = converge_truncation(cfg, run.levels, run.converge_tol, run.max_dim)
    scale = run.energy_scale
    levels = [[i, float(e) / scale] for i, e in enumerate(result.eigenvalues)]
    ctx.emit_table("converge", ["level", "energy"], levels)
    history = [[n, r / scale] for n, r in result.history]
    ctx.emit_table("converge_history", ["n", "residual"], history)
    if not result.converged:
        ctx.warnings += 1
        print(f"[warn] not converged: residual {result.residual:.3e} at N={result.n_used}")
    return EXIT_OK


def cmd_gauge_check(run: RunConfig, ctx: RunContext) -> int:
    cfg = build_model(run)
    if not run.eta_grid:
        raise ConfigError("gauge-check needs gauge_check.eta_grid")
    rows = gauge_deviation(
        cfg.tls, cfg.modes[0], list(run.eta_grid), run.levels, run.converge_tol, run.max_dim
    )
    scale = run.energy_scale
    table = []
    for row in rows:
        values = row.as_row()
        values[1] = row.gi_deviation / scale
        values[2] = row.linearized_deviation / scale
        table.append(values)
    ctx.emit_table("gauge_check", list(DeviationRow.HEADER), table)
    return EXIT_OK


def cmd_cutoff(run: RunConfig, ctx: RunContext) -> int:
    if run.cutoff is None:
        raise ConfigError("cutoff needs a cutoff block")
    tls = resolve_tls(run)
    amplitude = run.modes[0].A0 if run.modes else 1.0
    profile = ModeProfile("cosine", amplitude)
    if run.modes and run.modes[0].profile is not None:
        shape = run.modes[0].shape()
        profile = shape if shape.kind != "constant" else profile
    rows = cutoff_scan(tls, profile, run.cutoff.k_values, run.cutoff.method)
    ctx.emit_table("cutoff", ["k", "eta_k"], [[r.k, r.eta_k] for r in rows])
    return EXIT_OK


def cmd_sweep(run: RunConfig, ctx: RunContext) -> int:
    if run.sweep is None:
        raise ConfigError("sweep needs a sweep block")
    cfg = build_model(run)
    table = sweep(
        cfg,
        run.sweep.parameter,
        run.sweep.grid,
        run.sweep.metric,
        k=run.levels,
        tol=run.converge_tol,
        workers=run.workers,
        energy_scale=run.energy_scale,
    )
    ctx.emit_table("sweep", table.header, table.rows)
    ctx.warnings += table.failures
    if table.failures:
        print(f"[warn] {table.failures} sweep point(s) failed; see the status column")
    return EXIT_OK


def _column(header: List[str], rows: List[List[str]], name: str, path: Path) -> np.ndarray:
    if name not in header:
        raise DataError(f"column {name!r} not found in {path}")
    idx = header.index(name)
    values = []
    for row in rows:
        cell = row[idx] if idx < len(row) else ""
        try:
            values.append(float(cell) if cell != "" else math.nan)
        except ValueError as exc:
            raise DataError(f"column {name!r} in {path} is not numeric ({cell!r})") from exc
    return np.asarray(values, dtype=float)


def render_plot(spec: PlotSpec, out_path: Path) -> Path:
    """
    One line per y column, legend from column names. Output is byte-stable:
    fixed hash salt and no date metadata.
    """
    header, rows = read_csv(spec.csv)
    if not rows:
        raise DataError(f"CSV file has no data rows: {spec.csv}")
    x = _column(header, rows, spec.x, spec.csv)
    series = [(name, _column(header, rows, name, spec.csv)) for name in spec.y]

    plt.rcParams["svg.hashsalt"] = SVG_HASH_SALT
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    try:
        for name, y in series:
            ax.plot(x, y, label=name, gid=f"series-{name}")
        ax.set_xlabel(spec.x)
        ax.legend()
        ensure_dir(out_path.parent)
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    print(f"[plot] wrote {out_path}")
    return out_path


def cmd_plot(run: RunConfig, ctx: RunContext) -> int:
    if run.plot is None:
        raise ConfigError("plot needs --csv/--x/--y or a plot block")
    path = render_plot(run.plot, ctx.out_dir / f"{run.plot.csv.stem}.svg")
    ctx.artifacts.append(path)
    return EXIT_OK


HANDLERS: Dict[str, Callable[[RunConfig, RunContext], int]] = {
    "reduce": cmd_reduce,
    "spectrum": cmd_spectrum,
    "gauge-check": cmd_gauge_check,
    "cutoff": cmd_cutoff,
    "converge": cmd_converge,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gauge-rabi",
        description="Gauge-invariant quantum Rabi models: reduction, spectra and gauge checks.",
    )
    parser.add_argument("command", choices=COMMANDS, help="Subcommand to run.")
    parser.add_argument("--config", type=Path, help="JSON run config.")
    parser.add_argument(
        "--out",
        type=Path,
        default=None,
        help="Output directory (default: config output.dir, then settings out_dir).",
    )
    parser.add_argument(
        "--json", action="store_true", help="Also write a JSON mirror of every CSV table."
    )
    parser.add_argument("--csv", type=Path, help="plot: CSV file to read.")
    parser.add_argument("--x", help="plot: x column.")
    parser.add_argument("--y", action="append", help="plot: y column (repeatable).")
    return parser


def _run_config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config is not None:
        run = load_run_config(args.config)
    elif args.command == "plot":
        run = RunConfig(raw={})
    else:
        raise ConfigError(f"{args.command} needs --config")
    if args.command == "plot" and args.csv is not None:
        if not args.x or not args.y:
            raise ConfigError("plot needs --x and at least one --y with --csv")
        spec = PlotSpec(args.csv, args.x, tuple(args.y))
        run = replace(run, plot=spec)
    return run


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, dispatch, and map failures onto exit codes.
    """
    args = build_parser().parse_args(argv)
    try:
        cfg = _run_config_from_args(args)
        out_dir = args.out or cfg.out_dir or resolve_settings()["out_dir"]
        ensure_dir(out_dir)
        ctx = RunContext(
            command=args.command,
            out_dir=out_dir,
            json_mirror=bool(args.json),
            config_path=args.config,
            raw_config=cfg.raw,
        )
        code = HANDLERS[args.command](cfg, ctx)
        ctx.finish()
        if ctx.warnings:
            print(f"[summary] {args.command} finished with {ctx.warnings} warning(s)")
        return code
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except DataError as exc:
        return _fail(exc, EXIT_DATA)
    except (SolverError, np.linalg.LinAlgError, ArithmeticError) as exc:
        return _fail(exc, EXIT_NUMERIC)
    except OSError as exc:
        return _fail(exc, EXIT_DATA)


def _fail(exc: BaseException, code: int) -> int:
    message = " ".join(str(exc).split())
    print(f"[error] {message}", file=sys.stderr)
    return code


def main() -> None:  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
