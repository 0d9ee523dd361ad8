#!/usr/bin/env python3
"""
Shared settings, error types and emitters for the gauge-rabi toolkit.

This is used by:
    - numal.py / multimode.py / analysis.py  (dimension caps, tolerances)
    - cli.py                                  (output dir, CSV/JSON artifacts)
"""

from __future__ import annotations

import csv
import json
import math
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

# Defaults (can be overridden by config or env)
DEFAULT_MAX_DIM: int = 8192
DEFAULT_KRON_MAX_DIM: int = 16384
DEFAULT_CONVERGE_TOL: float = 1e-9
DEFAULT_HERMITIAN_TOL: float = 1e-10
DEFAULT_OUT_DIR: Path = Path.cwd() / "out"

MAX_DIM_ENV: str = "GAUGE_RABI_MAX_DIM"
CONFIG_ENV: str = "GAUGE_RABI_CONFIG"

# Config lookup locations (first one that exists wins)
CONFIG_PATHS: Tuple[Path, ...] = (
    Path(Path.cwd() / "gauge_rabi.toml"),
    Path.home() / ".config" / "gauge-rabi" / "config.toml",
)

FLOAT_FORMAT: str = "%.12g"

# Lazily populated cache
_loaded_config: Dict | None = None


class ConfigError(ValueError):
    """Run config or settings failed validation."""


class SolverError(RuntimeError):
    """A numerical routine could not produce a trustworthy result."""


class DataError(ValueError):
    """Tabular input is missing, empty or lacks a requested column."""


def error_code(exc: BaseException) -> str:
    """
    Short code used in sweep status columns: config | numeric | data.
    """
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, DataError):
        return "data"
    return "numeric"


def _load_config() -> Dict:
    """
    Load settings from $GAUGE_RABI_CONFIG or the first existing file among
    CONFIG_PATHS. Missing file is fine; returns {}.
    """
    global _loaded_config
    if _loaded_config is not None:
        return _loaded_config

    env_override = os.environ.get(CONFIG_ENV, "")
    env_path = Path(env_override).expanduser() if env_override else None

    search_order = ((env_path,) if env_path else ()) + CONFIG_PATHS

    for candidate in search_order:
        if candidate.is_file():
            try:
                with candidate.open("rb") as fh:
                    _loaded_config = tomllib.load(fh)
                break
            except Exception:
                _loaded_config = {}
                break
    else:
        _loaded_config = {}

    return _loaded_config


def _section(name: str) -> Dict[str, Any]:
    cfg = _load_config()
    section = cfg.get(name, {}) if isinstance(cfg, dict) else {}
    return section if isinstance(section, dict) else {}


def resolve_settings(
    max_dim: Optional[int] = None,
    kron_max_dim: Optional[int] = None,
    converge_tol: Optional[float] = None,
    hermitian_tol: Optional[float] = None,
    out_dir: Optional[Path | str] = None,
) -> Dict[str, Any]:
    """
    Resolve settings using provided overrides, then env, then config, then defaults.
    """
    limits = _section("limits")
    tolerances = _section("tolerances")
    output = _section("output")

    env_dim = os.environ.get(MAX_DIM_ENV, "").strip()
    if max_dim is None and env_dim:
        try:
            max_dim = int(env_dim)
        except ValueError as exc:
            raise ConfigError(f"{MAX_DIM_ENV} must be an integer, got {env_dim!r}") from exc

    resolved = {
        "max_dim": int(max_dim or limits.get("max_dim", DEFAULT_MAX_DIM)),
        "kron_max_dim": int(kron_max_dim or limits.get("kron_max_dim", DEFAULT_KRON_MAX_DIM)),
        "converge_tol": float(converge_tol or tolerances.get("converge", DEFAULT_CONVERGE_TOL)),
        "hermitian_tol": float(
            hermitian_tol or tolerances.get("hermitian", DEFAULT_HERMITIAN_TOL)
        ),
        "out_dir": Path(out_dir or output.get("out_dir", DEFAULT_OUT_DIR)).expanduser(),
    }
    if resolved["max_dim"] < 4:
        raise ConfigError(f"max_dim must be >= 4, got {resolved['max_dim']}")
    return resolved


def ensure_dir(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)


def format_float(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return FLOAT_FORMAT % value


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """
    Write a comma-separated table; floats as %.12g, everything else via str().
    """
    ensure_dir(path.parent)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(
                [format_float(v) if isinstance(v, float) else str(v) for v in row]
            )


def read_csv(path: Path) -> Tuple[List[str], List[List[str]]]:
    """
    Read a CSV written by write_csv. Raises DataError for missing or header-less files.
    """
    if not path.is_file():
        raise DataError(f"CSV file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"CSV file has no header: {path}")
    return rows[0], rows[1:]


def write_json(path: Path, payload: Any) -> None:
    ensure_dir(path.parent)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
