#!/usr/bin/env python3
"""
Bound states of H0 = p^2/2m + V(x) on a uniform grid and their reduction to
two-level parameters {delta, eps, t, a, q, x_L, x_R, mu}.

Discretization: 3-point Laplacian with Dirichlet boundaries (psi vanishes at
x_min and x_max), diagonalized as a symmetric tridiagonal problem.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.integrate
import scipy.linalg
from scipy.interpolate import CubicSpline

from common import ConfigError, SolverError

POTENTIAL_KINDS: Tuple[str, ...] = (
    "quartic_double_well",
    "tilted_quartic",
    "harmonic",
    "tabulated",
)

MIN_GRID_POINTS: int = 64
BOUNDARY_LEAK_TOL: float = 1e-6
NORM_TOL: float = 1e-8

# eta / mu thresholds for the two-level validity verdict
VALID_RATIO: float = 0.1
MARGINAL_RATIO: float = 0.5


@dataclass(frozen=True)
class PotentialSpec:
    """
    V(x) = V0 * ((x / x0)^2 - 1)^2 + tilt * x for the quartic kinds,
    V(x) = V0 * (x / x0)^2 for `harmonic` (so V0 = m w^2 x0^2 / 2),
    cubic-spline interpolation of `samples` for `tabulated`.
    """

    kind: str
    V0: float = 0.0
    x0: float = 1.0
    tilt: float = 0.0
    m: float = 1.0
    q: float = 1.0
    samples: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.kind not in POTENTIAL_KINDS:
            raise ConfigError(f"unknown potential kind {self.kind!r}")
        if not self.m > 0:
            raise ConfigError(f"mass must be > 0, got {self.m}")
        if self.V0 < 0:
            raise ConfigError(f"V0 must be >= 0, got {self.V0}")
        if self.kind != "tabulated" and not self.x0 > 0:
            raise ConfigError(f"x0 must be > 0, got {self.x0}")
        if self.kind == "quartic_double_well" and self.tilt != 0.0:
            raise ConfigError("quartic_double_well is symmetric; use tilted_quartic for tilt != 0")
        if self.kind == "tabulated":
            if len(self.samples) < 4:
                raise ConfigError("tabulated potential needs at least 4 (x, V) samples")
            xs = [s[0] for s in self.samples]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ConfigError("tabulated potential samples must have increasing x")

    @property
    def symmetric(self) -> bool:
        return self.kind in ("quartic_double_well", "harmonic") or (
            self.kind == "tilted_quartic" and self.tilt == 0.0
        )

    def evaluate(self, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
        xs = np.asarray(x, dtype=float)
        if self.kind in ("quartic_double_well", "tilted_quartic"):
            return self.V0 * ((xs / self.x0) ** 2 - 1.0) ** 2 + self.tilt * xs
        if self.kind == "harmonic":
            return self.V0 * (xs / self.x0) ** 2
        table = np.asarray(self.samples, dtype=float)
        if xs.min() < table[0, 0] or xs.max() > table[-1, 0]:
            raise ConfigError("grid extends beyond the tabulated potential samples")
        return CubicSpline(table[:, 0], table[:, 1])(xs)

    @classmethod
    def harmonic_oscillator(
        cls, m: float = 1.0, omega: float = 1.0, q: float = 1.0
    ) -> "PotentialSpec":
        """
        V = m w^2 x^2 / 2 expressed with x0 = 1.
        """
        return cls(kind="harmonic", V0=0.5 * m * omega**2, x0=1.0, m=m, q=q)


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self) -> None:
        if not self.x_min < self.x_max:
            raise ConfigError(f"grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n < MIN_GRID_POINTS:
            raise ConfigError(f"grid needs at least {MIN_GRID_POINTS} points, got {self.n}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> npt.NDArray[np.float64]:
        return np.linspace(self.x_min, self.x_max, self.n)

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.x_min, self.x_max, factor * (self.n - 1) + 1)


@dataclass(frozen=True)
class BoundState:
    energy: float
    psi: npt.NDArray[np.float64]


@dataclass(frozen=True)
class TlsParams:
    delta: float
    eps: float
    t: float
    a: float
    q: float
    x_L: float
    x_R: float
    mu: float
    omega_q: float = float("nan")
    dipole_as: float = float("nan")

    def __post_init__(self) -> None:
        if not self.delta >= 0:
            raise ConfigError(f"TLS gap delta must be >= 0, got {self.delta}")
        if not self.a > 0:
            raise ConfigError(f"TLS spacing a must be > 0, got {self.a}")

    @classmethod
    def from_gap(
        cls,
        delta: float,
        eps: float = 0.0,
        a: float = 1.0,
        q: float = 1.0,
        mu: float = float("inf"),
    ) -> "TlsParams":
        """
        Two-level parameters without an underlying potential (sites at +-a/2).
        """
        return cls(
            delta=delta,
            eps=eps,
            t=0.5 * delta,
            a=a,
            q=q,
            x_L=-0.5 * a,
            x_R=0.5 * a,
            mu=mu,
            omega_q=math.hypot(delta, eps),
            dipole_as=0.5 * a,
        )

    @property
    def x_center(self) -> float:
        return 0.5 * (self.x_L + self.x_R)

    def to_json(self) -> Dict[str, float]:
        return {k: float(v) for k, v in asdict(self).items()}


class Verdict(str, Enum):
    VALID = "valid"
    MARGINAL = "marginal"
    INVALID = "invalid"


@dataclass(frozen=True)
class ValidityReport:
    verdict: Verdict
    ratio: float


def _tridiagonal(v: PotentialSpec, g: Grid1D) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Diagonal and off-diagonal of H0 on the interior points.
    """
    x_inner = g.x[1:-1]
    kinetic = 1.0 / (2.0 * v.m * g.h**2)
    diag = 2.0 * kinetic + v.evaluate(x_inner)
    off = np.full(x_inner.shape[0] - 1, -kinetic)
    return x_inner, diag, off


def apply_hamiltonian(v: PotentialSpec, g: Grid1D, psi: npt.ArrayLike) -> np.ndarray:
    """
    H0 psi on the full grid (Dirichlet ends stay zero).
    """
    values = np.asarray(psi, dtype=float)
    _, diag, off = _tridiagonal(v, g)
    inner = values[1:-1]
    out_inner = diag * inner
    out_inner[:-1] += off * inner[1:]
    out_inner[1:] += off * inner[:-1]
    out = np.zeros_like(values)
    out[1:-1] = out_inner
    return out


def inner_product(g: Grid1D, f: npt.ArrayLike, h: npt.ArrayLike) -> float:
    """
    Trapezoidal <f|h> on the grid.
    """
    return float(scipy.integrate.trapezoid(np.asarray(f) * np.asarray(h), dx=g.h))


def solve_bound_states(v: PotentialSpec, g: Grid1D, k: int) -> List[BoundState]:
    """
    The k lowest eigenstates of the finite-difference H0, ascending in energy.
    """
    if k < 2:
        raise ConfigError(f"need at least 2 bound states, got k={k}")
    if k > g.n - 2:
        raise SolverError(f"k={k} exceeds the {g.n - 2} interior grid points")

    _, diag, off = _tridiagonal(v, g)
    energies, vecs = scipy.linalg.eigh_tridiagonal(
        diag, off, select="i", select_range=(0, k - 1), check_finite=False
    )

    states: List[BoundState] = []
    for idx in range(k):
        psi = np.zeros(g.n)
        psi[1:-1] = vecs[:, idx]
        pivot = int(np.argmax(np.abs(psi)))
        if psi[pivot] < 0:
            psi = -psi
        psi /= math.sqrt(inner_product(g, psi, psi))
        leak = max(abs(psi[1]), abs(psi[-2]))
        if leak >= BOUNDARY_LEAK_TOL:
            raise SolverError(
                f"state {idx} leaks to the grid boundary (|psi| = {leak:.2e}); widen the grid"
            )
        states.append(BoundState(energy=float(energies[idx]), psi=psi))

    for lower, upper in zip(states, states[1:]):
        if not upper.energy > lower.energy:
            raise SolverError("bound-state energies are not strictly increasing")
    return states


def localized_states(
    states: Sequence[BoundState], g: Grid1D
) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    psi_L, psi_R: the eigenvectors of x projected on the {S, A} doublet
    (R has the larger <x>). Returns (psi_L, psi_R, beta) with
    |R> = cos(beta)|S> + sin(beta)|A>; beta = pi/4 for symmetric wells.
    psi_A is sign-flipped as needed so that <A|x|S> >= 0.
    """
    psi_s = states[0].psi
    psi_a = states[1].psi
    x = g.x
    x_as = inner_product(g, psi_a, x * psi_s)
    if x_as < 0:
        psi_a = -psi_a
        x_as = -x_as
    x_ss = inner_product(g, psi_s, x * psi_s)
    x_aa = inner_product(g, psi_a, x * psi_a)
    beta = 0.5 * math.atan2(2.0 * x_as, x_ss - x_aa)
    psi_r = math.cos(beta) * psi_s + math.sin(beta) * psi_a
    psi_l = math.sin(beta) * psi_s - math.cos(beta) * psi_a
    return psi_l, psi_r, beta


def reduce_to_tls(states: Sequence[BoundState], v: PotentialSpec, g: Grid1D) -> TlsParams:
    """
    Two-level parameters from the three lowest bound states.
    """
    if len(states) < 3:
        raise ConfigError(f"reduction needs at least 3 states, got {len(states)}")
    e0, e1, e2 = (s.energy for s in states[:3])
    gap = e1 - e0
    if gap < 1e-12 * abs(e2) or gap <= 0:
        raise SolverError(f"degenerate lowest doublet (E1 - E0 = {gap:.3e})")

    x = g.x
    dipole_as = abs(inner_product(g, states[1].psi, x * states[0].psi))

    psi_l, psi_r, _ = localized_states(states, g)
    h_r = apply_hamiltonian(v, g, psi_r)
    h_l = apply_hamiltonian(v, g, psi_l)

    t = -inner_product(g, psi_l, h_r)
    eps = inner_product(g, psi_r, h_r) - inner_product(g, psi_l, h_l)
    x_r = inner_product(g, psi_r, x * psi_r)
    x_l = inner_product(g, psi_l, x * psi_l)

    return TlsParams(
        delta=2.0 * t,
        eps=eps,
        t=t,
        a=x_r - x_l,
        q=v.q,
        x_L=x_l,
        x_R=x_r,
        mu=(e2 - e1) / gap,
        omega_q=gap,
        dipole_as=dipole_as,
    )


def anharmonicity_check(p: TlsParams, eta: float) -> ValidityReport:
    """
    valid if eta/mu < 0.1, marginal below 0.5, invalid otherwise.
    """
    eta = abs(eta)
    if eta == 0.0:
        return ValidityReport(Verdict.VALID, 0.0)
    if not p.mu > 0:
        return ValidityReport(Verdict.INVALID, float("inf"))
    ratio = eta / p.mu
    if ratio < VALID_RATIO:
        verdict = Verdict.VALID
    elif ratio < MARGINAL_RATIO:
        verdict = Verdict.MARGINAL
    else:
        verdict = Verdict.INVALID
    return ValidityReport(verdict, ratio)


def reduce_potential(
    v: PotentialSpec, g: Grid1D, k: int = 3, eta: Optional[float] = None
) -> Tuple[TlsParams, Optional[ValidityReport]]:
    """
    solve_bound_states + reduce_to_tls (+ validity check when eta is given).
    """
    states = solve_bound_states(v, g, max(k, 3))
    params = reduce_to_tls(states, v, g)
    report = anharmonicity_check(params, eta) if eta is not None else None
    return params, report
