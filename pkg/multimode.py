#!/usr/bin/env python3
"""
Beyond-dipole couplings and the multimode gauge-invariant Hamiltonians.

A classical mode shape A(x) = amplitude * f(x) enters only through the line
integral over the two-site interval, eta_k = (q/2) * int A(x) dx, taken over
the interval of length a centred on the site midpoint. The quantized phase
operator is Phi = sum_k 2 eta_k (a_k + a_k^dagger).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.integrate
from scipy.interpolate import CubicSpline

from common import ConfigError, SolverError, resolve_settings
from numal import ComplexMatrix, matrix_cos_sin
from quantum_ops import (
    FockSpace,
    annihilation,
    embed,
    field_operator,
    identity,
    number,
    pauli,
    quadrature,
)
from schrodinger1d import TlsParams

if TYPE_CHECKING:
    from gauge_models import ModeSpec

PROFILE_KINDS: Tuple[str, ...] = ("constant", "cosine", "tabulated")
COUPLING_METHODS: Tuple[str, ...] = ("auto", "analytic", "quadrature")
QUAD_EPSABS: float = 1e-12


@dataclass(frozen=True)
class ModeProfile:
    """
    A(x) = amplitude for `constant`, amplitude * cos(k x + phase) for `cosine`,
    amplitude * spline(samples) for `tabulated`.
    """

    kind: str = "constant"
    amplitude: float = 1.0
    k: float = 0.0
    phase: float = 0.0
    samples: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.kind not in PROFILE_KINDS:
            raise ConfigError(f"unknown mode profile kind {self.kind!r}")
        if not math.isfinite(self.amplitude):
            raise ConfigError("profile amplitude must be a finite real number")
        if self.kind == "tabulated":
            if len(self.samples) < 4:
                raise ConfigError("tabulated profile needs at least 4 (x, A) samples")
            xs = [s[0] for s in self.samples]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ConfigError("tabulated profile samples must have increasing x")

    def with_k(self, k: float) -> "ModeProfile":
        return replace(self, k=k)

    def evaluate(self, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
        xs = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(xs, self.amplitude)
        if self.kind == "cosine":
            return self.amplitude * np.cos(self.k * xs + self.phase)
        table = np.asarray(self.samples, dtype=float)
        return self.amplitude * CubicSpline(table[:, 0], table[:, 1])(xs)

    def covers(self, lo: float, hi: float) -> bool:
        if self.kind != "tabulated":
            return True
        return self.samples[0][0] <= lo and hi <= self.samples[-1][0]


@dataclass(frozen=True)
class CutoffRow:
    k: float
    eta_k: float


def coupling_interval(tls: TlsParams) -> Tuple[float, float]:
    center = tls.x_center
    return center - 0.5 * tls.a, center + 0.5 * tls.a


def line_integral(p: ModeProfile, lo: float, hi: float, method: str = "auto") -> float:
    """
    int_lo^hi A(x) dx.
    """
    if method not in COUPLING_METHODS:
        raise ConfigError(f"unknown integration method {method!r}")
    if not p.covers(lo, hi):
        raise ConfigError(f"tabulated profile does not cover [{lo:.6g}, {hi:.6g}]")
    if method == "quadrature":
        value, _ = scipy.integrate.quad(
            lambda x: float(p.evaluate(x)), lo, hi, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200
        )
        return float(value)
    if p.kind == "constant" or (p.kind == "cosine" and p.k == 0.0):
        scale = math.cos(p.phase) if p.kind == "cosine" else 1.0
        return p.amplitude * scale * (hi - lo)
    if p.kind == "cosine":
        return p.amplitude * (math.sin(p.k * hi + p.phase) - math.sin(p.k * lo + p.phase)) / p.k
    table = np.asarray(p.samples, dtype=float)
    return float(p.amplitude * CubicSpline(table[:, 0], table[:, 1]).integrate(lo, hi))


def coupling_integral(p: ModeProfile, tls: TlsParams, method: str = "auto") -> float:
    """
    eta_k = (q/2) int A(x) dx over the two-site interval.

    A constant profile gives the dipole value q * (a/2) * A0 exactly.
    """
    if p.kind == "constant" and method != "quadrature":
        return tls.q * (tls.a / 2) * p.amplitude
    lo, hi = coupling_interval(tls)
    return 0.5 * tls.q * line_integral(p, lo, hi, method)


def dipole_coupling(p: ModeProfile, tls: TlsParams) -> float:
    """
    q * (a/2) * A(x_center): the profile frozen at the site midpoint.
    """
    return tls.q * (tls.a / 2) * float(p.evaluate(tls.x_center))


def cutoff_scan(
    tls: TlsParams,
    profile: ModeProfile,
    k_values: Sequence[float],
    method: str = "quadrature",
) -> List[CutoffRow]:
    """
    eta_k over a range of wavevectors for one profile family, sorted by k.
    """
    ks = sorted(float(k) for k in k_values)
    if not ks:
        raise ConfigError("cutoff scan needs at least one wavevector")
    if ks[0] <= 0 or not all(math.isfinite(k) for k in ks):
        raise ConfigError("cutoff scan wavevectors must be positive and finite")
    print(f"[cutoff] {len(ks)} wavevectors in [{ks[0]:.4g}, {ks[-1]:.4g}] ({profile.kind})")
    return [CutoffRow(k, coupling_integral(profile.with_k(k), tls, method)) for k in ks]


def mode_dims(modes: Sequence["ModeSpec"]) -> List[int]:
    return [m.fock.n_max for m in modes]


def check_dimension(dims: Sequence[int], max_dim: Optional[int] = None) -> int:
    """
    Composite dimension 2 * prod(N_k), or SolverError above the cap.
    """
    limit = max_dim if max_dim is not None else resolve_settings()["max_dim"]
    total = 2 * int(np.prod(dims, dtype=np.int64))
    if total > limit:
        raise SolverError(f"composite dimension {total} exceeds the cap {limit}")
    return total


def _retained_indices(dims: Sequence[int], big_dims: Sequence[int]) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
    return np.ravel_multi_index([g.ravel() for g in grids], tuple(big_dims))


def phase_operator(etas: Sequence[float], dims: Sequence[int]) -> ComplexMatrix:
    """
    Phi = sum_k 2 eta_k (a_k + a_k^dagger) on the multimode field space.
    """
    if len(etas) != len(dims) or not dims:
        raise ConfigError("one coupling per mode is required")
    total = int(np.prod(dims, dtype=np.int64))
    phi = np.zeros((total, total), dtype=np.complex128)
    for idx, (eta, n) in enumerate(zip(etas, dims)):
        if eta != 0.0:
            phi += 2.0 * eta * field_operator(quadrature(FockSpace(n)), idx, dims)
    return phi


def phase_cos_sin(
    etas: Sequence[float],
    dims: Sequence[int],
    oversample: int = 1,
    max_dim: Optional[int] = None,
) -> Tuple[ComplexMatrix, ComplexMatrix]:
    """
    cos(Phi), sin(Phi) by spectral calculus in the truncated space.

    oversample > 1 evaluates both functions with every truncation multiplied
    by that factor and keeps the block of the retained Fock states.
    """
    if oversample < 1:
        raise ConfigError(f"oversample must be >= 1, got {oversample}")
    if oversample == 1:
        return matrix_cos_sin(phase_operator(etas, dims))
    big_dims = [oversample * n for n in dims]
    check_dimension(big_dims, max_dim)
    cos_big, sin_big = matrix_cos_sin(phase_operator(etas, big_dims))
    keep = _retained_indices(dims, big_dims)
    return cos_big[np.ix_(keep, keep)], sin_big[np.ix_(keep, keep)]


def field_hamiltonian(omegas: Sequence[float], dims: Sequence[int]) -> ComplexMatrix:
    """
    sum_k omega_k a_k^dagger a_k.
    """
    total = int(np.prod(dims, dtype=np.int64))
    h = np.zeros((total, total), dtype=np.complex128)
    for idx, (omega, n) in enumerate(zip(omegas, dims)):
        h += omega * field_operator(number(FockSpace(n)), idx, dims)
    return h


def assemble_gi_hamiltonian(
    tls: TlsParams, cos_phi: ComplexMatrix, sin_phi: ComplexMatrix, h_field: ComplexMatrix
) -> ComplexMatrix:
    """
    Symmetric form (Delta/2)[sigma_z cos Phi + sigma_y sin Phi] when eps == 0,
    otherwise eps/2 rho_z - (Delta/2)[rho_x cos Phi - rho_y sin Phi]; plus field.
    """
    dim = h_field.shape[0]
    half_gap = 0.5 * tls.delta
    if tls.eps == 0.0:
        h = half_gap * (embed(pauli("sigma", "z"), cos_phi) + embed(pauli("sigma", "y"), sin_phi))
    else:
        h = 0.5 * tls.eps * embed(pauli("rho", "z"), identity(dim))
        h = h - half_gap * (
            embed(pauli("rho", "x"), cos_phi) - embed(pauli("rho", "y"), sin_phi)
        )
    return h + embed(identity(2), h_field)


def mode_couplings(
    tls: TlsParams, modes: Sequence["ModeSpec"], dipole_approx: bool = False
) -> List[float]:
    return [m.coupling(tls, dipole_approx=dipole_approx) for m in modes]


def h_multimode_gi(
    tls: TlsParams,
    modes: Sequence["ModeSpec"],
    dipole_approx: bool = False,
    oversample: int = 1,
    max_dim: Optional[int] = None,
) -> ComplexMatrix:
    """
    Gauge-invariant Rabi Hamiltonian beyond the dipole approximation.
    """
    if not modes:
        raise ConfigError("multimode Hamiltonian needs at least one mode")
    dims = mode_dims(modes)
    check_dimension(dims, max_dim)
    etas = mode_couplings(tls, modes, dipole_approx)
    cos_phi, sin_phi = phase_cos_sin(etas, dims, oversample, max_dim)
    h_field = field_hamiltonian([m.omega_ph for m in modes], dims)
    return assemble_gi_hamiltonian(tls, cos_phi, sin_phi, h_field)


def h_multimode_dipole(
    tls: TlsParams,
    modes: Sequence["ModeSpec"],
    dipole_approx: bool = False,
    max_dim: Optional[int] = None,
) -> ComplexMatrix:
    """
    sum_k [w_k a_k^+ a_k - i eta_k w_k (a_k - a_k^+) rho_z + eta_k^2 w_k]
    + eps/2 rho_z - Delta/2 rho_x.
    """
    if not modes:
        raise ConfigError("multimode Hamiltonian needs at least one mode")
    dims = mode_dims(modes)
    check_dimension(dims, max_dim)
    etas = mode_couplings(tls, modes, dipole_approx)
    total = int(np.prod(dims, dtype=np.int64))
    field_id = identity(total)

    h = embed(0.5 * tls.eps * pauli("rho", "z") - 0.5 * tls.delta * pauli("rho", "x"), field_id)
    h = h + embed(identity(2), field_hamiltonian([m.omega_ph for m in modes], dims))
    shift = 0.0
    for idx, (eta, mode) in enumerate(zip(etas, modes)):
        a = field_operator(annihilation(mode.fock), idx, dims)
        h = h + embed(pauli("rho", "z"), -1j * eta * mode.omega_ph * (a - a.conj().T))
        shift += eta**2 * mode.omega_ph
    return h + shift * embed(identity(2), field_id)


def multimode_gauge_unitary(
    tls: TlsParams,
    modes: Sequence["ModeSpec"],
    family: str = "rho_z",
    dipole_approx: bool = False,
    max_dim: Optional[int] = None,
) -> ComplexMatrix:
    """
    exp(i Phi (x) P / 2) = I (x) cos(Phi/2) + i P (x) sin(Phi/2), P^2 = I.
    """
    generators = {"sigma_x": pauli("sigma", "x"), "rho_z": pauli("rho", "z")}
    if family not in generators:
        raise ConfigError(f"unknown gauge unitary family {family!r}")
    dims = mode_dims(modes)
    check_dimension(dims, max_dim)
    half_etas = [0.5 * eta for eta in mode_couplings(tls, modes, dipole_approx)]
    cos_half, sin_half = phase_cos_sin(half_etas, dims)
    return embed(identity(2), cos_half) + 1j * embed(generators[family], sin_half)
