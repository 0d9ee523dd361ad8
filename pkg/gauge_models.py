#!/usr/bin/env python3
"""
Gauge-invariant quantum Rabi Hamiltonians and the transformations relating them.

Builders (single mode, TLS (x) field ordering):
    - h_coulomb_gi_symmetric / h_coulomb_gi_asymmetric: minimal coupling via the
      two-site parallel transporter, cos/sin of 2 eta (a + a^dagger)
    - h_dipole: the same model after the PZW unitary
    - h_coulomb_linearized: first order in eta, the gauge-broken baseline
Classical-field pieces: parallel transporter, hopping operator, local phases.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.integrate

from common import ConfigError
from multimode import (
    ModeProfile,
    assemble_gi_hamiltonian,
    check_dimension,
    coupling_integral,
    dipole_coupling,
    field_hamiltonian,
    h_multimode_dipole,
    h_multimode_gi,
    line_integral,
    multimode_gauge_unitary,
    phase_cos_sin,
)
from numal import ComplexMatrix, matrix_unitary_exp
from quantum_ops import (
    LOCALIZED_BASIS,
    FockSpace,
    embed,
    from_localized_basis,
    identity,
    pauli,
    quadrature,
)
from schrodinger1d import TlsParams

GAUGES: Tuple[str, ...] = ("coulomb_gi", "dipole", "coulomb_linearized")
UNITARY_FAMILIES: Tuple[str, ...] = ("sigma_x", "rho_z")


@dataclass(frozen=True)
class ModeSpec:
    """
    One cavity mode: frequency, zero-point amplitude A0 (real), optional
    classical shape and its Fock truncation.
    """

    omega_ph: float
    A0: float
    fock: FockSpace
    profile: Optional[ModeProfile] = None

    def __post_init__(self) -> None:
        if not self.omega_ph > 0:
            raise ConfigError(f"mode frequency must be > 0, got {self.omega_ph}")
        if not math.isfinite(self.A0):
            raise ConfigError("mode amplitude A0 must be a finite real number")

    def shape(self) -> ModeProfile:
        """
        The classical profile scaled to this mode's A0.
        """
        base = self.profile or ModeProfile(kind="constant")
        return replace(base, amplitude=self.A0)

    def coupling(self, tls: TlsParams, dipole_approx: bool = True) -> float:
        """
        eta = q (a/2) A0 in the dipole approximation (profile frozen at the
        site midpoint), the line integral (q/2) int A dx otherwise.
        """
        if self.profile is None or self.profile.kind == "constant":
            return tls.q * (tls.a / 2) * self.A0
        profile = self.shape()
        return dipole_coupling(profile, tls) if dipole_approx else coupling_integral(profile, tls)

    def with_fock(self, n_max: int) -> "ModeSpec":
        return replace(self, fock=FockSpace(n_max))


@dataclass(frozen=True)
class ModelConfig:
    tls: TlsParams
    modes: Tuple[ModeSpec, ...]
    gauge: str = "coulomb_gi"
    dipole_approx: bool = True
    oversample: int = 1
    max_dim: Optional[int] = None

    def __post_init__(self) -> None:
        if self.gauge not in GAUGES:
            raise ConfigError(f"unknown gauge {self.gauge!r}; expected one of {', '.join(GAUGES)}")
        if not self.modes:
            raise ConfigError("at least one mode is required")
        if self.oversample < 1:
            raise ConfigError(f"oversample must be >= 1, got {self.oversample}")
        if self.max_dim is not None and self.max_dim < 4:
            raise ConfigError(f"max_dim must be >= 4, got {self.max_dim}")
        object.__setattr__(self, "modes", tuple(self.modes))

    @property
    def etas(self) -> Tuple[float, ...]:
        return tuple(m.coupling(self.tls, self.dipole_approx) for m in self.modes)

    @property
    def eta(self) -> float:
        return self.etas[0]

    @property
    def mode(self) -> ModeSpec:
        if len(self.modes) != 1:
            raise ConfigError(f"single-mode builder called with {len(self.modes)} modes")
        return self.modes[0]

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(m.fock.n_max for m in self.modes)

    @property
    def dimension(self) -> int:
        return 2 * int(np.prod(self.dims, dtype=np.int64))

    def with_gauge(self, gauge: str) -> "ModelConfig":
        return replace(self, gauge=gauge)

    def with_truncation(self, dims: Sequence[int]) -> "ModelConfig":
        return replace(self, modes=tuple(m.with_fock(n) for m, n in zip(self.modes, dims)))

    def doubled(self) -> "ModelConfig":
        return self.with_truncation([2 * n for n in self.dims])

    def with_eta(self, eta: float) -> "ModelConfig":
        """
        Rescale the first mode's A0 so that its coupling (profile, phase and
        site midpoint included) equals eta.
        """
        unit = replace(self.modes[0], A0=1.0).coupling(self.tls, self.dipole_approx)
        if abs(unit) <= 1e-12 * abs(self.tls.q) * self.tls.a:
            if eta != 0.0:
                raise ConfigError("the mode profile does not couple to this TLS; eta must be 0")
            a0 = 0.0
        else:
            a0 = eta / unit
        first = replace(self.modes[0], A0=a0)
        return replace(self, modes=(first,) + self.modes[1:])


@dataclass(frozen=True)
class TwoSiteGauge:
    """
    Local phases e^{i q theta_L}, e^{i q theta_R} on |L>, |R>.
    """

    theta_L: float
    theta_R: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta_L) and math.isfinite(self.theta_R)):
            raise ConfigError("two-site gauge phases must be finite")

    @property
    def phi(self) -> float:
        return 0.5 * (self.theta_R + self.theta_L)

    @property
    def theta(self) -> float:
        return 0.5 * (self.theta_R - self.theta_L)

    def phase_matrix(self, q: float) -> ComplexMatrix:
        """
        The local phase map in (|A>, |S>) ordering.
        """
        local = np.diag([cmath.exp(1j * q * self.theta_R), cmath.exp(1j * q * self.theta_L)])
        return from_localized_basis(local)

    def factored_matrix(self, q: float) -> ComplexMatrix:
        """
        e^{i q phi} exp(i q theta sigma_x): global phase times a Bloch rotation.
        """
        rotation = matrix_unitary_exp(q * self.theta * pauli("sigma", "x"))
        return cmath.exp(1j * q * self.phi) * rotation

    def transform_transporter(self, u: complex, q: float) -> complex:
        """
        U' = e^{i q theta_R} U e^{-i q theta_L}.
        """
        return cmath.exp(1j * q * self.theta_R) * u * cmath.exp(-1j * q * self.theta_L)


def _field_parts(cfg: ModelConfig) -> Tuple[float, ComplexMatrix, ComplexMatrix, ComplexMatrix]:
    mode = cfg.mode
    check_dimension(cfg.dims, cfg.max_dim)
    eta = cfg.eta
    cos_phi, sin_phi = phase_cos_sin([eta], cfg.dims, cfg.oversample, cfg.max_dim)
    h_field = field_hamiltonian([mode.omega_ph], cfg.dims)
    return eta, cos_phi, sin_phi, h_field


def h_coulomb_gi_symmetric(cfg: ModelConfig) -> ComplexMatrix:
    """
    (Delta/2)[sigma_z cos Phi + sigma_y sin Phi] + w a^dagger a, Phi = 2 eta (a + a^dagger).
    """
    if cfg.tls.eps != 0.0:
        print(f"[model] eps = {cfg.tls.eps:.3g} != 0, using the asymmetric builder")
        return h_coulomb_gi_asymmetric(cfg)
    _, cos_phi, sin_phi, h_field = _field_parts(cfg)
    return assemble_gi_hamiltonian(cfg.tls, cos_phi, sin_phi, h_field)


def h_coulomb_gi_asymmetric(cfg: ModelConfig) -> ComplexMatrix:
    """
    w a^dagger a + (eps/2) rho_z - (Delta/2)[rho_x cos Phi - rho_y sin Phi].
    """
    _, cos_phi, sin_phi, h_field = _field_parts(cfg)
    dim = h_field.shape[0]
    h = 0.5 * cfg.tls.eps * embed(pauli("rho", "z"), identity(dim))
    h = h - 0.5 * cfg.tls.delta * (
        embed(pauli("rho", "x"), cos_phi) - embed(pauli("rho", "y"), sin_phi)
    )
    return h + embed(identity(2), h_field)


def h_coulomb_gi(cfg: ModelConfig) -> ComplexMatrix:
    if cfg.tls.eps == 0.0:
        return h_coulomb_gi_symmetric(cfg)
    return h_coulomb_gi_asymmetric(cfg)


def h_dipole(cfg: ModelConfig) -> ComplexMatrix:
    """
    w a^dagger a + (eps/2) rho_z - (Delta/2) rho_x - i eta w (a - a^dagger) rho_z + eta^2 w.
    """
    return h_multimode_dipole(cfg.tls, (cfg.mode,), cfg.dipole_approx, cfg.max_dim)


def h_coulomb_linearized(cfg: ModelConfig) -> ComplexMatrix:
    """
    (Delta/2) sigma_z + (eps/2) rho_z + Delta eta sigma_y (a + a^dagger) + w a^dagger a.
    """
    mode = cfg.mode
    check_dimension(cfg.dims, cfg.max_dim)
    eta = cfg.eta
    dim = mode.fock.n_max
    field_id = identity(dim)
    tls_part = 0.5 * cfg.tls.delta * pauli("sigma", "z")
    if cfg.tls.eps != 0.0:
        tls_part = tls_part + 0.5 * cfg.tls.eps * pauli("rho", "z")
    h = embed(tls_part, field_id)
    h = h + cfg.tls.delta * eta * embed(pauli("sigma", "y"), quadrature(mode.fock))
    return h + embed(identity(2), field_hamiltonian([mode.omega_ph], cfg.dims))


def gauge_unitary(cfg: ModelConfig, family: str = "rho_z") -> ComplexMatrix:
    """
    exp(i Phi (x) P / 2) with P = sigma_x (symmetric) or rho_z (asymmetric form).
    """
    if family not in UNITARY_FAMILIES:
        raise ConfigError(f"unknown gauge unitary family {family!r}")
    return multimode_gauge_unitary(cfg.tls, (cfg.mode,), family, cfg.dipole_approx, cfg.max_dim)


def build_hamiltonian(cfg: ModelConfig) -> ComplexMatrix:
    """
    Dispatch on cfg.gauge; several modes go to the multimode builders.
    """
    if len(cfg.modes) > 1:
        if cfg.gauge == "coulomb_gi":
            return h_multimode_gi(
                cfg.tls, cfg.modes, cfg.dipole_approx, cfg.oversample, cfg.max_dim
            )
        if cfg.gauge == "dipole":
            return h_multimode_dipole(cfg.tls, cfg.modes, cfg.dipole_approx, cfg.max_dim)
        raise ConfigError("the linearized baseline is single-mode only")
    if cfg.gauge == "coulomb_gi":
        return h_coulomb_gi(cfg)
    if cfg.gauge == "dipole":
        return h_dipole(cfg)
    return h_coulomb_linearized(cfg)


def parallel_transporter_classical(
    field: ModeProfile | Callable[[float], float], x_L: float, x_R: float, q: float
) -> complex:
    """
    U = exp[i q int_{x_L}^{x_R} A(x) dx] for a classical (c-number) field.
    """
    if isinstance(field, ModeProfile):
        integral = line_integral(field, x_L, x_R)
    else:
        integral, _ = scipy.integrate.quad(field, x_L, x_R, epsabs=1e-13, epsrel=1e-13, limit=200)
    return cmath.exp(1j * q * integral)


def hopping_operator(u: complex) -> ComplexMatrix:
    """
    |R><L| U + h.c. in (|A>, |S>) ordering.
    """
    ket_r = LOCALIZED_BASIS[:, 0]
    ket_l = LOCALIZED_BASIS[:, 1]
    forward = u * np.outer(ket_r, ket_l.conj())
    return forward + forward.conj().T


def h_tls_transported(tls: TlsParams, u: complex) -> ComplexMatrix:
    """
    Classical-field gauge-invariant TLS: (eps/2) rho_z - (Delta/2)(|R><L| U + h.c.).
    """
    return 0.5 * tls.eps * pauli("rho", "z") - 0.5 * tls.delta * hopping_operator(u)


def apply_two_site_gauge(state: npt.ArrayLike, g: TwoSiteGauge, q: float) -> np.ndarray:
    """
    c_L -> e^{i q theta_L} c_L, c_R -> e^{i q theta_R} c_R on a TLS vector or a
    TLS (x) field vector (TLS factor first).
    """
    vec = np.asarray(state, dtype=np.complex128)
    if vec.ndim != 1 or vec.shape[0] % 2:
        raise ConfigError(f"state must be a vector of even length, got shape {vec.shape}")
    blocks = vec.reshape(2, -1)
    return (g.phase_matrix(q) @ blocks).reshape(-1)
