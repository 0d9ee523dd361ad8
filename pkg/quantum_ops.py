#!/usr/bin/env python3
"""
Truncated bosonic operators, the two Pauli families and tensor embeddings.

Conventions:
    - the TLS factor is always represented in the (|A>, |S>) ordering, so
      sigma- and rho-family operators are plain 2x2 matrices in one basis and
      the cross-family identities (rho_z = sigma_x, rho_x = -sigma_z,
      rho_y = sigma_y) hold as matrix equalities;
    - composite space is TLS (x) field, multimode fields ordered by mode index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from common import ConfigError
from numal import ComplexMatrix, as_complex_matrix, kron

FAMILIES: Tuple[str, ...] = ("sigma", "rho")
AXES: Tuple[str, ...] = ("x", "y", "z")


@dataclass(frozen=True)
class FockSpace:
    """
    Photon numbers 0 .. n_max - 1.
    """

    n_max: int

    def __post_init__(self) -> None:
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ConfigError(f"Fock truncation must be an integer >= 2, got {self.n_max}")

    def doubled(self) -> "FockSpace":
        return FockSpace(2 * self.n_max)


@dataclass(frozen=True)
class OperatorLabel:
    family: str
    axis: str

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown Pauli family {self.family!r}")
        if self.axis not in AXES:
            raise ConfigError(f"unknown Pauli axis {self.axis!r}")


def annihilation(f: FockSpace) -> ComplexMatrix:
    """
    a[n - 1, n] = sqrt(n) for 1 <= n <= N - 1.
    """
    n = np.arange(1, f.n_max)
    return np.diag(np.sqrt(n), k=1).astype(np.complex128)


def creation(f: FockSpace) -> ComplexMatrix:
    return annihilation(f).conj().T.copy()


def number(f: FockSpace) -> ComplexMatrix:
    return np.diag(np.arange(f.n_max, dtype=float)).astype(np.complex128)


def quadrature(f: FockSpace) -> ComplexMatrix:
    """
    a + a^dagger in the truncated space.
    """
    a = annihilation(f)
    return a + a.conj().T


def identity(dim: int) -> ComplexMatrix:
    return np.eye(dim, dtype=np.complex128)


# sigma family in the (|A>, |S>) ordering
_SIGMA: Dict[str, ComplexMatrix] = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

# rho family written in the same ordering
_RHO: Dict[str, ComplexMatrix] = {
    "x": -_SIGMA["z"],
    "y": _SIGMA["y"].copy(),
    "z": _SIGMA["x"].copy(),
}

# Columns are |R>, |L> in (|A>, |S>) coordinates:
# |R> = (|S> + |A>)/sqrt(2), |L> = (|S> - |A>)/sqrt(2).
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
LOCALIZED_BASIS: ComplexMatrix = np.array(
    [[_INV_SQRT2, -_INV_SQRT2], [_INV_SQRT2, _INV_SQRT2]], dtype=np.complex128
)


def pauli(label: OperatorLabel | str, axis: str | None = None) -> ComplexMatrix:
    """
    pauli(OperatorLabel("rho", "z")) or pauli("rho", "z").
    """
    if isinstance(label, str):
        if axis is None:
            raise ConfigError("pauli(family, axis) needs an axis")
        label = OperatorLabel(label, axis)
    table = _SIGMA if label.family == "sigma" else _RHO
    return table[label.axis].copy()


def to_localized_basis(op: ComplexMatrix) -> ComplexMatrix:
    """
    Express a 2x2 operator given in (|A>, |S>) ordering in (|R>, |L>) ordering.
    """
    m = as_complex_matrix(op)
    return LOCALIZED_BASIS.conj().T @ m @ LOCALIZED_BASIS


def from_localized_basis(op: ComplexMatrix) -> ComplexMatrix:
    m = as_complex_matrix(op)
    return LOCALIZED_BASIS @ m @ LOCALIZED_BASIS.conj().T


def embed(tls_op: ComplexMatrix, field_op: ComplexMatrix) -> ComplexMatrix:
    """
    tls_op (x) field_op, TLS factor first.
    """
    tls = as_complex_matrix(tls_op)
    if tls.shape != (2, 2):
        raise ConfigError(f"TLS operator must be 2x2, got {tls.shape}")
    return kron(tls, field_op)


def field_operator(op: ComplexMatrix, index: int, dims: Sequence[int]) -> ComplexMatrix:
    """
    Place a single-mode operator at position `index` of the multimode field
    space I (x) ... (x) op (x) ... (x) I.
    """
    if not 0 <= index < len(dims):
        raise ConfigError(f"mode index {index} out of range for {len(dims)} modes")
    single = as_complex_matrix(op)
    if single.shape[0] != dims[index]:
        raise ConfigError(f"operator dimension {single.shape[0]} != mode size {dims[index]}")
    before = int(np.prod(dims[:index], dtype=int))
    after = int(np.prod(dims[index + 1 :], dtype=int))
    out = kron(identity(before), single) if before > 1 else single
    return kron(out, identity(after)) if after > 1 else out
