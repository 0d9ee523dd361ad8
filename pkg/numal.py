#!/usr/bin/env python3
"""
Dense complex linear algebra used by every Hamiltonian builder.

Hermitian eigendecomposition (cyclic Jacobi for small matrices, LAPACK via
scipy above that), spectral matrix functions, tensor products and the
distance metrics the gauge checks are phrased in.

All routines are pure: inputs are never mutated and outputs are fresh arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from common import DEFAULT_HERMITIAN_TOL, ConfigError, SolverError, resolve_settings

ComplexMatrix = npt.NDArray[np.complex128]
RealVector = npt.NDArray[np.float64]

# Matrices up to this size are diagonalized by cyclic Jacobi rotations.
JACOBI_MAX_DIM: int = 32
JACOBI_TOL: float = 1e-14
JACOBI_MAX_SWEEPS: int = 60

# Eigenvalues closer than DEGENERACY_TOL * (1 + |lambda|) share a cluster.
DEGENERACY_TOL: float = 1e-9


@dataclass(frozen=True)
class HermitianEigenSystem:
    """
    Ascending eigenvalues; column k of `eigenvectors` belongs to eigenvalue k.
    """

    eigenvalues: RealVector
    eigenvectors: ComplexMatrix

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])


def as_complex_matrix(a: npt.ArrayLike) -> ComplexMatrix:
    """
    Coerce to a square, finite complex128 matrix.
    """
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise SolverError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise SolverError("matrix contains NaN or Inf entries")
    return m


def max_norm(a: npt.ArrayLike) -> float:
    arr = np.asarray(a)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def max_abs_diff(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """
    Entrywise max-norm distance |A - B|_max.
    """
    a_arr = np.asarray(a)
    b_arr = np.asarray(b)
    if a_arr.shape != b_arr.shape:
        raise SolverError(f"shape mismatch: {a_arr.shape} vs {b_arr.shape}")
    return max_norm(a_arr - b_arr)


def spectrum_distance(
    a: Sequence[float] | RealVector, b: Sequence[float] | RealVector, k: Optional[int] = None
) -> float:
    """
    max_i |a_i - b_i| over the k lowest entries of the two sorted spectra.
    """
    sa = np.sort(np.asarray(a, dtype=float))
    sb = np.sort(np.asarray(b, dtype=float))
    count = min(sa.shape[0], sb.shape[0]) if k is None else k
    if count > sa.shape[0] or count > sb.shape[0]:
        raise SolverError(f"cannot compare {count} levels of spectra sized {sa.size}/{sb.size}")
    if count == 0:
        return 0.0
    return float(np.max(np.abs(sa[:count] - sb[:count])))


def check_hermitian(h: ComplexMatrix, tol: Optional[float] = None) -> None:
    """
    Raise SolverError when |H - H^dagger|_max exceeds tol * (1 + |H|_max).
    """
    tol = DEFAULT_HERMITIAN_TOL if tol is None else tol
    deviation = max_abs_diff(h, h.conj().T)
    if deviation > tol * (1.0 + max_norm(h)):
        raise SolverError(f"matrix is not Hermitian (|H - H^dagger|_max = {deviation:.3e})")


def is_unitary(u: npt.ArrayLike, tol: float = 1e-10) -> bool:
    m = as_complex_matrix(u)
    return max_abs_diff(m @ m.conj().T, np.eye(m.shape[0])) <= tol


def _jacobi_eigh(h: ComplexMatrix) -> Tuple[RealVector, ComplexMatrix]:
    """
    Cyclic Jacobi sweeps with complex (phase + Givens) rotations.

    Stops once the off-diagonal Frobenius mass is below JACOBI_TOL * |H|_F.
    """
    a = h.copy()
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return np.zeros(n), v

    for _ in range(JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= JACOBI_TOL * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < np.finfo(float).tiny:
                    continue
                phase = apq / mag
                tau = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array(
                    [[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=np.complex128
                )
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ rot

    return np.real(np.diag(a)).copy(), v


def _fix_degenerate(w: RealVector, v: ComplexMatrix) -> ComplexMatrix:
    """
    Within each near-degenerate cluster, replace the eigenvectors by the
    Gram-Schmidt orthonormalization of the projected unit vectors e_0, e_1, ...
    taken in input column order.
    """
    v = v.copy()
    n = w.shape[0]
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] <= DEGENERACY_TOL * (1.0 + abs(w[stop])):
            stop += 1
        size = stop - start
        if size > 1:
            block = v[:, start:stop]
            coords = block.conj().T  # column j = coordinates of P e_j in the cluster basis
            basis: list[np.ndarray] = []
            for col in range(coords.shape[1]):
                vec = coords[:, col].copy()
                for _ in range(2):
                    for b in basis:
                        vec = vec - b * np.vdot(b, vec)
                nrm = float(np.linalg.norm(vec))
                if nrm > 1e-8:
                    basis.append(vec / nrm)
                if len(basis) == size:
                    break
            v[:, start:stop] = block @ np.column_stack(basis)
        start = stop
    return v


def _fix_phase(v: ComplexMatrix) -> ComplexMatrix:
    """
    Rotate every column so its largest-magnitude component is real and positive.
    """
    v = v.copy()
    pivots = np.argmax(np.abs(v), axis=0)
    for k, row in enumerate(pivots):
        pivot = v[row, k]
        v[:, k] *= np.conj(pivot) / abs(pivot)
        v[row, k] = abs(v[row, k])
    return v


def eigh(
    h: npt.ArrayLike, method: str = "auto", tol: Optional[float] = None
) -> HermitianEigenSystem:
    """
    Deterministic Hermitian eigendecomposition.

    method: "jacobi", "lapack" or "auto" (Jacobi up to JACOBI_MAX_DIM).
    """
    m = as_complex_matrix(h)
    check_hermitian(m, tol)
    m = 0.5 * (m + m.conj().T)

    if method == "auto":
        method = "jacobi" if m.shape[0] <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        w, v = _jacobi_eigh(m)
    elif method == "lapack":
        w, v = scipy.linalg.eigh(m, check_finite=False)
        w = np.asarray(w, dtype=float)
        v = np.asarray(v, dtype=np.complex128)
    else:
        raise ConfigError(f"unknown eigensolver method: {method!r}")

    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    v = _fix_phase(_fix_degenerate(w, v))
    return HermitianEigenSystem(eigenvalues=w, eigenvectors=v)


def eigvalsh_lowest(h: npt.ArrayLike, k: int, tol: Optional[float] = None) -> RealVector:
    """
    The k lowest eigenvalues, ascending. Large matrices only compute the subset.
    """
    m = as_complex_matrix(h)
    if not 1 <= k <= m.shape[0]:
        raise SolverError(f"requested {k} eigenvalues of a {m.shape[0]}-dimensional matrix")
    if m.shape[0] <= JACOBI_MAX_DIM:
        return eigh(m, tol=tol).eigenvalues[:k].copy()
    check_hermitian(m, tol)
    m = 0.5 * (m + m.conj().T)
    w = scipy.linalg.eigh(m, eigvals_only=True, subset_by_index=[0, k - 1], check_finite=False)
    return np.sort(np.asarray(w, dtype=float))


def matrix_function(
    h: npt.ArrayLike, f: Callable[[RealVector], npt.ArrayLike]
) -> ComplexMatrix:
    """
    f(H) = V f(Lambda) V^dagger for Hermitian H.
    """
    system = eigh(h)
    vecs = system.eigenvectors
    values = np.asarray(f(system.eigenvalues), dtype=np.complex128)
    return (vecs * values) @ vecs.conj().T


def matrix_cos_sin(h: npt.ArrayLike) -> Tuple[ComplexMatrix, ComplexMatrix]:
    """
    (cos H, sin H) from a single spectral decomposition.
    """
    system = eigh(h)
    vecs = system.eigenvectors
    adj = vecs.conj().T
    cos_h = (vecs * np.cos(system.eigenvalues)) @ adj
    sin_h = (vecs * np.sin(system.eigenvalues)) @ adj
    return cos_h, sin_h


def matrix_unitary_exp(h: npt.ArrayLike) -> ComplexMatrix:
    """
    exp(iH) for Hermitian H.
    """
    return matrix_function(h, lambda lam: np.exp(1j * lam))


def kron(a: npt.ArrayLike, b: npt.ArrayLike, max_dim: Optional[int] = None) -> ComplexMatrix:
    """
    A (x) B with (A (x) B)[i*P + k, j*P + l] = A[i, j] * B[k, l], P = dim(B).
    """
    left = as_complex_matrix(a)
    right = as_complex_matrix(b)
    limit = max_dim if max_dim is not None else resolve_settings()["kron_max_dim"]
    dim = left.shape[0] * right.shape[0]
    if dim > limit:
        raise SolverError(f"tensor product dimension {dim} exceeds the cap {limit}")
    return np.kron(left, right)
