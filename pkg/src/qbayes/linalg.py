#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Dense complex linear algebra primitives.

Everything here is a pure function of its inputs. Supports, pseudoinverses and
square roots are all computed from one Hermitian eigendecomposition, so they
share a single rank convention (see :class:`~qbayes.core.Tolerances`).
"""

from __future__ import annotations

from typing import Any, Optional

import logging

import numpy as np
import scipy.linalg

from qbayes.core import (
    Check,
    CMatrix,
    DimensionMismatch,
    HermitianSpectrum,
    NoConvergence,
    NotFinite,
    NotHermitian,
    NotPSD,
    NotSquare,
    Tolerances,
)

DEFAULT_TOLERANCES = Tolerances()

_logger = logging.getLogger(__name__)


def as_matrix(values: Any) -> CMatrix:
    """
    Converts array-like input into a finite two-dimensional complex matrix.

    :raise NotFinite: if any entry is NaN or infinite
    :raise DimensionMismatch: if the input is not two-dimensional
    """

    matrix = np.array(values, dtype=np.complex128)

    if matrix.ndim != 2:
        raise DimensionMismatch(f"Expected a matrix, got an array of shape {matrix.shape}")

    if not np.all(np.isfinite(matrix)):
        raise NotFinite("Matrix contains NaN or infinite entries")

    return matrix


def dagger(matrix: CMatrix) -> CMatrix:
    """Conjugate transpose."""

    return matrix.conj().T


def max_abs(matrix: CMatrix) -> float:
    """Entrywise max-norm; zero for empty matrices."""

    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


def close(left: CMatrix, right: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Whether two matrices agree entrywise within eq_tol."""

    return left.shape == right.shape and max_abs(left - right) <= tol.eq_tol


def hermitian_part(matrix: CMatrix) -> CMatrix:
    """(A + A^dagger) / 2."""

    return (matrix + dagger(matrix)) / 2


def identity(dim: int) -> CMatrix:
    """The dim x dim identity as a complex matrix."""

    return np.eye(dim, dtype=np.complex128)


def matrix_unit(dim: int, row: int, col: int) -> CMatrix:
    """The matrix unit E_{row,col} of M_dim (0-indexed)."""

    unit = np.zeros((dim, dim), dtype=np.complex128)
    unit[row, col] = 1
    return unit


def commutator(left: CMatrix, right: CMatrix) -> CMatrix:
    """[A, B] = AB - BA."""

    return left @ right - right @ left


def is_unitary(matrix: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Whether U U^dagger = 1 within eq_tol (square matrices only)."""

    if not _is_square(matrix):
        return False

    return max_abs(matrix @ dagger(matrix) - identity(matrix.shape[0])) <= tol.eq_tol


def _is_square(matrix: CMatrix) -> bool:
    return matrix.ndim == 2 and matrix.shape[0] == matrix.shape[1]


def _require_hermitian(matrix: CMatrix, tol: Tolerances) -> CMatrix:
    if not _is_square(matrix):
        raise NotSquare(f"Expected a square matrix, got shape {matrix.shape}")

    asymmetry = max_abs(matrix - dagger(matrix))
    if asymmetry > tol.eq_tol:
        raise NotHermitian(asymmetry)

    return hermitian_part(matrix)


def hermitian_eig(matrix: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> HermitianSpectrum:
    """
    Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.

    Degenerate eigenspaces may come back in any orthonormal basis.

    :raise NotSquare: for non-square input
    :raise NotHermitian: if the input differs from its adjoint by more than eq_tol
    :raise NoConvergence: if LAPACK fails to converge
    """

    symmetric = _require_hermitian(matrix, tol)

    try:
        values, vectors = scipy.linalg.eigh(symmetric)
    except (np.linalg.LinAlgError, ValueError) as err:
        _logger.debug("eigh failed on a %s matrix: %s", matrix.shape, err)
        raise NoConvergence(f"Hermitian eigensolver failed: {err}") from err

    return HermitianSpectrum(
        eigenvalues=np.ascontiguousarray(values[::-1], dtype=np.float64),
        eigenvectors=np.ascontiguousarray(vectors[:, ::-1], dtype=np.complex128),
    )


def is_psd(matrix: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> Check:
    """
    Tests positive semidefiniteness.

    Passes iff the smallest eigenvalue is at least -psd_tol. The check's value is
    the smallest eigenvalue; on failure its eigenvector is attached.
    """

    if matrix.size == 0:
        return Check(True, 0.0)

    spectrum = hermitian_eig(matrix, tol)
    smallest = float(spectrum.eigenvalues[-1])

    if smallest >= -tol.psd_tol:
        return Check(True, smallest)

    return Check(False, smallest, spectrum.eigenvectors[:, -1].copy())


def _psd_spectrum(matrix: CMatrix, tol: Tolerances) -> HermitianSpectrum:
    spectrum = hermitian_eig(matrix, tol)

    if spectrum.eigenvalues.size and spectrum.eigenvalues[-1] < -tol.psd_tol:
        raise NotPSD(float(spectrum.eigenvalues[-1]))

    return spectrum


def _kept(spectrum: HermitianSpectrum, tol: Tolerances) -> tuple[np.ndarray, CMatrix]:
    mask = spectrum.eigenvalues > spectrum.threshold(tol)
    return spectrum.eigenvalues[mask], spectrum.eigenvectors[:, mask]


def support(matrix: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """
    Orthogonal projection onto the range of a positive matrix.

    :raise NotPSD: if the matrix has an eigenvalue below -psd_tol
    """

    _, vectors = _kept(_psd_spectrum(matrix, tol), tol)
    return vectors @ dagger(vectors)


def pseudoinverse(matrix: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """
    The unique positive matrix inverting a positive matrix on its support.

    :raise NotPSD: if the matrix has an eigenvalue below -psd_tol
    """

    values, vectors = _kept(_psd_spectrum(matrix, tol), tol)
    return (vectors / values) @ dagger(vectors)


def psd_sqrt(matrix: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """
    The positive square root of a positive matrix.

    Eigenvalues inside the psd_tol slack are clipped to zero.

    :raise NotPSD: if the matrix has an eigenvalue below -psd_tol
    """

    spectrum = _psd_spectrum(matrix, tol)
    roots = np.sqrt(np.clip(spectrum.eigenvalues, 0.0, None))
    return (spectrum.eigenvectors * roots) @ dagger(spectrum.eigenvectors)


def range_basis(projection: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """Orthonormal columns spanning the range of an orthogonal projection."""

    _, vectors = _kept(hermitian_eig(projection, tol), tol)
    return vectors


def tensor(left: CMatrix, right: CMatrix) -> CMatrix:
    """Kronecker product; (A (x) B)[i*rB + k, j*cB + l] = A[i, j] B[k, l]."""

    return np.kron(left, right)


def partial_trace_first(matrix: CMatrix, dim_first: int, dim_second: int) -> CMatrix:
    """
    Traces out the first tensor factor of a matrix on C^dim_first (x) C^dim_second.

    :raise DimensionMismatch: if the matrix is not square of side dim_first * dim_second
    """

    side = dim_first * dim_second
    if matrix.shape != (side, side):
        raise DimensionMismatch(
            f"Partial trace over M_{dim_first} (x) M_{dim_second} needs a {side}x{side} "
            f"matrix, got {matrix.shape}"
        )

    return np.einsum("ijik->jk", matrix.reshape(dim_first, dim_second, dim_first, dim_second))


def max_eigenvalue_on_range(
    matrix: CMatrix, projection: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> Optional[float]:
    """
    Largest eigenvalue of a Hermitian matrix compressed to the range of a projection.

    This is the amount by which ``matrix <= projection`` fails on that range when
    the result is reduced by one.

    Returns None when the projection is zero.
    """

    basis = range_basis(projection, tol)
    if basis.shape[1] == 0:
        return None

    compressed = hermitian_part(dagger(basis) @ matrix @ basis)
    return float(hermitian_eig(compressed, tol).eigenvalues[0])


__all__ = [
    "DEFAULT_TOLERANCES",
    "as_matrix",
    "dagger",
    "max_abs",
    "close",
    "hermitian_part",
    "identity",
    "matrix_unit",
    "commutator",
    "is_unitary",
    "hermitian_eig",
    "is_psd",
    "support",
    "pseudoinverse",
    "psd_sqrt",
    "range_basis",
    "tensor",
    "partial_trace_first",
    "max_eigenvalue_on_range",
]
