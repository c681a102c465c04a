#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Linear maps between matrix algebras.

A map M_n -> M_m is held either as a :class:`Channel` (Kraus operators, always
completely positive) or as a :class:`LinearMap` (Choi matrix only, positivity
not verified). Both expose the same small interface, :class:`MapInterface`.

Choi matrices put the input factor first:

    Choi(psi) = sum_ij E_ij^(n) (x) psi(E_ij^(n))

so entry ``[i*m + k, j*m + l]`` is ``psi(E_ij)[k, l]``. A Kraus operator V
corresponds to the Choi vector ``v[i*m + k] = V[k, i]``.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from typing import Protocol, Union, overload, runtime_checkable

import dataclasses
import logging

import numpy as np

from qbayes.core import (
    Check,
    CMatrix,
    DimensionMismatch,
    InternalInconsistency,
    InvalidSplit,
    NotCP,
    NotHermitian,
    NotUnitary,
    Tolerances,
)
from qbayes.linalg import (
    DEFAULT_TOLERANCES,
    as_matrix,
    dagger,
    hermitian_eig,
    identity,
    is_psd,
    is_unitary,
    matrix_unit,
    max_abs,
    pseudoinverse,
)

_logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ChoiMatrix:
    """The Choi matrix of a linear map M_dim_in -> M_dim_out."""

    dim_in: int
    dim_out: int
    matrix: CMatrix

    def __post_init__(self) -> None:
        side = self.dim_in * self.dim_out
        if self.matrix.shape != (side, side):
            raise DimensionMismatch(
                f"Choi matrix of a map M_{self.dim_in} -> M_{self.dim_out} must be "
                f"{side}x{side}, got {self.matrix.shape}"
            )

    def blocks(self) -> np.ndarray:
        """View indexed as [i, k, j, l] = psi(E_ij)[k, l]."""

        return self.matrix.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)


@runtime_checkable
class MapInterface(Protocol):
    """A linear map between matrix algebras that can be evaluated and has a Choi matrix."""

    @property
    def dim_in(self) -> int:
        """Side of the input matrix algebra."""

    @property
    def dim_out(self) -> int:
        """Side of the output matrix algebra."""

    @property
    def choi(self) -> ChoiMatrix:
        """The Choi matrix of the map."""

    @property
    def verified_cp(self) -> bool:
        """Whether complete positivity holds by construction."""

    def apply(self, matrix: CMatrix) -> CMatrix:
        """Evaluates the map on an input matrix."""


class Channel:
    """
    A completely positive map M_n -> M_m given by Kraus operators.

    The map is B -> sum_a V_a B V_a^dagger with every V_a an m x n matrix.
    The Choi matrix is computed at construction so values stay immutable.
    """

    _kraus: tuple[CMatrix, ...]
    _dim_in: int
    _dim_out: int
    _choi: ChoiMatrix

    def __init__(
        self, kraus: Sequence[CMatrix], dim_in: int | None = None, dim_out: int | None = None
    ) -> None:
        operators = [as_matrix(op) for op in kraus]

        if not operators and (dim_in is None or dim_out is None):
            raise DimensionMismatch("The zero map needs explicit dimensions")

        dim_out = operators[0].shape[0] if dim_out is None else dim_out
        dim_in = operators[0].shape[1] if dim_in is None else dim_in

        for index, op in enumerate(operators):
            if op.shape != (dim_out, dim_in):
                raise DimensionMismatch(
                    f"Kraus operator {index} has shape {op.shape},"
                    f" expected {(dim_out, dim_in)}"
                )
            op.setflags(write=False)

        self._kraus = tuple(operators)
        self._dim_in = dim_in
        self._dim_out = dim_out

        vectors = np.array([op.T.reshape(-1) for op in operators], dtype=np.complex128)
        vectors = vectors.reshape(len(operators), dim_in * dim_out).T
        choi = vectors @ dagger(vectors)
        choi.setflags(write=False)
        self._choi = ChoiMatrix(dim_in, dim_out, choi)

    @classmethod
    def identity(cls, dim: int) -> Channel:
        """The identity map on M_dim."""

        return cls([identity(dim)])

    @classmethod
    def adjoint_action(cls, operator: CMatrix) -> Channel:
        """Ad_V: B -> V B V^dagger."""

        return cls([operator])

    @property
    def dim_in(self) -> int:
        """Side n of the input algebra M_n."""

        return self._dim_in

    @property
    def dim_out(self) -> int:
        """Side m of the output algebra M_m."""

        return self._dim_out

    @property
    def kraus(self) -> tuple[CMatrix, ...]:
        """The Kraus operators, each m x n."""

        return self._kraus

    @property
    def choi(self) -> ChoiMatrix:
        return self._choi

    @property
    def verified_cp(self) -> bool:
        return True

    def apply(self, matrix: CMatrix) -> CMatrix:
        return apply(self, matrix)

    def __repr__(self) -> str:
        return f"<Channel M_{self._dim_in} -> M_{self._dim_out}, {len(self._kraus)} Kraus>"


class LinearMap:
    """
    A linear map M_n -> M_m known only through its Choi matrix.

    Used for maps whose complete positivity is not verified, such as unital
    Bayes maps which can fail positivity.
    """

    _choi: ChoiMatrix

    def __init__(self, choi: ChoiMatrix) -> None:
        matrix = np.array(choi.matrix, dtype=np.complex128)
        matrix.setflags(write=False)
        self._choi = ChoiMatrix(choi.dim_in, choi.dim_out, matrix)

    @property
    def dim_in(self) -> int:
        return self._choi.dim_in

    @property
    def dim_out(self) -> int:
        return self._choi.dim_out

    @property
    def choi(self) -> ChoiMatrix:
        return self._choi

    @property
    def verified_cp(self) -> bool:
        return False

    def apply(self, matrix: CMatrix) -> CMatrix:
        return apply(self, matrix)

    def __repr__(self) -> str:
        return f"<LinearMap M_{self.dim_in} -> M_{self.dim_out}, CP not verified>"


AnyMap = Union[Channel, LinearMap]


def apply(linear_map: MapInterface, matrix: CMatrix) -> CMatrix:
    """
    Evaluates a map on an input matrix.

    :raise DimensionMismatch: if the input is not n x n
    """

    dim_in, dim_out = linear_map.dim_in, linear_map.dim_out
    if matrix.shape != (dim_in, dim_in):
        raise DimensionMismatch(f"Map expects a {dim_in}x{dim_in} input, got {matrix.shape}")

    if isinstance(linear_map, Channel):
        if not linear_map.kraus:
            return np.zeros((dim_out, dim_out), dtype=np.complex128)
        stacked = np.array(linear_map.kraus)
        return np.einsum("aki,ij,alj->kl", stacked, matrix, stacked.conj())

    return np.einsum("ikjl,ij->kl", linear_map.choi.blocks(), matrix)


def choi_matrix_of(
    function: Callable[[CMatrix], CMatrix], dim_in: int, dim_out: int
) -> ChoiMatrix:
    """Assembles sum_ij E_ij (x) f(E_ij) for an arbitrary linear function f: M_n -> M_m."""

    matrix = np.zeros((dim_in * dim_out, dim_in * dim_out), dtype=np.complex128)
    for i in range(dim_in):
        for j in range(dim_in):
            value = function(matrix_unit(dim_in, i, j))
            matrix[i * dim_out : (i + 1) * dim_out, j * dim_out : (j + 1) * dim_out] = value

    return ChoiMatrix(dim_in, dim_out, matrix)


def choi_of(linear_map: MapInterface) -> ChoiMatrix:
    """The Choi matrix of a channel or linear map."""

    return linear_map.choi


def _kraus_from_spectrum(
    choi: ChoiMatrix, tol: Tolerances
) -> tuple[list[CMatrix], list[float]]:
    spectrum = hermitian_eig(choi.matrix, tol)
    smallest = float(spectrum.eigenvalues[-1]) if spectrum.eigenvalues.size else 0.0

    if smallest < -tol.psd_tol:
        raise NotCP(smallest)

    threshold = spectrum.threshold(tol)
    operators, weights = [], []

    for value, vector in zip(spectrum.eigenvalues, spectrum.eigenvectors.T):
        if value <= threshold:
            continue
        operators.append(np.sqrt(value) * vector.reshape(choi.dim_in, choi.dim_out).T)
        weights.append(float(value))

    _logger.debug(
        "Choi matrix of M_%d -> M_%d has rank %d", choi.dim_in, choi.dim_out, len(operators)
    )
    return operators, weights


def channel_of_choi(choi: ChoiMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> Channel:
    """
    Recovers Kraus operators from a positive Choi matrix.

    Eigenvalues at or below the rank threshold are dropped.

    :raise NotCP: if the Choi matrix has an eigenvalue below -psd_tol
    """

    operators, _ = _kraus_from_spectrum(choi, tol)
    return Channel(operators, dim_in=choi.dim_in, dim_out=choi.dim_out)


def linear_map_of_choi(choi: ChoiMatrix) -> LinearMap:
    """Wraps a Choi matrix without any positivity check."""

    return LinearMap(choi)


@overload
def hs_dual(linear_map: Channel) -> Channel: ...


@overload
def hs_dual(linear_map: LinearMap) -> LinearMap: ...


def hs_dual(linear_map: AnyMap) -> AnyMap:
    """
    The Hilbert-Schmidt dual, tr(F*(A) B) = tr(A F(B)).

    Channels dualise to channels with adjoint Kraus operators.
    """

    if isinstance(linear_map, Channel):
        return Channel(
            [dagger(op) for op in linear_map.kraus],
            dim_in=linear_map.dim_out,
            dim_out=linear_map.dim_in,
        )

    dim_in, dim_out = linear_map.dim_in, linear_map.dim_out
    dual = linear_map.choi.blocks().transpose(3, 2, 1, 0)
    return LinearMap(ChoiMatrix(dim_out, dim_in, dual.reshape(dim_in * dim_out, -1)))


def is_cp(linear_map: MapInterface, tol: Tolerances = DEFAULT_TOLERANCES) -> Check:
    """
    Complete positivity via positivity of the Choi matrix.

    The value is the smallest Choi eigenvalue. A Choi matrix that is not even
    Hermitian fails with value equal to minus its asymmetry.
    """

    try:
        return is_psd(linear_map.choi.matrix, tol)
    except NotHermitian as err:
        return Check(False, -err.asymmetry)


def _unit_residual(linear_map: MapInterface) -> float:
    return max_abs(
        apply(linear_map, identity(linear_map.dim_in)) - identity(linear_map.dim_out)
    )


def is_unital(linear_map: MapInterface, tol: Tolerances = DEFAULT_TOLERANCES) -> Check:
    """F(1) = 1 within eq_tol; the value is the max-norm residual."""

    if isinstance(linear_map, Channel):
        total = sum(
            (op @ dagger(op) for op in linear_map.kraus),
            np.zeros((linear_map.dim_out, linear_map.dim_out), dtype=np.complex128),
        )
        residual = max_abs(total - identity(linear_map.dim_out))
    else:
        residual = _unit_residual(linear_map)

    return Check(residual <= tol.eq_tol, residual)


def is_trace_preserving(
    linear_map: AnyMap, tol: Tolerances = DEFAULT_TOLERANCES
) -> Check:
    """F* unital within eq_tol; the value is the max-norm residual."""

    return is_unital(hs_dual(linear_map), tol)


@dataclasses.dataclass(frozen=True)
class OrthogonalKraus:
    """Kraus decomposition with tr(W_a^dagger W_b) = weights[a] * delta_ab."""

    channel: Channel
    weights: tuple[float, ...]


def orthogonal_kraus(
    linear_map: MapInterface, tol: Tolerances = DEFAULT_TOLERANCES
) -> OrthogonalKraus:
    """
    Hilbert-Schmidt orthogonal Kraus operators from the Choi spectrum.

    The number of operators equals the rank of the Choi matrix.

    :raise NotCP: if the map is not completely positive
    """

    choi = linear_map.choi
    operators, weights = _kraus_from_spectrum(choi, tol)
    channel = Channel(operators, dim_in=choi.dim_in, dim_out=choi.dim_out)
    return OrthogonalKraus(channel, tuple(weights))


def choi_pseudoinverse(
    linear_map: MapInterface, tol: Tolerances = DEFAULT_TOLERANCES
) -> ChoiMatrix:
    """
    Pseudoinverse of the Choi matrix as the Choi matrix of sum_a Ad_{W_a / Lambda_a}.

    :raise NotCP: if the map is not completely positive
    :raise InternalInconsistency: if the result disagrees with the spectral pseudoinverse
    """

    decomposition = orthogonal_kraus(linear_map, tol)
    scaled = Channel(
        [
            op / weight
            for op, weight in zip(decomposition.channel.kraus, decomposition.weights)
        ],
        dim_in=linear_map.dim_in,
        dim_out=linear_map.dim_out,
    )

    expected = pseudoinverse(linear_map.choi.matrix, tol)
    scale = max(1.0, max_abs(expected))
    mismatch = max_abs(scaled.choi.matrix - expected)
    if mismatch > tol.eq_tol * scale:
        raise InternalInconsistency(
            f"Choi pseudoinverse from orthogonal Kraus operators is off by {mismatch:.3e}"
        )

    return scaled.choi


class Comultiplication:
    """
    The Hilbert-Schmidt dual of matrix multiplication M_m (x) M_m -> M_m.

    Evaluates E_ik -> sum_j E_ij (x) E_jk, extended linearly.
    """

    dim: int

    def __init__(self, dim: int) -> None:
        if dim < 1:
            raise ValueError(f"Comultiplication needs a positive dimension, got {dim}")
        self.dim = dim

    def __call__(self, matrix: CMatrix) -> CMatrix:
        dim = self.dim
        if matrix.shape != (dim, dim):
            raise DimensionMismatch(f"Expected a {dim}x{dim} matrix, got {matrix.shape}")

        result = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
        for i in range(dim):
            for j in range(dim):
                result[i * dim + j, j * dim : (j + 1) * dim] += matrix[i, :]

        return result


def mu_dual(dim: int) -> Comultiplication:
    """The comultiplication evaluator on M_dim."""

    return Comultiplication(dim)


def choi_block_permutation(blocks: int, side: int, split: int) -> CMatrix:
    """
    Permutation gathering the top-left corners of every block of a Choi matrix.

    For a Choi matrix made of blocks x blocks sub-matrices of size side, each
    split at row/column `split`, U M U^dagger carries all split x split top-left
    corners into the leading (blocks*split)-square, keeping their block order.
    """

    if blocks < 1 or side < 1:
        raise InvalidSplit(f"Block count and side must be positive, got {blocks}, {side}")
    if not 0 <= split <= side:
        raise InvalidSplit(f"Split {split} lies outside a block of side {side}")

    total = blocks * side
    permutation = np.zeros((total, total), dtype=np.complex128)
    rest = side - split

    for block in range(blocks):
        for offset in range(split):
            permutation[block * split + offset, block * side + offset] = 1
        for offset in range(rest):
            row = blocks * split + block * rest + offset
            permutation[row, block * side + split + offset] = 1

    return permutation


def conjugate(
    channel: Channel,
    outer: CMatrix,
    inner: CMatrix,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Channel:
    """
    Ad_U o F o Ad_V for unitaries U (on the output) and V (on the input).

    :raise NotUnitary: if either matrix is not unitary of the right side
    """

    if outer.shape != (channel.dim_out, channel.dim_out) or not is_unitary(outer, tol):
        raise NotUnitary(
            f"Outer matrix must be a {channel.dim_out}x{channel.dim_out} unitary"
        )
    if inner.shape != (channel.dim_in, channel.dim_in) or not is_unitary(inner, tol):
        raise NotUnitary(f"Inner matrix must be a {channel.dim_in}x{channel.dim_in} unitary")

    return Channel(
        [outer @ op @ inner for op in channel.kraus],
        dim_in=channel.dim_in,
        dim_out=channel.dim_out,
    )


def compose(outer: Channel, inner: Channel) -> Channel:
    """outer o inner, with Kraus operators all products."""

    if outer.dim_in != inner.dim_out:
        raise DimensionMismatch(
            f"Cannot compose M_{outer.dim_in} -> M_{outer.dim_out} after "
            f"M_{inner.dim_in} -> M_{inner.dim_out}"
        )

    return Channel(
        [left @ right for left in outer.kraus for right in inner.kraus],
        dim_in=inner.dim_in,
        dim_out=outer.dim_out,
    )


__all__ = [
    "ChoiMatrix",
    "MapInterface",
    "Channel",
    "LinearMap",
    "AnyMap",
    "apply",
    "choi_matrix_of",
    "choi_of",
    "channel_of_choi",
    "linear_map_of_choi",
    "hs_dual",
    "is_cp",
    "is_unital",
    "is_trace_preserving",
    "OrthogonalKraus",
    "orthogonal_kraus",
    "choi_pseudoinverse",
    "Comultiplication",
    "mu_dual",
    "choi_block_permutation",
    "conjugate",
    "compose",
]
