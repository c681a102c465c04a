#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Bayesian inversion between direct sums of matrix algebras.

A map F from B = (+)_y M_{n_y} to A = (+)_x M_{m_x} is stored by its blocks
F_xy: M_{n_y} -> M_{m_x}. A state on A is a weight p_x and a density rho_x per
block. The inverse G runs from A back to B with blocks G_yx.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from typing import Optional

import dataclasses
import logging

import numpy as np

from qbayes.bayes.matrix import (
    BAYES_RESIDUAL_FACTOR,
    BayesOutcome,
    BlockFailure,
    Certificates,
    ae_equal,
    pairing_residual,
)
from qbayes.channel import (
    AnyMap,
    Channel,
    ChoiMatrix,
    channel_of_choi,
    choi_matrix_of,
    hs_dual,
    is_cp,
)
from qbayes.core import (
    BayesStatus,
    Check,
    CMatrix,
    DimensionMismatch,
    InternalInconsistency,
    InvalidProblem,
    NotCP,
    QBayesError,
    Tolerances,
)
from qbayes.linalg import (
    DEFAULT_TOLERANCES,
    dagger,
    hermitian_part,
    identity,
    is_psd,
    matrix_unit,
    max_abs,
    max_eigenvalue_on_range,
    partial_trace_first,
    pseudoinverse,
    support,
    tensor,
)

_logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class CStarAlgebra:
    """A finite direct sum of full matrix algebras, given by the block sides."""

    blocks: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.blocks:
            raise InvalidProblem("A direct sum needs at least one block")
        if any(int(side) < 1 for side in self.blocks):
            raise InvalidProblem(f"Block sides must be positive, got {self.blocks}")
        object.__setattr__(self, "blocks", tuple(int(side) for side in self.blocks))

    @classmethod
    def commutative(cls, points: int) -> CStarAlgebra:
        """C^points as a sum of one-dimensional blocks."""

        return cls((1,) * points)

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, index: int) -> int:
        return self.blocks[index]

    def units(self) -> list[CMatrix]:
        """The unit of every block."""

        return [identity(side) for side in self.blocks]


@dataclasses.dataclass(frozen=True, eq=False)
class CStarState:
    """
    The state A -> sum_x p_x tr(rho_x A_x) on a direct sum.

    Densities on zero-weight blocks are never read by any decision.
    """

    weights: np.ndarray
    densities: tuple[CMatrix, ...]

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "densities", tuple(self.densities))

        if weights.size != len(self.densities):
            raise DimensionMismatch(
                f"{weights.size} weights given for {len(self.densities)} density blocks"
            )

    @classmethod
    def classical(cls, probabilities: Sequence[float]) -> CStarState:
        """A probability vector as a state on C^X."""

        weights = np.asarray(probabilities, dtype=np.float64)
        return cls(weights, tuple(identity(1) for _ in range(weights.size)))

    @property
    def algebra(self) -> CStarAlgebra:
        """The direct sum the state lives on."""

        return CStarAlgebra(tuple(int(density.shape[0]) for density in self.densities))

    def validate(self, tol: Tolerances = DEFAULT_TOLERANCES) -> None:
        """
        Checks weights form a probability vector and every density is a state.

        :raise InvalidProblem: naming the first offending block
        """

        if np.any(self.weights < -tol.psd_tol):
            raise InvalidProblem(f"Block weights must be non-negative, got {self.weights}")
        if abs(float(np.sum(self.weights)) - 1) > tol.eq_tol:
            raise InvalidProblem(
                f"Block weights sum to {np.sum(self.weights):.6g}, expected 1"
            )

        for index, density in enumerate(self.densities):
            try:
                positive = is_psd(density, tol)
            except QBayesError as err:
                raise InvalidProblem(f"Density of block {index} is invalid: {err}") from err
            if not positive:
                raise InvalidProblem(
                    f"Density of block {index} is not positive "
                    f"(min eigenvalue {positive.value:.3e})"
                )
            trace = complex(np.trace(density))
            if abs(trace - 1) > tol.eq_tol:
                raise InvalidProblem(f"Density of block {index} has trace {trace.real:.6g}")

    def expectation(self, blocks: Sequence[CMatrix]) -> complex:
        """sum_x p_x tr(rho_x A_x)."""

        if len(blocks) != len(self.densities):
            raise DimensionMismatch(
                f"Expected {len(self.densities)} blocks, got {len(blocks)}"
            )

        return complex(
            sum(
                weight * np.trace(density @ block)
                for weight, density, block in zip(self.weights, self.densities, blocks)
            )
        )


@dataclasses.dataclass(frozen=True, eq=False)
class BlockChannel:
    """
    A map from `source` to `target` stored block by block.

    `entries[(x, y)]` is the block M_{source[y]} -> M_{target[x]}; missing
    entries are zero maps. Unitality is taken per target block,
    sum_y F_xy(1) = 1 for every x.
    """

    source: CStarAlgebra
    target: CStarAlgebra
    entries: Mapping[tuple[int, int], Channel]

    def __post_init__(self) -> None:
        for (x, y), entry in self.entries.items():
            if not (0 <= x < len(self.target) and 0 <= y < len(self.source)):
                raise DimensionMismatch(f"Block ({x}, {y}) lies outside the direct sums")
            expected = (self.source[y], self.target[x])
            if (entry.dim_in, entry.dim_out) != expected:
                raise DimensionMismatch(
                    f"Block ({x}, {y}) must map M_{expected[0]} -> M_{expected[1]}, "
                    f"got M_{entry.dim_in} -> M_{entry.dim_out}"
                )
        object.__setattr__(self, "entries", dict(self.entries))

    def entry(self, target: int, source: int) -> Channel:
        """The block from source block `source` into target block `target`."""

        found = self.entries.get((target, source))
        if found is None:
            return Channel([], dim_in=self.source[source], dim_out=self.target[target])
        return found

    def apply(self, blocks: Sequence[CMatrix]) -> list[CMatrix]:
        """Evaluates the map on a block-diagonal input."""

        if len(blocks) != len(self.source):
            raise DimensionMismatch(
                f"Expected {len(self.source)} input blocks, got {len(blocks)}"
            )

        return [
            sum(
                (self.entry(x, y).apply(blocks[y]) for y in range(len(self.source))),
                np.zeros((side, side), dtype=np.complex128),
            )
            for x, side in enumerate(self.target.blocks)
        ]

    def hs_dual(self) -> BlockChannel:
        """The Hilbert-Schmidt dual, running from target back to source."""

        return BlockChannel(
            source=self.target,
            target=self.source,
            entries={(y, x): hs_dual(entry) for (x, y), entry in self.entries.items()},
        )

    def is_unital(self, tol: Tolerances = DEFAULT_TOLERANCES) -> Check:
        """Largest unitality residual over target blocks."""

        images = self.apply(self.source.units())
        residual = max(max_abs(image - identity(image.shape[0])) for image in images)
        return Check(residual <= tol.eq_tol, residual)

    def cp_min_eigenvalue(self, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
        """Smallest Choi eigenvalue over all stored blocks."""

        return min((is_cp(entry, tol).value for entry in self.entries.values()), default=0.0)


def _check_state_on(channel: BlockChannel, omega: CStarState) -> None:
    if omega.algebra != channel.target:
        raise DimensionMismatch(
            f"State lives on blocks {omega.algebra.blocks}, "
            f"the map lands in blocks {channel.target.blocks}"
        )


def _weighted_marginals(channel: BlockChannel, omega: CStarState) -> list[CMatrix]:
    # q_y sigma_y = sum_x p_x F*_xy(rho_x)
    dual = channel.hs_dual()
    return [
        hermitian_part(
            sum(
                (
                    weight * dual.entry(y, x).apply(density)
                    for x, (weight, density) in enumerate(zip(omega.weights, omega.densities))
                ),
                np.zeros((side, side), dtype=np.complex128),
            )
        )
        for y, side in enumerate(channel.source.blocks)
    ]


def cstar_marginal(
    channel: BlockChannel, omega: CStarState, tol: Tolerances = DEFAULT_TOLERANCES
) -> CStarState:
    """
    The pulled-back state omega o F on the source algebra.

    Blocks with weight at most rank_tol get the maximally mixed density.

    :raise DimensionMismatch: if omega does not live on the target algebra
    """

    _check_state_on(channel, omega)

    weights, densities = [], []
    for side, weighted in zip(channel.source.blocks, _weighted_marginals(channel, omega)):
        weight = float(np.trace(weighted).real)
        weights.append(weight)
        densities.append(
            weighted / weight if weight > tol.rank_tol else identity(side) / side
        )

    return CStarState(np.array(weights), tuple(densities))


def null_block_defects(
    channel: BlockChannel,
    omega: CStarState,
    pulled_back: CStarState,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> dict[tuple[int, int], float]:
    """
    Corner containment on null source blocks.

    For every source block y of zero weight and target block x of positive
    weight, F_xy must land in the complement of the support of rho_x. Returns
    the largest |P_x F_xy(E_kl) P_x| per (x, y).
    """

    defects: dict[tuple[int, int], float] = {}

    for y, weight in enumerate(pulled_back.weights):
        if weight > tol.rank_tol:
            continue

        side = channel.source[y]
        for x, (prior, density) in enumerate(zip(omega.weights, omega.densities)):
            if prior <= tol.rank_tol:
                continue

            projection = support(density, tol)
            entry = channel.entry(x, y)
            worst = max(
                max_abs(projection @ entry.apply(matrix_unit(side, k, l)) @ projection)
                for k in range(side)
                for l in range(side)
            )
            defects[(x, y)] = worst

            if worst > tol.eq_tol:
                _logger.warning(
                    "Block (%d, %d) reaches the support of a weighted state (%.3e)",
                    x,
                    y,
                    worst,
                )

    return defects


def cstar_verify_bayes(
    channel: BlockChannel,
    inverse: BlockChannel,
    omega: CStarState,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Check:
    """
    Checks q_y tr(sigma_y G_yx(A) B) = p_x tr(rho_x A F_xy(B)) on all matrix units.

    :raise DimensionMismatch: if G does not run from target back to source
    """

    _check_state_on(channel, omega)
    if inverse.source != channel.target or inverse.target != channel.source:
        raise DimensionMismatch("Inverse must run from the map's target back to its source")

    weighted = _weighted_marginals(channel, omega)
    residual = 0.0

    for y in range(len(channel.source)):
        for x, (weight, density) in enumerate(zip(omega.weights, omega.densities)):
            residual = max(
                residual,
                pairing_residual(
                    channel.entry(x, y), inverse.entry(y, x), weighted[y], weight * density
                ),
            )

    return Check(residual <= BAYES_RESIDUAL_FACTOR * tol.eq_tol, residual)


def cstar_certify(
    channel: BlockChannel,
    inverse: BlockChannel,
    omega: CStarState,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Certificates:
    """CP, unitality and Bayes certificates of a blockwise candidate inverse."""

    cp_min = inverse.cp_min_eigenvalue(tol)
    unital = inverse.is_unital(tol)
    bayes = cstar_verify_bayes(channel, inverse, omega, tol)

    return Certificates(
        cp_min_eigenvalue=cp_min,
        unital_residual=unital.value,
        bayes_residual=bayes.value,
        passed=cp_min >= -tol.psd_tol and bool(unital) and bool(bayes),
    )


def cstar_ae_equal(
    first: BlockChannel,
    second: BlockChannel,
    pulled_back: CStarState,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> bool:
    """
    Blockwise almost-everywhere equality of two candidate inverses.

    Blocks y of zero weight in the pulled-back state are unconstrained; on the
    others every G_yx must agree on the support of sigma_y.

    :raise DimensionMismatch: if the maps do not share their direct sums
    """

    if first.source != second.source or first.target != second.target:
        raise DimensionMismatch(
            "Maps compared for a.e. equality must share their direct sums"
        )
    if pulled_back.algebra != first.target:
        raise DimensionMismatch("State must live on the codomain of the inverses")

    for y, weight in enumerate(pulled_back.weights):
        if weight <= tol.rank_tol:
            continue
        for x in range(len(first.source)):
            if not ae_equal(
                first.entry(y, x), second.entry(y, x), pulled_back.densities[y], tol
            ):
                return False

    return True


@dataclasses.dataclass(frozen=True)
class _TargetBlock:
    """Corner data for one block y of the inverse's codomain."""

    sigma_hat: CMatrix
    support: CMatrix
    complement: CMatrix
    frak_a: dict[int, CMatrix]
    frak_b: dict[int, CMatrix]


def _forced_choi(
    sigma_hat: CMatrix, dual: AnyMap, density: CMatrix, right: CMatrix, dim_in: int
) -> CMatrix:
    # Choi of A -> sigma_hat F*(rho A) right
    return choi_matrix_of(
        lambda matrix: sigma_hat @ dual.apply(density @ matrix) @ right,
        dim_in,
        sigma_hat.shape[0],
    ).matrix


def _corner_blocks(
    channel: BlockChannel,
    omega: CStarState,
    pulled_back: CStarState,
    y: int,
    tol: Tolerances,
) -> _TargetBlock:
    side = channel.source[y]
    weight = pulled_back.weights[y]
    sigma = pulled_back.densities[y]

    sigma_hat = pseudoinverse(sigma, tol)
    projection = support(sigma, tol)
    complement = identity(side) - projection

    frak_a, frak_b = {}, {}
    for x, (prior, density) in enumerate(zip(omega.weights, omega.densities)):
        dual = hs_dual(channel.entry(x, y))
        scale = prior / weight
        width = channel.target[x]

        frak_a[x] = scale * _forced_choi(sigma_hat, dual, density, projection, width)
        frak_b[x] = scale * _forced_choi(sigma_hat, dual, density, complement, width)

    return _TargetBlock(sigma_hat, projection, complement, frak_a, frak_b)


def cstar_bayesian_invert(
    channel: BlockChannel, omega: CStarState, tol: Tolerances = DEFAULT_TOLERANCES
) -> BayesOutcome:
    """
    Decides existence of a blockwise CPU Bayesian inverse and builds the canonical one.

    Self-adjointness is required of every corner block (y, x) with q_y > 0. The
    completion condition is then tested per target block y. Null blocks get the
    filler tr(A)/(m_x |X|) 1.

    :raise InvalidProblem: if F is not unital or omega is not a state
    :raise InternalInconsistency: if the constructed inverse fails certification
    """

    _check_state_on(channel, omega)
    omega.validate(tol)
    unital = channel.is_unital(tol)
    if not unital:
        raise InvalidProblem(f"Block channel is not unital (residual {unital.value:.3e})")

    pulled_back = cstar_marginal(channel, omega, tol)
    defects = null_block_defects(channel, omega, pulled_back, tol)
    diagnostics = {f"null_block_defect[{x},{y}]": value for (x, y), value in defects.items()}

    live = [y for y, weight in enumerate(pulled_back.weights) if weight > tol.rank_tol]
    corners = {y: _corner_blocks(channel, omega, pulled_back, y, tol) for y in live}

    asymmetric = []
    for y, corner in corners.items():
        for x, block in corner.frak_a.items():
            asymmetry = max_abs(block - dagger(block))
            if asymmetry > tol.eq_tol:
                asymmetric.append(BlockFailure(BayesStatus.FailsSelfAdjoint, asymmetry, y, x))

    if asymmetric:
        witness = max(failure.witness for failure in asymmetric)
        _logger.info("No Bayesian inverse: %d asymmetric corner blocks", len(asymmetric))
        return BayesOutcome(
            BayesStatus.FailsSelfAdjoint,
            witness=witness,
            failures=tuple(asymmetric),
            diagnostics=diagnostics,
        )

    completion: dict[int, tuple[CMatrix, dict[int, CMatrix]]] = {}
    incomplete = []

    for y, corner in corners.items():
        side = channel.source[y]
        grams = {}
        defect = np.zeros((side, side), dtype=np.complex128)

        for x, block in corner.frak_a.items():
            a_hat = pseudoinverse(hermitian_part(block), tol)
            gram = dagger(corner.frak_b[x]) @ a_hat @ corner.frak_b[x]
            grams[x] = gram
            defect = defect + partial_trace_first(gram, channel.target[x], side)

        defect = hermitian_part(corner.complement @ defect @ corner.complement)
        excess = max_eigenvalue_on_range(defect - corner.complement, corner.complement, tol)
        excess = 0.0 if excess is None else excess

        if excess > tol.psd_tol:
            incomplete.append(BlockFailure(BayesStatus.FailsCompletion, excess, y, None))
        completion[y] = (defect, grams)

    if incomplete:
        witness = max(failure.witness for failure in incomplete)
        _logger.info("No Bayesian inverse: completion fails on %d blocks", len(incomplete))
        return BayesOutcome(
            BayesStatus.FailsCompletion,
            witness=witness,
            failures=tuple(incomplete),
            diagnostics=diagnostics,
        )

    inverse = _assemble_inverse(channel, corners, completion, tol)

    certificates = cstar_certify(channel, inverse, omega, tol)
    if not certificates.passed:
        raise InternalInconsistency(
            f"Constructed inverse failed certification: {certificates}"
        )

    unique = len(live) == len(channel.source) and all(
        max_abs(defect - corners[y].complement) <= tol.eq_tol
        for y, (defect, _) in completion.items()
    )
    _logger.info("Blockwise Bayesian inverse exists (unique: %s)", unique)

    return BayesOutcome(
        BayesStatus.Exists,
        inverse=inverse,
        unique=unique,
        certificates=certificates,
        diagnostics=diagnostics,
    )


def _assemble_inverse(
    channel: BlockChannel,
    corners: Mapping[int, _TargetBlock],
    completion: Mapping[int, tuple[CMatrix, dict[int, CMatrix]]],
    tol: Tolerances,
) -> BlockChannel:
    count = len(channel.target)
    entries: dict[tuple[int, int], Channel] = {}

    for y, side in enumerate(channel.source.blocks):
        for x, width in enumerate(channel.target.blocks):
            if y not in corners:
                matrix = identity(width * side) / (width * count)
            else:
                corner = corners[y]
                defect, grams = completion[y]
                filler = tensor(identity(width), corner.complement - defect) / (width * count)
                block_b = corner.frak_b[x]
                matrix = corner.frak_a[x] + block_b + dagger(block_b) + grams[x] + filler

            try:
                entries[(y, x)] = channel_of_choi(
                    ChoiMatrix(width, side, hermitian_part(matrix)), tol
                )
            except NotCP as err:
                raise InternalInconsistency(
                    f"Completed block ({y}, {x}) is not positive: {err}"
                ) from err

    return BlockChannel(source=channel.target, target=channel.source, entries=entries)


def single_block(channel: Channel) -> BlockChannel:
    """Views a channel between full matrix algebras as a one-block map."""

    return BlockChannel(
        source=CStarAlgebra((channel.dim_in,)),
        target=CStarAlgebra((channel.dim_out,)),
        entries={(0, 0): channel},
    )


def single_state(density: CMatrix) -> CStarState:
    """A density matrix as a one-block state."""

    return CStarState(np.ones(1), (density,))


def from_block_entries(
    source: Sequence[int],
    target: Sequence[int],
    entries: Mapping[tuple[int, int], Sequence[CMatrix]],
    tol: Optional[Tolerances] = None,
) -> BlockChannel:
    """Builds a block channel from Kraus lists keyed by (target, source)."""

    source_algebra = CStarAlgebra(tuple(source))
    target_algebra = CStarAlgebra(tuple(target))

    channels = {
        (x, y): Channel(list(kraus), dim_in=source_algebra[y], dim_out=target_algebra[x])
        for (x, y), kraus in entries.items()
    }
    block = BlockChannel(source_algebra, target_algebra, channels)

    if tol is not None:
        unital = block.is_unital(tol)
        if not unital:
            raise InvalidProblem(f"Block channel is not unital (residual {unital.value:.3e})")

    return block


__all__ = [
    "CStarAlgebra",
    "CStarState",
    "BlockChannel",
    "cstar_marginal",
    "null_block_defects",
    "cstar_verify_bayes",
    "cstar_certify",
    "cstar_ae_equal",
    "cstar_bayesian_invert",
    "single_block",
    "single_state",
    "from_block_entries",
]
