#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Closed-form Bayesian inverses for special families of maps.

Measurements (POVMs), state preparations (ensembles), wave collapse and
coisometric embeddings all admit explicit existence criteria and explicit
inverses, which are cross-checked here against the general certificates.
"""

from __future__ import annotations

from collections.abc import Sequence

import logging

import numpy as np
import numpy.typing as npt

from qbayes.bayes.classical import check_stochastic
from qbayes.bayes.cstar import (
    BlockChannel,
    CStarAlgebra,
    CStarState,
    cstar_certify,
    single_state,
)
from qbayes.bayes.matrix import (
    BayesOutcome,
    BayesProblem,
    BlockFailure,
    bayesian_invert,
    certify,
    trace_filler_kraus,
)
from qbayes.channel import Channel, ChoiMatrix, channel_of_choi
from qbayes.core import (
    BayesStatus,
    CMatrix,
    InternalInconsistency,
    InvalidProblem,
    NotAPOVM,
    NotAResolution,
    NotAnEnsemble,
    NotCoisometry,
    NotCP,
    NotStochastic,
    QBayesError,
    Tolerances,
)
from qbayes.linalg import (
    DEFAULT_TOLERANCES,
    as_matrix,
    commutator,
    dagger,
    hermitian_eig,
    hermitian_part,
    identity,
    is_psd,
    max_abs,
    pseudoinverse,
    psd_sqrt,
    support,
    tensor,
)

_logger = logging.getLogger(__name__)


def _functional(density: CMatrix, tol: Tolerances) -> Channel:
    # A -> tr(density A) as a map M_m -> M_1
    side = density.shape[0]
    return channel_of_choi(ChoiMatrix(side, 1, hermitian_part(density).T), tol)


def _preparation(state: CMatrix, tol: Tolerances) -> Channel:
    # c -> c state as a map M_1 -> M_n
    return channel_of_choi(ChoiMatrix(1, state.shape[0], hermitian_part(state)), tol)


def _positive_blocks(
    matrices: Sequence[CMatrix], tol: Tolerances, error: type[InvalidProblem], what: str
) -> list[CMatrix]:
    if not matrices:
        raise error(f"At least one {what} is required")

    blocks = [as_matrix(matrix) for matrix in matrices]
    shape = blocks[0].shape
    for index, block in enumerate(blocks):
        if block.shape != shape:
            raise error(
                f"{what.capitalize()} {index} has shape {block.shape}, expected {shape}"
            )
        try:
            positive = is_psd(block, tol)
        except QBayesError as err:
            raise error(f"{what.capitalize()} {index} is invalid: {err}") from err
        if not positive:
            raise error(
                f"{what.capitalize()} {index} is not positive"
                f" (min eigenvalue {positive.value:.3e})"
            )

    return [hermitian_part(block) for block in blocks]


def validate_povm(
    effects: Sequence[CMatrix], tol: Tolerances = DEFAULT_TOLERANCES
) -> list[CMatrix]:
    """
    Checks the effects are positive and sum to the identity.

    :raise NotAPOVM: naming the failing effect or the sum residual
    """

    blocks = _positive_blocks(effects, tol, NotAPOVM, "effect")
    total = sum(blocks, np.zeros_like(blocks[0]))
    residual = max_abs(total - identity(total.shape[0]))
    if residual > tol.eq_tol:
        raise NotAPOVM(f"Effects sum to the identity only up to {residual:.3e}")

    return blocks


def povm_channel(
    effects: Sequence[CMatrix], tol: Tolerances = DEFAULT_TOLERANCES
) -> BlockChannel:
    """
    The PU map C^Y -> M_m sending e_y to the effect F_y.

    :raise NotAPOVM: if the effects are not a POVM
    """

    blocks = validate_povm(effects, tol)
    side = blocks[0].shape[0]

    return BlockChannel(
        source=CStarAlgebra.commutative(len(blocks)),
        target=CStarAlgebra((side,)),
        entries={(0, y): _preparation(effect, tol) for y, effect in enumerate(blocks)},
    )


def _validated_state(rho: CMatrix, side: int, tol: Tolerances) -> CStarState:
    if rho.shape != (side, side):
        raise InvalidProblem(f"Density matrix must be {side}x{side}, got {rho.shape}")
    state = single_state(rho)
    state.validate(tol)
    return state


def povm_bayes(
    effects: Sequence[CMatrix], rho: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> BayesOutcome:
    """
    Bayesian inverse of a measurement.

    Exists iff rho commutes with every effect of positive probability; then
    G(A)_y = tr(rho A F_y) / q_y, and tr(A)/m on outcomes of zero probability.

    :raise NotAPOVM: if the effects are not a POVM
    """

    channel = povm_channel(effects, tol)
    blocks = validate_povm(effects, tol)
    side = blocks[0].shape[0]
    state = _validated_state(rho, side, tol)

    probabilities = [float(np.trace(rho @ effect).real) for effect in blocks]

    fixed_point = sum(
        (psd_sqrt(effect, tol) @ rho @ psd_sqrt(effect, tol) for effect in blocks),
        np.zeros_like(rho),
    )
    fixed_residual = max_abs(fixed_point - rho)
    diagnostics = {"fixed_point_residual": fixed_residual}

    failures = []
    for y, (effect, weight) in enumerate(zip(blocks, probabilities)):
        if weight <= tol.rank_tol:
            continue
        witness = max_abs(commutator(rho, effect))
        if witness > tol.eq_tol:
            failures.append(BlockFailure(BayesStatus.FailsSelfAdjoint, witness, y, 0))

    # rho is a fixed point of the Lueders channel exactly when it commutes with the effects
    disagrees = (fixed_residual <= tol.eq_tol) == bool(failures)
    diagnostics["fixed_point_disagreement"] = float(disagrees)
    if disagrees:
        _logger.warning(
            "Fixed-point residual %.3e disagrees with the commutation test (%d failures)",
            fixed_residual,
            len(failures),
        )

    if failures:
        _logger.info(
            "No Bayesian inverse for the measurement: %d effects fail", len(failures)
        )
        return BayesOutcome(
            BayesStatus.FailsSelfAdjoint,
            witness=max(failure.witness for failure in failures),
            failures=tuple(failures),
            diagnostics=diagnostics,
        )

    entries = {}
    for y, (effect, weight) in enumerate(zip(blocks, probabilities)):
        if weight > tol.rank_tol:
            entries[(y, 0)] = _functional(rho @ effect / weight, tol)
        else:
            entries[(y, 0)] = _functional(identity(side) / side, tol)

    inverse = BlockChannel(source=channel.target, target=channel.source, entries=entries)
    certificates = cstar_certify(channel, inverse, state, tol)
    if not certificates.passed:
        raise InternalInconsistency(
            f"Measurement inverse failed certification: {certificates}"
        )

    return BayesOutcome(
        BayesStatus.Exists,
        inverse=inverse,
        unique=all(weight > tol.rank_tol for weight in probabilities),
        certificates=certificates,
        diagnostics=diagnostics,
    )


def ensemble_channel(
    states: Sequence[CMatrix], tol: Tolerances = DEFAULT_TOLERANCES
) -> BlockChannel:
    """
    The CPU map M_n -> C^X, B -> (tr(sigma_x B))_x.

    :raise NotAnEnsemble: if a state is not a density matrix
    """

    blocks = _positive_blocks(states, tol, NotAnEnsemble, "state")
    for index, state in enumerate(blocks):
        trace = complex(np.trace(state))
        if abs(trace - 1) > tol.eq_tol:
            raise NotAnEnsemble(f"State {index} has trace {trace.real:.6g}, expected 1")

    return BlockChannel(
        source=CStarAlgebra((blocks[0].shape[0],)),
        target=CStarAlgebra.commutative(len(blocks)),
        entries={(x, 0): _functional(state, tol) for x, state in enumerate(blocks)},
    )


def ensemble_bayes(
    states: Sequence[CMatrix],
    probabilities: npt.ArrayLike,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> BayesOutcome:
    """
    Bayesian inverse of a state preparation x -> sigma_x with prior p.

    Exists iff p_x [sigma, sigma_x] = 0 for all x, where sigma = sum_x p_x sigma_x;
    then G(e_x) = p_x (sigma_hat sigma_x + P_perp).

    :raise NotAnEnsemble: if the states or weights are invalid
    """

    channel = ensemble_channel(states, tol)
    blocks = _positive_blocks(states, tol, NotAnEnsemble, "state")

    try:
        weights = check_stochastic(probabilities, tol, what="Ensemble weights").reshape(-1)
    except NotStochastic as err:
        raise NotAnEnsemble(str(err)) from err
    if weights.size != len(blocks):
        raise NotAnEnsemble(f"{weights.size} weights given for {len(blocks)} states")

    side = blocks[0].shape[0]
    sigma = sum(
        (p * state for p, state in zip(weights, blocks)),
        np.zeros((side, side), dtype=np.complex128),
    )
    sigma_hat = pseudoinverse(sigma, tol)
    complement = identity(side) - support(sigma, tol)

    failures = []
    for x, (p, state) in enumerate(zip(weights, blocks)):
        witness = p * max_abs(commutator(sigma, state))
        if witness > tol.eq_tol:
            failures.append(BlockFailure(BayesStatus.FailsSelfAdjoint, witness, 0, x))

    if failures:
        _logger.info(
            "No Bayesian inverse for the ensemble: %d non-commuting states", len(failures)
        )
        return BayesOutcome(
            BayesStatus.FailsSelfAdjoint,
            witness=max(failure.witness for failure in failures),
            failures=tuple(failures),
        )

    entries = {}
    for x, (p, state) in enumerate(zip(weights, blocks)):
        try:
            entries[(0, x)] = _preparation(p * (sigma_hat @ state + complement), tol)
        except NotCP as err:
            raise InternalInconsistency(
                f"Posterior state {x} is not positive: {err}"
            ) from err

    inverse = BlockChannel(source=channel.target, target=channel.source, entries=entries)
    certificates = cstar_certify(channel, inverse, CStarState.classical(weights), tol)
    if not certificates.passed:
        raise InternalInconsistency(f"Ensemble inverse failed certification: {certificates}")

    return BayesOutcome(
        BayesStatus.Exists,
        inverse=inverse,
        unique=hermitian_eig(sigma, tol).rank(tol) == side,
        certificates=certificates,
    )


def validate_resolution(
    projections: Sequence[CMatrix], tol: Tolerances = DEFAULT_TOLERANCES
) -> list[CMatrix]:
    """
    Checks pairwise orthogonal projections summing to the identity.

    :raise NotAResolution: naming the failing projection or pair
    """

    if not projections:
        raise NotAResolution("At least one projection is required")

    blocks = [as_matrix(projection) for projection in projections]
    side = blocks[0].shape[0]

    for index, block in enumerate(blocks):
        if block.shape != (side, side):
            raise NotAResolution(f"Projection {index} has shape {block.shape}")
        asymmetry = max_abs(block - dagger(block))
        if asymmetry > tol.eq_tol or max_abs(block @ block - block) > tol.eq_tol:
            raise NotAResolution(f"Matrix {index} is not an orthogonal projection")

    for first in range(len(blocks)):
        for second in range(first + 1, len(blocks)):
            overlap = max_abs(blocks[first] @ blocks[second])
            if overlap > tol.eq_tol:
                raise NotAResolution(
                    f"Projections {first} and {second} are not orthogonal ({overlap:.3e})"
                )

    residual = max_abs(sum(blocks, np.zeros_like(blocks[0])) - identity(side))
    if residual > tol.eq_tol:
        raise NotAResolution(f"Projections sum to the identity only up to {residual:.3e}")

    return [hermitian_part(block) for block in blocks]


def wave_collapse_invert(
    projections: Sequence[CMatrix], rho: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> BayesOutcome:
    """
    Bayesian inverse of the collapse F = sum Ad_P over a resolution of the identity.

    Exists iff rho = sum P rho P, in which case G = F and it is unique. Otherwise
    the failure reported is that of the general test.

    :raise NotAResolution: if the projections are not a resolution of the identity
    """

    blocks = validate_resolution(projections, tol)
    channel = Channel(blocks)
    problem = BayesProblem(channel, rho, tol)

    residual = max_abs(rho - channel.apply(rho))
    diagnostics = {"collapse_residual": residual}

    if residual <= tol.eq_tol:
        certificates = certify(channel, channel, rho, tol)
        if not certificates.passed:
            raise InternalInconsistency(
                f"Collapse failed its own certificates: {certificates}"
            )
        _logger.info("Collapse is its own Bayesian inverse")
        return BayesOutcome(
            BayesStatus.Exists,
            inverse=channel,
            unique=True,
            certificates=certificates,
            diagnostics=diagnostics,
        )

    general = bayesian_invert(problem)
    if general.exists:
        _logger.warning(
            "General test finds an inverse although rho is not block diagonal (%.3e)",
            residual,
        )
        return BayesOutcome(
            BayesStatus.FailsSelfAdjoint, witness=residual, diagnostics=diagnostics
        )

    return BayesOutcome(
        general.status,
        witness=general.witness,
        diagnostics={**general.diagnostics, **diagnostics},
    )


def validate_coisometry(coisometry: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """
    Checks V V^dagger = 1.

    :raise NotCoisometry: with the residual
    """

    matrix = as_matrix(coisometry)
    rows, cols = matrix.shape
    if rows > cols:
        raise NotCoisometry(f"A {rows}x{cols} matrix cannot be a coisometry")

    residual = max_abs(matrix @ dagger(matrix) - identity(rows))
    if residual > tol.eq_tol:
        raise NotCoisometry(f"V V^dagger differs from the identity by {residual:.3e}")

    return matrix


def isometry_bayes(
    coisometry: CMatrix, rho: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> Channel:
    """
    The Bayesian inverse of Ad_V for a coisometry V, which always exists.

        G(A) = V^dagger A V + tr(A)/m (1 - V^dagger V)

    :raise NotCoisometry: if V V^dagger is not the identity
    :raise InternalInconsistency: if the support or certificate checks fail
    """

    matrix = validate_coisometry(coisometry, tol)
    channel = Channel([matrix])
    problem = BayesProblem(channel, rho, tol)

    rows, cols = matrix.shape
    range_projection = dagger(matrix) @ matrix
    complement = identity(cols) - range_projection

    sigma = dagger(matrix) @ rho @ matrix
    leak = max_abs(complement @ support(sigma, tol))
    if leak > tol.eq_tol:
        raise InternalInconsistency(
            f"Support of sigma leaves the range of V^dagger ({leak:.3e})"
        )

    inverse = Channel(
        [dagger(matrix)] + trace_filler_kraus(complement, rows, tol),
        dim_in=rows,
        dim_out=cols,
    )

    certificates = certify(problem.channel, inverse, rho, tol)
    if not certificates.passed:
        raise InternalInconsistency(
            f"Coisometry inverse failed certification: {certificates}"
        )

    return inverse


def isometry_outcome(
    coisometry: CMatrix, rho: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> BayesOutcome:
    """The closed-form coisometry inverse, with uniqueness taken from the general test."""

    inverse = isometry_bayes(coisometry, rho, tol)
    problem = BayesProblem(Channel([as_matrix(coisometry)]), rho, tol)

    general = bayesian_invert(problem)
    if not general.exists:
        raise InternalInconsistency(
            f"General test reports {general.status.value} for a coisometry"
        )

    return BayesOutcome(
        BayesStatus.Exists,
        inverse=inverse,
        unique=general.unique,
        certificates=certify(problem.channel, inverse, rho, tol),
        diagnostics=general.diagnostics,
    )


def amplification_channel(copies: int, dim: int) -> Channel:
    """The unital *-homomorphism B -> 1_p (x) B, with Kraus operators e_k (x) 1_n."""

    if copies < 1 or dim < 1:
        raise ValueError(f"Amplification needs positive sizes, got {copies}, {dim}")

    return Channel(
        [tensor(identity(copies)[:, [k]], identity(dim)) for k in range(copies)],
        dim_in=dim,
        dim_out=copies * dim,
    )


def reduced_disintegration(
    tau: CMatrix, dim: int, tol: Tolerances = DEFAULT_TOLERANCES
) -> Channel:
    """
    A -> tr_p((sqrt(tau) (x) 1_n) A (sqrt(tau) (x) 1_n)).

    The disintegration of the amplification for a product prior tau (x) sigma.

    :raise InvalidProblem: if tau is not a density matrix
    """

    state = single_state(as_matrix(tau))
    try:
        state.validate(tol)
    except InvalidProblem as err:
        raise InvalidProblem(f"Amplification prior is not a state: {err}") from err

    root = psd_sqrt(as_matrix(tau), tol)
    copies = root.shape[0]

    return Channel(
        [tensor(root[[k], :], identity(dim)) for k in range(copies)],
        dim_in=copies * dim,
        dim_out=dim,
    )


def bitflip_channel(weight: float) -> Channel:
    """
    The qubit channel lambda id + (1 - lambda) Ad_X.

    :raise ValueError: unless 0 <= weight <= 1
    """

    if not 0 <= weight <= 1:
        raise ValueError(f"Bit-flip weight must lie in [0, 1], got {weight}")

    flip = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    return Channel([np.sqrt(weight) * identity(2), np.sqrt(1 - weight) * flip])


__all__ = [
    "validate_povm",
    "povm_channel",
    "povm_bayes",
    "ensemble_channel",
    "ensemble_bayes",
    "validate_resolution",
    "wave_collapse_invert",
    "validate_coisometry",
    "isometry_bayes",
    "isometry_outcome",
    "amplification_channel",
    "reduced_disintegration",
    "bitflip_channel",
]
