#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Bayesian inversion between full matrix algebras.

Given a completely positive unital map F: M_n -> M_m and a density matrix rho on
M_m, a Bayesian inverse is a CPU map G: M_m -> M_n with

    tr(sigma G(A) B) = tr(rho A F(B))    for all A, B

where sigma = F*(rho). The value of G on the support of sigma is forced; this
module decides whether the forced corner extends to a completely positive map,
and builds the canonical extension when it does.
"""

from __future__ import annotations

from collections.abc import Mapping
from typing import TYPE_CHECKING, Optional, Union

import dataclasses
import logging

import numpy as np

from qbayes.channel import (
    AnyMap,
    Channel,
    ChoiMatrix,
    LinearMap,
    channel_of_choi,
    choi_matrix_of,
    hs_dual,
    is_cp,
    is_unital,
)
from qbayes.core import (
    BayesStatus,
    Check,
    CMatrix,
    CornerNotSelfAdjoint,
    DimensionMismatch,
    InternalInconsistency,
    InvalidProblem,
    NotCP,
    PreconditionFailed,
    QBayesError,
    Tolerances,
)
from qbayes.linalg import (
    DEFAULT_TOLERANCES,
    dagger,
    hermitian_eig,
    hermitian_part,
    identity,
    is_psd,
    matrix_unit,
    max_abs,
    max_eigenvalue_on_range,
    partial_trace_first,
    pseudoinverse,
    psd_sqrt,
    range_basis,
    support,
    tensor,
)

if TYPE_CHECKING:
    from qbayes.bayes.cstar import BlockChannel

_logger = logging.getLogger(__name__)

BAYES_RESIDUAL_FACTOR = 10.0
"""Bayes residuals are accepted up to this multiple of eq_tol."""


@dataclasses.dataclass(frozen=True)
class BayesProblem:
    """
    A CPU map F: M_n -> M_m together with a state tr(rho .) on M_m.

    The invariants are checked on construction.

    :raise InvalidProblem: if F is not unital or rho is not a density matrix
    """

    channel: Channel
    rho: CMatrix
    tol: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self) -> None:
        self.validate()

    @property
    def dim_in(self) -> int:
        """Side n of the domain M_n of F."""

        return self.channel.dim_in

    @property
    def dim_out(self) -> int:
        """Side m of the codomain M_m of F, which carries rho."""

        return self.channel.dim_out

    def validate(self) -> None:
        """Checks unitality of F and that rho is a density matrix on M_m."""

        side = self.channel.dim_out
        if self.rho.shape != (side, side):
            raise InvalidProblem(
                f"Density matrix must be {side}x{side} for a map into M_{side}, "
                f"got {self.rho.shape}"
            )

        unital = is_unital(self.channel, self.tol)
        if not unital:
            raise InvalidProblem(f"Channel is not unital (residual {unital.value:.3e})")

        try:
            positive = is_psd(self.rho, self.tol)
        except QBayesError as err:
            raise InvalidProblem(f"Density matrix is invalid: {err}") from err

        if not positive:
            raise InvalidProblem(
                f"Density matrix is not positive (min eigenvalue {positive.value:.3e})"
            )

        trace = complex(np.trace(self.rho))
        if abs(trace - 1) > self.tol.eq_tol:
            raise InvalidProblem(f"Density matrix has trace {trace.real:.6g}, expected 1")


@dataclasses.dataclass(frozen=True)
class CornerData:
    """
    The data forced by the Bayes condition on the support of sigma.

    frak_a and frak_b are the Choi matrices of A -> sigma_hat F*(rho A) P and
    A -> sigma_hat F*(rho A) P_perp respectively, with P the support of sigma.
    """

    sigma: CMatrix
    sigma_hat: CMatrix
    p_xi: CMatrix
    p_xi_perp: CMatrix
    frak_a: CMatrix
    frak_b: CMatrix
    tol: Tolerances = DEFAULT_TOLERANCES

    @property
    def dim_in(self) -> int:
        """Side m of the algebra the inverse acts on."""

        return self.frak_a.shape[0] // self.sigma.shape[0]

    @property
    def dim_out(self) -> int:
        """Side n of the algebra the inverse maps into."""

        return int(self.sigma.shape[0])


@dataclasses.dataclass(frozen=True)
class Certificates:
    """Numerical evidence that a candidate inverse is a CPU Bayesian inverse."""

    cp_min_eigenvalue: float
    unital_residual: float
    bayes_residual: float
    passed: bool

    def as_dict(self) -> dict[str, Union[float, bool]]:
        """Plain mapping for reports."""

        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class BlockFailure:
    """
    A failing condition of the direct-sum test, located at a block.

    `target` indexes the block of the inverse's codomain and `source` the block
    of its domain. Completion failures concern a whole target block and carry
    source None.
    """

    status: BayesStatus
    witness: float
    target: int
    source: Optional[int]


@dataclasses.dataclass(frozen=True)
class BayesOutcome:
    """
    Result of a Bayesian inversion.

    `inverse`, `unique` and `certificates` are set exactly when the status is
    Exists. `witness` is the asymmetry of the corner for FailsSelfAdjoint and
    the largest eigenvalue excess of the completion defect for FailsCompletion.
    """

    status: BayesStatus
    witness: float = 0.0
    inverse: Union[Channel, "BlockChannel", None] = None
    unique: Optional[bool] = None
    certificates: Optional[Certificates] = None
    failures: tuple[BlockFailure, ...] = ()
    diagnostics: Mapping[str, float] = dataclasses.field(default_factory=dict)

    @property
    def exists(self) -> bool:
        """Whether a CPU Bayesian inverse was found."""

        return self.status is BayesStatus.Exists


def marginal(problem: BayesProblem) -> CornerData:
    """
    Computes sigma = F*(rho), its support and pseudoinverse, and the corner blocks.

    :raise InvalidProblem: propagated from problem validation
    """

    tol = problem.tol
    dual = hs_dual(problem.channel)

    sigma = hermitian_part(dual.apply(problem.rho))
    sigma_hat = pseudoinverse(sigma, tol)
    p_xi = support(sigma, tol)
    p_xi_perp = identity(problem.dim_in) - p_xi

    rho = problem.rho

    def on_corner(matrix: CMatrix) -> CMatrix:
        return sigma_hat @ dual.apply(rho @ matrix) @ p_xi

    def off_corner(matrix: CMatrix) -> CMatrix:
        return sigma_hat @ dual.apply(rho @ matrix) @ p_xi_perp

    frak_a = choi_matrix_of(on_corner, problem.dim_out, problem.dim_in).matrix
    frak_b = choi_matrix_of(off_corner, problem.dim_out, problem.dim_in).matrix

    _logger.debug(
        "Corner data for M_%d -> M_%d: support rank %d",
        problem.dim_in,
        problem.dim_out,
        int(round(np.trace(p_xi).real)),
    )

    return CornerData(sigma, sigma_hat, p_xi, p_xi_perp, frak_a, frak_b, tol)


def corner_bayes_map(corner: CornerData, problem: BayesProblem, matrix: CMatrix) -> CMatrix:
    """
    The forced value sigma_hat F*(rho A) of P G(A) for any Bayesian inverse G.

    :raise DimensionMismatch: if A is not m x m
    """

    side = problem.dim_out
    if matrix.shape != (side, side):
        raise DimensionMismatch(f"Expected a {side}x{side} matrix, got {matrix.shape}")

    return corner.sigma_hat @ hs_dual(problem.channel).apply(problem.rho @ matrix)


def check_corner_selfadjoint(corner: CornerData) -> Check:
    """
    Whether the corner Choi block is Hermitian, which makes the corner CP.

    :raise InternalInconsistency: if the block is Hermitian but not positive
    """

    tol = corner.tol
    asymmetry = max_abs(corner.frak_a - dagger(corner.frak_a))

    if asymmetry > tol.eq_tol:
        return Check(False, asymmetry)

    positive = is_psd(hermitian_part(corner.frak_a), tol)
    if not positive:
        raise InternalInconsistency(
            f"Hermitian corner block has eigenvalue {positive.value:.3e} < 0"
        )

    return Check(True, asymmetry)


def completion_defect(corner: CornerData) -> CMatrix:
    """
    D = tr_1(B^dagger A_hat B); an inverse exists iff D <= P_perp.

    :raise CornerNotSelfAdjoint: if the corner block is not Hermitian
    :raise InternalInconsistency: if D leaks outside the P_perp corner
    """

    selfadjoint = check_corner_selfadjoint(corner)
    if not selfadjoint:
        raise CornerNotSelfAdjoint(selfadjoint.value)

    tol = corner.tol
    a_hat = pseudoinverse(hermitian_part(corner.frak_a), tol)
    gram = dagger(corner.frak_b) @ a_hat @ corner.frak_b
    defect = partial_trace_first(gram, corner.dim_in, corner.dim_out)

    scale = max(1.0, max_abs(defect))
    leak = max_abs(corner.p_xi @ defect)
    if leak > tol.eq_tol * scale:
        raise InternalInconsistency(f"Completion defect leaks onto the support ({leak:.3e})")

    return hermitian_part(corner.p_xi_perp @ defect @ corner.p_xi_perp)


def completion_excess(corner: CornerData, defect: CMatrix) -> float:
    """Largest eigenvalue of D - P_perp on the range of P_perp; zero if P_perp is zero."""

    excess = max_eigenvalue_on_range(defect - corner.p_xi_perp, corner.p_xi_perp, corner.tol)
    return 0.0 if excess is None else excess


def complete_choi(
    corner: CornerData, defect: CMatrix, filler: Optional[CMatrix] = None
) -> ChoiMatrix:
    """
    Assembles Choi(G) = A + B + B^dagger + C.

    The default filler spreads P_perp - D uniformly, (1/m) 1_m (x) (P_perp - D).
    Any other filler must be positive on 1 (x) P_perp with partial trace P_perp - D.
    """

    m, n = corner.dim_in, corner.dim_out
    a_hat = pseudoinverse(hermitian_part(corner.frak_a), corner.tol)

    if filler is None:
        filler = tensor(identity(m), corner.p_xi_perp - defect) / m

    frak_c = dagger(corner.frak_b) @ a_hat @ corner.frak_b + filler
    matrix = corner.frak_a + corner.frak_b + dagger(corner.frak_b) + frak_c
    return ChoiMatrix(m, n, hermitian_part(matrix))


def bayes_residual(forward: AnyMap, inverse: AnyMap, rho: CMatrix) -> float:
    """
    max |tr(sigma G(E_ij) E_kl) - tr(rho E_ij F(E_kl))| over all matrix units.

    :raise DimensionMismatch: if the maps do not run in opposite directions
    """

    n, m = forward.dim_in, forward.dim_out
    if (inverse.dim_in, inverse.dim_out) != (m, n):
        raise DimensionMismatch(
            f"Inverse must map M_{m} -> M_{n}, got M_{inverse.dim_in} -> M_{inverse.dim_out}"
        )
    if rho.shape != (m, m):
        raise DimensionMismatch(f"Density matrix must be {m}x{m}, got {rho.shape}")

    return pairing_residual(forward, inverse, hs_dual(forward).apply(rho), rho)


def pairing_residual(forward: AnyMap, inverse: AnyMap, sigma: CMatrix, rho: CMatrix) -> float:
    """
    max |tr(sigma G(E_ij) E_kl) - tr(rho E_ij F(E_kl))| for given sigma and rho.

    sigma and rho need not be normalised, which lets direct sums pass weighted blocks.
    """

    lhs = np.einsum("lc,icjk->ijkl", sigma, inverse.choi.blocks())
    rhs = np.einsum("kjlb,bi->ijkl", forward.choi.blocks(), rho)
    return max_abs(lhs - rhs)


def verify_bayes_condition(
    forward: AnyMap, inverse: AnyMap, rho: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> Check:
    """
    Checks the Bayes condition on every pair of matrix units.

    The condition is bilinear so this is complete. Passes when the residual is at
    most ten times eq_tol.
    """

    residual = bayes_residual(forward, inverse, rho)
    return Check(residual <= BAYES_RESIDUAL_FACTOR * tol.eq_tol, residual)


def ae_equal(
    first: AnyMap, second: AnyMap, density: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> bool:
    """
    Almost-everywhere equality: F(B) P = G(B) P for every B, P the support of the state.

    :raise DimensionMismatch: if the maps or the density do not match
    """

    if (first.dim_in, first.dim_out) != (second.dim_in, second.dim_out):
        raise DimensionMismatch("Maps compared for a.e. equality must share dimensions")

    n, m = first.dim_in, first.dim_out
    if density.shape != (m, m):
        raise DimensionMismatch(f"State must be {m}x{m}, got {density.shape}")

    projection = support(density, tol)
    difference = (first.choi.matrix - second.choi.matrix).reshape(n, m, n, m)
    return max_abs(np.einsum("ikjl,lp->ikjp", difference, projection)) <= tol.eq_tol


def corner_kraus(problem: BayesProblem, corner: CornerData) -> Channel:
    """
    Kraus operators sqrt(sigma_hat) V^dagger sqrt(rho) of A -> P G(A) P.

    :raise CornerNotSelfAdjoint: if the corner block is not Hermitian
    """

    selfadjoint = check_corner_selfadjoint(corner)
    if not selfadjoint:
        raise CornerNotSelfAdjoint(selfadjoint.value)

    root_sigma_hat = psd_sqrt(corner.sigma_hat, problem.tol)
    root_rho = psd_sqrt(problem.rho, problem.tol)

    return Channel(
        [root_sigma_hat @ dagger(op) @ root_rho for op in problem.channel.kraus],
        dim_in=problem.dim_out,
        dim_out=problem.dim_in,
    )


def schur_factor(
    block_a: CMatrix, block_b: CMatrix, block_c: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> CMatrix:
    """
    Factor L with [[A, B], [B^dagger, C]] = L L^dagger.

    L = [[A^(1/2), 0], [B^dagger A_hat^(1/2), (C - B^dagger A_hat B)^(1/2)]].

    :raise PreconditionFailed: naming the first of the three positivity conditions to fail
    """

    positive = is_psd(block_a, tol)
    if not positive:
        raise PreconditionFailed("upper-left block is not positive", positive.value)

    projection = support(block_a, tol)
    leak = max_abs(projection @ block_b - block_b)
    if leak > tol.eq_tol:
        raise PreconditionFailed("kernel of A is not contained in kernel of B^dagger", leak)

    a_hat = pseudoinverse(block_a, tol)
    complement = hermitian_part(block_c - dagger(block_b) @ a_hat @ block_b)
    schur = is_psd(complement, tol)
    if not schur:
        raise PreconditionFailed("Schur complement is not positive", schur.value)

    rows, cols = block_a.shape[0], block_c.shape[0]
    factor = np.zeros((rows + cols, rows + cols), dtype=np.complex128)
    factor[:rows, :rows] = psd_sqrt(block_a, tol)
    factor[rows:, :rows] = dagger(block_b) @ psd_sqrt(a_hat, tol)
    factor[rows:, rows:] = psd_sqrt(complement, tol)
    return factor


def certify(
    forward: AnyMap, inverse: AnyMap, rho: CMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> Certificates:
    """Collects the CP, unitality and Bayes certificates of a candidate inverse."""

    cp = is_cp(inverse, tol)
    unital = is_unital(inverse, tol)
    bayes = verify_bayes_condition(forward, inverse, rho, tol)

    return Certificates(
        cp_min_eigenvalue=cp.value,
        unital_residual=unital.value,
        bayes_residual=bayes.value,
        passed=bool(cp) and bool(unital) and bool(bayes),
    )


def unital_bayes_map(problem: BayesProblem, corner: Optional[CornerData] = None) -> LinearMap:
    """
    The unital Bayes map, which always exists but need not be positive.

        P G(A) = sigma_hat F*(rho A)
        P_perp G(A) P = P_perp F*(A rho) sigma_hat
        P_perp G(A) P_perp = tr(A)/m P_perp
    """

    corner = marginal(problem) if corner is None else corner
    dual = hs_dual(problem.channel)
    rho, m = problem.rho, problem.dim_out

    def evaluate(matrix: CMatrix) -> CMatrix:
        forced = corner.sigma_hat @ dual.apply(rho @ matrix)
        lower = corner.p_xi_perp @ dual.apply(matrix @ rho) @ corner.sigma_hat
        return forced + lower + np.trace(matrix) / m * corner.p_xi_perp

    return LinearMap(choi_matrix_of(evaluate, m, problem.dim_in))


def check_corner_commutation(problem: BayesProblem, corner: CornerData) -> Check:
    """
    P F*(rho A) sigma = sigma F*(A rho) P over all matrix units A.

    Equivalent to self-adjointness of the corner; kept as a diagnostic.
    """

    dual = hs_dual(problem.channel)
    rho, m = problem.rho, problem.dim_out
    worst = 0.0

    for i in range(m):
        for j in range(m):
            unit = matrix_unit(m, i, j)
            left = corner.p_xi @ dual.apply(rho @ unit) @ corner.sigma
            right = corner.sigma @ dual.apply(unit @ rho) @ corner.p_xi
            worst = max(worst, max_abs(left - right))

    return Check(worst <= problem.tol.eq_tol, worst)


def check_choi_commutation(problem: BayesProblem, corner: CornerData) -> Check:
    """
    Commutation of the diagonalised, corner-restricted Choi matrix with sigma_hat (x) rho.

    With rho = W diag W^dagger and sigma = V diag V^dagger, the Choi matrix of
    Ad_{W^dagger} o F o Ad_V o Ad_P must commute with the diagonal form of
    sigma_hat (x) rho. Diagnostic only.
    """

    tol = problem.tol
    rho_basis = hermitian_eig(problem.rho, tol).eigenvectors
    sigma_basis = hermitian_eig(corner.sigma, tol).eigenvectors

    diagonal_rho = dagger(rho_basis) @ problem.rho @ rho_basis
    diagonal_sigma_hat = dagger(sigma_basis) @ corner.sigma_hat @ sigma_basis
    diagonal_support = dagger(sigma_basis) @ corner.p_xi @ sigma_basis

    rotated = Channel(
        [
            dagger(rho_basis) @ op @ sigma_basis @ diagonal_support
            for op in problem.channel.kraus
        ],
        dim_in=problem.dim_in,
        dim_out=problem.dim_out,
    )

    weight = tensor(diagonal_sigma_hat, diagonal_rho)
    choi = rotated.choi.matrix
    residual = max_abs(choi @ weight - weight @ choi)
    return Check(residual <= tol.eq_tol * max(1.0, max_abs(weight)), residual)


def check_rho_in_commutant(problem: BayesProblem) -> Check:
    """
    Whether rho commutes with every F(B).

    A sufficient condition for positivity of the joint state; the witness is the
    largest commutator entry over matrix units.
    """

    n = problem.dim_in
    worst = 0.0

    for k in range(n):
        for l in range(n):
            image = problem.channel.apply(matrix_unit(n, k, l))
            worst = max(worst, max_abs(problem.rho @ image - image @ problem.rho))

    return Check(worst <= problem.tol.eq_tol, worst)


def trace_filler_kraus(p_xi_perp: CMatrix, dim: int, tol: Tolerances) -> list[CMatrix]:
    """Kraus operators of A -> tr(A)/dim P for an orthogonal projection P."""

    basis = range_basis(p_xi_perp, tol)
    operators = []

    for column in basis.T:
        for index in range(dim):
            row = np.zeros((1, dim), dtype=np.complex128)
            row[0, index] = 1
            operators.append(column.reshape(-1, 1) @ row / np.sqrt(dim))

    return operators


def faithful_prior_inverse(
    problem: BayesProblem, corner: Optional[CornerData] = None
) -> Channel:
    """
    Closed-form inverse for an invertible rho.

    G = sum_a Ad_{sqrt(sigma_hat) V_a^dagger sqrt(rho)} + (A -> tr(A)/m P_perp)

    :raise InvalidProblem: if rho is singular
    :raise CornerNotSelfAdjoint: if no inverse exists
    """

    tol = problem.tol
    if hermitian_eig(problem.rho, tol).rank(tol) != problem.dim_out:
        raise InvalidProblem("The closed-form inverse needs an invertible density matrix")

    corner = marginal(problem) if corner is None else corner
    on_support = corner_kraus(problem, corner)

    return Channel(
        list(on_support.kraus) + trace_filler_kraus(corner.p_xi_perp, problem.dim_out, tol),
        dim_in=problem.dim_out,
        dim_out=problem.dim_in,
    )


def bayesian_invert(problem: BayesProblem) -> BayesOutcome:
    """
    Decides existence of a CPU Bayesian inverse and constructs the canonical one.

    Self-adjointness of the corner is tested first; completion only when it holds.

    :raise InternalInconsistency: if a constructed inverse fails its certificates
    """

    tol = problem.tol
    corner = marginal(problem)

    diagnostics = {
        "corner_commutation": check_corner_commutation(problem, corner).value,
        "choi_commutation": check_choi_commutation(problem, corner).value,
    }

    selfadjoint = check_corner_selfadjoint(corner)
    if not selfadjoint:
        _logger.info("No Bayesian inverse: corner asymmetry %.3e", selfadjoint.value)
        return BayesOutcome(
            BayesStatus.FailsSelfAdjoint, witness=selfadjoint.value, diagnostics=diagnostics
        )

    defect = completion_defect(corner)
    excess = completion_excess(corner, defect)
    if excess > tol.psd_tol:
        _logger.info("No Bayesian inverse: completion defect exceeds P_perp by %.6g", excess)
        return BayesOutcome(
            BayesStatus.FailsCompletion, witness=excess, diagnostics=diagnostics
        )

    try:
        inverse = channel_of_choi(complete_choi(corner, defect), tol)
    except NotCP as err:
        raise InternalInconsistency(f"Completed Choi matrix is not positive: {err}") from err

    certificates = certify(problem.channel, inverse, problem.rho, tol)
    if not certificates.passed:
        raise InternalInconsistency(
            f"Constructed inverse failed certification: {certificates}"
        )

    unique = max_abs(defect - corner.p_xi_perp) <= tol.eq_tol
    _logger.info("Bayesian inverse exists (unique: %s)", unique)

    return BayesOutcome(
        BayesStatus.Exists,
        witness=excess,
        inverse=inverse,
        unique=unique,
        certificates=certificates,
        diagnostics=diagnostics,
    )


__all__ = [
    "BAYES_RESIDUAL_FACTOR",
    "BayesProblem",
    "CornerData",
    "Certificates",
    "BlockFailure",
    "BayesOutcome",
    "marginal",
    "corner_bayes_map",
    "check_corner_selfadjoint",
    "completion_defect",
    "completion_excess",
    "complete_choi",
    "bayes_residual",
    "pairing_residual",
    "verify_bayes_condition",
    "ae_equal",
    "corner_kraus",
    "schur_factor",
    "certify",
    "unital_bayes_map",
    "check_corner_commutation",
    "check_choi_commutation",
    "check_rho_in_commutant",
    "trace_filler_kraus",
    "faithful_prior_inverse",
    "bayesian_invert",
]
