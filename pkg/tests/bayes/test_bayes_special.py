# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Tests the closed forms for measurements, preparations, collapses and isometries.

Each closed form is compared with the general engine on randomised instances.
"""

from __future__ import annotations

import numpy as np
import pytest

from qbayes.bayes.cstar import (
    BlockChannel,
    cstar_ae_equal,
    cstar_bayesian_invert,
    cstar_marginal,
    single_state,
)
from qbayes.bayes.matrix import BayesProblem, bayesian_invert, verify_bayes_condition
from qbayes.bayes.special import (
    amplification_channel,
    bitflip_channel,
    ensemble_bayes,
    isometry_bayes,
    isometry_outcome,
    povm_bayes,
    povm_channel,
    reduced_disintegration,
    validate_coisometry,
    validate_povm,
    validate_resolution,
    wave_collapse_invert,
)
from qbayes.channel import Channel, is_unital
from qbayes.core import (
    BayesStatus,
    InvalidProblem,
    NotAPOVM,
    NotAResolution,
    NotAnEnsemble,
    NotCoisometry,
    Tolerances,
)
from qbayes.linalg import identity, matrix_unit, pseudoinverse, psd_sqrt
from qbayes.test import (
    BaseTestClassWithExample,
    random_coisometry,
    random_density,
    random_matrix,
    random_psd,
    random_unitary,
)

# pragma pylint: disable=R0903


_PLUS = np.full((2, 2), 0.5, dtype=np.complex128)


def _diagonal_povm(rng: np.random.Generator, side: int, outcomes: int) -> list[np.ndarray]:
    weights = rng.random((outcomes, side)) + 0.05
    weights /= weights.sum(axis=0)
    return [np.diag(row).astype(np.complex128) for row in weights]


def _generic_povm(rng: np.random.Generator, side: int, outcomes: int) -> list[np.ndarray]:
    parts = [random_psd(rng, side) for _ in range(outcomes)]
    root = psd_sqrt(pseudoinverse(sum(parts, np.zeros((side, side), dtype=np.complex128))))
    return [(root @ part @ root + (root @ part @ root).conj().T) / 2 for part in parts]


def _random_resolution(rng: np.random.Generator, side: int) -> list[np.ndarray]:
    unitary = random_unitary(rng, side)
    cuts = sorted(rng.choice(np.arange(1, side), size=rng.integers(1, side), replace=False))
    groups = np.split(np.arange(side), cuts)
    return [unitary[:, group] @ unitary[:, group].conj().T for group in groups]


def _block(inverse: BlockChannel, point: int) -> np.ndarray:
    units = [
        identity(1) if index == point else np.zeros((1, 1), dtype=np.complex128)
        for index in range(len(inverse.source))
    ]
    return inverse.apply(units)[0]


class TestPovm:
    """
    Bayesian inverses of measurements.
    """

    @staticmethod
    def test_commuting_instances() -> None:
        """Commuting priors always invert, with small residuals and a fixed point."""

        rng = np.random.default_rng(60)

        for _ in range(50):
            side, outcomes = rng.integers(2, 5), rng.integers(2, 5)
            effects = _diagonal_povm(rng, side, outcomes)
            rho = np.diag(rng.dirichlet(np.ones(side))).astype(np.complex128)

            outcome = povm_bayes(effects, rho)

            assert outcome.exists
            assert outcome.certificates is not None
            assert outcome.certificates.bayes_residual <= 1e-9
            assert outcome.diagnostics["fixed_point_residual"] <= 1e-9
            assert outcome.diagnostics["fixed_point_disagreement"] == 0.0

    @staticmethod
    def test_generic_instances() -> None:
        """Generic effects do not commute with a generic prior."""

        rng = np.random.default_rng(61)

        for _ in range(50):
            side, outcomes = rng.integers(2, 5), rng.integers(2, 5)
            effects = _generic_povm(rng, side, outcomes)
            outcome = povm_bayes(effects, random_density(rng, side))

            assert outcome.status is BayesStatus.FailsSelfAdjoint
            assert outcome.failures
            assert outcome.diagnostics["fixed_point_residual"] > 1e-9
            assert outcome.diagnostics["fixed_point_disagreement"] == 0.0

    @staticmethod
    def test_fixed_point_disagreement() -> None:
        """A commutator just above eq_tol with a residual just below it is flagged."""

        small = 0.01
        effects = [np.diag([small, 0.0]), np.diag([1 - small, 1.0])]
        rho = np.array([[0.5, 0.015], [0.015, 0.5]], dtype=np.complex128)

        outcome = povm_bayes(
            [effect.astype(np.complex128) for effect in effects], rho, Tolerances(eq_tol=1e-4)
        )

        assert outcome.status is BayesStatus.FailsSelfAdjoint
        assert outcome.witness == pytest.approx(small * 0.015)
        assert outcome.diagnostics["fixed_point_residual"] < 1e-4
        assert outcome.diagnostics["fixed_point_disagreement"] == 1.0

    @staticmethod
    def test_projective_measurement() -> None:
        """A commuting projective measurement gives tr(rho A P_y) / q_y."""

        rng = np.random.default_rng(62)
        effects = [matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)]
        rho = np.diag([0.25, 0.75]).astype(np.complex128)
        outcome = povm_bayes(effects, rho)
        assert outcome.exists and isinstance(outcome.inverse, BlockChannel)

        matrix = random_matrix(rng, 2, 2)
        images = outcome.inverse.apply([matrix])
        for effect, image, weight in zip(effects, images, (0.25, 0.75)):
            assert image[0, 0] == pytest.approx(np.trace(rho @ matrix @ effect) / weight)

    @staticmethod
    def test_maximally_mixed_prior() -> None:
        """Everything commutes with the identity."""

        rng = np.random.default_rng(63)
        effects = _generic_povm(rng, 3, 3)
        assert povm_bayes(effects, identity(3) / 3).exists

    @staticmethod
    def test_agrees_with_direct_sum_engine() -> None:
        """The closed form and the general direct-sum engine agree."""

        rng = np.random.default_rng(64)

        for commuting in (True, False):
            for _ in range(5):
                if commuting:
                    effects = _diagonal_povm(rng, 3, 2)
                    rho = np.diag(rng.dirichlet(np.ones(3))).astype(np.complex128)
                else:
                    effects = _generic_povm(rng, 3, 2)
                    rho = random_density(rng, 3)

                channel = povm_channel(effects)
                general = cstar_bayesian_invert(channel, single_state(rho))
                closed = povm_bayes(effects, rho)
                assert general.exists == closed.exists

                if closed.exists:
                    assert isinstance(closed.inverse, BlockChannel)
                    assert isinstance(general.inverse, BlockChannel)
                    pulled_back = cstar_marginal(channel, single_state(rho))
                    assert cstar_ae_equal(closed.inverse, general.inverse, pulled_back)

    @staticmethod
    @pytest.mark.parametrize(
        "effects, message",
        [
            ([np.diag([1.5, 0.0]), np.diag([-0.5, 1.0])], "not positive"),
            ([np.diag([0.5, 0.5]), np.diag([0.4, 0.5])], "sum to the identity"),
            ([], "At least one"),
        ],
    )
    def test_invalid(effects: list[np.ndarray], message: str) -> None:
        """Effects must be positive and resolve the identity."""

        with pytest.raises(NotAPOVM, match=message):
            validate_povm(effects)


class TestNoncommutingPovmExample(BaseTestClassWithExample):
    """
    The bundled non-commuting measurement.
    """

    example_name = "povm-noncommuting"

    def test_fails(self) -> None:
        """The commutator is the witness."""

        assert self.outcome.status is BayesStatus.FailsSelfAdjoint
        assert self.outcome.witness == pytest.approx(0.3 * 0.4)


class TestEnsemble:
    """
    Bayesian inverses of state preparations.
    """

    @staticmethod
    def test_identical_states() -> None:
        """Identical states give G(e_x) = p_x 1."""

        rng = np.random.default_rng(70)
        state = random_density(rng, 3)
        outcome = ensemble_bayes([state, state], [0.25, 0.75])
        assert outcome.exists and isinstance(outcome.inverse, BlockChannel)

        assert np.allclose(_block(outcome.inverse, 0), 0.25 * identity(3), atol=1e-9)
        assert np.allclose(_block(outcome.inverse, 1), 0.75 * identity(3), atol=1e-9)

    @staticmethod
    def test_commuting_states() -> None:
        """G(e_x) = p_x (sigma_hat sigma_x + P_perp)."""

        states = [np.diag([0.9, 0.1, 0.0]), np.diag([0.2, 0.8, 0.0])]
        weights = [0.4, 0.6]
        outcome = ensemble_bayes(states, weights)
        assert outcome.exists and isinstance(outcome.inverse, BlockChannel)
        assert outcome.unique is False

        sigma = 0.4 * states[0] + 0.6 * states[1]
        complement = np.diag([0.0, 0.0, 1.0])
        for x, (p, state) in enumerate(zip(weights, states)):
            expected = p * (pseudoinverse(sigma.astype(np.complex128)) @ state + complement)
            assert np.allclose(_block(outcome.inverse, x), expected, atol=1e-9)

    @staticmethod
    def test_noncommuting_states() -> None:
        """|0><0| and |+><+| with equal weights fail with a commutator witness."""

        outcome = ensemble_bayes([matrix_unit(2, 0, 0), _PLUS], [0.5, 0.5])

        assert outcome.status is BayesStatus.FailsSelfAdjoint
        assert {failure.source for failure in outcome.failures} == {0, 1}
        assert outcome.witness > 0.1

    @staticmethod
    @pytest.mark.parametrize(
        "states, weights, message",
        [
            ([np.diag([0.5, 0.6])], [1.0], "trace"),
            ([identity(2) / 2], [0.5, 0.5], "1 states"),
            ([identity(2) / 2], [1.5], "column sum"),
        ],
    )
    def test_invalid(states: list[np.ndarray], weights: list[float], message: str) -> None:
        """States must be densities and weights a distribution of the right size."""

        with pytest.raises(NotAnEnsemble, match=message):
            ensemble_bayes(states, weights)


class TestWaveCollapse:
    """
    Collapse onto a resolution of the identity.
    """

    @staticmethod
    def test_random_instances() -> None:
        """Exists exactly when rho is block diagonal; then G = F and it is unique."""

        rng = np.random.default_rng(80)

        for trial in range(50):
            side = int(rng.integers(2, 7))
            projections = _random_resolution(rng, side)
            collapse = Channel(projections)
            rho = random_density(rng, side)
            if trial % 2 == 0:
                rho = collapse.apply(rho)

            outcome = wave_collapse_invert(projections, rho)

            block_diagonal = np.max(np.abs(rho - collapse.apply(rho))) <= 1e-9
            assert outcome.exists == block_diagonal
            if outcome.exists:
                assert outcome.unique is True
                assert isinstance(outcome.inverse, Channel)
                matrix = random_matrix(rng, side, side)
                assert np.allclose(outcome.inverse.apply(matrix), collapse.apply(matrix))

    @staticmethod
    def test_coherent_plus_state() -> None:
        """|+><+| is not block diagonal for the computational basis."""

        outcome = wave_collapse_invert([matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)], _PLUS)

        assert not outcome.exists
        assert outcome.diagnostics["collapse_residual"] == pytest.approx(0.5)

    @staticmethod
    def test_single_projection() -> None:
        """The trivial resolution is the identity, which always inverts."""

        rng = np.random.default_rng(81)
        outcome = wave_collapse_invert([identity(3)], random_density(rng, 3))
        assert outcome.exists and outcome.unique

    @staticmethod
    @pytest.mark.parametrize(
        "projections, message",
        [
            ([matrix_unit(2, 0, 0), _PLUS], "not orthogonal"),
            ([matrix_unit(2, 0, 0)], "sum to the identity"),
            (
                [2 * matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)],
                "not an orthogonal projection",
            ),
        ],
    )
    def test_invalid(projections: list[np.ndarray], message: str) -> None:
        """Projections must be orthogonal and resolve the identity."""

        with pytest.raises(NotAResolution, match=message):
            validate_resolution(projections)


class TestIsometry:
    """
    Conjugation by a coisometry always inverts.
    """

    @staticmethod
    def test_random_instances() -> None:
        """Random coisometries with random priors, pure ones included."""

        rng = np.random.default_rng(90)

        for trial in range(50):
            rows = int(rng.integers(2, 5))
            cols = int(rng.integers(max(rows, 4), 7))
            coisometry = random_coisometry(rng, rows, cols)
            rho = random_density(rng, rows, rank=1 if trial % 3 == 0 else None)

            outcome = isometry_outcome(coisometry, rho)

            assert outcome.exists
            assert outcome.certificates is not None
            assert outcome.certificates.bayes_residual <= 1e-9
            assert outcome.certificates.unital_residual <= 1e-10

    @staticmethod
    def test_unitary() -> None:
        """For V = 1 the inverse is the identity."""

        rng = np.random.default_rng(91)
        inverse = isometry_bayes(identity(3), random_density(rng, 3))
        matrix = random_matrix(rng, 3, 3)

        assert np.allclose(inverse.apply(matrix), matrix)

    @staticmethod
    def test_embedding() -> None:
        """V = [1 | 0] gives block-diag(A, tr(A)/m 1)."""

        rng = np.random.default_rng(92)
        coisometry = np.hstack([identity(2), np.zeros((2, 2))])
        inverse = isometry_bayes(coisometry, random_density(rng, 2))
        matrix = random_matrix(rng, 2, 2)

        expected = np.zeros((4, 4), dtype=np.complex128)
        expected[:2, :2] = matrix
        expected[2:, 2:] = np.trace(matrix) / 2 * identity(2)
        assert np.allclose(inverse.apply(matrix), expected)
        assert is_unital(inverse)

        problem = BayesProblem(Channel([coisometry]), random_density(rng, 2))
        assert verify_bayes_condition(problem.channel, inverse, problem.rho)

    @staticmethod
    @pytest.mark.parametrize(
        "matrix, message",
        [
            (np.ones((3, 2)), "cannot be a coisometry"),
            (2 * np.hstack([identity(2), np.zeros((2, 1))]), "differs from the identity"),
        ],
    )
    def test_invalid(matrix: np.ndarray, message: str) -> None:
        """V V^dagger must be the identity."""

        with pytest.raises(NotCoisometry, match=message):
            validate_coisometry(matrix)


class TestConstructors:
    """
    The bundled channel families.
    """

    @staticmethod
    def test_amplification_is_unital() -> None:
        """B -> 1_p (x) B is unital and multiplicative."""

        rng = np.random.default_rng(93)
        channel = amplification_channel(2, 3)
        first, second = random_matrix(rng, 3, 3), random_matrix(rng, 3, 3)

        assert is_unital(channel)
        assert np.allclose(
            channel.apply(first @ second), channel.apply(first) @ channel.apply(second)
        )

    @staticmethod
    def test_reduced_disintegration_inverts() -> None:
        """The reduced disintegration satisfies the Bayes condition for a product prior."""

        rng = np.random.default_rng(94)
        tau, sigma = random_density(rng, 2), random_density(rng, 3)
        rho = np.kron(tau, sigma)
        candidate = reduced_disintegration(tau, 3)

        assert is_unital(candidate)
        assert verify_bayes_condition(amplification_channel(2, 3), candidate, rho)
        assert bayesian_invert(BayesProblem(amplification_channel(2, 3), rho)).unique

    @staticmethod
    def test_invalid_arguments() -> None:
        """Sizes, weights and priors are checked."""

        with pytest.raises(ValueError):
            amplification_channel(0, 3)
        with pytest.raises(ValueError, match="Bit-flip weight"):
            bitflip_channel(1.5)
        with pytest.raises(InvalidProblem, match="Amplification prior"):
            reduced_disintegration(identity(2), 3)
