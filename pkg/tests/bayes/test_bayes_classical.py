# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Tests classical Bayes, both by formula and through the direct-sum engine.
"""

from __future__ import annotations

import numpy as np
import pytest

from qbayes.bayes.classical import (
    check_stochastic,
    classical_bayes,
    classical_bayes_via_cstar,
    classical_disintegration,
    embed_classical,
    project_classical,
)
from qbayes.bayes.cstar import single_block
from qbayes.channel import Channel
from qbayes.core import InternalInconsistency, NotDeterministic, NotStochastic
from qbayes.test import BaseTestClassWithExample

# pragma pylint: disable=R0903


_TEST = np.array([[0.9, 0.6], [0.1, 0.4]])
_PRIOR = np.array([0.3, 0.7])


def _random_pair(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """A stochastic matrix and prior, sometimes with exact zeros."""

    points_in, points_out = rng.integers(1, 5), rng.integers(1, 5)

    forward = rng.random((points_out, points_in))
    forward[rng.random(forward.shape) < 0.3] = 0.0
    forward[0, forward.sum(axis=0) == 0] = 1.0
    forward /= forward.sum(axis=0)

    prior = rng.random(points_in)
    prior[rng.random(points_in) < 0.3] = 0.0
    if prior.sum() == 0:
        prior[0] = 1.0
    return forward, prior / prior.sum()


class TestClassicalBayes:
    """
    g[x, y] = f[y, x] p[x] / q[y].
    """

    @staticmethod
    def test_grocery() -> None:
        """The textbook diagnosis example, exactly."""

        inverse = classical_bayes(_TEST, _PRIOR)

        assert inverse[0, 0] == pytest.approx(0.27 / 0.69, abs=1e-12)
        assert inverse[0, 1] == pytest.approx(0.03 / 0.31, abs=1e-12)
        assert inverse[1, 0] == pytest.approx(0.42 / 0.69, abs=1e-12)
        assert inverse[1, 1] == pytest.approx(0.28 / 0.31, abs=1e-12)

    @staticmethod
    def test_bayes_identity() -> None:
        """g[x, y] q[y] = f[y, x] p[x], and g is stochastic."""

        rng = np.random.default_rng(110)

        for _ in range(20):
            forward, prior = _random_pair(rng)
            inverse = classical_bayes(forward, prior)
            pushed = forward @ prior

            assert np.allclose(inverse * pushed, (forward * prior).T)
            assert np.allclose(inverse.sum(axis=0), 1.0)

    @staticmethod
    def test_null_outcome_is_uniform() -> None:
        """An outcome of probability zero gets the uniform column."""

        forward = np.array([[1.0, 1.0, 0.5], [0.0, 0.0, 0.5]])
        prior = np.array([0.5, 0.5, 0.0])

        assert np.allclose(classical_bayes(forward, prior)[:, 1], 1 / 3)

    @staticmethod
    def test_direct_sum_engine_agrees() -> None:
        """Random pairs give the same inverse through the direct-sum engine."""

        rng = np.random.default_rng(111)

        for _ in range(200):
            forward, prior = _random_pair(rng)

            assert np.allclose(
                classical_bayes_via_cstar(forward, prior),
                classical_bayes(forward, prior),
                atol=1e-9,
            )

    @staticmethod
    def test_size_mismatch() -> None:
        """One prior weight per column."""

        with pytest.raises(NotStochastic, match="2 columns for 3 points"):
            classical_bayes(_TEST, [0.2, 0.3, 0.5])


class TestDisintegration:
    """
    Deterministic maps and their disintegrations.
    """

    @staticmethod
    def test_disintegration() -> None:
        """r splits each fibre by the prior and f o r is the identity."""

        function = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
        prior = np.array([0.2, 0.3, 0.5])
        splitting = classical_disintegration(function, prior)

        assert np.allclose(splitting[:, 0], [0.2 / 0.7, 0.0, 0.5 / 0.7])
        assert np.allclose(splitting[:, 1], [0.0, 1.0, 0.0])
        assert np.allclose(function @ splitting, np.eye(2))

    @staticmethod
    def test_not_deterministic() -> None:
        """A column that is not a point mass is refused."""

        with pytest.raises(NotDeterministic, match="point mass"):
            classical_disintegration(np.array([[0.5, 1.0], [0.5, 0.0]]), [0.5, 0.5])


class TestValidation:
    """
    Column-stochastic matrices and distributions.
    """

    @staticmethod
    @pytest.mark.parametrize(
        "matrix, message",
        [
            ([[1.2, 0.0], [-0.2, 1.0]], "negative entry"),
            ([[0.5, 0.5], [0.4, 0.5]], "column sum"),
            ([[1.0 + 0.1j], [0.0]], "complex entries"),
            ([[float("nan")], [1.0]], "NaN"),
        ],
    )
    def test_invalid(matrix: list, message: str) -> None:
        """Each defect is named."""

        with pytest.raises(NotStochastic, match=message):
            check_stochastic(matrix)

    @staticmethod
    def test_vector_is_one_column() -> None:
        """A probability vector passes unchanged."""

        assert np.allclose(check_stochastic([0.25, 0.75], what="Prior"), [0.25, 0.75])

    @staticmethod
    def test_labelled() -> None:
        """The label appears in the message."""

        with pytest.raises(NotStochastic, match="Prior has a column sum"):
            check_stochastic([0.5, 0.6], what="Prior")


class TestEmbedding:
    """
    Stochastic matrices as maps between commutative algebras.
    """

    @staticmethod
    def test_projection_recovers_matrix() -> None:
        """Embedding then projecting is the identity on stochastic matrices."""

        embedded = embed_classical(_TEST)

        assert embedded.source.blocks == (1, 1)
        assert embedded.is_unital()
        assert np.allclose(project_classical(embedded), _TEST)

    @staticmethod
    def test_unvalidated_embedding() -> None:
        """Without validation only negativity is refused."""

        loose = embed_classical(np.array([[0.5, 0.5], [0.4, 0.5]]), validate=False)
        assert not loose.is_unital()

        with pytest.raises(NotStochastic, match="non-negative"):
            embed_classical(np.array([[1.1, 0.0], [-0.1, 1.0]]), validate=False)

    @staticmethod
    def test_projection_needs_commutative_blocks() -> None:
        """Matrix blocks have no stochastic matrix."""

        with pytest.raises(InternalInconsistency, match="commutative"):
            project_classical(single_block(Channel.identity(2)))


class TestGroceryExample(BaseTestClassWithExample):
    """
    The bundled diagnosis example through its handler.
    """

    example_name = "grocery"

    def test_inverse(self) -> None:
        """Both routes agree on the posterior."""

        assert self.outcome.exists
        assert self.outcome.diagnostics["direct_formula_residual"] <= 1e-10
        assert self.outcome.inverse is not None
        assert self.handler.encode_inverse(self.outcome.inverse)["stochastic"][0][1] == (
            pytest.approx(0.03 / 0.31, abs=1e-12)
        )
