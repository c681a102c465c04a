#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Provides support classes and random instances for qbayes tests.

Every generator takes a `numpy.random.Generator`, so suites seeded with
`numpy.random.default_rng(seed)` are deterministic.
"""

from __future__ import annotations

from typing import Optional

from abc import ABC

import numpy as np
import scipy.linalg

import qbayes.handlers  # noqa: F401  # pylint: disable=unused-import
from qbayes.bayes.matrix import BayesOutcome
from qbayes.catalog import example_document
from qbayes.channel import Channel
from qbayes.core import CMatrix
from qbayes.loader import ProblemDocument
from qbayes.registry import Instance, ProblemHandler, ProblemRegistry


def random_matrix(rng: np.random.Generator, rows: int, cols: int) -> CMatrix:
    """A matrix of independent standard complex Gaussian entries."""

    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_hermitian(rng: np.random.Generator, dim: int) -> CMatrix:
    """A random Hermitian matrix."""

    matrix = random_matrix(rng, dim, dim)
    return (matrix + matrix.conj().T) / 2


def random_psd(rng: np.random.Generator, dim: int, rank: Optional[int] = None) -> CMatrix:
    """A random positive semidefinite matrix of the given rank (full by default)."""

    factor = random_matrix(rng, dim, dim if rank is None else rank)
    return factor @ factor.conj().T


def random_gapped_psd(rng: np.random.Generator, dim: int, rank: int) -> CMatrix:
    """A random positive matrix of the given rank, nonzero eigenvalues in [0.1, 2]."""

    values = np.concatenate([rng.uniform(0.1, 2.0, rank), np.zeros(dim - rank)])
    unitary = random_unitary(rng, dim)
    matrix = (unitary * values) @ unitary.conj().T
    return np.asarray((matrix + matrix.conj().T) / 2, dtype=np.complex128)


def random_density(rng: np.random.Generator, dim: int, rank: Optional[int] = None) -> CMatrix:
    """A random density matrix of the given rank (full by default)."""

    matrix = random_psd(rng, dim, rank)
    return matrix / np.trace(matrix).real


def random_unitary(rng: np.random.Generator, dim: int) -> CMatrix:
    """A Haar-random unitary (QR of a Ginibre matrix, phases fixed by the diagonal of R)."""

    unitary, upper = scipy.linalg.qr(random_matrix(rng, dim, dim))
    phases = np.diag(upper) / np.abs(np.diag(upper))
    return np.asarray(unitary * phases, dtype=np.complex128)


def random_coisometry(rng: np.random.Generator, rows: int, cols: int) -> CMatrix:
    """A random V with V V^dagger = 1, rows <= cols."""

    return random_unitary(rng, cols)[:rows, :]


def random_cpu_channel(
    rng: np.random.Generator, dim_in: int, dim_out: int, count: int = 2
) -> Channel:
    """
    A random completely positive unital map M_{dim_in} -> M_{dim_out}.

    Rows of a random coisometry dim_out x (count * dim_in) are split into Kraus
    operators V_a with sum V_a V_a^dagger = 1. Needs count * dim_in >= dim_out.
    """

    wide = random_coisometry(rng, dim_out, count * dim_in)
    return Channel([wide[:, k * dim_in : (k + 1) * dim_in] for k in range(count)])


class BaseTestClassWithExample(ABC):
    """
    Base for a class of tests working on one bundled example.

    Class offers the features of
     - loads the named example from the catalog, exactly as if read from its file
     - parses it with the handler registered for its kind
     - presents the document, the parsed instance and the inversion outcome
    """

    example_name: str
    _document: Optional[ProblemDocument] = None
    _instance: Optional[Instance] = None
    _outcome: Optional[BayesOutcome] = None

    @property
    def document(self) -> ProblemDocument:
        """Returns the parsed problem document."""

        if self._document is None:
            self._document = example_document(self.example_name)
        return self._document

    @property
    def handler(self) -> ProblemHandler:
        """Returns the handler for the example's kind."""

        return ProblemRegistry.handler(self.document.kind)

    @property
    def instance(self) -> Instance:
        """Returns the parsed instance."""

        if self._instance is None:
            self._instance = self.handler.parse(self.document, self.document.tolerances)
        return self._instance

    @property
    def outcome(self) -> BayesOutcome:
        """Returns the outcome of inverting the example."""

        if self._outcome is None:
            self._outcome = self.handler.invert(self.instance)
        return self._outcome


__all__ = [
    "random_matrix",
    "random_hermitian",
    "random_psd",
    "random_gapped_psd",
    "random_density",
    "random_unitary",
    "random_coisometry",
    "random_cpu_channel",
    "BaseTestClassWithExample",
]
