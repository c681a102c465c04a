#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
The core type definitions for qbayes.

This module provides the small set of value types and errors that every other
module is built on.

This module contains:

 - The `CMatrix` alias used for every operator, density matrix and Choi matrix
 - `Tolerances`, the numerical configuration shared by all decisions
 - `HermitianSpectrum` and `Check`, the results of spectral and witnessed tests
 - The error hierarchy raised by the engine and the file layer
 - Enumerations of problem kinds and inversion outcomes
 - TypedDict mappings to the problem file schema
"""

from __future__ import annotations

from collections.abc import Mapping
from typing import Any, Optional, TypedDict

import dataclasses
import enum
import math

import numpy as np
import numpy.typing as npt

CMatrix = npt.NDArray[np.complex128]
"""Dense complex matrix; the universal carrier for operators in qbayes."""

_TOLERANCE_CEILING = 1e-3


@dataclasses.dataclass(frozen=True)
class Tolerances:
    """
    Numerical thresholds used by every decision in the engine.

    rank_tol is relative: an eigenvalue counts as nonzero iff it exceeds
    ``rank_tol * max(1, largest eigenvalue)``. psd_tol is the absolute slack
    allowed below zero for a matrix to count as positive. eq_tol is the absolute
    entrywise tolerance for matrix equalities.
    """

    rank_tol: float = 1e-9
    psd_tol: float = 1e-9
    eq_tol: float = 1e-8

    def __post_init__(self) -> None:
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)

            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"Tolerance {field.name} must be a number, got {value!r}")

            if not math.isfinite(value) or not 0 < value <= _TOLERANCE_CEILING:
                raise ValueError(
                    f"Tolerance {field.name}={value}"
                    f" must satisfy 0 < value <= {_TOLERANCE_CEILING}"
                )

            object.__setattr__(self, field.name, float(value))

    @classmethod
    def from_mapping(cls, mapping: Optional[Mapping[str, Any]]) -> Tolerances:
        """
        Builds tolerances from a `tolerances:` block of a problem file.

        Missing keys keep their defaults; unknown keys are rejected.
        """

        if not mapping:
            return cls()

        known = {field.name for field in dataclasses.fields(cls)}
        unknown = set(mapping.keys()).difference(known)
        if unknown:
            raise ValueError(f"Unknown tolerance keys: {sorted(unknown)}")

        return cls(**{key: float(value) for key, value in mapping.items()})

    def override(self, **values: Optional[float]) -> Tolerances:
        """Returns a copy with every non-None value replaced."""

        changes = {key: value for key, value in values.items() if value is not None}
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        """Plain mapping of the three thresholds, in declaration order."""

        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class HermitianSpectrum:
    """
    Spectral decomposition of a Hermitian matrix.

    Eigenvalues are real and sorted in descending order; column k of
    `eigenvectors` is the normalised eigenvector for `eigenvalues[k]`.
    """

    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: CMatrix

    def reconstruct(self) -> CMatrix:
        """V diag(lambda) V^dagger."""

        vectors = self.eigenvectors
        return (vectors * self.eigenvalues) @ vectors.conj().T

    def rank(self, tol: Tolerances) -> int:
        """Number of eigenvalues counted as nonzero under the relative rank convention."""

        return int(np.count_nonzero(self.eigenvalues > self.threshold(tol)))

    def threshold(self, tol: Tolerances) -> float:
        """The eigenvalue cut-off below which directions are discarded."""

        largest = float(self.eigenvalues[0]) if self.eigenvalues.size else 0.0
        return tol.rank_tol * max(1.0, largest)


@dataclasses.dataclass(frozen=True)
class Check:
    """
    Result of a test which carries a numeric witness.

    `value` is the quantity the decision was made on (a residual, an asymmetry,
    a minimum eigenvalue); `vector` optionally carries a witnessing direction.
    """

    passed: bool
    value: float
    vector: Optional[CMatrix] = None

    def __bool__(self) -> bool:
        return self.passed


class QBayesError(Exception):
    """Base class for all errors raised by qbayes."""


class NotFinite(QBayesError, ValueError):
    """A matrix contains NaN or infinite entries."""


class NotSquare(QBayesError, ValueError):
    """A square matrix was required."""


class NotHermitian(QBayesError, ValueError):
    """A Hermitian matrix was required."""

    def __init__(self, asymmetry: float) -> None:
        super().__init__(f"Matrix is not Hermitian (max |A - A^dagger| = {asymmetry:.3e})")
        self.asymmetry = asymmetry


class NotPSD(QBayesError, ValueError):
    """A positive semidefinite matrix was required."""

    def __init__(self, min_eigenvalue: float, what: str = "Matrix") -> None:
        super().__init__(
            f"{what} is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})"
        )
        self.min_eigenvalue = min_eigenvalue


class NotCP(NotPSD):
    """A completely positive map was required (its Choi matrix is not positive)."""

    def __init__(self, min_eigenvalue: float) -> None:
        super().__init__(min_eigenvalue, what="Choi matrix")


class NoConvergence(QBayesError, ArithmeticError):
    """The eigensolver failed to converge."""


class DimensionMismatch(QBayesError, ValueError):
    """Operands have incompatible shapes."""


class NotUnitary(QBayesError, ValueError):
    """A unitary matrix was required."""


class InvalidSplit(QBayesError, ValueError):
    """A block split point lies outside the block."""


class InvalidProblem(QBayesError, ValueError):
    """A Bayesian inversion problem violates its invariants."""


class NotAPOVM(InvalidProblem):
    """Effects are not positive or do not sum to the identity."""


class NotAnEnsemble(InvalidProblem):
    """Ensemble states or weights are not valid."""


class NotAResolution(InvalidProblem):
    """Projections are not a resolution of the identity."""


class NotCoisometry(InvalidProblem):
    """A matrix V with V V^dagger = 1 was required."""


class NotStochastic(InvalidProblem):
    """A column-stochastic matrix or probability vector was required."""


class NotDeterministic(NotStochastic):
    """A stochastic matrix with only 0/1 columns was required."""


class CornerNotSelfAdjoint(QBayesError, ValueError):
    """The supported corner of the Bayes map is not *-preserving."""

    def __init__(self, witness: float) -> None:
        super().__init__(f"Corner block is not self-adjoint (max asymmetry {witness:.3e})")
        self.witness = witness


class PreconditionFailed(QBayesError, ValueError):
    """One of the three conditions for block positivity via the Schur complement failed."""

    def __init__(self, condition: str, witness: float) -> None:
        super().__init__(f"Block positivity precondition failed: {condition} ({witness:.3e})")
        self.condition = condition
        self.witness = witness


class InternalInconsistency(QBayesError, RuntimeError):
    """A proven identity failed numerically beyond tolerance."""


class UnknownExample(QBayesError, KeyError):
    """No bundled or plugin example has the requested name."""

    def __init__(self, name: str) -> None:
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"Unknown example {self.name!r}"


class ProblemFileError(QBayesError, ValueError):
    """A problem or candidate file failed to parse or validate."""

    def __init__(self, message: str, field: str = "", line: Optional[int] = None) -> None:
        location = field
        if line is not None:
            location = f"line {line}" + (f", {field}" if field else "")
        super().__init__(f"{location}: {message}" if location else message)
        self.field = field
        self.line = line


# pylint: disable=C0103
class BayesStatus(str, enum.Enum):
    """
    Outcome of an inversion, in the order in which conditions are tested.

    Each status maps to the exit code of the command line interface.
    """

    Exists = "Exists"
    FailsSelfAdjoint = "FailsSelfAdjoint"
    FailsCompletion = "FailsCompletion"

    @property
    def exit_code(self) -> int:
        """Exit code reported by `qbayes invert` for this status."""

        return {
            BayesStatus.Exists: 0,
            BayesStatus.FailsSelfAdjoint: 2,
            BayesStatus.FailsCompletion: 3,
        }[self]


# pylint: disable=C0103
class ProblemKind(str, enum.Enum):
    """Enumeration of the shapes of problem understood by the file layer."""

    matrix = "matrix"
    cstar = "cstar"
    classical = "classical"
    povm = "povm"
    ensemble = "ensemble"
    collapse = "collapse"
    isometry = "isometry"

    @classmethod
    def values(cls) -> list[str]:
        """List of named values."""

        return [e.value for e in cls]


class ToleranceBlock(TypedDict, total=False):
    """Optional overrides block of a problem file."""

    rank_tol: float
    psd_tol: float
    eq_tol: float


class ProblemBlock(TypedDict):
    """Common block of every problem file."""

    kind: str
    channel: dict[str, Any]
    state: dict[str, Any]


class NamedProblemBlock(ProblemBlock, total=False):
    """Problem file block including the optional descriptive keys."""

    name: str
    description: str
    tolerances: ToleranceBlock


__all__ = [
    "CMatrix",
    "Tolerances",
    "HermitianSpectrum",
    "Check",
    "QBayesError",
    "NotFinite",
    "NotSquare",
    "NotHermitian",
    "NotPSD",
    "NotCP",
    "NoConvergence",
    "DimensionMismatch",
    "NotUnitary",
    "InvalidSplit",
    "InvalidProblem",
    "NotAPOVM",
    "NotAnEnsemble",
    "NotAResolution",
    "NotCoisometry",
    "NotStochastic",
    "NotDeterministic",
    "CornerNotSelfAdjoint",
    "PreconditionFailed",
    "InternalInconsistency",
    "UnknownExample",
    "ProblemFileError",
    "BayesStatus",
    "ProblemKind",
    "ToleranceBlock",
    "ProblemBlock",
    "NamedProblemBlock",
]
