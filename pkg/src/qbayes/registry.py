#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Tooling for recording problem-kind handlers.

Every problem file names a kind (matrix, cstar, povm, ...). A handler turns the
payload of that kind into engine objects, runs the inversion, checks candidate
inverses and converts inverses to and from their file encoding.

This module contains the ABCMeta subclass 'ProblemRegistry'. All classes that use
it as their metaclass are recorded, and a class is bound to a problem kind with
the ProblemRegistry.register decorator.
"""

from __future__ import annotations

from collections.abc import Mapping
from typing import Any, Callable, Optional, Protocol, Union, runtime_checkable

import abc
import dataclasses

from qbayes.bayes.cstar import BlockChannel, CStarState
from qbayes.bayes.matrix import BayesOutcome, Certificates
from qbayes.channel import Channel
from qbayes.core import CMatrix, ProblemKind, Tolerances
from qbayes.loader import PayloadReader, ProblemDocument

Inverse = Union[Channel, BlockChannel]


@dataclasses.dataclass(frozen=True, eq=False)
class Instance:
    """
    A parsed problem.

    `forward` is the map to invert, `prior` the state on its codomain, and
    `data` the validated kind-specific payload (effects, projections, ...).
    """

    kind: ProblemKind
    forward: Inverse
    prior: Union[CMatrix, CStarState]
    tol: Tolerances
    data: Mapping[str, Any] = dataclasses.field(default_factory=dict)


@dataclasses.dataclass(frozen=True)
class CheckResult:
    """
    Certificates of a candidate inverse.

    `ae_equal` compares the candidate with the engine's own inverse, and is None
    when the engine finds no inverse to compare with.
    """

    certificates: Certificates
    ae_equal: Optional[bool]
    canonical: BayesOutcome

    @property
    def passed(self) -> bool:
        """Whether every certificate is within tolerance."""

        return self.certificates.passed


@runtime_checkable
class ProblemHandler(Protocol):
    """Conversion between one kind of problem file and the engine."""

    def parse(self, problem: ProblemDocument, tol: Tolerances) -> Instance:
        """
        Builds the engine objects for a problem.

        :raise ProblemFileError: on malformed payloads
        :raise InvalidProblem: when the engine rejects the objects
        """

    def invert(self, instance: Instance) -> BayesOutcome:
        """Runs the inversion appropriate to the kind."""

    def check(self, instance: Instance, candidate: Inverse) -> CheckResult:
        """Certifies a candidate inverse."""

    def encode_inverse(self, inverse: Inverse) -> dict[str, Any]:
        """The file payload of an inverse."""

    def decode_inverse(self, reader: PayloadReader, instance: Instance) -> Inverse:
        """Reads an inverse payload for the given problem."""


# noinspection PyMethodParameters
class ProblemRegistry(abc.ABCMeta):
    """
    Metaclass for registering problem handler classes.

    Classes created with this metaclass are recorded. A concrete handler is
    bound to a ProblemKind with the ProblemRegistry.register decorator; each
    kind has exactly one handler.
    """

    registered: list[type[Any]] = []

    _handlers: dict[ProblemKind, type[ProblemHandler]] = {}

    def __new__(mcs, name: str, bases: Any, namespace: Any, **k: Any) -> type[Any]:
        """Hook for creating a class in this ancestry; records it for later use."""

        created_type: type[Any] = super().__new__(mcs, name, bases, namespace, **k)
        ProblemRegistry.registered.append(created_type)
        return created_type

    @classmethod
    def register(
        mcs, kind: ProblemKind
    ) -> Callable[[type[ProblemHandler]], type[ProblemHandler]]:
        """
        Decorator that binds a handler class to a problem kind.

        The decorated class must be in the registry (generally by using the
        registry as the metaclass), implement the ProblemHandler protocol, be
        concrete, and be the first handler for the kind.
        """

        def do_register(handler: type[ProblemHandler]) -> type[ProblemHandler]:
            if handler not in mcs.registered:
                raise TypeError("Can not register a handler from a non-registered class")

            if not isinstance(kind, ProblemKind):
                raise TypeError(
                    f"Problem kind '{kind}' not valid (must be one of {ProblemKind.values()})"
                )

            if not issubclass(handler, ProblemHandler):
                raise TypeError(f"{handler} does not meet the contract of a problem handler")

            if getattr(handler, "__abstractmethods__", None):
                raise TypeError(f"Can not register abstract class {handler}")

            if kind in mcs._handlers:
                raise ValueError(
                    f"Can not register {handler} for {kind.value}; "
                    f"already registered by {mcs._handlers[kind]}"
                )

            mcs._handlers[kind] = handler
            return handler

        return do_register

    @classmethod
    def handler(mcs, kind: Union[ProblemKind, str]) -> ProblemHandler:
        """
        A handler instance for a problem kind.

        :raise KeyError: if no handler is registered for the kind
        """

        try:
            return mcs._handlers[ProblemKind(kind)]()
        except (KeyError, ValueError) as err:
            raise KeyError(f"No handler registered for problem kind {kind!r}") from err

    @classmethod
    def kinds(mcs) -> list[ProblemKind]:
        """The kinds which have a registered handler."""

        return [kind for kind in ProblemKind if kind in mcs._handlers]


__all__ = ["Inverse", "Instance", "CheckResult", "ProblemHandler", "ProblemRegistry"]
