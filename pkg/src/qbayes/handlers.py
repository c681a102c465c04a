#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Handlers for each kind of problem file.

Payloads, per kind (`channel` / `state`):

 - matrix:    {kraus: [V...]}                          / {density: rho}
 - cstar:     {source, target, entries: [{target, source, kraus}]}
                                                       / {weights, densities}
 - classical: {stochastic: f}                          / {probabilities: p}
 - povm:      {effects: [F_y...]}                      / {density: rho}
 - ensemble:  {states: [sigma_x...]}                   / {probabilities: p}
 - collapse:  {projections: [P...]}                    / {density: rho}
 - isometry:  {coisometry: V}                          / {density: rho}

Inverses are written as {kraus} for maps between full matrix algebras,
{source, target, entries} for maps between direct sums, and {stochastic} for
classical problems.
"""

from __future__ import annotations

from typing import Any, Optional, cast

import abc
import logging

import numpy as np

from qbayes.bayes.classical import (
    check_stochastic,
    classical_bayes,
    embed_classical,
    embed_distribution,
    project_classical,
)
from qbayes.bayes.cstar import (
    BlockChannel,
    CStarState,
    cstar_ae_equal,
    cstar_bayesian_invert,
    cstar_certify,
    cstar_marginal,
    from_block_entries,
    single_state,
)
from qbayes.bayes.matrix import (
    BayesOutcome,
    BayesProblem,
    ae_equal,
    bayesian_invert,
    certify,
    marginal,
)
from qbayes.bayes.special import (
    ensemble_bayes,
    ensemble_channel,
    isometry_outcome,
    povm_bayes,
    povm_channel,
    validate_coisometry,
    validate_resolution,
    wave_collapse_invert,
)
from qbayes.channel import Channel
from qbayes.core import CMatrix, DimensionMismatch, ProblemKind, QBayesError, Tolerances
from qbayes.loader import PayloadReader, ProblemDocument
from qbayes.registry import CheckResult, Instance, Inverse, ProblemRegistry
from qbayes.report import encode_matrix


class BaseHandler(metaclass=ProblemRegistry):
    """
    Common behaviour of all handlers.

    Subclasses read the kind-specific payloads in `build`; validation errors
    from the engine surface as :class:`~qbayes.core.QBayesError` subclasses.
    """

    kind: ProblemKind

    def __init__(self) -> None:
        self._logger = logging.getLogger(__name__ + "." + type(self).__name__)

    def parse(self, problem: ProblemDocument, tol: Tolerances) -> Instance:
        """Builds the engine objects for a problem document."""

        channel = problem.reader("channel")
        state = problem.reader("state")
        instance = self.build(channel, state, tol)
        self._logger.debug(
            "Parsed %s problem '%s' (%s)", self.kind.value, problem.name, type(
                instance.forward
            )
        )
        return instance

    @abc.abstractmethod
    def build(
        self, channel: PayloadReader, state: PayloadReader, tol: Tolerances
    ) -> Instance:
        """Reads the channel and state payloads."""

    @abc.abstractmethod
    def invert(self, instance: Instance) -> BayesOutcome:
        """Runs the inversion appropriate to the kind."""

    @abc.abstractmethod
    def check(self, instance: Instance, candidate: Inverse) -> CheckResult:
        """Certifies a candidate inverse."""

    @abc.abstractmethod
    def encode_inverse(self, inverse: Inverse) -> dict[str, Any]:
        """The file payload of an inverse."""

    @abc.abstractmethod
    def decode_inverse(self, reader: PayloadReader, instance: Instance) -> Inverse:
        """Reads an inverse payload for the given problem."""


def _density(state: PayloadReader) -> CMatrix:
    state.require_only("density")
    return state.matrix("density")


class MatrixFamily(BaseHandler):
    """Problems whose forward map runs between full matrix algebras."""

    def check(self, instance: Instance, candidate: Inverse) -> CheckResult:
        forward = cast(Channel, instance.forward)
        rho = cast(CMatrix, instance.prior)
        if not isinstance(candidate, Channel):
            raise DimensionMismatch("Candidate for a matrix problem must be a single channel")

        certificates = certify(forward, candidate, rho, instance.tol)
        canonical = self.invert(instance)

        agrees = None
        if canonical.exists and isinstance(canonical.inverse, Channel):
            sigma = marginal(BayesProblem(forward, rho, instance.tol)).sigma
            agrees = ae_equal(candidate, canonical.inverse, sigma, instance.tol)

        return CheckResult(certificates, agrees, canonical)

    def encode_inverse(self, inverse: Inverse) -> dict[str, Any]:
        if not isinstance(inverse, Channel):
            raise TypeError(f"Expected a channel, got {type(inverse).__name__}")
        return {"kraus": [encode_matrix(kraus) for kraus in inverse.kraus]}

    def decode_inverse(self, reader: PayloadReader, instance: Instance) -> Inverse:
        reader.require_only("kraus")
        forward = cast(Channel, instance.forward)
        kraus = reader.matrices("kraus")

        expected = (forward.dim_in, forward.dim_out)
        for index, operator in enumerate(kraus):
            if operator.shape != expected:
                raise reader.document.error(
                    f"Kraus operator must be {expected[0]}x{expected[1]},"
                    f" got {operator.shape}",
                    f"{reader.path}.kraus[{index}]",
                )

        return Channel(kraus, dim_in=forward.dim_out, dim_out=forward.dim_in)


@ProblemRegistry.register(ProblemKind.matrix)
class MatrixHandler(MatrixFamily):
    """General CPU maps M_n -> M_m given by Kraus operators."""

    kind = ProblemKind.matrix

    def build(
        self, channel: PayloadReader, state: PayloadReader, tol: Tolerances
    ) -> Instance:
        channel.require_only("kraus")
        kraus = channel.matrices("kraus")
        shapes = {operator.shape for operator in kraus}
        if len(shapes) != 1:
            raise channel.document.error(
                f"Kraus operators must share one shape, got {sorted(shapes)}", "channel.kraus"
            )

        forward = Channel(kraus)
        rho = _density(state)
        BayesProblem(forward, rho, tol)
        return Instance(self.kind, forward, rho, tol)

    def invert(self, instance: Instance) -> BayesOutcome:
        forward = cast(Channel, instance.forward)
        return bayesian_invert(
            BayesProblem(forward, cast(CMatrix, instance.prior), instance.tol)
        )


@ProblemRegistry.register(ProblemKind.collapse)
class CollapseHandler(MatrixFamily):
    """Wave collapse onto a resolution of the identity by projections."""

    kind = ProblemKind.collapse

    def build(
        self, channel: PayloadReader, state: PayloadReader, tol: Tolerances
    ) -> Instance:
        channel.require_only("projections")
        projections = validate_resolution(channel.matrices("projections"), tol)
        forward = Channel(projections)
        rho = _density(state)
        BayesProblem(forward, rho, tol)
        return Instance(self.kind, forward, rho, tol, {"projections": projections})

    def invert(self, instance: Instance) -> BayesOutcome:
        return wave_collapse_invert(
            instance.data["projections"], cast(CMatrix, instance.prior), instance.tol
        )


@ProblemRegistry.register(ProblemKind.isometry)
class IsometryHandler(MatrixFamily):
    """Conjugation by a coisometry V (V V^dagger = 1)."""

    kind = ProblemKind.isometry

    def build(
        self, channel: PayloadReader, state: PayloadReader, tol: Tolerances
    ) -> Instance:
        channel.require_only("coisometry")
        coisometry = validate_coisometry(channel.matrix("coisometry"), tol)
        forward = Channel([coisometry])
        rho = _density(state)
        BayesProblem(forward, rho, tol)
        return Instance(self.kind, forward, rho, tol, {"coisometry": coisometry})

    def invert(self, instance: Instance) -> BayesOutcome:
        return isometry_outcome(
            instance.data["coisometry"], cast(CMatrix, instance.prior), instance.tol
        )


class BlockFamily(BaseHandler):
    """Problems whose forward map runs between direct sums."""

    def _state(self, instance: Instance) -> CStarState:
        prior = instance.prior
        if isinstance(prior, CStarState):
            return prior
        return single_state(prior)

    def check(self, instance: Instance, candidate: Inverse) -> CheckResult:
        forward = cast(BlockChannel, instance.forward)
        omega = self._state(instance)
        if not isinstance(candidate, BlockChannel):
            raise DimensionMismatch(
                "Candidate for a direct-sum problem must be a block channel"
            )

        certificates = cstar_certify(forward, candidate, omega, instance.tol)
        canonical = self.invert(instance)

        agrees = None
        if canonical.exists and isinstance(canonical.inverse, BlockChannel):
            pulled_back = cstar_marginal(forward, omega, instance.tol)
            agrees = cstar_ae_equal(candidate, canonical.inverse, pulled_back, instance.tol)

        return CheckResult(certificates, agrees, canonical)

    def encode_inverse(self, inverse: Inverse) -> dict[str, Any]:
        if not isinstance(inverse, BlockChannel):
            raise TypeError(f"Expected a block channel, got {type(inverse).__name__}")

        return {
            "source": list(inverse.source.blocks),
            "target": list(inverse.target.blocks),
            "entries": [
                {
                    "target": x,
                    "source": y,
                    "kraus": [
                        encode_matrix(kraus) for kraus in inverse.entries[(x, y)].kraus
                    ],
                }
                for (x, y) in sorted(inverse.entries)
                if inverse.entries[(x, y)].kraus
            ],
        }

    def decode_inverse(self, reader: PayloadReader, instance: Instance) -> Inverse:
        forward = cast(BlockChannel, instance.forward)
        block = _read_blocks(reader, check_unital=None)

        if block.source != forward.target or block.target != forward.source:
            raise reader.document.error(
                f"Inverse must run from {list(forward.target.blocks)} "
                f"to {list(forward.source.blocks)}",
                reader.path,
            )
        return block


def _read_blocks(reader: PayloadReader, check_unital: Optional[Tolerances]) -> BlockChannel:
    reader.require_only("source", "target", "entries")
    source = reader.integers("source")
    target = reader.integers("target")

    entries: dict[tuple[int, int], list[CMatrix]] = {}
    for item in reader.children("entries"):
        item.require_only("target", "source", "kraus")
        key = (item.integer("target"), item.integer("source"))
        if key in entries:
            raise item.document.error(f"Duplicate entry for block {key}", item.path)
        if not (key[0] < len(target) and key[1] < len(source)):
            raise item.document.error(f"Block {key} lies outside the direct sums", item.path)

        kraus = item.matrices("kraus", allow_empty=True)
        expected = (target[key[0]], source[key[1]])
        for index, operator in enumerate(kraus):
            if operator.shape != expected:
                raise item.document.error(
                    f"Kraus operator must be {expected[0]}x{expected[1]},"
                    f" got {operator.shape}",
                    f"{item.path}.kraus[{index}]",
                )
        entries[key] = kraus

    return from_block_entries(source, target, entries, check_unital)


@ProblemRegistry.register(ProblemKind.cstar)
class CStarHandler(BlockFamily):
    """General CPU maps between direct sums of matrix algebras."""

    kind = ProblemKind.cstar

    def build(
        self, channel: PayloadReader, state: PayloadReader, tol: Tolerances
    ) -> Instance:
        forward = _read_blocks(channel, check_unital=tol)

        state.require_only("weights", "densities")
        omega = CStarState(state.vector("weights"), tuple(state.matrices("densities")))
        if omega.algebra != forward.target:
            raise state.document.error(
                f"State blocks {list(omega.algebra.blocks)} do not match the channel target "
                f"{list(forward.target.blocks)}",
                "state.densities",
            )
        omega.validate(tol)

        return Instance(self.kind, forward, omega, tol)

    def invert(self, instance: Instance) -> BayesOutcome:
        return cstar_bayesian_invert(
            cast(BlockChannel, instance.forward), self._state(instance), instance.tol
        )


@ProblemRegistry.register(ProblemKind.povm)
class PovmHandler(BlockFamily):
    """Measurements C^Y -> M_m given by their effects."""

    kind = ProblemKind.povm

    def build(
        self, channel: PayloadReader, state: PayloadReader, tol: Tolerances
    ) -> Instance:
        channel.require_only("effects")
        effects = channel.matrices("effects")
        forward = povm_channel(effects, tol)

        rho = _density(state)
        omega = single_state(rho)
        if omega.algebra != forward.target:
            raise state.document.error(
                f"Density must be {forward.target[0]}x{forward.target[0]}", "state.density"
            )
        omega.validate(tol)

        return Instance(self.kind, forward, rho, tol, {"effects": effects})

    def invert(self, instance: Instance) -> BayesOutcome:
        return povm_bayes(
            instance.data["effects"], cast(CMatrix, instance.prior), instance.tol
        )


def _probabilities(state: PayloadReader, tol: Tolerances) -> np.ndarray:
    state.require_only("probabilities")
    return check_stochastic(state.vector("probabilities"), tol, what="Probabilities").reshape(
        -1
    )


@ProblemRegistry.register(ProblemKind.ensemble)
class EnsembleHandler(BlockFamily):
    """State preparations C^X <- M_n, x -> sigma_x, with a prior on X."""

    kind = ProblemKind.ensemble

    def build(
        self, channel: PayloadReader, state: PayloadReader, tol: Tolerances
    ) -> Instance:
        channel.require_only("states")
        states = channel.matrices("states")
        forward = ensemble_channel(states, tol)

        probabilities = _probabilities(state, tol)
        if probabilities.size != len(states):
            raise state.document.error(
                f"{probabilities.size} probabilities given for {len(states)} states",
                "state.probabilities",
            )

        omega = CStarState.classical(probabilities)
        return Instance(
            self.kind, forward, omega, tol, {"states": states, "probabilities": probabilities}
        )

    def invert(self, instance: Instance) -> BayesOutcome:
        return ensemble_bayes(
            instance.data["states"], instance.data["probabilities"], instance.tol
        )


@ProblemRegistry.register(ProblemKind.classical)
class ClassicalHandler(BlockFamily):
    """Stochastic maps between finite sets, inverted through the direct-sum engine."""

    kind = ProblemKind.classical

    def build(
        self, channel: PayloadReader, state: PayloadReader, tol: Tolerances
    ) -> Instance:
        channel.require_only("stochastic")
        stochastic = _real(channel, "stochastic")
        forward = embed_classical(stochastic, tol)

        probabilities = _probabilities(state, tol)
        if probabilities.size != stochastic.shape[1]:
            raise state.document.error(
                f"{probabilities.size} probabilities given for {stochastic.shape[1]} points",
                "state.probabilities",
            )

        return Instance(
            self.kind,
            forward,
            embed_distribution(probabilities, tol),
            tol,
            {"stochastic": stochastic, "probabilities": probabilities},
        )

    def invert(self, instance: Instance) -> BayesOutcome:
        outcome = cstar_bayesian_invert(
            cast(BlockChannel, instance.forward), self._state(instance), instance.tol
        )

        if outcome.exists and isinstance(outcome.inverse, BlockChannel):
            direct = classical_bayes(
                instance.data["stochastic"], instance.data["probabilities"], instance.tol
            )
            difference = float(np.max(np.abs(direct - project_classical(outcome.inverse))))
            self._logger.debug("Direct formula differs by %.3e", difference)
            outcome = BayesOutcome(
                outcome.status,
                witness=outcome.witness,
                inverse=outcome.inverse,
                unique=outcome.unique,
                certificates=outcome.certificates,
                failures=outcome.failures,
                diagnostics={**outcome.diagnostics, "direct_formula_residual": difference},
            )

        return outcome

    def encode_inverse(self, inverse: Inverse) -> dict[str, Any]:
        if not isinstance(inverse, BlockChannel):
            raise TypeError(f"Expected a block channel, got {type(inverse).__name__}")
        return {"stochastic": project_classical(inverse).tolist()}

    def decode_inverse(self, reader: PayloadReader, instance: Instance) -> Inverse:
        reader.require_only("stochastic")
        stochastic = _real(reader, "stochastic")

        expected = tuple(reversed(instance.data["stochastic"].shape))
        if stochastic.shape != expected:
            raise reader.document.error(
                f"Inverse must be {expected[0]}x{expected[1]}, got {stochastic.shape}",
                f"{reader.path}.stochastic",
            )

        try:
            return embed_classical(stochastic, instance.tol, validate=False)
        except QBayesError as err:
            raise reader.document.error(str(err), f"{reader.path}.stochastic") from err


def _real(reader: PayloadReader, key: str) -> np.ndarray:
    values = reader.matrix(key)
    if np.any(values.imag != 0):
        raise reader.document.error("Expected real entries", f"{reader.path}.{key}")
    return values.real.copy()


__all__ = [
    "BaseHandler",
    "MatrixFamily",
    "BlockFamily",
    "MatrixHandler",
    "CollapseHandler",
    "IsometryHandler",
    "CStarHandler",
    "PovmHandler",
    "EnsembleHandler",
    "ClassicalHandler",
]
