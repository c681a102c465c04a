#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Classical Bayes on finite sets, and its embedding into direct sums.

Stochastic maps X -> Y are column-stochastic |Y| x |X| matrices: column x is
the distribution f_x, and entry [y, x] is f_yx.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from qbayes.bayes.cstar import BlockChannel, CStarAlgebra, CStarState, cstar_bayesian_invert
from qbayes.channel import Channel
from qbayes.core import (
    InternalInconsistency,
    NotDeterministic,
    NotStochastic,
    Tolerances,
)
from qbayes.linalg import DEFAULT_TOLERANCES, identity

FloatMatrix = npt.NDArray[np.float64]


def check_stochastic(
    matrix: npt.ArrayLike,
    tol: Tolerances = DEFAULT_TOLERANCES,
    what: str = "Stochastic matrix",
) -> FloatMatrix:
    """
    Validates a column-stochastic matrix (a probability vector is one column).

    :raise NotStochastic: on complex, negative or non-normalised columns
    """

    values = np.asarray(matrix)
    if np.iscomplexobj(values):
        if np.max(np.abs(values.imag), initial=0.0) > tol.eq_tol:
            raise NotStochastic(f"{what} has complex entries")
        values = values.real

    values = np.asarray(values, dtype=np.float64)
    columns = values.reshape(values.shape[0], -1) if values.ndim == 1 else values

    if columns.ndim != 2 or columns.size == 0:
        raise NotStochastic(f"{what} must be a non-empty vector or matrix")
    if not np.all(np.isfinite(columns)):
        raise NotStochastic(f"{what} contains NaN or infinite entries")
    if np.min(columns) < -tol.eq_tol:
        raise NotStochastic(f"{what} has a negative entry {np.min(columns):.3e}")

    sums = columns.sum(axis=0)
    worst = float(np.max(np.abs(sums - 1)))
    if worst > tol.eq_tol:
        raise NotStochastic(f"{what} has a column sum off from 1 by {worst:.3e}")

    return values


def _posterior(
    joint: FloatMatrix, prior: FloatMatrix, pushed: FloatMatrix, tol: Tolerances
) -> FloatMatrix:
    # joint[y, x] = f_yx p_x; null columns of the result are uniform
    count = prior.size
    result = np.full((count, pushed.size), 1.0 / count)

    for y, weight in enumerate(pushed):
        if weight > tol.rank_tol:
            result[:, y] = joint[y, :] / weight

    return result


def classical_bayes(
    stochastic: npt.ArrayLike, prior: npt.ArrayLike, tol: Tolerances = DEFAULT_TOLERANCES
) -> FloatMatrix:
    """
    The Bayesian inverse g: Y -> X of f: X -> Y with respect to the prior p.

    g[x, y] = f[y, x] p[x] / q[y] with q = f p, and 1/|X| where q[y] vanishes.

    :raise NotStochastic: if f is not column-stochastic or p not a distribution
    """

    forward = check_stochastic(stochastic, tol)
    probabilities = check_stochastic(prior, tol, what="Prior").reshape(-1)

    if forward.shape[1] != probabilities.size:
        raise NotStochastic(
            f"Stochastic matrix has {forward.shape[1]} columns"
            f" for {probabilities.size} points"
        )

    pushed = forward @ probabilities
    return _posterior(forward * probabilities, probabilities, pushed, tol)


def classical_disintegration(
    function: npt.ArrayLike, prior: npt.ArrayLike, tol: Tolerances = DEFAULT_TOLERANCES
) -> FloatMatrix:
    """
    The disintegration r: Y -> X of a deterministic f: X -> Y.

    r[x, y] = p[x] [f(x) = y] / q[y], and 1/|X| where q[y] vanishes.

    :raise NotDeterministic: if a column of f is not a point mass
    """

    forward = check_stochastic(function, tol, what="Function")
    if np.any(np.minimum(np.abs(forward), np.abs(forward - 1)) > tol.eq_tol):
        raise NotDeterministic("Every column of a function must be a point mass")

    deterministic = np.rint(forward)
    return classical_bayes(deterministic, prior, tol)


def embed_classical(
    stochastic: npt.ArrayLike, tol: Tolerances = DEFAULT_TOLERANCES, validate: bool = True
) -> BlockChannel:
    """
    The CPU map C^Y -> C^X of a stochastic map f: X -> Y.

    Block (x, y) multiplies by f[y, x]. With validate=False only non-negativity is
    enforced, so that candidate inverses which fail unitality can still be certified.

    :raise NotStochastic: if f is not column-stochastic (or has a negative entry)
    """

    if validate:
        forward = check_stochastic(stochastic, tol)
    else:
        forward = np.asarray(np.real(stochastic), dtype=np.float64)
        if forward.ndim != 2 or np.min(forward, initial=0.0) < 0:
            raise NotStochastic("Stochastic matrix must be two-dimensional and non-negative")
    points_out, points_in = forward.shape

    entries = {
        (x, y): Channel([np.array([[np.sqrt(forward[y, x])]])])
        for x in range(points_in)
        for y in range(points_out)
        if forward[y, x] > 0
    }

    return BlockChannel(
        source=CStarAlgebra.commutative(points_out),
        target=CStarAlgebra.commutative(points_in),
        entries=entries,
    )


def project_classical(channel: BlockChannel) -> FloatMatrix:
    """
    The stochastic matrix of a map between commutative direct sums.

    Entry [source, target] is block (target, source) evaluated on 1.

    :raise InternalInconsistency: if a block is not one-dimensional
    """

    if any(side != 1 for side in channel.source.blocks + channel.target.blocks):
        raise InternalInconsistency("Only maps between commutative algebras are stochastic")

    unit = identity(1)
    result = np.zeros((len(channel.source), len(channel.target)))
    for x in range(len(channel.target)):
        for y in range(len(channel.source)):
            result[y, x] = channel.entry(x, y).apply(unit)[0, 0].real

    return result


def embed_distribution(
    prior: Sequence[float], tol: Tolerances = DEFAULT_TOLERANCES
) -> CStarState:
    """A probability vector as a state on C^X."""

    return CStarState.classical(check_stochastic(prior, tol, what="Distribution").reshape(-1))


def classical_bayes_via_cstar(
    stochastic: npt.ArrayLike, prior: Sequence[float], tol: Tolerances = DEFAULT_TOLERANCES
) -> FloatMatrix:
    """
    Classical Bayes computed by the direct-sum engine.

    Agrees with :func:`classical_bayes`; a classical inverse always exists.
    """

    outcome = cstar_bayesian_invert(
        embed_classical(stochastic, tol), embed_distribution(prior, tol), tol
    )
    if not outcome.exists or not isinstance(outcome.inverse, BlockChannel):
        raise InternalInconsistency(f"Classical inversion reported {outcome.status.value}")

    return project_classical(outcome.inverse)


__all__ = [
    "check_stochastic",
    "classical_bayes",
    "classical_disintegration",
    "embed_classical",
    "project_classical",
    "embed_distribution",
    "classical_bayes_via_cstar",
]
