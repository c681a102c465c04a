#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Bayesian inversion engines.

 - `matrix`: maps between full matrix algebras, decided by corner self-adjointness
   and completion of the Choi matrix
 - `cstar`: the same test block by block for maps between direct sums
 - `classical`: stochastic maps and their embedding as commutative direct sums
 - `special`: closed forms for measurements, preparations, collapse and coisometries
"""

from __future__ import annotations

from qbayes.bayes.classical import classical_bayes, classical_bayes_via_cstar
from qbayes.bayes.cstar import (
    BlockChannel,
    CStarAlgebra,
    CStarState,
    cstar_bayesian_invert,
    cstar_verify_bayes,
)
from qbayes.bayes.matrix import (
    BayesOutcome,
    BayesProblem,
    Certificates,
    bayesian_invert,
    verify_bayes_condition,
)
from qbayes.bayes.special import (
    ensemble_bayes,
    isometry_bayes,
    povm_bayes,
    wave_collapse_invert,
)

__all__ = [
    "BayesOutcome",
    "BayesProblem",
    "Certificates",
    "bayesian_invert",
    "verify_bayes_condition",
    "BlockChannel",
    "CStarAlgebra",
    "CStarState",
    "cstar_bayesian_invert",
    "cstar_verify_bayes",
    "classical_bayes",
    "classical_bayes_via_cstar",
    "povm_bayes",
    "ensemble_bayes",
    "wave_collapse_invert",
    "isometry_bayes",
]
