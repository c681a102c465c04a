#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Bayesian inversion of completely positive unital maps between finite-dimensional C*-algebras.

The engine lives in `qbayes.bayes`; `qbayes.cli` binds it to problem files.
"""

__version__ = "0.1.0"
