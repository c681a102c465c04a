#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""Allows `python -m qbayes`."""

from qbayes.cli import run

if __name__ == "__main__":
    run()
