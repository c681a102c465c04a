#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Custom setup.py for qbayes.

Installs all of `src` as one package. Dependencies are gathered from
requirements.txt (the numerical core) and one requirements-<part>.txt file per
part of the codebase, so that the file layer and the test helpers declare
their own dependencies.

You can install the entire codebase using normal methods such as
  ./setup.py install
"""

import os.path

from typing import Dict, List, Set, Union

import setuptools

# Parts installed with the package, and parts offered as extras
PARTS: Set[str] = {"io"}
EXTRAS: Set[str] = {"test"}


def load_requirements(requirements: List[str], file: str) -> None:
    """
    Parse a requirements.txt into file into a set of dependencies.

    Note that this function does not follow `-r` or process and other flags.
    """

    if not os.path.exists(file):
        return

    with open(file, "r", encoding="utf-8") as rf:
        requirements.extend(
            x for x in rf.read().splitlines(False) if x and not x.startswith("#")
        )


def main() -> None:
    """
    Wrap setuptools with the package information.
    """

    version = "0.1.0"
    config: Dict[str, Union[str, List[str]]] = {
        "version": version,
        "author": "QBayes Developers",
        "description": "Bayesian inversion of quantum channels",
        "license_files": ["LICENSES/BSD-2-Clause.txt"],
        "python_requires": ">=3.10",
        "classifiers": [
            "Programming Language :: Python :: 3",
            "Operating System :: OS Independent",
            "License :: OSI Approved :: BSD License",
            "Topic :: Scientific/Engineering :: Physics",
        ],
        "package_data": {"": ["py.typed"]},
    }

    with open("README.md", "r", encoding="utf-8") as rmf:
        config["long_description"] = rmf.read()
        config["long_description_content_type"] = "text/markdown"

    requirements: List[str] = []
    load_requirements(requirements, "requirements.txt")
    for part in sorted(PARTS):
        load_requirements(requirements, f"requirements-{part}.txt")

    extras: Dict[str, List[str]] = {}
    for part in sorted(EXTRAS):
        extras[part] = []
        load_requirements(extras[part], f"requirements-{part}.txt")

    setuptools.setup(
        name="qbayes",
        package_dir={"": "src"},
        packages=setuptools.find_packages("src"),
        install_requires=requirements,
        extras_require=extras,
        entry_points={"console_scripts": ["qbayes = qbayes.cli:run"]},
        **config,
    )


if __name__ == "__main__":
    main()
