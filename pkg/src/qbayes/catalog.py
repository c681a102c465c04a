#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
The catalog of bundled example problems.

Examples are registered with the `example` decorator, which records a builder
returning the problem block. Further catalogs are loaded from installed
packages: any package exposing a `qbayes-examples` entry point is imported,
and the builders it registers join the catalog.
"""

from __future__ import annotations

from collections.abc import Iterable
from typing import Any, Callable, Union

import dataclasses
import logging
import pathlib

import importlib_metadata
import numpy as np

from qbayes.bayes.special import amplification_channel, bitflip_channel
from qbayes.core import NamedProblemBlock, UnknownExample
from qbayes.linalg import identity, tensor
from qbayes.loader import ProblemDocument, as_problem, parse_document
from qbayes.report import encode_matrix, render_json

# Entry point group for packages which add examples to the catalog
CATALOG_ENTRY_POINTS = ["qbayes-examples"]

Builder = Callable[[], NamedProblemBlock]

_logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class Example:
    """A named builder of a problem block."""

    name: str
    description: str
    build: Builder


_CATALOG: dict[str, Example] = {}


def example(name: str, description: str) -> Callable[[Builder], Builder]:
    """
    Decorator that adds a problem builder to the catalog.

    The builder is called without arguments and returns the problem block; the
    name and description are filled in from the registration.
    """

    def do_register(builder: Builder) -> Builder:
        if name in _CATALOG:
            raise ValueError(
                f"Example '{name}' is already registered by {_CATALOG[name].build}"
            )

        _CATALOG[name] = Example(name, description, builder)
        return builder

    return do_register


def names() -> list[str]:
    """Names of all registered examples, sorted."""

    return sorted(_CATALOG)


def examples() -> list[Example]:
    """All registered examples, sorted by name."""

    return [_CATALOG[name] for name in names()]


def problem_block(name: str) -> NamedProblemBlock:
    """
    The problem block of a named example.

    :raise UnknownExample: if no example has that name
    """

    if name not in _CATALOG:
        raise UnknownExample(name)

    entry = _CATALOG[name]
    built = entry.build()

    block: NamedProblemBlock = {
        "name": entry.name,
        "description": entry.description,
        "kind": built["kind"],
        "channel": built["channel"],
        "state": built["state"],
    }
    if "tolerances" in built:
        block["tolerances"] = built["tolerances"]
    return block


def render_example(name: str) -> str:
    """The JSON text of a named example."""

    return render_json(problem_block(name))


def example_document(name: str) -> ProblemDocument:
    """A named example, parsed exactly as if read from its file."""

    return as_problem(parse_document(render_example(name).encode("utf-8"), f"{name}.json"))


def write_example(name: str, directory: Union[str, pathlib.Path] = ".") -> pathlib.Path:
    """
    Writes `<name>.json` into a directory.

    :raise UnknownExample: if no example has that name
    """

    text = render_example(name)
    target = pathlib.Path(directory) / f"{name}.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")

    _logger.info("Wrote example %s to %s", name, target)
    return target


def load_plugins() -> Iterable[Any]:
    """
    Load modules from installed packages that declare a catalog entry point.

    Importing such a module registers its examples through the `example`
    decorator.

    :return: the loaded modules.
    """

    distribution: importlib_metadata.Distribution

    for distribution in importlib_metadata.distributions():
        for entry_point in distribution.entry_points:
            if entry_point.group not in CATALOG_ENTRY_POINTS:
                continue

            _logger.debug("Loading example catalog %s", entry_point.value)
            yield entry_point.load()  # pragma: no cover


def require_catalog(name: str) -> Any:
    """
    Loads the catalog of a named distribution.

    Intended to help debug plugin loading: raises if the distribution has no
    catalog entry point.

    :return: the loaded module.
    """

    distribution = importlib_metadata.distribution(name)

    for entry_point in distribution.entry_points:
        if entry_point.group in CATALOG_ENTRY_POINTS:
            return entry_point.load()  # pragma: no cover

    raise ModuleNotFoundError(
        f"Distribution {name} does not provide an example catalog ({CATALOG_ENTRY_POINTS})"
    )


def _matrices(values: Iterable[np.ndarray]) -> list[list[list[Any]]]:
    return [encode_matrix(value, pairs=False) for value in values]


def _diagonal(*values: float) -> np.ndarray:
    return np.diag(np.array(values, dtype=np.complex128))


def _bitflip(prior: np.ndarray) -> NamedProblemBlock:
    return {
        "kind": "matrix",
        "channel": {"kraus": _matrices(bitflip_channel(0.4).kraus)},
        "state": {"density": encode_matrix(prior, pairs=False)},
    }


@example(
    "bitflip-half", "Bit flip with weight 0.4 and the uniform prior; the inverse is the map"
)
def _bitflip_half() -> NamedProblemBlock:
    return _bitflip(identity(2) / 2)


@example("bitflip-biased", "Bit flip with weight 0.4 and prior diag(0.3, 0.7); no inverse")
def _bitflip_biased() -> NamedProblemBlock:
    return _bitflip(_diagonal(0.3, 0.7))


@example(
    "example-5-11", "A CPU map M_3 -> M_2 whose corner cannot be completed (q = 0.3)"
)
def _uncompletable() -> NamedProblemBlock:
    weight = 0.3
    first = np.array(
        [[np.sqrt(weight), 0, 0], [0, 0, np.sqrt(1 - weight)]], dtype=np.complex128
    )
    second = np.array(
        [[0, np.sqrt(1 - weight), 0], [0, 0, np.sqrt(weight)]], dtype=np.complex128
    )

    return {
        "kind": "matrix",
        "channel": {"kraus": _matrices([first, second])},
        "state": {"density": encode_matrix(_diagonal(1, 0), pairs=False)},
    }


@example(
    "grocery", "Classical diagnosis: prior (0.3, 0.7), test columns (0.9, 0.1), (0.6, 0.4)"
)
def _grocery() -> NamedProblemBlock:
    return {
        "kind": "classical",
        "channel": {"stochastic": [[0.9, 0.6], [0.1, 0.4]]},
        "state": {"probabilities": [0.3, 0.7]},
    }


def _povm(first: np.ndarray) -> NamedProblemBlock:
    return {
        "kind": "povm",
        "channel": {"effects": _matrices([first, identity(2) - first])},
        "state": {"density": encode_matrix(_diagonal(0.7, 0.3), pairs=False)},
    }


@example("povm-commuting", "A two-outcome measurement whose effects commute with the prior")
def _povm_commuting() -> NamedProblemBlock:
    return _povm(_diagonal(0.8, 0.3))


@example(
    "povm-noncommuting", "A two-outcome measurement not commuting with the prior; no inverse"
)
def _povm_noncommuting() -> NamedProblemBlock:
    return _povm(np.array([[0.5, 0.3], [0.3, 0.5]], dtype=np.complex128))


@example("ensemble-commuting", "Preparation of two commuting qutrit states, one level unused")
def _ensemble_commuting() -> NamedProblemBlock:
    return {
        "kind": "ensemble",
        "channel": {"states": _matrices([_diagonal(0.9, 0.1, 0), _diagonal(0.2, 0.8, 0)])},
        "state": {"probabilities": [0.4, 0.6]},
    }


@example("collapse-coherent", "Collapse of |+><+| onto the computational basis; no inverse")
def _collapse_coherent() -> NamedProblemBlock:
    return {
        "kind": "collapse",
        "channel": {"projections": _matrices([_diagonal(1, 0), _diagonal(0, 1)])},
        "state": {"density": [[0.5, 0.5], [0.5, 0.5]]},
    }


@example("isometry-embed", "Compression of M_3 onto its upper 2x2 corner")
def _isometry_embed() -> NamedProblemBlock:
    coisometry = np.hstack([identity(2), np.zeros((2, 1), dtype=np.complex128)])
    return {
        "kind": "isometry",
        "channel": {"coisometry": encode_matrix(coisometry, pairs=False)},
        "state": {"density": [[0.6, 0.2], [0.2, 0.4]]},
    }


@example("star-homo-disintegration", "Amplification B -> 1_2 (x) B with a product prior")
def _star_homo_disintegration() -> NamedProblemBlock:
    tau = np.array([[0.6, 0.2], [0.2, 0.4]], dtype=np.complex128)
    sigma = _diagonal(0.7, 0.3, 0)

    return {
        "kind": "matrix",
        "channel": {"kraus": _matrices(amplification_channel(2, 3).kraus)},
        "state": {"density": encode_matrix(tensor(tau, sigma), pairs=False)},
    }


__all__ = [
    "CATALOG_ENTRY_POINTS",
    "Example",
    "example",
    "names",
    "examples",
    "problem_block",
    "render_example",
    "example_document",
    "write_example",
    "load_plugins",
    "require_catalog",
]
