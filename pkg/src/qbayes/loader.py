#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Provides functions to load qbayes problem files and candidate inverses.

Files ending in `.json` are read as JSON, anything else as YAML. Every field of
a document is indexed by its path (e.g. `channel.kraus[0][1]`) so that errors
can point at the line which caused them.

Matrices are row-major nested lists. An entry is a number, a numeric string,
or a `[re, im]` pair.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from typing import Any, Optional, Union

import dataclasses
import hashlib
import json
import logging
import math
import pathlib

import numpy as np
import numpy.typing as npt
import yaml

from qbayes.core import (
    CMatrix,
    NamedProblemBlock,
    ProblemBlock,
    ProblemFileError,
    ProblemKind,
    Tolerances,
)

_REQUIRED_KEYS = set(ProblemBlock.__annotations__.keys())  # pylint: disable=no-member
_KNOWN_KEYS = set(NamedProblemBlock.__annotations__.keys())  # pylint: disable=no-member

_logger = logging.getLogger(__name__)

PathLike = Union[str, pathlib.Path]


@dataclasses.dataclass(frozen=True)
class Document:
    """A parsed document, with the sha256 of its bytes and the line of each field."""

    data: Mapping[str, Any]
    digest: str
    source: str
    lines: Mapping[str, int] = dataclasses.field(default_factory=dict)

    def error(self, message: str, field: str = "") -> ProblemFileError:
        """An error located at `field`, with its line when known."""

        located = field
        line = self.lines.get(located)
        while line is None and located:
            located = _parent(located)
            line = self.lines.get(located)

        return ProblemFileError(message, field=field, line=line)

    def reader(self, key: str) -> PayloadReader:
        """Reader over the mapping stored under a top-level key."""

        if key not in self.data:
            raise self.error(f"Missing required key '{key}'")
        return PayloadReader(self, key, self.data[key])


@dataclasses.dataclass(frozen=True)
class ProblemDocument(Document):
    """A problem file, with its kind and tolerances resolved."""

    kind: ProblemKind = ProblemKind.matrix
    name: str = ""
    description: str = ""
    tolerances: Tolerances = dataclasses.field(default_factory=Tolerances)


def _parent(field: str) -> str:
    if field.endswith("]"):
        return field[: field.rindex("[")]
    return field.rpartition(".")[0]


def _join(path: str, key: Union[str, int]) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


class PayloadReader:
    """
    Typed access to one mapping of a document.

    Every accessor raises :class:`ProblemFileError` naming the field path
    of the offending value.
    """

    def __init__(self, document: Document, path: str, value: Any) -> None:
        self.document = document
        self.path = path

        if not isinstance(value, Mapping):
            raise document.error(f"'{path}' must be a mapping", path)
        self._value: Mapping[str, Any] = value

    def __contains__(self, key: str) -> bool:
        return key in self._value

    def raw(self, key: str) -> Any:
        """The untyped value of a key."""

        if key not in self._value:
            raise self.document.error(f"Missing required key '{key}'", self.path)
        return self._value[key]

    def require_only(self, *keys: str) -> None:
        """Rejects keys other than those given."""

        unknown = set(self._value.keys()).difference(keys)
        if unknown:
            raise self.document.error(
                f"Unexpected keys in '{self.path}': {sorted(unknown)}"
                f" (expected {list(keys)})",
                self.path,
            )

    def child(self, key: str) -> PayloadReader:
        """Reader for a nested mapping."""

        return PayloadReader(self.document, _join(self.path, key), self.raw(key))

    def children(self, key: str) -> Iterator[PayloadReader]:
        """Readers for a list of nested mappings."""

        path = _join(self.path, key)
        for index, item in enumerate(self._list(self.raw(key), path)):
            yield PayloadReader(self.document, _join(path, index), item)

    def integer(self, key: str) -> int:
        """A non-negative integer."""

        return self._integer(self.raw(key), _join(self.path, key))

    def integers(self, key: str) -> list[int]:
        """A non-empty list of positive integers."""

        path = _join(self.path, key)
        values = [
            self._integer(item, _join(path, index))
            for index, item in enumerate(self._list(self.raw(key), path))
        ]
        if any(value == 0 for value in values):
            raise self.document.error(f"'{path}' must contain positive sizes", path)
        return values

    def vector(self, key: str) -> npt.NDArray[np.float64]:
        """A non-empty list of real numbers."""

        path = _join(self.path, key)
        values = []
        for index, item in enumerate(self._list(self.raw(key), path)):
            value = self._number(item, _join(path, index))
            if value.imag != 0:
                raise self.document.error("Expected a real number", _join(path, index))
            values.append(value.real)
        return np.array(values, dtype=np.float64)

    def matrix(self, key: str) -> CMatrix:
        """A rectangular complex matrix."""

        return self._matrix(self.raw(key), _join(self.path, key))

    def matrices(self, key: str, allow_empty: bool = False) -> list[CMatrix]:
        """
        A list of matrices.

        The list must be non-empty unless `allow_empty` is set; an empty Kraus list
        is the zero map.
        """

        path = _join(self.path, key)
        value = self.raw(key)
        if allow_empty and value == []:
            return []
        return [
            self._matrix(item, _join(path, index))
            for index, item in enumerate(self._list(value, path))
        ]

    def _list(self, value: Any, path: str) -> list[Any]:
        if not isinstance(value, list) or not value:
            raise self.document.error(f"'{path}' must be a non-empty list", path)
        return value

    def _integer(self, value: Any, path: str) -> int:
        if isinstance(value, bool):
            raise self.document.error("Expected an integer, got a boolean", path)
        try:
            number = int(value)
        except (TypeError, ValueError, OverflowError) as err:
            raise self.document.error(f"Expected an integer, got {value!r}", path) from err
        if number < 0 or (isinstance(value, float) and number != value):
            raise self.document.error(f"Expected a non-negative integer, got {value!r}", path)
        return number

    def _real(self, value: Any, path: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise self.document.error(f"Expected a number, got {value!r}", path)
        try:
            number = float(value)
        except ValueError as err:
            raise self.document.error(f"Expected a number, got {value!r}", path) from err
        if not math.isfinite(number):
            raise self.document.error(f"Expected a finite number, got {value!r}", path)
        return number

    def _number(self, value: Any, path: str) -> complex:
        if isinstance(value, list):
            if len(value) != 2:
                raise self.document.error("Complex entries must be [re, im] pairs", path)
            return complex(self._real(value[0], path), self._real(value[1], path))
        return complex(self._real(value, path), 0.0)

    def _matrix(self, value: Any, path: str) -> CMatrix:
        rows = self._list(value, path)
        width: Optional[int] = None
        result = []

        for index, row in enumerate(rows):
            row_path = _join(path, index)
            entries = self._list(row, row_path)
            if width is None:
                width = len(entries)
            elif len(entries) != width:
                raise self.document.error(
                    f"Row has {len(entries)} entries, expected {width}", row_path
                )
            result.append(
                [
                    self._number(entry, _join(row_path, col))
                    for col, entry in enumerate(entries)
                ]
            )

        return np.array(result, dtype=np.complex128)


def _index_lines(node: yaml.Node, path: str, lines: dict[str, int]) -> None:
    lines[path] = node.start_mark.line + 1

    if isinstance(node, yaml.MappingNode):
        for key, child in node.value:
            _index_lines(child, _join(path, str(key.value)), lines)
    elif isinstance(node, yaml.SequenceNode):
        for index, child in enumerate(node.value):
            _index_lines(child, _join(path, index), lines)


def parse_document(content: bytes, source: str) -> Document:
    """
    Parses a JSON (by `.json` suffix) or YAML document.

    :raise ProblemFileError: on syntax errors, or if the top level is not a mapping
    """

    digest = hashlib.sha256(content).hexdigest()
    try:
        text = content.decode("utf-8")
    except UnicodeDecodeError as err:
        raise ProblemFileError(f"{source} is not UTF-8 text: {err}") from err

    data: Any
    if source.endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ProblemFileError(f"Invalid JSON: {err.msg}", line=err.lineno) from err
    else:
        try:
            data = yaml.load(text, Loader=yaml.CSafeLoader)
        except yaml.MarkedYAMLError as err:
            line = err.problem_mark.line + 1 if err.problem_mark else None
            raise ProblemFileError(f"Invalid YAML: {err.problem}", line=line) from err
        except yaml.YAMLError as err:
            raise ProblemFileError(f"Invalid YAML: {err}") from err

    if not isinstance(data, Mapping):
        raise ProblemFileError(f"{source} must contain a mapping at the top level", line=1)

    lines: dict[str, int] = {}
    try:
        _index_lines(yaml.compose(text, Loader=yaml.CSafeLoader), "", lines)
    except yaml.YAMLError:
        _logger.debug("No line index available for %s", source)

    return Document(data=data, digest=digest, source=source, lines=lines)


def read_document(path: PathLike) -> Document:
    """
    Reads and parses a document from disk.

    :raise ProblemFileError: if the file cannot be read or parsed
    """

    location = pathlib.Path(path)
    try:
        content = location.read_bytes()
    except OSError as err:
        raise ProblemFileError(f"Cannot read {location}: {err.strerror}") from err

    return parse_document(content, str(location))


def as_problem(document: Document) -> ProblemDocument:
    """
    Validates the common keys of a problem document.

    :raise ProblemFileError: on missing or unknown keys, an unknown kind or bad tolerances
    """

    keys = set(document.data.keys())
    if not _REQUIRED_KEYS.issubset(keys):
        raise document.error(f"Problem missing some keys: {sorted(_REQUIRED_KEYS - keys)}")
    if not keys.issubset(_KNOWN_KEYS):
        raise document.error(f"Problem has unknown keys: {sorted(keys - _KNOWN_KEYS)}")

    kind = document.data["kind"]
    if kind not in ProblemKind.values():
        raise document.error(
            f"Problem kind '{kind}' not valid (must be one of {ProblemKind.values()})", "kind"
        )

    block = document.data.get("tolerances")
    if block is not None and not isinstance(block, Mapping):
        raise document.error("'tolerances' must be a mapping", "tolerances")
    try:
        tolerances = Tolerances.from_mapping(block)
    except (TypeError, ValueError) as err:
        raise document.error(str(err), "tolerances") from err

    for key in ("name", "description"):
        if not isinstance(document.data.get(key, ""), str):
            raise document.error(f"'{key}' must be a string", key)

    return ProblemDocument(
        data=document.data,
        digest=document.digest,
        source=document.source,
        lines=document.lines,
        kind=ProblemKind(kind),
        name=document.data.get("name", ""),
        description=document.data.get("description", ""),
        tolerances=tolerances,
    )


def load_problem(path: PathLike) -> ProblemDocument:
    """Reads a problem file and validates its common keys."""

    problem = as_problem(read_document(path))
    _logger.debug(
        "Loaded %s problem from %s (sha256 %s)", problem.kind.value, path, problem.digest
    )
    return problem


def load_candidate(path: PathLike) -> PayloadReader:
    """
    Reads a candidate inverse.

    Accepts a report (which carries its inverse under `inverse`) or a bare
    document `{"inverse": ...}`.

    :raise ProblemFileError: if the document has no inverse payload
    """

    document = read_document(path)
    if "inverse" not in document.data:
        status = document.data.get("status")
        reason = f" (report status {status})" if status else ""
        raise document.error(f"{path} carries no inverse{reason}")

    return document.reader("inverse")


__all__ = [
    "Document",
    "ProblemDocument",
    "PayloadReader",
    "parse_document",
    "read_document",
    "as_problem",
    "load_problem",
    "load_candidate",
]
