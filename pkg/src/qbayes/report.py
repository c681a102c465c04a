#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Reports of inversions and checks, rendered as JSON or text.

Rendering is deterministic: floats are written with 17 significant digits,
keys keep their construction order, and no timestamps are recorded. The same
problem file and flags therefore give byte-identical reports.
"""

from __future__ import annotations

from collections.abc import Mapping
from typing import Any, Optional

import json
import math

import numpy as np
import numpy.typing as npt

from qbayes import __version__
from qbayes.bayes.matrix import BayesOutcome
from qbayes.core import CMatrix, Tolerances
from qbayes.loader import ProblemDocument
from qbayes.registry import CheckResult

_INDENT = "  "


def encode_complex(value: complex) -> list[float]:
    """A complex number as an [re, im] pair."""

    number = complex(value)
    return [float(number.real), float(number.imag)]


def encode_matrix(matrix: CMatrix, pairs: bool = True) -> list[list[Any]]:
    """
    A matrix as row-major nested lists.

    With pairs=False, entries with no imaginary part are written as plain floats.
    """

    values = np.asarray(matrix)
    return [
        [
            encode_complex(entry) if pairs or complex(entry).imag != 0 else float(entry.real)
            for entry in row
        ]
        for row in values
    ]


def encode_vector(values: npt.ArrayLike) -> list[float]:
    """A real vector as a list of floats."""

    return [float(value) for value in np.asarray(values, dtype=np.float64).reshape(-1)]


def _scalar(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return format(number, ".17g") if math.isfinite(number) else "null"
    return json.dumps(str(value), ensure_ascii=False)


def _is_scalar(value: Any) -> bool:
    return not isinstance(value, (Mapping, list, tuple))


def _render(value: Any, level: int) -> str:
    pad = _INDENT * (level + 1)
    close = _INDENT * level

    if isinstance(value, Mapping):
        if not value:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(key))}: {_render(item, level + 1)}"
            for key, item in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"

    if isinstance(value, (list, tuple)):
        if all(_is_scalar(item) for item in value):
            return "[" + ", ".join(_scalar(item) for item in value) + "]"
        # rows of a matrix stay on one line each
        items = [pad + _render(item, level + 1) for item in value]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"

    return _scalar(value)


def render_json(report: Mapping[str, Any]) -> str:
    """Deterministic JSON text for a report (or any JSON-like mapping)."""

    return _render(report, 0) + "\n"


def provenance(document: ProblemDocument, tol: Tolerances) -> dict[str, Any]:
    """Where a report came from: input digest, tolerances and tool version."""

    return {
        "tool": "qbayes",
        "version": __version__,
        "kind": document.kind.value,
        "name": document.name,
        "input_sha256": document.digest,
        "tolerances": tol.as_dict(),
    }


def invert_report(
    document: ProblemDocument,
    outcome: BayesOutcome,
    inverse: Optional[Mapping[str, Any]],
    tol: Tolerances,
) -> dict[str, Any]:
    """
    The report of an inversion.

    Certificates, uniqueness and the inverse payload are present exactly when
    the inverse exists.
    """

    report: dict[str, Any] = {
        "status": outcome.status.value,
        "witness": float(outcome.witness),
    }

    if outcome.exists:
        report["unique"] = bool(outcome.unique)
        if outcome.certificates is not None:
            report["certificates"] = outcome.certificates.as_dict()
        if inverse is not None:
            report["inverse"] = dict(inverse)

    if outcome.failures:
        report["failures"] = [
            {
                "status": failure.status.value,
                "witness": float(failure.witness),
                "target": failure.target,
                "source": failure.source,
            }
            for failure in outcome.failures
        ]

    diagnostics = outcome.diagnostics
    report["diagnostics"] = {key: float(diagnostics[key]) for key in sorted(diagnostics)}
    report["provenance"] = provenance(document, tol)
    return report


def check_report(
    document: ProblemDocument, result: CheckResult, candidate_digest: str, tol: Tolerances
) -> dict[str, Any]:
    """The report of a candidate check."""

    origin = provenance(document, tol)
    origin["candidate_sha256"] = candidate_digest

    return {
        "passed": result.passed,
        "certificates": result.certificates.as_dict(),
        "canonical_status": result.canonical.status.value,
        "ae_equal_canonical": result.ae_equal,
        "provenance": origin,
    }


def _array_text(value: Any) -> Optional[str]:
    # report matrices are always written as [re, im] pairs
    try:
        array = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        return None

    if array.ndim >= 3 and array.shape[-1] == 2:
        array = array[..., 0] + 1j * array[..., 1]
    if array.ndim == 0:
        return None

    return np.array2string(array, precision=6, suppress_small=True, max_line_width=94)


def _text_lines(key: str, value: Any, level: int) -> list[str]:
    pad = _INDENT * level

    if isinstance(value, Mapping):
        lines = [f"{pad}{key}:"]
        for name, item in value.items():
            lines.extend(_text_lines(str(name), item, level + 1))
        return lines

    if isinstance(value, list) and value and isinstance(value[0], Mapping):
        lines = [f"{pad}{key}:"]
        for index, item in enumerate(value):
            lines.extend(_text_lines(f"[{index}]", item, level + 1))
        return lines

    if isinstance(value, list):
        text = _array_text(value)
        if text is not None:
            body = text.splitlines()
            return [f"{pad}{key}:"] + [f"{pad}{_INDENT}{line}" for line in body]

    if isinstance(value, float):
        return [f"{pad}{key}: {value:.6g}"]
    if isinstance(value, str):
        return [f"{pad}{key}: {value}"]
    return [f"{pad}{key}: {_scalar(value)}"]


def render_text(report: Mapping[str, Any]) -> str:
    """Human-readable report: status, witness, certificates and inverse at fixed precision."""

    lines: list[str] = []
    for key, value in report.items():
        lines.extend(_text_lines(key, value, 0))
    return "\n".join(lines) + "\n"


def render(report: Mapping[str, Any], fmt: str = "json") -> str:
    """Renders a report in the named format ('json' or 'text')."""

    if fmt == "json":
        return render_json(report)
    if fmt == "text":
        return render_text(report)
    raise ValueError(f"Unknown report format {fmt!r} (must be one of ['json', 'text'])")


__all__ = [
    "encode_complex",
    "encode_matrix",
    "encode_vector",
    "render_json",
    "render_text",
    "render",
    "provenance",
    "invert_report",
    "check_report",
]
