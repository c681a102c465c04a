# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
Tests the modules which load qbayes problems and candidates from JSON and YAML files.

Also serves an example of how to construct these sort of tests.
"""

from __future__ import annotations

import hashlib
import json
import pathlib

import numpy as np
import pytest

from qbayes.core import ProblemFileError, ProblemKind
from qbayes.loader import (
    Document,
    PayloadReader,
    as_problem,
    load_candidate,
    load_problem,
    parse_document,
    read_document,
)

# pragma pylint: disable=R0903

PROBLEM_YAML = """\
kind: matrix
name: identity
channel:
  kraus:
    - [[1, 0], [0, 1]]
state:
  density: [[0.5, 0], [0, 0.5]]
"""


def _document(text: str, source: str = "inline.yaml") -> Document:
    return parse_document(text.encode("utf-8"), source)


def _channel(payload: str) -> PayloadReader:
    return _document(f"channel: {payload}\n").reader("channel")


class TestParse:
    """
    Syntax, digests and line numbers.
    """

    @staticmethod
    def test_yaml_lines() -> None:
        """Every field is indexed by its path."""

        document = _document(PROBLEM_YAML)

        assert document.data["kind"] == "matrix"
        assert document.lines["kind"] == 1
        assert document.lines["channel.kraus[0]"] == 5
        assert document.lines["state.density"] == 7
        assert document.lines["state.density[1][0]"] == 7

    @staticmethod
    def test_digest() -> None:
        """The sha256 of the raw bytes is kept."""

        document = _document(PROBLEM_YAML)
        assert document.digest == hashlib.sha256(PROBLEM_YAML.encode("utf-8")).hexdigest()

    @staticmethod
    def test_json_lines() -> None:
        """JSON documents are indexed as well."""

        text = json.dumps({"kind": "matrix", "channel": {}, "state": {}}, indent=2)
        document = _document(text, "problem.json")

        assert document.lines["channel"] == 3

    @staticmethod
    def test_error_location() -> None:
        """Errors name the field and the line of its nearest indexed ancestor."""

        document = _document(PROBLEM_YAML)

        located = document.error("bad entry", "state.density[1][0]")
        assert str(located) == "line 7, state.density[1][0]: bad entry"
        assert located.line == 7

        fallback = document.error("missing", "channel.choi")
        assert fallback.line == 4
        assert fallback.field == "channel.choi"

    @staticmethod
    @pytest.mark.parametrize(
        "text, source, message",
        [
            ('{\n  "kind": \n}', "problem.json", "Invalid JSON"),
            ("kind: [matrix\n", "problem.yaml", "Invalid YAML"),
            ("- 1\n- 2\n", "problem.yaml", "mapping at the top level"),
        ],
    )
    def test_invalid(text: str, source: str, message: str) -> None:
        """Syntax errors carry a line number."""

        with pytest.raises(ProblemFileError, match=message) as err:
            _document(text, source)
        assert err.value.line is not None

    @staticmethod
    def test_not_utf8() -> None:
        """Binary content is refused."""

        with pytest.raises(ProblemFileError, match="not UTF-8"):
            parse_document(b"\xff\xfe\x00", "binary.yaml")

    @staticmethod
    def test_missing_file(tmp_path: pathlib.Path) -> None:
        """Unreadable files are a problem file error."""

        with pytest.raises(ProblemFileError, match="Cannot read"):
            read_document(tmp_path / "absent.yaml")


class TestAsProblem:
    """
    The keys shared by every problem file.
    """

    @staticmethod
    def test_valid() -> None:
        """Kind, name and tolerances are resolved."""

        text = PROBLEM_YAML + "tolerances:\n  eq_tol: 1e-6\n"
        problem = as_problem(_document(text))

        assert problem.kind is ProblemKind.matrix
        assert problem.name == "identity"
        assert problem.description == ""
        assert problem.tolerances.eq_tol == 1e-6
        assert problem.tolerances.rank_tol == 1e-9

    @staticmethod
    @pytest.mark.parametrize(
        "text, message, field",
        [
            ("kind: matrix\nchannel: {}\n", r"missing some keys: \['state'\]", ""),
            (PROBLEM_YAML + "extra: 1\n", r"unknown keys: \['extra'\]", ""),
            (
                PROBLEM_YAML.replace("kind: matrix", "kind: banana"),
                "Problem kind 'banana' not valid",
                "kind",
            ),
            (PROBLEM_YAML + "tolerances:\n  eq_tol: 0.5\n", "must satisfy", "tolerances"),
            (
                PROBLEM_YAML + "tolerances:\n  tol: 1e-6\n",
                "Unknown tolerance keys",
                "tolerances",
            ),
            (PROBLEM_YAML + "tolerances: 5\n", "must be a mapping", "tolerances"),
            (PROBLEM_YAML.replace("name: identity", "name: [1]"), "must be a string", "name"),
        ],
    )
    def test_invalid(text: str, message: str, field: str) -> None:
        """Each defect is reported at its field."""

        with pytest.raises(ProblemFileError, match=message) as err:
            as_problem(_document(text))
        assert err.value.field == field

    @staticmethod
    def test_load_problem(tmp_path: pathlib.Path) -> None:
        """Problems are read from disk."""

        path = tmp_path / "identity.yaml"
        path.write_text(PROBLEM_YAML, encoding="utf-8")

        problem = load_problem(path)
        assert problem.source == str(path)
        assert problem.kind is ProblemKind.matrix


class TestPayloadReader:
    """
    Typed access to payload values.
    """

    @staticmethod
    def test_matrix_entries() -> None:
        """Numbers, numeric strings and [re, im] pairs."""

        reader = _channel('{m: [[1, [0, 1]], ["0.5", 2]]}')

        assert np.allclose(reader.matrix("m"), [[1, 1j], [0.5, 2]])

    @staticmethod
    @pytest.mark.parametrize(
        "payload, message, field",
        [
            ("{m: [[1, 2], [3]]}", "Row has 1 entries, expected 2", "channel.m[1]"),
            ("{m: [[[1, 2, 3]]]}", "pairs", "channel.m[0][0]"),
            ("{m: [[abc]]}", "Expected a number", "channel.m[0][0]"),
            ("{m: [[true]]}", "Expected a number", "channel.m[0][0]"),
            ("{m: [[.inf]]}", "finite", "channel.m[0][0]"),
            ("{m: []}", "non-empty list", "channel.m"),
            ("{m: 3}", "non-empty list", "channel.m"),
        ],
    )
    def test_bad_matrices(payload: str, message: str, field: str) -> None:
        """Each defect is reported at the offending entry."""

        with pytest.raises(ProblemFileError, match=message) as err:
            _channel(payload).matrix("m")
        assert err.value.field == field

    @staticmethod
    @pytest.mark.parametrize(
        "payload, message",
        [
            ("{n: [2, 0]}", "positive sizes"),
            ("{n: [2.5]}", "non-negative integer"),
            ("{n: [-1]}", "non-negative integer"),
            ("{n: [true]}", "boolean"),
            ("{n: [two]}", "Expected an integer"),
            ("{n: [.inf]}", "Expected an integer"),
            ("{n: [.nan]}", "Expected an integer"),
        ],
    )
    def test_bad_sizes(payload: str, message: str) -> None:
        """Sizes are positive integers."""

        with pytest.raises(ProblemFileError, match=message):
            _channel(payload).integers("n")

    @staticmethod
    def test_infinite_size_in_json() -> None:
        """JSON Infinity is not a size."""

        document = _document('{"channel": {"n": [Infinity]}}', "problem.json")

        with pytest.raises(ProblemFileError, match="Expected an integer") as err:
            document.reader("channel").integers("n")
        assert err.value.field == "channel.n[0]"

    @staticmethod
    def test_empty_matrix_list() -> None:
        """Empty lists are refused unless the caller allows them."""

        reader = _channel("{kraus: []}")

        assert not reader.matrices("kraus", allow_empty=True)
        with pytest.raises(ProblemFileError, match="must be a non-empty list"):
            reader.matrices("kraus")

    @staticmethod
    def test_vector() -> None:
        """Vectors are real."""

        assert np.allclose(_channel("{p: [0.25, '0.75']}").vector("p"), [0.25, 0.75])

        with pytest.raises(ProblemFileError, match="Expected a real number"):
            _channel("{p: [[0, 1]]}").vector("p")

    @staticmethod
    def test_keys() -> None:
        """Unknown and missing keys are named."""

        reader = _channel("{kraus: [[[1]]], choi: 1}")

        unexpected = r"Unexpected keys in 'channel': \['choi'\]"
        with pytest.raises(ProblemFileError, match=unexpected):
            reader.require_only("kraus")
        with pytest.raises(ProblemFileError, match="Missing required key 'effects'"):
            reader.matrices("effects")

        assert "choi" in reader

    @staticmethod
    def test_children() -> None:
        """Lists of mappings get one reader each, with indexed paths."""

        reader = _channel("{entries: [{a: 1}, {a: 2}]}")

        children = list(reader.children("entries"))
        paths = [child.path for child in children]
        assert paths == ["channel.entries[0]", "channel.entries[1]"]
        assert [child.integer("a") for child in children] == [1, 2]

    @staticmethod
    def test_not_a_mapping() -> None:
        """Readers need mappings."""

        with pytest.raises(ProblemFileError, match="'kind' must be a mapping"):
            _document(PROBLEM_YAML).reader("kind")


class TestLoadCandidate:
    """
    Candidate inverses, bare or inside a report.
    """

    @staticmethod
    def test_bare(tmp_path: pathlib.Path) -> None:
        """A document with an inverse payload."""

        path = tmp_path / "candidate.json"
        candidate = {"inverse": {"kraus": [[[1, 0], [0, 1]]]}}
        path.write_text(json.dumps(candidate), encoding="utf-8")

        reader = load_candidate(path)
        assert reader.path == "inverse"
        assert reader.matrices("kraus")[0].shape == (2, 2)

    @staticmethod
    def test_failed_report(tmp_path: pathlib.Path) -> None:
        """A report without an inverse says why."""

        path = tmp_path / "report.json"
        path.write_text(json.dumps({"status": "FailsSelfAdjoint"}), encoding="utf-8")

        missing = r"no inverse \(report status FailsSelfAdjoint\)"
        with pytest.raises(ProblemFileError, match=missing):
            load_candidate(path)
