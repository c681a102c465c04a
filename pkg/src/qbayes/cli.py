#!/usr/bin/env python3

# SPDX-FileCopyrightText: 2023 - 2024 QBayes Developers
#
# SPDX-License-Identifier: BSD-2-Clause

"""
The `qbayes` command line interface.

    qbayes invert PROBLEM [--out F] [--format json|text] [--tol-eq X] [--tol-...]
    qbayes check PROBLEM CANDIDATE [--out F] [--format json|text] [--tol-...]
    qbayes examples [NAME] [--dir D]

Exit codes: 0 the inverse exists (or the candidate passes), 1 invalid input,
2 the corner is not self-adjoint, 3 the corner cannot be completed,
4 the candidate fails a certificate.
"""

from __future__ import annotations

from collections.abc import Iterator
from typing import Any, Optional

import contextlib
import logging
import pathlib
import sys

import click

import qbayes.handlers  # noqa: F401  # pylint: disable=unused-import
from qbayes import __version__, catalog
from qbayes.core import QBayesError, Tolerances
from qbayes.loader import ProblemDocument, load_candidate, load_problem
from qbayes.registry import ProblemRegistry
from qbayes.report import check_report, invert_report, render

CHECK_FAILED_EXIT = 4

_logger = logging.getLogger(__name__)

_PATH = click.Path(dir_okay=False, path_type=pathlib.Path)


def configure_logging(verbosity: int) -> None:
    """WARNING by default, INFO with -v, DEBUG with -vv; always to standard error."""

    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    logging.getLogger("qbayes").setLevel(level)


@contextlib.contextmanager
def _input_errors() -> Iterator[None]:
    try:
        yield
    except QBayesError as err:
        _logger.debug("Input rejected", exc_info=True)
        raise click.ClickException(str(err)) from err


def _tolerances(
    document: ProblemDocument,
    tol_eq: Optional[float],
    tol_rank: Optional[float],
    tol_psd: Optional[float],
) -> Tolerances:
    try:
        return document.tolerances.override(eq_tol=tol_eq, rank_tol=tol_rank, psd_tol=tol_psd)
    except ValueError as err:
        raise click.UsageError(str(err)) from err


def _emit(text: str, out: Optional[pathlib.Path]) -> None:
    if out is None:
        click.echo(text, nl=False)
        return

    try:
        out.write_text(text, encoding="utf-8")
    except OSError as err:
        raise click.ClickException(f"Cannot write report to {out}: {err.strerror}") from err


def _report_options(func: Any) -> Any:
    options = [
        click.option(
            "--out", type=_PATH, default=None, help="Write the report to this file."
        ),
        click.option(
            "--format",
            "fmt",
            type=click.Choice(["json", "text"]),
            default="json",
            show_default=True,
            help="Report rendering.",
        ),
        click.option("--tol-eq", type=float, default=None, help="Override eq_tol."),
        click.option("--tol-rank", type=float, default=None, help="Override rank_tol."),
        click.option("--tol-psd", type=float, default=None, help="Override psd_tol."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.option(
    "-v", "--verbose", count=True, help="More logging on standard error (-vv for debug)."
)
@click.version_option(__version__, prog_name="qbayes")
def cli(verbose: int) -> None:
    """Decide, construct and verify Bayesian inverses of quantum channels."""

    configure_logging(verbose)


@cli.command()
@click.argument("problem", type=_PATH)
@_report_options
@click.pass_context
def invert(
    ctx: click.Context,
    problem: pathlib.Path,
    out: Optional[pathlib.Path],
    fmt: str,
    tol_eq: Optional[float],
    tol_rank: Optional[float],
    tol_psd: Optional[float],
) -> None:
    """Invert the channel of PROBLEM with respect to its prior."""

    with _input_errors():
        document = load_problem(problem)
        tol = _tolerances(document, tol_eq, tol_rank, tol_psd)

        handler = ProblemRegistry.handler(document.kind)
        instance = handler.parse(document, tol)
        outcome = handler.invert(instance)

        payload = None
        if outcome.exists and outcome.inverse is not None:
            payload = handler.encode_inverse(outcome.inverse)

    _logger.info("%s: %s (witness %.6g)", problem, outcome.status.value, outcome.witness)
    _emit(render(invert_report(document, outcome, payload, tol), fmt), out)
    ctx.exit(outcome.status.exit_code)


@cli.command()
@click.argument("problem", type=_PATH)
@click.argument("candidate", type=_PATH)
@_report_options
@click.pass_context
def check(
    ctx: click.Context,
    problem: pathlib.Path,
    candidate: pathlib.Path,
    out: Optional[pathlib.Path],
    fmt: str,
    tol_eq: Optional[float],
    tol_rank: Optional[float],
    tol_psd: Optional[float],
) -> None:
    """
    Certify CANDIDATE as a Bayesian inverse for PROBLEM.

    CANDIDATE is a report written by `qbayes invert`, or any document with an
    `inverse` key.
    """

    with _input_errors():
        document = load_problem(problem)
        tol = _tolerances(document, tol_eq, tol_rank, tol_psd)

        handler = ProblemRegistry.handler(document.kind)
        instance = handler.parse(document, tol)

        reader = load_candidate(candidate)
        inverse = handler.decode_inverse(reader, instance)
        result = handler.check(instance, inverse)

    _logger.info("%s against %s: passed=%s", candidate, problem, result.passed)
    _emit(render(check_report(document, result, reader.document.digest, tol), fmt), out)
    ctx.exit(0 if result.passed else CHECK_FAILED_EXIT)


@cli.command()
@click.argument("name", required=False)
@click.option(
    "--dir",
    "directory",
    type=click.Path(file_okay=False, path_type=pathlib.Path),
    default=pathlib.Path("."),
    help="Directory to write the example into.",
)
def examples(name: Optional[str], directory: pathlib.Path) -> None:
    """List the bundled examples, or write NAME as NAME.json."""

    for module in catalog.load_plugins():
        _logger.debug("Loaded example catalog %s", module)

    if name is None:
        width = max(len(entry.name) for entry in catalog.examples())
        for entry in catalog.examples():
            click.echo(f"{entry.name:<{width}}  {entry.description}")
        return

    with _input_errors():
        try:
            target = catalog.write_example(name, directory)
        except OSError as err:
            raise click.ClickException(f"Cannot write {name} to {directory}: {err}") from err

    click.echo(str(target))


def run() -> None:
    """Console entry point; maps usage and input errors to exit code 1."""

    try:
        code = cli.main(standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        code = 1
    except click.ClickException as err:
        err.show()
        code = 1

    sys.exit(code if isinstance(code, int) else 0)


__all__ = ["cli", "run", "configure_logging", "CHECK_FAILED_EXIT"]
