"""Command-line interface: validate domains, plan, and benchmark.

Exit codes: 0 success, 1 validation error, 2 planning/generation failure,
3 I/O error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .bench import CPU, DETERMINISTIC, run_benchmark, write_csv
from .errors import GenerationError, UplanError, ValidationError
from .loader import fixture_path, load_domain
from .pipeline import (
    cplan_traces,
    render_cplan,
    render_traces,
    render_uplan,
    run_cplan,
    run_uplan,
    uplan_traces,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PLANNING = 2
EXIT_IO = 3


def _load(path: str):
    try:
        return load_domain(path)
    except ValidationError as exc:
        for line in exc.errors:
            click.echo(f"{path}: {line}", err=True)
        sys.exit(EXIT_VALIDATION)
    except OSError as exc:
        click.echo(f"cannot read {path}: {exc}", err=True)
        sys.exit(EXIT_IO)


def _write(text: str, out: str) -> None:
    try:
        if out == "-":
            click.echo(text, nl=False)
        else:
            Path(out).write_text(text)
    except OSError as exc:
        click.echo(f"cannot write {out}: {exc}", err=True)
        sys.exit(EXIT_IO)


@click.group()
def main() -> None:
    """Plan under uncertain and incomplete information."""


@main.command()
@click.argument("domain_file", type=click.Path())
def validate(domain_file: str) -> None:
    """Load a domain document and report every validation problem."""
    spec = _load(domain_file)
    click.echo(f"{domain_file}: ok ({spec.config.n_levels} levels, "
               f"{len(spec.frames)} frames, {len(spec.operators)} operators)")


@main.command(name="plan")
@click.argument("domain_file", type=click.Path())
@click.option("--mode", type=click.Choice(["uplan", "cplan"]), default="uplan",
              show_default=True, help="Merged super-plan or one plan per world.")
@click.option("--no-heuristic", is_flag=True,
              help="Disable the reapplication screening heuristic.")
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="Write the planner event trace to this file.")
@click.option("--out", "out_path", type=click.Path(allow_dash=True), default="-",
              show_default=True, help="Output file ('-' for stdout).")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Scenario-generation seed; planning itself ignores it.")
def plan_cmd(domain_file: str, mode: str, no_heuristic: bool,
             trace_path: str | None, out_path: str, seed: int) -> None:
    """Plan for every plausible world and emit the result."""
    del seed  # only synthetic scenario generation is seeded; planning is not
    spec = _load(domain_file)
    if spec.evidence is None:
        click.echo(f"{domain_file}: domain has no evidence section", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        if mode == "cplan":
            result = run_cplan(spec)
            text = render_cplan(result, spec)
            traces = cplan_traces(result)
        else:
            result = run_uplan(spec, use_heuristic=not no_heuristic)
            text = render_uplan(result, spec)
            traces = uplan_traces(result)
    except UplanError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_PLANNING)
    _write(text, out_path)
    if trace_path is not None:
        _write(render_traces(traces), trace_path)
    if result.failures:
        for pid, reason in result.failures:
            click.echo(f"planning failed for {pid}: {reason}", err=True)
        sys.exit(EXIT_PLANNING)


@main.command()
@click.option("--domain", "domain_file", type=click.Path(), default=None,
              help="Domain to benchmark (default: the bundled engagement "
                   "fixture, or the worst-case fixture with --worst-case).")
@click.option("--counts", default="2,4,6,8,10,12", show_default=True,
              help="Comma-separated world counts, one benchmark row each.")
@click.option("--overlap", type=float, default=0.5, show_default=True,
              help="Strategy overlap factor in [0, 1].")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(allow_dash=True), default="-",
              show_default=True, help="CSV output ('-' for stdout).")
@click.option("--worst-case", is_flag=True,
              help="Use the worst-case fixture (one unique plan per world).")
@click.option("--timer", type=click.Choice([DETERMINISTIC, CPU]),
              default=DETERMINISTIC, show_default=True,
              help="Deterministic work units or process CPU milliseconds.")
def bench(domain_file: str | None, counts: str, overlap: float, seed: int,
          out_path: str, worst_case: bool, timer: str) -> None:
    """Compare plan counts and planning effort across world counts."""
    if domain_file is None:
        domain_file = str(fixture_path("worstcase" if worst_case else "aircombat"))
    spec = _load(domain_file)
    try:
        count_list = [int(c) for c in counts.split(",") if c.strip()]
    except ValueError:
        click.echo(f"invalid counts {counts!r}", err=True)
        sys.exit(EXIT_VALIDATION)
    if not count_list:
        click.echo("no counts given", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        rows = run_benchmark(spec, count_list, overlap, seed, timer=timer)
    except GenerationError as exc:
        click.echo(f"scenario generation failed: {exc}", err=True)
        sys.exit(EXIT_PLANNING)
    except UplanError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_PLANNING)
    import io

    buffer = io.StringIO()
    write_csv(rows, buffer)
    _write(buffer.getvalue(), out_path)


if __name__ == "__main__":
    main()
