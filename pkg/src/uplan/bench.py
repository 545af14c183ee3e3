"""Benchmark harness: plan counts and planning effort across world counts.

Each row instantiates one scenario and runs three configurations over it:
the control planner (one independent plan per world), the reusing planner
without the screening heuristic, and the reusing planner with it.  The
default time source is the deterministic work meter (identical inputs give
identical numbers); ``timer='cpu'`` reports process CPU milliseconds
instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TextIO

from .domain import DomainSpec
from .meter import CpuTimer, Meter
from .pipeline import run_cplan, run_uplan
from .scenarios import synthesize

CSV_HEADER = ("pstate_count,uplan_plans,cplan_plans,"
              "uplan_time_ms,uplan_heuristic_time_ms,cplan_time_ms")

DETERMINISTIC, CPU = "deterministic", "cpu"


@dataclass(frozen=True)
class BenchmarkRow:
    pstate_count: int
    uplan_plans: int
    cplan_plans: int
    uplan_time_ms: int
    uplan_heuristic_time_ms: int
    cplan_time_ms: int

    def csv(self) -> str:
        return (f"{self.pstate_count},{self.uplan_plans},{self.cplan_plans},"
                f"{self.uplan_time_ms},{self.uplan_heuristic_time_ms},"
                f"{self.cplan_time_ms}")


@dataclass(frozen=True)
class RowDiagnostics:
    threshold: float
    plans_identical: bool
    reapply_attempts_plain: int
    reapply_attempts_heuristic: int
    screened_out: int
    failures: int


def _measured(fn, timer: str) -> tuple[object, int]:
    if timer == CPU:
        clock = CpuTimer()
        clock.start()
        result = fn(None)
        clock.stop()
        return result, clock.milliseconds
    meter = Meter()
    result = fn(meter)
    return result, meter.count


def run_benchmark(domain: DomainSpec, counts: Sequence[int], overlap: float,
                  seed: int, timer: str = DETERMINISTIC,
                  ) -> list[tuple[BenchmarkRow, RowDiagnostics]]:
    """One row per requested world count."""
    if timer not in (DETERMINISTIC, CPU):
        raise ValueError(f"unknown timer {timer!r}")
    rows: list[tuple[BenchmarkRow, RowDiagnostics]] = []
    for count in counts:
        scenario = synthesize(domain, count, overlap, seed)
        instance = scenario.instantiate()

        cplan, cplan_time = _measured(
            lambda m: run_cplan(instance, meter=m), timer)
        plain, plain_time = _measured(
            lambda m: run_uplan(instance, use_heuristic=False, meter=m), timer)
        heuristic, heuristic_time = _measured(
            lambda m: run_uplan(instance, use_heuristic=True, meter=m), timer)

        plain_keys = sorted(p.step_keys() for p in plain.planning.plans)
        heur_keys = sorted(p.step_keys() for p in heuristic.planning.plans)
        row = BenchmarkRow(
            pstate_count=len(cplan.runs),
            uplan_plans=len(heuristic.planning.plans),
            cplan_plans=len(cplan.plans),
            uplan_time_ms=plain_time,
            uplan_heuristic_time_ms=heuristic_time,
            cplan_time_ms=cplan_time,
        )
        diag = RowDiagnostics(
            threshold=scenario.threshold,
            plans_identical=plain_keys == heur_keys,
            reapply_attempts_plain=plain.planning.stats.reapply_attempts,
            reapply_attempts_heuristic=heuristic.planning.stats.reapply_attempts,
            screened_out=heuristic.planning.stats.screened_out,
            failures=len(cplan.failures) + len(plain.failures)
            + len(heuristic.failures),
        )
        rows.append((row, diag))
    return rows


def write_csv(rows: Sequence[tuple[BenchmarkRow, RowDiagnostics]],
              stream: TextIO) -> None:
    stream.write(CSV_HEADER + "\n")
    for row, _ in rows:
        stream.write(row.csv() + "\n")


def parse_csv(text: str) -> list[BenchmarkRow]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("unexpected CSV header")
    out = []
    for line in lines[1:]:
        values = [int(v) for v in line.split(",")]
        out.append(BenchmarkRow(*values))
    return out
