"""End-to-end runs: evidence to plans to super-plan, plus text renderings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .domain import DomainSpec
from .errors import ValidationError
from .evidence import MassDistribution
from .planner import CplanRun, PlanOutcome, cplan_all
from .reuse import PlanAllResult, plan_all
from .superplan import SuperPlan, insert_ka, merge, render
from .worlds import WorldModel, build_world_model


@dataclass(frozen=True)
class UplanResult:
    world_model: WorldModel
    planning: PlanAllResult
    superplan: Optional[SuperPlan]

    @property
    def failures(self) -> tuple[tuple[str, str], ...]:
        return self.planning.failures


@dataclass(frozen=True)
class CplanResult:
    world_model: WorldModel
    runs: tuple[CplanRun, ...]

    @property
    def failures(self) -> tuple[tuple[str, str], ...]:
        return tuple((run.pstate.id, run.outcome.failure or "planning failed")
                     for run in self.runs if not run.outcome.succeeded)

    @property
    def plans(self):
        return tuple(run.outcome.plan for run in self.runs
                     if run.outcome.succeeded)


def run_uplan(domain: DomainSpec,
              evidence: Optional[Sequence[MassDistribution]] = None, *,
              use_heuristic: bool = True, meter=None) -> UplanResult:
    """Worlds, reuse-driven planning and the merged super-plan in one call."""
    wm = build_world_model(domain, evidence, meter=meter)
    order = wm.planning_order()
    if not order:
        raise ValidationError("no world passes the belief thresholds")
    planning = plan_all(order, domain, wm.joint, use_heuristic=use_heuristic,
                        meter=meter)
    superplan = None
    if planning.plans:
        superplan = insert_ka(merge(planning.plans, wm.joint), domain)
    return UplanResult(wm, planning, superplan)


def run_cplan(domain: DomainSpec,
              evidence: Optional[Sequence[MassDistribution]] = None, *,
              meter=None) -> CplanResult:
    """The control configuration: one independent plan per world."""
    wm = build_world_model(domain, evidence, meter=meter)
    order = wm.planning_order()
    if not order:
        raise ValidationError("no world passes the belief thresholds")
    return CplanResult(wm, tuple(cplan_all(order, domain, meter=meter)))


def _failure_lines(failures) -> list[str]:
    lines = []
    for pid, reason in failures:
        lines.append(f"failure {pid}: {reason}")
    return lines


def render_uplan(result: UplanResult, domain: DomainSpec) -> str:
    """Deterministic text output for a merged run, failures annotated."""
    lines: list[str] = []
    if result.superplan is not None:
        lines.append(render(result.superplan,
                            header=f"super-plan for '{domain.name}'").rstrip("\n"))
        lines.append("")
        for p in result.superplan.plans:
            worlds = ",".join(sorted(p.works_for))
            lines.append(f"plan {p.id} source={p.source_pstate} worlds={worlds}")
    else:
        lines.append(f"super-plan for '{domain.name}': no plans")
    lines.extend(_failure_lines(result.failures))
    return "\n".join(lines) + "\n"


def render_cplan(result: CplanResult, domain: DomainSpec) -> str:
    """Deterministic text output for a control run: one plan per world."""
    ok = [run for run in result.runs if run.outcome.succeeded]
    lines = [f"plans for '{domain.name}': {len(result.runs)} worlds, "
             f"{len(ok)} plans"]
    for run in ok:
        plan = run.outcome.plan
        lines.append(f"plan {plan.id} world={run.pstate.id}")
        for i, step in enumerate(plan.steps, start=1):
            lines.append(f"  {i}. {step.render()}")
    lines.extend(_failure_lines(result.failures))
    return "\n".join(lines) + "\n"


def render_traces(outcomes: Sequence[tuple[str, PlanOutcome]]) -> str:
    """Tab-separated planner events for one or more runs.

    Columns: event, node id (prefixed with the run id), operator, level,
    expected fulfilment, logical timestamp (renumbered across runs).
    """
    lines = []
    clock = 0
    for run_id, outcome in outcomes:
        for event in outcome.events:
            clock += 1
            lines.append(f"{event.event}\t{run_id}:{event.node_id}\t"
                         f"{event.operator}\t{event.level}\t"
                         f"{event.ef:.6f}\t{clock}")
    return "".join(line + "\n" for line in lines)


def uplan_traces(result: UplanResult) -> list[tuple[str, PlanOutcome]]:
    return [(o.plan.id if o.plan else f"f{i}", o)
            for i, o in enumerate(result.planning.outcomes)]


def cplan_traces(result: CplanResult) -> list[tuple[str, PlanOutcome]]:
    return [(run.outcome.plan.id if run.outcome.plan else run.pstate.id,
             run.outcome) for run in result.runs]
