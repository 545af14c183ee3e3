"""Plan reapplication across worlds, with a sound fast-reject screen.

Worlds are planned in descending belief order.  Before planning a world from
scratch, every existing plan is tried against it: a cheap screen first (the
domain's table of predicate/operator pairings known to be incongruous), then
a rigorous step-by-step reapplication.  A fully reapplicable plan simply
adopts the world; the best partially applicable plan donates its validated
prefix and planning resumes from the failure point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .domain import DomainSpec, apply_primitive, eval_probability
from .errors import ValidationError
from .evidence import MassDistribution
from .planner import (
    LinearPlan,
    PlanOutcome,
    PlanStep,
    plan,
    step_is_redundant,
)
from .state import Fact, Literal, PState, match_atom, substitute

MAY_WORK, CANNOT_WORK = "may_work", "cannot_work"


@dataclass(frozen=True)
class ReapplyResult:
    """Outcome of replaying one plan against one world.

    ``prefix_len`` counts validated steps (skipped redundant steps count as
    validated); ``prefix_ef`` is the expected fulfilment of the last
    validated step recomputed in the new world, used by the partial-choice
    policy.
    """

    kind: str  # full | partial | fail
    prefix_len: int
    failing_step: Optional[int] = None
    unmet: tuple[Literal, ...] = ()
    prefix_ef: float = 1.0
    skipped: tuple[int, ...] = ()


def reapply(linear: LinearPlan, ps: PState, domain: DomainSpec,
            meter=None) -> ReapplyResult:
    """Replay a plan's operators in order against a new world.

    Redundant steps are skipped without failure.  The plan fully reapplies
    when every other step's preconditions hold at its position and the goal
    operator's postconditions hold at the end.
    """
    current = ps
    skipped: list[int] = []
    prefix_ef = 1.0
    total = len(linear.steps)
    for i, step in enumerate(linear.steps, start=1):
        op = domain.operator(step.operator)
        env = dict(step.binding)
        if step_is_redundant(step, op, current, domain, meter=meter):
            skipped.append(i)
            continue
        facts = current.level(op.level).facts
        unmet: list[Literal] = []
        for lit in op.necessary + op.satisfiable:
            atom = substitute(lit.atom, env)
            if meter is not None:
                meter.tick()
            if not atom.is_ground or (atom in facts) != lit.positive:
                unmet.append(Literal(atom, lit.positive))
        if unmet:
            prefix = i - 1
            kind = "partial" if 0 < prefix < total else "fail"
            return ReapplyResult(kind, prefix, failing_step=i,
                                 unmet=tuple(unmet), prefix_ef=prefix_ef,
                                 skipped=tuple(skipped))
        prefix_ef = step.fulfilment * eval_probability(
            op.probability, current.level(op.level), meter=meter)
        if op.is_primitive:
            current = apply_primitive(op, current, domain, binding=env, meter=meter)
    goal = domain.goal_operator
    goal_facts = current.level(goal.level).facts
    missing = tuple(Literal(p) for p in goal.post if p not in goal_facts)
    if missing:
        return ReapplyResult("fail", total, failing_step=total + 1,
                             unmet=missing, prefix_ef=prefix_ef,
                             skipped=tuple(skipped))
    return ReapplyResult("full", total, prefix_ef=prefix_ef,
                         skipped=tuple(skipped))


def heuristic_screen(linear: LinearPlan, ps: PState, incompat,
                     meter=None) -> str:
    """Fast incongruity test: can this plan conceivably work for this world?

    A positive table pattern fires when some fact of the initial world
    matches it; a negated pattern fires when none does.  Any fired pairing
    with an operator appearing in the plan means the plan cannot fully
    reapply.  The screen only ever rules plans out; passing it guarantees
    nothing.
    """
    if not incompat:
        return MAY_WORK
    by_op: dict[str, list] = {}
    for entry in incompat:
        by_op.setdefault(entry.operator, []).append(entry)
    facts_by_name: dict[str, list[Fact]] = {}
    for desc in ps.levels:
        if desc is None:
            continue
        for fact in desc.facts:
            facts_by_name.setdefault(fact.name, []).append(fact)
    for step in linear.steps:
        if meter is not None:
            meter.tick()
        for entry in by_op.get(step.operator, ()):
            pattern = entry.literal.atom
            hit = False
            for fact in facts_by_name.get(pattern.name, ()):
                if meter is not None:
                    meter.tick()
                if match_atom(pattern, fact, {}) is not None:
                    hit = True
                    break
            if hit == entry.literal.positive:
                return CANNOT_WORK
    return MAY_WORK


def choose_partial(candidates: Sequence[tuple[LinearPlan, ReapplyResult]],
                   policy: str, joint: MassDistribution,
                   ) -> Optional[tuple[LinearPlan, ReapplyResult]]:
    """Pick the partial plan to resume from, per the configured policy.

    ``max-expected-fulfilment`` compares the recomputed expected fulfilment
    at the end of each validated prefix; ``max-support`` compares the belief
    mass committed to each plan.  Ties prefer the longer prefix, then the
    smaller plan id.  An empty candidate list means plan from scratch.
    """
    if not candidates:
        return None
    for _, res in candidates:
        if res.kind != "partial":
            raise ValidationError("choose_partial expects partial reapply results")
    from .superplan import plan_mass

    def score(item: tuple[LinearPlan, ReapplyResult]):
        linear, res = item
        if policy == "max-support":
            primary = plan_mass(linear, joint)
        else:
            primary = res.prefix_ef
        return (-primary, -res.prefix_len, linear.id)

    return min(candidates, key=score)


@dataclass
class ReuseStats:
    screens: int = 0
    screened_out: int = 0
    reapply_attempts: int = 0
    full_matches: int = 0
    partial_resumes: int = 0
    scratch_plans: int = 0


@dataclass(frozen=True)
class PlanAllResult:
    plans: tuple[LinearPlan, ...]
    outcomes: tuple[PlanOutcome, ...]
    failures: tuple[tuple[str, str], ...]
    stats: ReuseStats = field(default_factory=ReuseStats)

    @property
    def succeeded(self) -> bool:
        return not self.failures


def plan_all(pstates: Sequence[PState], domain: DomainSpec,
             joint: MassDistribution, *, use_heuristic: bool = True,
             meter=None) -> PlanAllResult:
    """Cover every world, reusing existing plans wherever they fit.

    ``pstates`` must already be in descending belief order.  For each world:
    screen the library (when the heuristic is on), adopt the first fully
    reapplicable plan, otherwise resume from the best partial prefix,
    otherwise plan from scratch.
    """
    plans: list[LinearPlan] = []
    outcomes: list[PlanOutcome] = []
    failures: list[tuple[str, str]] = []
    stats = ReuseStats()
    policy = domain.config.partial_plan_policy

    for ps in pstates:
        candidates: list[tuple[LinearPlan, ReapplyResult]] = []
        adopted = False
        for idx, linear in enumerate(plans):
            if use_heuristic:
                stats.screens += 1
                if heuristic_screen(linear, ps, domain.incompat,
                                    meter=meter) == CANNOT_WORK:
                    stats.screened_out += 1
                    continue
            stats.reapply_attempts += 1
            result = reapply(linear, ps, domain, meter=meter)
            if result.kind == "full":
                plans[idx] = plans[idx].add_world(ps.id)
                stats.full_matches += 1
                adopted = True
                break
            plans[idx] = plans[idx].note_prefix(ps.id, result.prefix_len)
            if result.kind == "partial":
                candidates.append((linear, result))
        if adopted:
            continue
        plan_id = f"p{len(plans) + 1:02d}"
        best = choose_partial(candidates, policy, joint)
        if best is not None:
            donor, result = best
            forced = donor.steps[:result.prefix_len]
            outcome = plan(ps, domain, plan_id=plan_id, forced=forced, meter=meter)
            stats.partial_resumes += 1
        else:
            outcome = plan(ps, domain, plan_id=plan_id, meter=meter)
            stats.scratch_plans += 1
        if outcome.succeeded:
            plans.append(outcome.plan)
            outcomes.append(outcome)
        else:
            failures.append((ps.id, outcome.failure or "planning failed"))
    return PlanAllResult(tuple(plans), tuple(outcomes), tuple(failures), stats)
