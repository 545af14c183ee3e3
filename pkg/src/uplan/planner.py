"""Hierarchical plan construction guided by expected fulfilment.

The goal operator becomes the head of a strategy tree.  Expanding a node
exposes its plot one step at a time; alternatives within a step compete on
expected fulfilment (fulfilment of the arc times the operator's success
probability in the current world).  Necessary preconditions gate selection;
unmet satisfiable preconditions are pursued with helper operators of equal
or lower abstraction.  A per-level-gap offset review can reopen an earlier
choice when the expanding detail falls too far below it.  Detail-level
operators change the active world; the finished plan is the pre-order
sequence of achieved operators.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .domain import (
    DomainSpec,
    PlotEntry,
    ReductionOperator,
    StateChange,
    apply_primitive,
    eval_probability,
    necessary_binding,
)
from .errors import PlanningAbort, ValidationError
from .state import Binding, LevelDescription, Literal, PState, first_binding, substitute

OPEN, EXPANDED, REJECTED, ACHIEVED = "open", "expanded", "rejected", "achieved"


def expected_fulfilment(entry: PlotEntry, op: ReductionOperator,
                        state: LevelDescription, meter=None) -> float:
    """Fulfilment of the plot arc times the operator's success probability."""
    return entry.fulfilment * eval_probability(op.probability, state, meter=meter)


@dataclass(frozen=True)
class PlanStep:
    """One operator application in a linear plan.

    ``binding`` grounds the operator's variables as matched at construction
    time; ``change`` records the detail-level delta that actually resulted
    (direct effects plus causal side effects), None above the detail level.
    """

    operator: str
    level: int
    binding: tuple[tuple[str, str], ...] = ()
    change: Optional[StateChange] = None
    fulfilment: float = 1.0
    helper: bool = False

    def key(self) -> tuple[str, tuple[tuple[str, str], ...]]:
        """Identity of the action for plan comparison and merging."""
        return (self.operator, self.binding)

    def render(self) -> str:
        text = self.operator
        if self.binding:
            text += "(" + ",".join(f"{v.lstrip('?')}={c}" for v, c in self.binding) + ")"
        return f"{text} [L{self.level}]"


@dataclass(frozen=True)
class LinearPlan:
    """An operator sequence that achieves the goal from its source world."""

    id: str
    steps: tuple[PlanStep, ...]
    source_pstate: str
    works_for: frozenset[str]
    per_pstate_prefix: Mapping[str, int] = field(default_factory=dict)

    def step_keys(self) -> tuple:
        return tuple(s.key() for s in self.steps)

    def add_world(self, pstate_id: str) -> "LinearPlan":
        prefixes = dict(self.per_pstate_prefix)
        prefixes[pstate_id] = len(self.steps)
        return replace(self, works_for=self.works_for | {pstate_id},
                       per_pstate_prefix=prefixes)

    def note_prefix(self, pstate_id: str, length: int) -> "LinearPlan":
        prefixes = dict(self.per_pstate_prefix)
        prefixes[pstate_id] = length
        return replace(self, per_pstate_prefix=prefixes)


class StrategyNode:
    """A subgoal in the strategy tree (mutable while planning)."""

    __slots__ = ("id", "op", "level", "parent", "children", "status",
                 "expected_fulfilment", "fulfilment", "pstate_snapshot",
                 "helper", "step_index", "deprioritized", "revise_consumed")

    def __init__(self, id: str, op: ReductionOperator, parent, ef: float,
                 fulfilment: float, snapshot: PState, helper: bool = False,
                 step_index: Optional[int] = None) -> None:
        self.id = id
        self.op = op
        self.level = op.level
        self.parent = parent
        self.children: list[StrategyNode] = []
        self.status = OPEN
        self.expected_fulfilment = ef
        self.fulfilment = fulfilment
        self.pstate_snapshot = snapshot
        self.helper = helper
        self.step_index = step_index
        self.deprioritized = False
        self.revise_consumed = False

    @property
    def subgoal(self) -> str:
        return self.op.name

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class TraceEvent:
    """One planner event; ``seq`` is a logical clock, stable across runs."""

    seq: int
    event: str  # expand | select | reject | revise | apply
    node_id: str
    operator: str
    level: int
    ef: float

    def render(self) -> str:
        return (f"{self.event}\t{self.node_id}\t{self.operator}"
                f"\t{self.level}\t{self.ef:.6f}\t{self.seq}")


@dataclass(frozen=True)
class SelectionAudit:
    """What the planner saw when it picked one open alternative."""

    node_id: str
    operator: str
    chosen_ef: float
    open_efs: tuple[float, ...]
    forced: bool


@dataclass(frozen=True)
class PlanOutcome:
    plan: Optional[LinearPlan]
    root: StrategyNode
    events: tuple[TraceEvent, ...]
    audits: tuple[SelectionAudit, ...]
    failure: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.plan is not None

    def render_trace(self) -> str:
        return "".join(e.render() + "\n" for e in self.events)


def review_offset(current: StrategyNode, ancestors: Sequence[StrategyNode],
                  config) -> Optional[StrategyNode]:
    """Offset-based review of earlier decisions.

    Returns the nearest ancestor whose expected fulfilment, less the offset
    for the level gap, still exceeds the current node's; None when the
    current value is acceptable.  The goal head is never a revision target
    (it is the goal, not a decision), and an ancestor whose revision was
    already consumed is skipped.
    """
    for anc in ancestors:
        if anc.parent is None:
            continue
        gap = current.level - anc.level
        if gap <= 0:
            continue
        if current.expected_fulfilment < anc.expected_fulfilment - config.offset_for(gap):
            if anc.revise_consumed:
                continue
            return anc
    return None


class _Revise(Exception):
    def __init__(self, ancestor: StrategyNode) -> None:
        self.ancestor = ancestor


class _Ctx:
    __slots__ = ("domain", "meter", "active", "steps", "events", "audits",
                 "force", "counter", "seq", "deepest_reject")

    def __init__(self, domain: DomainSpec, start: PState, meter,
                 forced: Optional[Sequence[PlanStep]]) -> None:
        self.domain = domain
        self.meter = meter
        self.active = start
        self.steps: list[PlanStep] = []
        self.events: list[TraceEvent] = []
        self.audits: list[SelectionAudit] = []
        self.force: deque[PlanStep] = deque(forced or ())
        self.counter = 0
        self.seq = 0
        self.deepest_reject: Optional[StrategyNode] = None

    def new_node(self, op: ReductionOperator, parent, ef: float, fulfilment: float,
                 helper: bool = False, step_index: Optional[int] = None) -> StrategyNode:
        self.counter += 1
        return StrategyNode(f"n{self.counter:04d}", op, parent, ef, fulfilment,
                            self.active, helper=helper, step_index=step_index)

    def emit(self, event: str, node: StrategyNode) -> None:
        self.seq += 1
        self.events.append(TraceEvent(self.seq, event, node.id, node.op.name,
                                      node.level, node.expected_fulfilment))

    def tick(self, n: int = 1) -> None:
        if self.meter is not None:
            self.meter.tick(n)

    def note_reject(self, node: StrategyNode) -> None:
        if self.deepest_reject is None or node.level > self.deepest_reject.level:
            self.deepest_reject = node


def _ancestors(node: StrategyNode):
    anc = node.parent
    while anc is not None:
        yield anc
        anc = anc.parent


def _reject(ctx: _Ctx, node: StrategyNode) -> bool:
    """Mark a node failed; returns False, or raises for the abort policy."""
    node.status = REJECTED
    ctx.emit("reject", node)
    ctx.note_reject(node)
    if node.op.planfail == "abort":
        raise PlanningAbort(f"operator {node.op.name!r} failed with policy 'abort'")
    return False


def _attempt(ctx: _Ctx, node: StrategyNode, depth: int, forced: bool) -> bool:
    """Run one achievement attempt with full state rollback on failure."""
    saved_active = ctx.active
    saved_steps = len(ctx.steps)
    saved_force = tuple(ctx.force)
    try:
        ok = _achieve(ctx, node, depth)
    except _Revise:
        ctx.active = saved_active
        del ctx.steps[saved_steps:]
        ctx.force = deque(saved_force)
        raise
    if not ok:
        ctx.active = saved_active
        del ctx.steps[saved_steps:]
        if forced:
            # The forced plan prefix diverged; fall back to free search.
            ctx.force = deque()
        else:
            ctx.force = deque(saved_force)
    return ok


def _run_alternatives(ctx: _Ctx, parent: StrategyNode,
                      candidates: list[StrategyNode], depth: int) -> bool:
    """Try open alternatives best-EF-first until one achieves.

    A revision signal aimed at a candidate deprioritizes it (it stays
    available once everything else failed); 'reject-branch' on a failing
    candidate abandons the remaining alternatives.
    """
    while True:
        open_children = [c for c in candidates if c.status == OPEN]
        if not open_children:
            return False
        chosen = None
        forced = False
        if ctx.force:
            head = ctx.force[0].operator
            for c in open_children:
                if c.op.name == head:
                    chosen = c
                    forced = True
                    break
        if chosen is None:
            chosen = max(
                open_children,
                key=lambda c: (not c.deprioritized, c.expected_fulfilment,
                               -candidates.index(c)),
            )
        ctx.audits.append(SelectionAudit(
            chosen.id, chosen.op.name, chosen.expected_fulfilment,
            tuple(c.expected_fulfilment for c in open_children), forced))
        ctx.emit("select", chosen)
        try:
            ok = _attempt(ctx, chosen, depth, forced)
        except _Revise as signal:
            if signal.ancestor is chosen:
                chosen.deprioritized = True
                chosen.children = []
                chosen.status = OPEN
                continue
            raise
        if ok:
            return True
        if chosen.op.planfail == "reject-branch":
            return False


def _review_batch(ctx: _Ctx, parent: StrategyNode,
                  children: list[StrategyNode]) -> None:
    if not children:
        return
    best = max(children,
               key=lambda c: (c.expected_fulfilment, -children.index(c)))
    chain = [parent, *_ancestors(parent)]
    target = review_offset(best, chain, ctx.domain.config)
    if target is None:
        return
    if target.parent is None:
        return
    siblings = [s for s in target.parent.children
                if s is not target and s.step_index == target.step_index
                and s.status == OPEN]
    if not siblings:
        return
    target.revise_consumed = True
    ctx.emit("revise", target)
    raise _Revise(target)


def _satisfy_helpers(ctx: _Ctx, node: StrategyNode, lit: Literal, env: Binding,
                     depth: int) -> Optional[Binding]:
    """Try helper operators to make one unmet satisfiable literal true."""
    if not lit.positive or depth <= 0:
        return None
    target = substitute(lit.atom, env)
    candidates: list[StrategyNode] = []
    for op in ctx.domain.operators:
        if not (node.op.level <= op.level <= ctx.domain.n_levels):
            continue
        ctx.tick()
        from .state import match_atom

        if not any(match_atom(post, target, {}) is not None or
                   match_atom(target, post, {}) is not None
                   for post in op.post):
            continue
        state = ctx.active.level(op.level)
        ef = eval_probability(op.probability, state, meter=ctx.meter)
        child = ctx.new_node(op, node, ef, 1.0, helper=True)
        node.children.append(child)
        candidates.append(child)
        ctx.emit("expand", child)
    remaining = list(candidates)
    while remaining:
        if not _run_alternatives(ctx, node, remaining, depth - 1):
            return None
        facts = ctx.active.level(node.op.level).facts
        ext = first_binding((lit,), facts, env, meter=ctx.meter)
        if ext is not None:
            return ext
        # a helper ran but established a different instance; try the rest
        remaining = [c for c in remaining if c.status == OPEN]
    return None


def _achieve(ctx: _Ctx, node: StrategyNode, depth: int) -> bool:
    op = node.op
    state = ctx.active.level(op.level)
    env = necessary_binding(op, state, meter=ctx.meter)
    if env is None:
        return _reject(ctx, node)

    for lit in op.satisfiable:
        facts = ctx.active.level(op.level).facts
        ext = first_binding((lit,), facts, env, meter=ctx.meter)
        if ext is None:
            ext = _satisfy_helpers(ctx, node, lit, env, depth)
        if ext is None:
            return _reject(ctx, node)
        env = ext

    binding = tuple(sorted(env.items()))
    if op.is_primitive:
        before = ctx.active.level(ctx.domain.n_levels).facts
        ctx.active = apply_primitive(op, ctx.active, ctx.domain, binding=env,
                                     meter=ctx.meter)
        after = ctx.active.level(ctx.domain.n_levels).facts
        delta = StateChange(
            add=tuple(sorted(after - before, key=str)),
            delete=tuple(sorted(before - after, key=str)),
        )
        ctx.steps.append(PlanStep(op.name, op.level, binding, delta,
                                  node.fulfilment, node.helper))
        if ctx.force and ctx.force[0].operator == op.name:
            ctx.force.popleft()
        node.status = ACHIEVED
        ctx.emit("apply", node)
        return True

    ctx.steps.append(PlanStep(op.name, op.level, binding, None,
                              node.fulfilment, node.helper))
    if ctx.force and ctx.force[0].operator == op.name:
        ctx.force.popleft()
    node.status = EXPANDED
    node.children = []
    for step_index, alternatives in enumerate(op.plot or ()):
        batch: list[StrategyNode] = []
        for entry in alternatives:
            child_op = ctx.domain.operator(entry.child_operator)
            child_state = ctx.active.level(child_op.level)
            ef = expected_fulfilment(entry, child_op, child_state, meter=ctx.meter)
            child = ctx.new_node(child_op, node, ef, entry.fulfilment,
                                 step_index=step_index)
            node.children.append(child)
            batch.append(child)
            ctx.emit("expand", child)
        _review_batch(ctx, node, batch)
        if not _run_alternatives(ctx, node, batch, depth):
            return _reject(ctx, node)

    posts = [substitute(p, env) for p in op.post]
    level_facts = ctx.active.level(op.level).facts
    ctx.tick(len(posts))
    if not all(p in level_facts for p in posts):
        return _reject(ctx, node)
    node.status = ACHIEVED
    return True


def plan(ps: PState, domain: DomainSpec, *, plan_id: str = "p1", meter=None,
         forced: Optional[Sequence[PlanStep]] = None) -> PlanOutcome:
    """Build a plan for one world; returns the outcome with the full trace.

    ``forced`` replays a validated step prefix (used for partial plan reuse):
    forced operators win selection while they keep succeeding, after which
    expected-fulfilment search takes over.
    """
    if not ps.fully_abstracted:
        raise ValidationError(f"world {ps.id} must be fully abstracted before planning")
    ctx = _Ctx(domain, ps, meter, forced)
    goal = domain.goal_operator
    root = ctx.new_node(goal, None, 1.0, 1.0)
    ctx.emit("expand", root)
    ctx.emit("select", root)
    try:
        ok = _attempt(ctx, root, domain.config.helper_depth, bool(forced))
    except PlanningAbort as exc:
        ok = False
        failure = str(exc)
    else:
        failure = None
    if not ok and failure is None:
        deepest = ctx.deepest_reject
        if deepest is not None:
            failure = (f"no plan: search exhausted; deepest rejection at "
                       f"{deepest.op.name!r} (level {deepest.level})")
        else:
            failure = "no plan: search exhausted"
    if not ok:
        return PlanOutcome(None, root, tuple(ctx.events), tuple(ctx.audits), failure)
    linear = LinearPlan(
        id=plan_id,
        steps=tuple(ctx.steps),
        source_pstate=ps.id,
        works_for=frozenset({ps.id}),
        per_pstate_prefix={ps.id: len(ctx.steps)},
    )
    return PlanOutcome(linear, root, tuple(ctx.events), tuple(ctx.audits), None)


@dataclass(frozen=True)
class CplanRun:
    pstate: PState
    outcome: PlanOutcome
    work: int


def cplan_all(pstates: Sequence[PState], domain: DomainSpec,
              meter=None) -> list[CplanRun]:
    """Plan every world independently: no reuse, no merging, no acquisition."""
    runs: list[CplanRun] = []
    for i, ps in enumerate(pstates, start=1):
        before = meter.count if meter is not None else 0
        outcome = plan(ps, domain, plan_id=f"c{i:02d}", meter=meter)
        after = meter.count if meter is not None else 0
        runs.append(CplanRun(ps, outcome, after - before))
    return runs


def step_is_redundant(step: PlanStep, op: ReductionOperator, ps: PState,
                      domain: DomainSpec, meter=None) -> bool:
    """A step is redundant when its postconditions already hold and, for a
    detail-level step, its direct effects would not change the world."""
    if not op.post:
        return False
    env = dict(step.binding)
    level_facts = ps.level(op.level).facts
    if meter is not None:
        meter.tick(len(op.post))
    if not all(substitute(p, env) in level_facts for p in op.post):
        return False
    if not op.is_primitive:
        return True
    detail = ps.level(domain.n_levels).facts
    adds = [substitute(a, env) for a in op.change.add]
    dels = [substitute(d, env) for d in op.change.delete]
    if any(not a.is_ground for a in adds + dels):
        return False
    return (all(a in detail for a in adds)
            and all(d not in detail for d in dels))


def validate_plan(linear: LinearPlan, ps: PState, domain: DomainSpec) -> list[str]:
    """Independent replay check of a plan against one world.

    Walks the recorded steps with their recorded bindings: redundant steps
    are skipped, every other step's preconditions must hold in the simulated
    world at its position, detail-level steps are applied (causal closure
    included), and the goal operator's postconditions must hold at the end.
    Returns the list of problems; an empty list means the plan validates.
    """
    problems: list[str] = []
    current = ps
    for i, step in enumerate(linear.steps, start=1):
        op = domain.operator(step.operator)
        env = dict(step.binding)
        if step_is_redundant(step, op, current, domain):
            continue
        facts = current.level(op.level).facts
        for lit in op.necessary + op.satisfiable:
            atom = substitute(lit.atom, env)
            if not atom.is_ground:
                problems.append(f"step {i} ({op.name}): literal {lit} not grounded "
                                "by the recorded binding")
                return problems
            if (atom in facts) != lit.positive:
                problems.append(f"step {i} ({op.name}): precondition {lit} fails")
                return problems
        if op.is_primitive:
            current = apply_primitive(op, current, domain, binding=env)
    goal = domain.goal_operator
    goal_facts = current.level(goal.level).facts
    for post in goal.post:
        if post not in goal_facts:
            problems.append(f"goal postcondition {post} does not hold at the end")
    return problems
