"""Domain model: goal reduction operators, causal theory and configuration.

An operator above the detail level decomposes its goal into a plot of
next-level steps, each step offering one or more alternative child operators
weighted by how fully they achieve the parent's goal.  At the detail level an
operator changes the world directly; a trigger-driven causal theory then
deduces side effects, and the upper-level descriptions are re-derived through
the domain's mapping functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ApplicationError, CausalDivergenceError, ValidationError
from .evidence import CompatibilityRelation, Frame, MassDistribution
from .state import (
    Atom,
    Binding,
    Fact,
    LevelDescription,
    Literal,
    PState,
    Wff,
    first_binding,
    holds,
    satisfy,
    substitute,
)

PLANFAIL_POLICIES = ("backtrack", "reject-branch", "abort")
PARTIAL_POLICIES = ("max-expected-fulfilment", "max-support")

DEFAULT_OFFSET_PER_GAP = 0.15
DEFAULT_CAUSAL_CAP = 100
DEFAULT_HELPER_DEPTH = 2


@dataclass(frozen=True)
class PlotEntry:
    """One candidate child operator and how fully it achieves the parent's goal."""

    child_operator: str
    fulfilment: float

    def __post_init__(self):
        if not (0.0 <= self.fulfilment <= 1.0):
            raise ValidationError(
                f"fulfilment {self.fulfilment} for {self.child_operator!r} "
                "outside [0, 1]"
            )


#: Entries within a step are alternatives; steps run in order.
PlotStep = tuple[PlotEntry, ...]


@dataclass(frozen=True)
class StateChange:
    """Direct add/delete effects of a detail-level operator."""

    add: tuple[Atom, ...] = ()
    delete: tuple[Atom, ...] = ()


@dataclass(frozen=True)
class ProbabilityFunction:
    """Success probability of an operator as a first-match condition table."""

    rules: tuple[tuple[Wff, float], ...] = ()
    default: float = 1.0

    def __post_init__(self):
        for _, value in self.rules:
            if not (0.0 <= value <= 1.0):
                raise ValidationError(f"probability {value} outside [0, 1]")
        if not (0.0 <= self.default <= 1.0):
            raise ValidationError(f"default probability {self.default} outside [0, 1]")


@dataclass(frozen=True)
class ReductionOperator:
    """A goal reduction operator at one abstraction level.

    Operators above the detail level carry a plot; detail-level operators
    carry a state change.  Necessary preconditions are checked but never
    pursued; satisfiable ones may be achieved by helper operators.
    """

    name: str
    level: int
    necessary: Wff = ()
    satisfiable: Wff = ()
    plot: Optional[tuple[PlotStep, ...]] = None
    change: Optional[StateChange] = None
    probability: ProbabilityFunction = ProbabilityFunction()
    post: tuple[Atom, ...] = ()
    planfail: str = "backtrack"

    def __post_init__(self):
        if self.planfail not in PLANFAIL_POLICIES:
            raise ValidationError(
                f"operator {self.name!r}: unknown planfail policy {self.planfail!r}"
            )

    @property
    def is_primitive(self) -> bool:
        return self.change is not None


@dataclass(frozen=True)
class CausalRule:
    """A deductive side-effect rule fired by a world change.

    ``trigger_kind`` is '+' (fires on additions), '-' (deletions) or ''
    (either).  Variables bound by the trigger and the condition's positive
    literals ground the effects.
    """

    name: str
    trigger: Atom
    trigger_kind: str = "+"
    condition: Wff = ()
    add: tuple[Atom, ...] = ()
    delete: tuple[Atom, ...] = ()

    def __post_init__(self):
        if self.trigger_kind not in ("+", "-", ""):
            raise ValidationError(
                f"rule {self.name!r}: trigger kind {self.trigger_kind!r} invalid"
            )


@dataclass(frozen=True)
class KnowledgeAcquisitionOperator:
    """An information-gathering action resolving a partition of one frame."""

    name: str
    frame_id: str
    cells: tuple[frozenset[str], ...]
    cost: float

    def __post_init__(self):
        if self.cost < 0:
            raise ValidationError(f"acquisition {self.name!r} has negative cost")
        seen: set[str] = set()
        for cell in self.cells:
            if not cell:
                raise ValidationError(f"acquisition {self.name!r} has an empty cell")
            overlap = seen & cell
            if overlap:
                raise ValidationError(
                    f"acquisition {self.name!r}: elements {sorted(overlap)} appear "
                    "in more than one cell"
                )
            seen |= cell

    def cell_of(self, element: str) -> Optional[int]:
        for i, cell in enumerate(self.cells):
            if element in cell:
                return i
        return None


@dataclass(frozen=True)
class IncompatEntry:
    """A predicate/operator pairing known to be incongruous.

    A positive pattern marks plans containing the operator as unworkable in
    worlds where the pattern matches; a negated pattern marks them unworkable
    where it does not.
    """

    literal: Literal
    operator: str


@dataclass(frozen=True)
class PlannerConfig:
    n_levels: int
    goal: str
    plausibility_threshold: float = 0.0
    support_threshold: float = 0.0
    offsets: Mapping[int, float] = field(default_factory=dict)
    partial_plan_policy: str = "max-expected-fulfilment"
    belief_cutoff: float = 0.9
    cost_ceiling: float = float("inf")
    helper_depth: int = DEFAULT_HELPER_DEPTH
    causal_cap: int = DEFAULT_CAUSAL_CAP

    def __post_init__(self):
        if self.n_levels < 1:
            raise ValidationError(f"n_levels must be >= 1, got {self.n_levels}")
        if self.partial_plan_policy not in PARTIAL_POLICIES:
            raise ValidationError(
                f"unknown partial plan policy {self.partial_plan_policy!r}"
            )

    def offset_for(self, gap: int) -> float:
        return self.offsets.get(gap, DEFAULT_OFFSET_PER_GAP * gap)


@dataclass(frozen=True)
class DomainSpec:
    """A fully validated planning domain."""

    name: str
    frames: tuple[Frame, ...]
    relations: tuple[CompatibilityRelation, ...]
    # mappings[i] rewrites level-(i+1) facts into level-i facts
    mappings: Mapping[int, Mapping[Atom, tuple[Atom, ...]]]
    # templates[(frame_id, element)] -> facts contributed at the frame's level
    templates: Mapping[tuple[str, str], tuple[Atom, ...]]
    operators: tuple[ReductionOperator, ...]
    causal_rules: tuple[CausalRule, ...] = ()
    ka_operators: tuple[KnowledgeAcquisitionOperator, ...] = ()
    incompat: tuple[IncompatEntry, ...] = ()
    config: PlannerConfig = None  # type: ignore[assignment]
    evidence: Optional[tuple[MassDistribution, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {op.name: op for op in self.operators})
        object.__setattr__(self, "_frame_by_id", {f.id: f for f in self.frames})
        by_op: dict[str, list[IncompatEntry]] = {}
        for entry in self.incompat:
            by_op.setdefault(entry.operator, []).append(entry)
        object.__setattr__(self, "_incompat_by_op", by_op)

    def operator(self, name: str) -> ReductionOperator:
        op = self._by_name.get(name)
        if op is None:
            raise ValidationError(f"unknown operator {name!r}")
        return op

    def frame(self, frame_id: str) -> Frame:
        f = self._frame_by_id.get(frame_id)
        if f is None:
            raise ValidationError(f"unknown frame {frame_id!r}")
        return f

    @property
    def goal_operator(self) -> ReductionOperator:
        return self.operator(self.config.goal)

    @property
    def n_levels(self) -> int:
        return self.config.n_levels

    def lowest_frames(self) -> tuple[Frame, ...]:
        return tuple(f for f in self.frames if f.level == self.n_levels)

    def element_facts(self, frame_id: str, element: str) -> tuple[Atom, ...]:
        return self.templates.get((frame_id, element), ())

    def incompat_for(self, operator: str) -> Sequence[IncompatEntry]:
        return self._incompat_by_op.get(operator, ())

    def with_evidence(self, evidence: Sequence[MassDistribution],
                      plausibility_threshold: Optional[float] = None) -> "DomainSpec":
        """A copy with replaced evidence (and optionally a new threshold)."""
        config = self.config
        if plausibility_threshold is not None:
            config = replace(config, plausibility_threshold=plausibility_threshold)
        return replace(self, evidence=tuple(evidence), config=config)


def check_necessary(op: ReductionOperator, state: LevelDescription,
                    binding: Optional[Mapping[str, str]] = None, meter=None) -> bool:
    """Closed-world truth of the operator's necessary preconditions."""
    if op.level != state.level:
        raise ApplicationError(
            f"operator {op.name!r} is level {op.level}, state is level {state.level}"
        )
    return holds(op.necessary, state.facts, binding, meter=meter)


def necessary_binding(op: ReductionOperator, state: LevelDescription,
                      meter=None) -> Optional[Binding]:
    """First binding satisfying the necessary preconditions, or None."""
    if op.level != state.level:
        raise ApplicationError(
            f"operator {op.name!r} is level {op.level}, state is level {state.level}"
        )
    return first_binding(op.necessary, state.facts, meter=meter)


def check_satisfiable(op: ReductionOperator, state: LevelDescription,
                      binding: Optional[Mapping[str, str]] = None,
                      meter=None) -> list[Literal]:
    """The unmet subset of the satisfiable preconditions.

    Literals are checked in declaration order, extending the binding with the
    first match of each met literal, so shared variables stay consistent.
    """
    env: Binding = dict(binding) if binding else {}
    unmet: list[Literal] = []
    for lit in op.satisfiable:
        found = first_binding((lit,), state.facts, env, meter=meter)
        if found is None:
            unmet.append(Literal(substitute(lit.atom, env), lit.positive))
        else:
            env = found
    return unmet


def satisfiable_binding(op: ReductionOperator, state: LevelDescription,
                        binding: Optional[Mapping[str, str]] = None,
                        meter=None) -> Optional[Binding]:
    """Binding extending ``binding`` under which all satisfiable preconditions hold."""
    return first_binding(op.satisfiable, state.facts, binding, meter=meter)


def eval_probability(pf: ProbabilityFunction, state: LevelDescription,
                     meter=None) -> float:
    """First matching rule's value, else the default."""
    for wff, value in pf.rules:
        if holds(wff, state.facts, meter=meter):
            return value
    return pf.default


def _match_trigger(rule: CausalRule, kind: str, fact: Fact) -> Optional[Binding]:
    if rule.trigger_kind and rule.trigger_kind != kind:
        return None
    from .state import match_atom

    return match_atom(rule.trigger, fact, {})


def causal_closure(state: LevelDescription, rules: Sequence[CausalRule],
                   changes: Optional[Iterable[tuple[str, Fact]]] = None,
                   cap: int = DEFAULT_CAUSAL_CAP, meter=None) -> LevelDescription:
    """Fire causal rules on triggered changes until a fixpoint.

    ``changes`` seeds the trigger queue; when omitted, every fact in the
    state counts as freshly added.  Rules run in declaration order within a
    pass.  Exceeding ``cap`` passes raises, naming the rules that fired in
    the final pass.
    """
    facts = set(state.facts)
    if changes is None:
        pending: list[tuple[str, Fact]] = [("+", f) for f in sorted(facts, key=str)]
    else:
        pending = list(changes)

    for _ in range(cap):
        if not pending:
            return LevelDescription(state.level, frozenset(facts))
        batch, pending = pending, []
        fired: list[str] = []
        for rule in rules:
            for kind, fact in batch:
                if meter is not None:
                    meter.tick()
                trigger_env = _match_trigger(rule, kind, fact)
                if trigger_env is None:
                    continue
                snapshot = frozenset(facts)
                for env in satisfy(rule.condition, snapshot, trigger_env, meter=meter):
                    adds = [substitute(a, env) for a in rule.add]
                    dels = [substitute(d, env) for d in rule.delete]
                    clash = set(adds) & set(dels)
                    if clash:
                        raise ValidationError(
                            f"rule {rule.name!r} both adds and deletes "
                            f"{sorted(str(c) for c in clash)}"
                        )
                    for d in dels:
                        if not d.is_ground:
                            raise ValidationError(
                                f"rule {rule.name!r}: delete effect {d} not grounded"
                            )
                        if d in facts:
                            facts.discard(d)
                            pending.append(("-", d))
                            fired.append(rule.name)
                            if meter is not None:
                                meter.tick()
                    for a in adds:
                        if a not in facts:
                            facts.add(a)
                            pending.append(("+", a))
                            fired.append(rule.name)
                            if meter is not None:
                                meter.tick()
    raise CausalDivergenceError(
        f"causal rules did not reach a fixpoint within {cap} passes; "
        f"rules firing in the last pass: {sorted(set(fired)) if fired else 'none'}",
        sorted(set(fired)),
    )


def apply_change(change: StateChange, facts: frozenset[Fact],
                 binding: Optional[Mapping[str, str]] = None,
                 meter=None) -> tuple[frozenset[Fact], list[tuple[str, Fact]]]:
    """Ground and apply a state change; returns the new facts and the delta."""
    env = dict(binding) if binding else {}
    adds = [substitute(a, env) for a in change.add]
    dels = [substitute(d, env) for d in change.delete]
    for atom in adds + dels:
        if not atom.is_ground:
            raise ApplicationError(f"effect {atom} not grounded by {env}")
    clash = set(adds) & set(dels)
    if clash:
        raise ApplicationError(
            f"state change both adds and deletes {sorted(str(c) for c in clash)}"
        )
    out = set(facts)
    delta: list[tuple[str, Fact]] = []
    for d in dels:
        if d in out:
            out.discard(d)
            delta.append(("-", d))
            if meter is not None:
                meter.tick()
    for a in adds:
        if a not in out:
            out.add(a)
            delta.append(("+", a))
            if meter is not None:
                meter.tick()
    return frozenset(out), delta


def derive_levels(lowest: LevelDescription, domain: DomainSpec,
                  meter=None) -> tuple[LevelDescription, ...]:
    """Rebuild every abstraction level bottom-up from the detail level.

    Each fact maps through the domain's mapping functions; a fact with no
    mapping entry is a domain defect and raises.
    """
    n = domain.n_levels
    if lowest.level != n:
        raise ApplicationError(
            f"derive_levels expects a level-{n} description, got level {lowest.level}"
        )
    levels: list[LevelDescription] = [lowest]
    current = lowest
    for target in range(n - 1, 0, -1):
        table = domain.mappings.get(target + 1)
        if table is None:
            raise ValidationError(f"no mapping table from level {target + 1}")
        facts: set[Fact] = set()
        for fact in current.facts:
            if meter is not None:
                meter.tick()
            image = table.get(fact)
            if image is None:
                raise ValidationError(
                    f"fact {fact} at level {target + 1} has no mapping function"
                )
            facts.update(image)
        current = LevelDescription(target, frozenset(facts))
        levels.append(current)
    levels.reverse()
    return tuple(levels)


def abstract_state(ps: PState, domain: DomainSpec, meter=None) -> PState:
    """Fill in all abstraction levels of a p-state from its detail level."""
    from dataclasses import replace as _replace

    lowest = ps.level(domain.n_levels)
    levels = derive_levels(lowest, domain, meter=meter)
    return _replace(ps, levels=levels)


def apply_primitive(op: ReductionOperator, ps: PState, domain: DomainSpec,
                    binding: Optional[Mapping[str, str]] = None,
                    meter=None) -> PState:
    """Apply a detail-level operator to a fully abstracted p-state.

    Preconditions must hold; the state change is applied, the causal theory
    run to a fixpoint, and every upper level re-derived.  The input p-state
    is never mutated.
    """
    n = domain.n_levels
    if not op.is_primitive or op.level != n:
        raise ApplicationError(f"operator {op.name!r} is not a detail-level operator")
    state = ps.level(n)
    env = dict(binding) if binding is not None else None
    if env is None:
        env = necessary_binding(op, state, meter=meter)
        if env is None:
            raise ApplicationError(
                f"necessary preconditions of {op.name!r} do not hold"
            )
        full = satisfiable_binding(op, state, env, meter=meter)
        if full is None:
            raise ApplicationError(
                f"satisfiable preconditions of {op.name!r} do not hold"
            )
        env = full
    facts, delta = apply_change(op.change, state.facts, env, meter=meter)
    changed = LevelDescription(n, facts)
    closed = causal_closure(changed, domain.causal_rules, delta,
                            cap=domain.config.causal_cap, meter=meter)
    levels = derive_levels(closed, domain, meter=meter)
    from dataclasses import replace as _replace

    return _replace(ps, levels=levels)
