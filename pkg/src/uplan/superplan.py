"""Merging the plan set into one branching super-plan.

Plans share their longest common action prefix; where they diverge the
super-plan branches.  Each branch either carries a knowledge-acquisition
action that resolves which arm applies (when one exists, discriminates the
arms and is worth its cost) or commits to the arm with the greatest belief
mass, keeping the others as annotations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .domain import DomainSpec, KnowledgeAcquisitionOperator
from .errors import ValidationError
from .evidence import PRODUCT_SEPARATOR, MassDistribution, Proposition, support
from .planner import LinearPlan, PlanStep

ACQUIRE, SELECT = "acquire", "select"


def plan_mass(linear: LinearPlan, joint: MassDistribution) -> float:
    """Belief mass committed to a plan: the total mass of every focal set of
    the joint distribution contained in the set of worlds the plan works for
    (disjunctions of those worlds included)."""
    if not linear.works_for:
        raise ValidationError(f"plan {linear.id} works for no worlds")
    return support(joint, Proposition(joint.frame, frozenset(linear.works_for)))


@dataclass(frozen=True)
class SuperArm:
    """One branch arm: the plans that continue this way and their mass."""

    label: str
    mass: float
    plan_ids: tuple[str, ...]
    pstates: tuple[str, ...]
    node: "SuperNode"
    committed: bool = False


@dataclass(frozen=True)
class SuperNode:
    """A run of shared steps, optionally followed by a branch."""

    common_steps: tuple[PlanStep, ...]
    plan_ids: tuple[str, ...]
    ka: Optional[KnowledgeAcquisitionOperator] = None
    mass_selected: bool = False
    arms: tuple[SuperArm, ...] = ()

    @property
    def is_terminal(self) -> bool:
        return not self.arms


@dataclass(frozen=True)
class SuperPlan:
    root: SuperNode
    plans: tuple[LinearPlan, ...]

    def leaf_sequences(self) -> list[tuple]:
        """Root-to-leaf step-key sequences, one per plan (multiset)."""
        out: list[tuple] = []

        def walk(node: SuperNode, prefix: tuple) -> None:
            prefix = prefix + tuple(s.key() for s in node.common_steps)
            if node.is_terminal:
                for _ in node.plan_ids:
                    out.append(prefix)
                return
            for arm in node.arms:
                walk(arm.node, prefix)

        walk(self.root, ())
        return out


def merge(plans: Sequence[LinearPlan], joint: MassDistribution) -> SuperPlan:
    """Combine plans into a prefix trie; arms ordered by descending mass.

    Plans that diverge and later reconverge stay split: only shared prefixes
    merge.
    """
    if not plans:
        raise ValidationError("cannot merge an empty plan set")
    masses = {p.id: plan_mass(p, joint) for p in plans}

    def build(group: list[LinearPlan], depth: int) -> SuperNode:
        common: list[PlanStep] = []
        while True:
            keys = set()
            for p in group:
                if depth >= len(p.steps):
                    keys.add(None)
                else:
                    keys.add(p.steps[depth].key())
            if len(keys) != 1 or None in keys:
                break
            common.append(group[0].steps[depth])
            depth += 1
        plan_ids = tuple(p.id for p in group)
        if len(group) == 1 or all(depth >= len(p.steps) for p in group):
            return SuperNode(tuple(common), plan_ids)
        buckets: dict[object, list[LinearPlan]] = {}
        for p in group:
            key = p.steps[depth].key() if depth < len(p.steps) else None
            buckets.setdefault(key, []).append(p)
        arms = []
        for key, bucket in buckets.items():
            node = build(bucket, depth)
            mass = sum(masses[p.id] for p in bucket)
            worlds = sorted(set().union(*(p.works_for for p in bucket)))
            label = bucket[0].steps[depth].render() if key is not None else "end"
            arms.append(SuperArm(
                label=label,
                mass=mass,
                plan_ids=tuple(p.id for p in bucket),
                pstates=tuple(worlds),
                node=node,
            ))
        arms.sort(key=lambda a: (-a.mass, a.plan_ids[0]))
        return SuperNode(tuple(common), plan_ids, arms=tuple(arms))

    ordered = sorted(plans, key=lambda p: p.id)
    return SuperPlan(build(list(ordered), 0), tuple(ordered))


def ka_tradeoff(arm_masses: Sequence[float], cost: float, config) -> str:
    """Acquire the discriminating information, or commit by belief?

    Committing wins when belief in the best arm already reaches the cutoff
    (the information is not worth anything) or when the acquisition costs
    more than the configured ceiling.
    """
    if max(arm_masses) >= config.belief_cutoff:
        return SELECT
    if cost > config.cost_ceiling:
        return SELECT
    return ACQUIRE


def _world_component(world_id: str, frame_index: int) -> str:
    return world_id.split(PRODUCT_SEPARATOR)[frame_index]


def _separating_ka(arms: Sequence[SuperArm], domain: DomainSpec,
                   ) -> Optional[KnowledgeAcquisitionOperator]:
    """Cheapest acquisition whose partition puts every arm in its own cell."""
    frames = domain.lowest_frames()
    frame_index = {f.id: i for i, f in enumerate(frames)}
    best: Optional[KnowledgeAcquisitionOperator] = None
    for ka in domain.ka_operators:
        idx = frame_index.get(ka.frame_id)
        if idx is None:
            continue
        cells_touched: list[int] = []
        ok = True
        for arm in arms:
            touched = set()
            for world in arm.pstates:
                cell = ka.cell_of(_world_component(world, idx))
                if cell is None:
                    ok = False
                    break
                touched.add(cell)
            if not ok or len(touched) != 1:
                ok = False
                break
            cells_touched.append(touched.pop())
        if ok and len(set(cells_touched)) == len(arms):
            if best is None or ka.cost < best.cost:
                best = ka
    return best


def _cell_label(ka: KnowledgeAcquisitionOperator, arm: SuperArm,
                domain: DomainSpec) -> str:
    frames = domain.lowest_frames()
    idx = {f.id: i for i, f in enumerate(frames)}[ka.frame_id]
    cell = ka.cell_of(_world_component(arm.pstates[0], idx))
    frame = domain.frame(ka.frame_id)
    ordered = [e for e in frame.elements if e in ka.cells[cell]]
    return f"{ka.frame_id}={{{' '.join(ordered)}}}"


def insert_ka(sp: SuperPlan, domain: DomainSpec) -> SuperPlan:
    """Resolve every branch: attach a discriminating acquisition when one
    exists and the belief/cost trade-off favours it, otherwise commit to the
    greatest-mass arm (the rest stay as annotations)."""

    def resolve(node: SuperNode) -> SuperNode:
        if node.is_terminal:
            return node
        arms = tuple(replace(arm, node=resolve(arm.node)) for arm in node.arms)
        ka = _separating_ka(arms, domain)
        if ka is not None and ka_tradeoff([a.mass for a in arms], ka.cost,
                                          domain.config) == ACQUIRE:
            labeled = tuple(replace(a, label=_cell_label(ka, a, domain))
                            for a in arms)
            return replace(node, ka=ka, mass_selected=False, arms=labeled)
        committed = tuple(replace(a, committed=(i == 0))
                          for i, a in enumerate(arms))
        return replace(node, ka=None, mass_selected=True, arms=committed)

    return SuperPlan(resolve(sp.root), sp.plans)


def render(sp: SuperPlan, *, header: str = "super-plan") -> str:
    """Deterministic indented text rendering, stable across runs."""
    worlds = sorted(set().union(*(p.works_for for p in sp.plans)))
    lines = [f"{header}: {len(sp.plans)} plans covering {len(worlds)} worlds"]

    def walk(node: SuperNode, indent: int) -> None:
        pad = "  " * indent
        for step in node.common_steps:
            lines.append(f"{pad}step {step.render()}")
        if node.is_terminal:
            lines.append(f"{pad}done ({', '.join(node.plan_ids)})")
            return
        if node.ka is not None:
            lines.append(f"{pad}branch acquire {node.ka.name} "
                         f"cost={node.ka.cost:.4f}")
        elif node.mass_selected:
            lines.append(f"{pad}branch select-by-mass")
        else:
            lines.append(f"{pad}branch unresolved")
        for arm in node.arms:
            tag = " committed" if arm.committed else ""
            lines.append(f"{pad}  arm {arm.label} mass={arm.mass:.4f}"
                         f" worlds={','.join(arm.pstates)}{tag}")
            walk(arm.node, indent + 2)

    walk(sp.root, 1)
    return "\n".join(lines) + "\n"
