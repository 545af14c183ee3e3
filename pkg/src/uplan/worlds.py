"""Possible-world construction, grouping and evidential ranking.

Detail-level evidence induces one possible initial world per plausible
combination of frame elements.  Each world is described at every abstraction
level; worlds whose descriptions coincide at some level are grouped, giving
a tree from one fully abstract root down to the distinct detailed worlds.
Groups are ranked by the belief interval of their member set under the joint
evidence, and planning starts at the greedy top-down best world.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .domain import DomainSpec, abstract_state
from .errors import ValidationError
from .evidence import (
    PRODUCT_SEPARATOR,
    EvidentialInterval,
    Frame,
    MassDistribution,
    Proposition,
    interval,
    joint_mass,
)
from .state import Fact, LevelDescription, PState

WORLD_FRAME_ID = "worlds"


def generate_pstates(evidence: Sequence[MassDistribution], domain: DomainSpec,
                     ) -> tuple[list[PState], MassDistribution]:
    """Build the possible initial worlds and the joint belief over them.

    One world is generated per cross-product element with positive
    plausibility (i.e. covered by at least one joint focal set); its detail
    level is the union of the fact templates of its component elements.
    Upper levels stay unfilled until ``abstract`` runs.
    """
    frames = domain.lowest_frames()
    if not frames:
        raise ValidationError("domain declares no detail-level frames")
    by_frame = {}
    for dist in evidence:
        if dist.frame.id in by_frame:
            raise ValidationError(f"duplicate evidence for frame {dist.frame.id!r}")
        by_frame[dist.frame.id] = dist
    missing = [f.id for f in frames if f.id not in by_frame]
    if missing:
        raise ValidationError(f"missing evidence for detail-level frames {missing}")
    extra = set(by_frame) - {f.id for f in frames}
    if extra:
        raise ValidationError(f"evidence for undeclared frames {sorted(extra)}")

    sources = [by_frame[f.id] for f in frames]
    joint = joint_mass(sources, frame_id=WORLD_FRAME_ID)

    covered = 0
    for mask in joint.masks:
        covered |= mask

    n = domain.n_levels
    pstates: list[PState] = []
    for index, label in enumerate(joint.frame.elements):
        if not (covered >> index) & 1:
            continue
        combo = tuple(label.split(PRODUCT_SEPARATOR)) if len(frames) > 1 else (label,)
        facts: set[Fact] = set()
        for frame, element in zip(frames, combo):
            facts.update(domain.element_facts(frame.id, element))
        levels: list[Optional[LevelDescription]] = [None] * n
        levels[n - 1] = LevelDescription(n, frozenset(facts))
        pstates.append(PState(
            id=label,
            index=index,
            levels=tuple(levels),
            mass=joint.mass_of([label]),
            elements=combo,
        ))
    return pstates, joint


def abstract(ps: PState, domain: DomainSpec, meter=None) -> PState:
    """Describe a world at every abstraction level from its detail level."""
    return abstract_state(ps, domain, meter=meter)


@dataclass(frozen=True)
class PStateTreeNode:
    """A group of worlds sharing one description at one level."""

    level: int
    pstate_ids: tuple[str, ...]
    description: Optional[LevelDescription]
    children: tuple["PStateTreeNode", ...] = ()
    interval: Optional[EvidentialInterval] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class PStateTree:
    """Grouping tree over the possible worlds.

    The root is a synthetic level-0 node covering every world; its children
    are the level-1 groups (a single child when all worlds look alike at the
    most abstract level).  Leaves sit at the detail level.
    """

    root: PStateTreeNode
    pstates: tuple[PState, ...]

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {ps.id: ps for ps in self.pstates})

    def pstate(self, pid: str) -> PState:
        return self._by_id[pid]

    def nodes_at_level(self, level: int) -> list[PStateTreeNode]:
        out: list[PStateTreeNode] = []

        def walk(node: PStateTreeNode) -> None:
            if node.level == level:
                out.append(node)
                return
            for child in node.children:
                walk(child)

        walk(self.root)
        return out

    def leaves(self) -> list[PStateTreeNode]:
        out: list[PStateTreeNode] = []

        def walk(node: PStateTreeNode) -> None:
            if node.is_leaf:
                out.append(node)
                return
            for child in node.children:
                walk(child)

        walk(self.root)
        return out


def group(pstates: Sequence[PState]) -> PStateTree:
    """Group worlds by identical descriptions, level by level."""
    if not pstates:
        raise ValidationError("cannot group an empty set of worlds")
    for ps in pstates:
        if not ps.fully_abstracted:
            raise ValidationError(f"world {ps.id} is not fully abstracted")
    n = pstates[0].depth
    order = {ps.id: ps.index for ps in pstates}

    def build(members: list[PState], level: int) -> tuple[PStateTreeNode, ...]:
        if level > n:
            return ()
        buckets: dict[frozenset[Fact], list[PState]] = {}
        for ps in members:
            buckets.setdefault(ps.level(level).facts, []).append(ps)
        nodes = []
        for facts, bucket in buckets.items():
            bucket.sort(key=lambda p: p.index)
            nodes.append(PStateTreeNode(
                level=level,
                pstate_ids=tuple(p.id for p in bucket),
                description=LevelDescription(level, facts),
                children=build(bucket, level + 1),
            ))
        nodes.sort(key=lambda node: order[node.pstate_ids[0]])
        return tuple(nodes)

    everyone = sorted(pstates, key=lambda p: p.index)
    root = PStateTreeNode(
        level=0,
        pstate_ids=tuple(p.id for p in everyone),
        description=None,
        children=build(everyone, 1),
    )
    return PStateTree(root=root, pstates=tuple(everyone))


def _group_proposition(joint: MassDistribution, ids: Sequence[str]) -> Proposition:
    return Proposition(joint.frame, frozenset(ids))


def rank(tree: PStateTree, joint: MassDistribution) -> PStateTree:
    """Annotate every group with the belief interval of its member set."""

    def annotate(node: PStateTreeNode) -> PStateTreeNode:
        iv = interval(joint, _group_proposition(joint, node.pstate_ids))
        return replace(node, interval=iv,
                       children=tuple(annotate(c) for c in node.children))

    ranked_root = annotate(tree.root)
    by_level: dict[str, list[EvidentialInterval]] = {pid: [] for pid in
                                                     (p.id for p in tree.pstates)}

    def collect(node: PStateTreeNode) -> None:
        if node.level >= 1:
            for pid in node.pstate_ids:
                by_level[pid].append(node.interval)
        for child in node.children:
            collect(child)

    collect(ranked_root)
    enriched = tuple(replace(ps, intervals=tuple(by_level[ps.id]))
                     for ps in tree.pstates)
    return PStateTree(root=ranked_root, pstates=enriched)


def _require_ranked(node: PStateTreeNode) -> EvidentialInterval:
    if node.interval is None:
        raise ValidationError("tree is not ranked; call rank() first")
    return node.interval


def _min_index(tree: PStateTree, node: PStateTreeNode) -> int:
    return min(tree.pstate(pid).index for pid in node.pstate_ids)


def select_initial(tree: PStateTree) -> PState:
    """Greedy top-down descent: best-believed group at each level, ties by id.

    Follows the grouping structure, so the result may differ from the
    globally best leaf when a strong leaf hides under a weak abstract group.
    """
    node = tree.root
    while node.children:
        node = max(node.children,
                   key=lambda c: (_require_ranked(c).key(), -_min_index(tree, c)))
    return tree.pstate(node.pstate_ids[0])


def descending_order(tree: PStateTree) -> list[PState]:
    """All worlds ordered by their leaf-group intervals, best first, ties by id."""
    leaves = tree.leaves()
    for leaf in leaves:
        _require_ranked(leaf)
    leaves.sort(key=lambda leaf: (tuple(-x for x in leaf.interval.key()),
                                  _min_index(tree, leaf)))
    out: list[PState] = []
    for leaf in leaves:
        out.extend(sorted((tree.pstate(pid) for pid in leaf.pstate_ids),
                          key=lambda p: p.index))
    return out


def pstate_interval(joint: MassDistribution, ps: PState) -> EvidentialInterval:
    """Belief interval of one single world under the joint evidence."""
    return interval(joint, _group_proposition(joint, [ps.id]))


@dataclass(frozen=True)
class WorldModel:
    """Everything derived from the initial evidence in one place."""

    domain: DomainSpec
    pstates: tuple[PState, ...]
    tree: PStateTree
    joint: MassDistribution

    def planning_order(self) -> list[PState]:
        """Worlds above the belief thresholds, in descending belief order."""
        cfg = self.domain.config
        out = []
        for ps in descending_order(self.tree):
            iv = pstate_interval(self.joint, ps)
            if (iv.plausibility >= cfg.plausibility_threshold
                    and iv.support >= cfg.support_threshold):
                out.append(ps)
        return out


def build_world_model(domain: DomainSpec,
                      evidence: Optional[Sequence[MassDistribution]] = None,
                      meter=None) -> WorldModel:
    """Generate, abstract, group and rank the possible worlds of a domain."""
    if evidence is None:
        evidence = domain.evidence
    if evidence is None:
        raise ValidationError(
            f"domain {domain.name!r} has no evidence section and none was supplied"
        )
    pstates, joint = generate_pstates(evidence, domain)
    abstracted = [abstract(ps, domain, meter=meter) for ps in pstates]
    tree = rank(group(abstracted), joint)
    return WorldModel(domain=domain, pstates=tree.pstates, tree=tree, joint=joint)
