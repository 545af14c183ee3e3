"""World generation, abstraction, grouping and evidential ranking."""

import pytest

from uplan.errors import ValidationError
from uplan.evidence import Frame, MassDistribution, Proposition, support
from uplan.loader import load_domain_text
from uplan.worlds import (
    abstract,
    build_world_model,
    descending_order,
    generate_pstates,
    group,
    pstate_interval,
    rank,
    select_initial,
)
from oracles import oracle_support

# Single-aspect domain with three detailed worlds: a and b merge one level up.
GROUPING_DOMAIN = """
config:
  levels: 3
  goal: noop

frames:
  spot3 level=3: a b c
  spot2 level=2: north south
  spot1 level=1: known

templates:
  spot3 a: pos(a)
  spot3 b: pos(b)
  spot3 c: pos(c)
  spot2 north: zone(north)
  spot2 south: zone(south)
  spot1 known: area(known)

compat:
  spot3 spot2: a>north b>north c>south
  spot2 spot1: north>known south>known

mappings:
  3->2:
    pos(a) => zone(north)
    pos(b) => zone(north)
    pos(c) => zone(south)
    done(it) =>
  2->1:
    zone(north) => area(known)
    zone(south) => area(known)

operators:
  operator noop:
    level: 1
    plot:
      step: finish=1.0
    probability:
      default: 1.0
    post:
    planfail: backtrack

  operator act2:
    level: 2
    plot:
      step: finish=1.0
    probability:
      default: 1.0
    post:
    planfail: backtrack

  operator finish:
    level: 3
    change:
      add: done(it)
    probability:
      default: 1.0
    post: done(it)
    planfail: backtrack
"""


def load_grouping_domain():
    text = GROUPING_DOMAIN.replace(
        "operator noop:\n    level: 1\n    plot:\n      step: finish=1.0",
        "operator noop:\n    level: 1\n    plot:\n      step: act2=1.0")
    return load_domain_text(text, name="grouping")


@pytest.fixture(scope="module")
def grouping():
    return load_grouping_domain()


def evidence_for(domain, focal):
    frame = domain.lowest_frames()[0]
    return [MassDistribution.from_members(frame, focal)]


class TestGenerate:
    def test_certainty_gives_one_world(self, grouping):
        pstates, joint = generate_pstates(evidence_for(grouping, {("a",): 1.0}),
                                          grouping)
        assert [p.id for p in pstates] == ["a"]
        assert pstates[0].mass == 1.0
        assert sum(joint.masses) == pytest.approx(1.0)

    def test_three_detailed_worlds(self, grouping):
        pstates, _ = generate_pstates(
            evidence_for(grouping, {("a",): 0.5, ("b",): 0.3, ("c",): 0.2}),
            grouping)
        assert [p.id for p in pstates] == ["a", "b", "c"]
        assert {str(f) for f in pstates[0].level(3).facts} == {"pos(a)"}

    def test_product_of_singletons(self, aircombat):
        from uplan.evidence import MassDistribution as MD

        frames = {f.id: f for f in aircombat.lowest_frames()}
        ev = [
            MD.from_members(frames["position3"],
                            {("far",): 0.5, ("mid",): 0.3, ("near",): 0.2}),
            MD.from_members(frames["craft3"],
                            {("fighter",): 0.7, ("bomber",): 0.3}),
            MD.from_members(frames["alert3"], {("aware",): 1.0}),
            MD.from_members(frames["ecm3"], {("clean",): 1.0}),
        ]
        pstates, _ = generate_pstates(ev, aircombat)
        assert len(pstates) == 6
        masses = {p.id: p.mass for p in pstates}
        assert masses["far+fighter+aware+clean"] == pytest.approx(0.35)
        assert masses["near+bomber+aware+clean"] == pytest.approx(0.06)

    def test_disjunction_only_mass_still_spawns_worlds(self, grouping):
        pstates, joint = generate_pstates(
            evidence_for(grouping, {("a", "b"): 0.7, ("c",): 0.3}), grouping)
        assert [p.id for p in pstates] == ["a", "b", "c"]
        iv_a = pstate_interval(joint, pstates[0])
        assert iv_a.support == pytest.approx(0.0)
        assert iv_a.plausibility == pytest.approx(0.7)

    def test_missing_distribution_rejected(self, aircombat):
        frame = aircombat.lowest_frames()[0]
        only_one = [MassDistribution.from_members(frame, {("far",): 1.0})]
        with pytest.raises(ValidationError, match="missing evidence"):
            generate_pstates(only_one, aircombat)


class TestAbstract:
    def test_merging_detail(self, grouping):
        pstates, _ = generate_pstates(
            evidence_for(grouping, {("a",): 0.5, ("b",): 0.5}), grouping)
        a, b = (abstract(p, grouping) for p in pstates)
        assert a.level(3) != b.level(3)
        assert a.level(2) == b.level(2)
        assert a.level(1) == b.level(1)

    def test_deterministic(self, grouping):
        pstates, _ = generate_pstates(evidence_for(grouping, {("a",): 1.0}),
                                      grouping)
        first = abstract(pstates[0], grouping)
        second = abstract(pstates[0], grouping)
        assert first.levels == second.levels

    def test_fixture_mapping_table(self, aircombat_worlds):
        ps = next(p for p in aircombat_worlds.pstates
                  if p.id == "near+bomber+unaware+clean")
        level2 = {str(f) for f in ps.level(2).facts}
        assert level2 == {"sector(within_visual)", "profile(heavy)",
                          "contact(tracked)", "spectrum(surveyed)"}
        level1 = {str(f) for f in ps.level(1).facts}
        assert level1 == {"target(present)", "threat(armed)", "contact(made)",
                          "em_picture(formed)"}

    def test_unmapped_fact_rejected(self, grouping):
        from dataclasses import replace

        from uplan.state import LevelDescription, parse_atom

        pstates, _ = generate_pstates(evidence_for(grouping, {("a",): 1.0}),
                                      grouping)
        broken = replace(
            pstates[0],
            levels=(None, None,
                    LevelDescription(3, frozenset({parse_atom("mystery(f)")}))))
        with pytest.raises(ValidationError, match="no mapping"):
            abstract(broken, grouping)


def three_world_tree(grouping, focal):
    pstates, joint = generate_pstates(evidence_for(grouping, focal), grouping)
    tree = group([abstract(p, grouping) for p in pstates])
    return rank(tree, joint), joint


class TestGroup:
    def test_fig_style_grouping(self, grouping):
        tree, _ = three_world_tree(grouping,
                                   {("a",): 0.5, ("b",): 0.3, ("c",): 0.2})
        assert [n.pstate_ids for n in tree.nodes_at_level(1)] == [("a", "b", "c")]
        assert [n.pstate_ids for n in tree.nodes_at_level(2)] == [("a", "b"), ("c",)]
        assert [n.pstate_ids for n in tree.nodes_at_level(3)] == [("a",), ("b",), ("c",)]

    def test_single_world_chain(self, grouping):
        tree, _ = three_world_tree(grouping, {("a",): 1.0})
        assert tree.root.pstate_ids == ("a",)
        node = tree.root
        depth = 0
        while node.children:
            assert len(node.children) == 1
            node = node.children[0]
            depth += 1
        assert depth == 3

    def test_flattening_leaves_recovers_input(self, aircombat_worlds):
        tree = aircombat_worlds.tree
        leaf_ids = [pid for leaf in tree.leaves() for pid in leaf.pstate_ids]
        assert sorted(leaf_ids) == sorted(p.id for p in aircombat_worlds.pstates)
        for node in tree.nodes_at_level(2):
            child_ids = [pid for c in node.children for pid in c.pstate_ids]
            assert sorted(child_ids) == sorted(node.pstate_ids)


class TestRank:
    def test_root_is_certain(self, grouping):
        tree, _ = three_world_tree(grouping,
                                   {("a",): 0.5, ("b",): 0.3, ("c",): 0.2})
        assert tree.root.interval.support == pytest.approx(1.0)
        assert tree.root.interval.plausibility == pytest.approx(1.0)

    def test_certain_world(self, grouping):
        tree, _ = three_world_tree(grouping, {("a",): 1.0})
        leaf = tree.leaves()[0]
        assert leaf.interval.support == pytest.approx(1.0)

    def test_group_interval_with_disjunction(self, grouping):
        # oracle: Spt({a,b}) = m(a) + m(b) = 0.8, Pls = 1 - Spt({c}) = 1.0
        focal = {("a",): 0.5, ("b",): 0.3, ("a", "b", "c"): 0.2}
        tree, joint = three_world_tree(grouping, focal)
        fm = {frozenset(p.members): v for p, v in joint.focal_items()}
        assert oracle_support(fm, frozenset({"a", "b"})) == pytest.approx(0.8)
        node = tree.nodes_at_level(2)[0]
        assert node.pstate_ids == ("a", "b")
        assert node.interval.support == pytest.approx(0.8)
        assert node.interval.plausibility == pytest.approx(1.0)

    def test_pstate_intervals_filled(self, aircombat_worlds):
        for ps in aircombat_worlds.pstates:
            assert len(ps.intervals) == 3
            for iv in ps.intervals:
                assert iv.support <= iv.plausibility

    def test_leaf_support_sum_bounded(self, aircombat_worlds):
        total = sum(leaf.interval.support
                    for leaf in aircombat_worlds.tree.leaves())
        assert total <= 1.0 + 1e-9


class TestSelection:
    def test_single_world(self, grouping):
        tree, _ = three_world_tree(grouping, {("a",): 1.0})
        assert select_initial(tree).id == "a"

    def test_greedy_path(self, grouping):
        tree, _ = three_world_tree(grouping,
                                   {("a",): 0.5, ("b",): 0.3, ("c",): 0.2})
        assert select_initial(tree).id == "a"

    def test_plausibility_breaks_support_tie(self, grouping):
        # the leaves under {a,b} tie on support 0.2; mass on b∨c lifts only
        # b's plausibility, so b wins even though id order favours a
        focal = {("a",): 0.2, ("b",): 0.2, ("b", "c"): 0.35,
                 ("a", "b", "c"): 0.25}
        tree, _ = three_world_tree(grouping, focal)
        leaves = {leaf.pstate_ids[0]: leaf.interval
                  for leaf in tree.leaves()}
        assert leaves["a"].support == pytest.approx(0.2)
        assert leaves["b"].support == pytest.approx(0.2)
        assert leaves["b"].plausibility > leaves["a"].plausibility
        assert select_initial(tree).id == "b"

    def test_greedy_differs_from_global_best(self, grouping):
        # group {a,b} outranks {c} (0.5 > 0.45) but the single best leaf is c
        focal = {("a",): 0.25, ("b",): 0.25, ("c",): 0.45, ("a", "b", "c"): 0.05}
        tree, _ = three_world_tree(grouping, focal)
        assert select_initial(tree).id == "a"
        assert descending_order(tree)[0].id == "c"

    def test_descending_order(self, grouping):
        tree, _ = three_world_tree(grouping,
                                   {("a",): 0.5, ("b",): 0.3, ("c",): 0.2})
        assert [p.id for p in descending_order(tree)] == ["a", "b", "c"]

    def test_descending_tie_uses_id_order(self, grouping):
        tree, _ = three_world_tree(
            grouping, {("a",): 0.3, ("b",): 0.3, ("c",): 0.4})
        assert [p.id for p in descending_order(tree)] == ["c", "a", "b"]

    def test_disjunction_only_ranks_below_singleton(self, grouping):
        # oracle: Spt(c) = 0.3 beats Spt(a) = Spt(b) = 0 from a∨b mass
        tree, _ = three_world_tree(grouping, {("a", "b"): 0.7, ("c",): 0.3})
        assert [p.id for p in descending_order(tree)] == ["c", "a", "b"]


class TestWorldModel:
    def test_planning_order_applies_threshold(self, grouping):
        wm = build_world_model(
            grouping,
            evidence_for(grouping, {("a",): 0.5, ("b",): 0.3, ("c",): 0.2}))
        assert [p.id for p in wm.planning_order()] == ["a", "b", "c"]
        strict = grouping.with_evidence(
            evidence_for(grouping, {("a",): 0.5, ("b",): 0.3, ("c",): 0.2}),
            plausibility_threshold=0.25)
        wm2 = build_world_model(strict)
        assert [p.id for p in wm2.planning_order()] == ["a", "b"]

    def test_aircombat_order_head(self, aircombat_worlds):
        order = aircombat_worlds.planning_order()
        assert order[0].id == "far+fighter+aware+clean"
        assert len(order) == 12
