"""Evidential kernel: belief intervals against a brute-force powerset oracle."""

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uplan.errors import ValidationError
from uplan.evidence import (
    CompatibilityRelation,
    EvidentialInterval,
    Frame,
    MassDistribution,
    Proposition,
    compare_intervals,
    interval,
    joint_mass,
    marginalize,
    plausibility,
    project,
    support,
)
from oracles import oracle_joint, oracle_plausibility, oracle_project, oracle_support

XYZ = Frame("xyz", ("x", "y", "z"))
UV = Frame("uv", ("u", "v"))


def prop(frame, *members):
    return Proposition(frame, frozenset(members))


def dist(frame, focal):
    return MassDistribution.from_members(frame, focal)


def focal_map(m):
    return {frozenset(p.members): v for p, v in m.focal_items()}


class TestTypes:
    def test_frame_rejects_duplicates(self):
        with pytest.raises(ValidationError):
            Frame("bad", ("a", "a"))

    def test_frame_rejects_empty(self):
        with pytest.raises(ValidationError):
            Frame("bad", ())

    def test_proposition_must_be_nonempty_subset(self):
        with pytest.raises(ValidationError):
            Proposition(XYZ, frozenset())
        with pytest.raises(ValidationError):
            Proposition(XYZ, frozenset({"nope"}))

    def test_interval_orders_bounds(self):
        with pytest.raises(ValidationError):
            EvidentialInterval(0.8, 0.2)

    def test_masses_must_sum_to_one(self):
        with pytest.raises(ValidationError, match="renormalization"):
            dist(XYZ, {("x",): 0.5, ("y",): 0.4})

    def test_zero_mass_rejected(self):
        with pytest.raises(ValidationError):
            dist(XYZ, {("x",): 0.0, ("x", "y", "z"): 1.0})

    def test_duplicate_focal_rejected(self):
        with pytest.raises(ValidationError):
            MassDistribution(XYZ, (1, 1), (0.5, 0.5))


class TestSupport:
    def test_vacuous_gives_zero_on_proper_subset(self):
        m = MassDistribution.vacuous(XYZ)
        assert support(m, prop(XYZ, "x", "y")) == 0.0

    def test_certainty(self):
        m = dist(XYZ, {("x",): 1.0})
        assert support(m, prop(XYZ, "x")) == 1.0

    def test_partial_belief_counts_subsets(self):
        # oracle: masses of focal sets contained in {x, y} sum to 0.6
        m = dist(XYZ, {("x",): 0.6, ("x", "y", "z"): 0.4})
        q = frozenset({"x", "y"})
        assert oracle_support(focal_map(m), q) == pytest.approx(0.6)
        assert support(m, prop(XYZ, "x", "y")) == pytest.approx(0.6)

    def test_frame_mismatch_rejected(self):
        m = dist(XYZ, {("x",): 1.0})
        with pytest.raises(ValidationError):
            support(m, prop(UV, "u"))


class TestPlausibility:
    def test_vacuous_refutes_nothing(self):
        m = MassDistribution.vacuous(XYZ)
        assert plausibility(m, prop(XYZ, "y")) == 1.0

    def test_certainty_in_complement(self):
        m = dist(XYZ, {("x",): 1.0})
        assert plausibility(m, prop(XYZ, "y", "z")) == 0.0

    def test_partial_belief(self):
        # oracle: 1 - Spt({x, z}) = 1 - 0.6 = 0.4
        m = dist(XYZ, {("x",): 0.6, ("x", "y", "z"): 0.4})
        expected = oracle_plausibility(focal_map(m), frozenset({"y"}),
                                       frozenset(XYZ.elements))
        assert expected == pytest.approx(0.4)
        assert plausibility(m, prop(XYZ, "y")) == pytest.approx(0.4)


class TestInterval:
    def test_total_ignorance(self):
        m = MassDistribution.vacuous(XYZ)
        iv = interval(m, prop(XYZ, "x"))
        assert (iv.support, iv.plausibility) == (0.0, 1.0)

    def test_certainty(self):
        m = dist(XYZ, {("x",): 1.0})
        iv = interval(m, prop(XYZ, "x"))
        assert (iv.support, iv.plausibility) == (1.0, 1.0)

    def test_mixed(self):
        m = dist(XYZ, {("x",): 0.6, ("x", "y", "z"): 0.4})
        iv = interval(m, prop(XYZ, "x"))
        assert iv.support == pytest.approx(0.6)
        assert iv.plausibility == pytest.approx(1.0)


class TestCompareIntervals:
    def test_higher_support_wins(self):
        assert compare_intervals(EvidentialInterval(0.6, 0.8),
                                 EvidentialInterval(0.5, 1.0)) == 1

    def test_tie_broken_by_plausibility(self):
        assert compare_intervals(EvidentialInterval(0.5, 0.9),
                                 EvidentialInterval(0.5, 0.7)) == 1

    def test_full_tie_left_to_caller(self):
        assert compare_intervals(EvidentialInterval(0.5, 0.9),
                                 EvidentialInterval(0.5, 0.9)) == 0


class TestJointMass:
    def test_single_source_is_identity(self):
        m = dist(XYZ, {("x",): 0.6, ("x", "y", "z"): 0.4})
        j = joint_mass([m])
        assert j.frame.elements == XYZ.elements
        assert focal_map(j) == focal_map(m)

    def test_certainty_composes(self):
        j = joint_mass([dist(XYZ, {("x",): 1.0}), dist(UV, {("u",): 1.0})])
        assert focal_map(j) == {frozenset({"x+u"}): 1.0}

    def test_product_masses(self):
        m1 = dist(XYZ, {("x",): 0.7, ("x", "y", "z"): 0.3})
        m2 = dist(UV, {("u",): 0.5, ("v",): 0.5})
        expected = oracle_joint([focal_map(m1), focal_map(m2)])
        assert sorted(expected.values()) == pytest.approx([0.15, 0.15, 0.35, 0.35])
        j = joint_mass([m1, m2])
        got = {frozenset(tuple(e.split("+")) for e in p): v
               for p, v in ((frozenset(pr.members), v)
                            for pr, v in j.focal_items())}
        assert got == {frozenset(m): pytest.approx(v) for m, v in expected.items()}

    def test_duplicate_frame_rejected(self):
        m = dist(XYZ, {("x",): 1.0})
        with pytest.raises(ValidationError):
            joint_mass([m, m])


def _chain_frames():
    lower = Frame("low", ("l1", "l2", "l3"), level=2)
    upper = Frame("up", ("u1", "u2"), level=1)
    return lower, upper


class TestProject:
    def test_identity_bijection(self):
        lower = Frame("low", ("a", "b"), level=2)
        upper = Frame("up", ("a2", "b2"), level=1)
        rel = CompatibilityRelation(lower, upper,
                                    frozenset({("a", "a2"), ("b", "b2")}))
        m = dist(lower, {("a",): 0.4, ("b",): 0.6})
        p = project(m, rel, "up")
        assert focal_map(p) == {frozenset({"a2"}): 0.4, frozenset({"b2"}): 0.6}

    def test_abstraction_merges(self):
        lower, upper = _chain_frames()
        rel = CompatibilityRelation(lower, upper, frozenset(
            {("l1", "u1"), ("l2", "u1"), ("l3", "u2")}))
        m = dist(lower, {("l1",): 0.4, ("l2",): 0.6})
        p = project(m, rel, "up")
        assert focal_map(p) == {frozenset({"u1"}): pytest.approx(1.0)}

    def test_many_to_many_against_oracle(self):
        lower, upper = _chain_frames()
        rel = CompatibilityRelation(lower, upper, frozenset(
            {("l1", "u1"), ("l2", "u1"), ("l2", "u2"), ("l3", "u2")}))
        m = dist(lower, {("l1",): 0.2, ("l2",): 0.3, ("l2", "l3"): 0.35,
                         ("l1", "l2", "l3"): 0.15})
        image = {"l1": frozenset({"u1"}), "l2": frozenset({"u1", "u2"}),
                 "l3": frozenset({"u2"})}
        expected = oracle_project(focal_map(m), image)
        got = focal_map(project(m, rel, "up"))
        assert got == {m_: pytest.approx(v) for m_, v in expected.items()}

    def test_downward(self):
        lower, upper = _chain_frames()
        rel = CompatibilityRelation(lower, upper, frozenset(
            {("l1", "u1"), ("l2", "u1"), ("l3", "u2")}))
        m = dist(upper, {("u1",): 0.7, ("u2",): 0.3})
        p = project(m, rel, "down")
        assert focal_map(p) == {frozenset({"l1", "l2"}): pytest.approx(0.7),
                                frozenset({"l3"}): pytest.approx(0.3)}

    def test_relation_requires_adjacent_levels(self):
        a = Frame("a", ("x",), level=3)
        b = Frame("b", ("y",), level=1)
        with pytest.raises(ValidationError):
            CompatibilityRelation(a, b, frozenset({("x", "y")}))

    def test_relation_requires_coverage(self):
        lower, upper = _chain_frames()
        with pytest.raises(ValidationError, match="no compatible"):
            CompatibilityRelation(lower, upper,
                                  frozenset({("l1", "u1"), ("l2", "u1")}))


# --- randomized properties -------------------------------------------------

def random_distribution(rng, frame):
    subsets = []
    for mask in range(1, 1 << frame.size):
        subsets.append(tuple(e for i, e in enumerate(frame.elements)
                             if mask >> i & 1))
    chosen = rng.sample(subsets, rng.randint(1, len(subsets)))
    weights = [rng.random() + 1e-3 for _ in chosen]
    total = sum(weights)
    return dist(frame, {s: w / total for s, w in zip(chosen, weights)})


@st.composite
def frames_and_masses(draw):
    size = draw(st.integers(min_value=1, max_value=5))
    frame = Frame("f", tuple(f"e{i}" for i in range(size)))
    seed = draw(st.integers(min_value=0, max_value=10_000))
    return frame, random_distribution(random.Random(seed), frame)


@given(frames_and_masses())
@settings(max_examples=120, deadline=None)
def test_interval_bounds_and_theta(fm):
    frame, m = fm
    theta = prop(frame, *frame.elements)
    assert support(m, theta) == pytest.approx(1.0, abs=1e-9)
    assert plausibility(m, theta) == pytest.approx(1.0, abs=1e-9)
    for mask in range(1, 1 << frame.size):
        members = [e for i, e in enumerate(frame.elements) if mask >> i & 1]
        iv = interval(m, prop(frame, *members))
        assert -1e-12 <= iv.support <= iv.plausibility + 1e-12 <= 1 + 2e-12


@given(frames_and_masses())
@settings(max_examples=120, deadline=None)
def test_support_monotone_and_matches_oracle(fm):
    frame, m = fm
    focal = focal_map(m)
    universe = frozenset(frame.elements)
    for mask in range(1, 1 << frame.size):
        members = frozenset(e for i, e in enumerate(frame.elements)
                            if mask >> i & 1)
        p = prop(frame, *members)
        assert support(m, p) == pytest.approx(oracle_support(focal, members),
                                              abs=1e-9)
        assert plausibility(m, p) == pytest.approx(
            oracle_plausibility(focal, members, universe), abs=1e-9)
        for extra in universe - members:
            bigger = prop(frame, *(members | {extra}))
            assert support(m, p) <= support(m, bigger) + 1e-12


@given(st.integers(min_value=0, max_value=5_000))
@settings(max_examples=60, deadline=None)
def test_joint_sums_to_one_and_marginalizes_back(seed):
    rng = random.Random(seed)
    f1 = Frame("f1", ("a", "b", "c"))
    f2 = Frame("f2", ("p", "q"))
    m1 = random_distribution(rng, f1)
    m2 = random_distribution(rng, f2)
    j = joint_mass([m1, m2])
    assert sum(j.masses) == pytest.approx(1.0, abs=1e-9)
    back1 = marginalize(j, [f1, f2], 0)
    back2 = marginalize(j, [f1, f2], 1)
    for original, back in ((m1, back1), (m2, back2)):
        got = {frozenset(p.members): v for p, v in back.focal_items()}
        want = focal_map(original)
        assert set(got) == set(want)
        for k in want:
            assert got[k] == pytest.approx(want[k], abs=1e-9)


@given(st.integers(min_value=0, max_value=5_000))
@settings(max_examples=60, deadline=None)
def test_project_preserves_total_mass(seed):
    rng = random.Random(seed)
    lower = Frame("low", ("l1", "l2", "l3"), level=2)
    upper = Frame("up", ("u1", "u2"), level=1)
    pairs = {("l1", "u1"), ("l2", "u2"), ("l3", "u2")}
    if rng.random() < 0.5:
        pairs.add(("l2", "u1"))
    rel = CompatibilityRelation(lower, upper, frozenset(pairs))
    m = random_distribution(rng, lower)
    p = project(m, rel, "up")
    assert sum(p.masses) == pytest.approx(1.0, abs=1e-9)
