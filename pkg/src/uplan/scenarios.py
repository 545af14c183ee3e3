"""Benchmark scenario synthesis.

Given a target number of initial worlds, evidence is synthesized over the
domain's detail-level frames so that exactly that many worlds survive: the
covered elements form a cross product, so counts that factor into the frame
sizes are hit exactly; other counts cover the next larger product and push
the surplus worlds below a plausibility threshold via strictly ordered
per-element masses.  The overlap factor steers which elements get covered:
high overlap concentrates the worlds in few abstract groups (favouring plan
reuse), low overlap spreads them out.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Sequence

from .domain import DomainSpec, derive_levels
from .errors import GenerationError
from .evidence import Frame, MassDistribution
from .state import LevelDescription
from .worlds import generate_pstates, pstate_interval

_BASE_DECAY = (0.55, 0.62, 0.69, 0.76, 0.83, 0.9)
_MAX_JITTER_ATTEMPTS = 8


@dataclass(frozen=True)
class Scenario:
    """A domain instantiated with synthesized evidence for one world count."""

    domain: DomainSpec
    evidence: tuple[MassDistribution, ...]
    threshold: float
    target_count: int

    def instantiate(self) -> DomainSpec:
        return self.domain.with_evidence(self.evidence,
                                         plausibility_threshold=self.threshold)


def _abstract_signature(domain: DomainSpec, frames: Sequence[Frame],
                        combo: Sequence[str]) -> frozenset:
    """Level-(n-1) description of the world a combo induces (its own detail
    description when the domain has a single level)."""
    facts = set()
    for frame, element in zip(frames, combo):
        facts.update(domain.element_facts(frame.id, element))
    detail = LevelDescription(domain.n_levels, frozenset(facts))
    if domain.n_levels == 1:
        return detail.facts
    levels = derive_levels(detail, domain)
    return levels[domain.n_levels - 2].facts


def _coverage_choices(sizes: Sequence[int]):
    subsets_per_frame = []
    for size in sizes:
        subsets = []
        for mask in range(1, 1 << size):
            subsets.append(tuple(i for i in range(size) if mask >> i & 1))
        subsets.sort(key=lambda s: (len(s), s))
        subsets_per_frame.append(subsets)
    return itertools.product(*subsets_per_frame)


def _select_coverage(domain: DomainSpec, frames: Sequence[Frame], count: int,
                     overlap: float) -> tuple[list[tuple[int, ...]], int]:
    """Pick the covered element subsets: exact product if possible, else the
    smallest product above the target.  Among candidates of equal product,
    the overlap factor decides between the fewest and the most distinct
    abstract groups."""
    sizes = [f.size for f in frames]
    total = 1
    for s in sizes:
        total *= s
    if count > total:
        raise GenerationError(
            f"domain {domain.name!r} has only {total} possible worlds; "
            f"cannot build a scenario with {count}"
        )
    best: dict[int, tuple] = {}
    for choice in _coverage_choices(sizes):
        product = 1
        for subset in choice:
            product *= len(subset)
        if product < count or product > total:
            continue
        combos = list(itertools.product(*(
            [frames[i].elements[j] for j in subset]
            for i, subset in enumerate(choice))))
        signatures = {_abstract_signature(domain, frames, c) for c in combos}
        score = len(signatures)
        if overlap >= 0.5:
            # few abstract groups, multi-element coverage on early frames
            key = (score, tuple(-len(s) for s in choice), choice)
        else:
            key = (-score, choice)
        if product not in best or key < best[product][0]:
            best[product] = (key, choice)
    if count in best:
        return list(best[count][1]), count
    candidates = sorted(p for p in best if p > count)
    if not candidates:
        raise GenerationError(
            f"no coverage of {count} worlds is reachable in {domain.name!r}"
        )
    product = candidates[0]
    return list(best[product][1]), product


def _build_evidence(frames: Sequence[Frame], coverage: Sequence[tuple[int, ...]],
                    seed: int, attempt: int) -> list[MassDistribution]:
    rng = random.Random((seed, attempt))
    out = []
    for fi, (frame, subset) in enumerate(zip(frames, coverage)):
        elements = [frame.elements[j] for j in subset]
        if len(elements) == 1:
            out.append(MassDistribution.from_members(frame, {tuple(elements): 1.0}))
            continue
        decay = _BASE_DECAY[fi % len(_BASE_DECAY)]
        weights = []
        for rank in range(len(elements)):
            jitter = rng.uniform(-0.02, 0.02)
            weights.append(max(0.05, decay ** rank + jitter))
        total = sum(weights)
        singleton_share = 0.9
        focal = {}
        for element, w in zip(elements, weights):
            focal[(element,)] = round(singleton_share * w / total, 9)
        assigned = sum(focal.values())
        focal[tuple(elements)] = round(1.0 - assigned, 9)
        out.append(MassDistribution.from_members(frame, focal))
    return out


def synthesize(domain: DomainSpec, count: int, overlap: float,
               seed: int) -> Scenario:
    """Evidence (and threshold, when needed) yielding ``count`` worlds."""
    if count < 1:
        raise GenerationError("world count must be at least 1")
    frames = domain.lowest_frames()
    coverage, covered = _select_coverage(domain, frames, count, overlap)

    for attempt in range(_MAX_JITTER_ATTEMPTS):
        evidence = _build_evidence(frames, coverage, seed, attempt)
        if covered == count:
            return Scenario(domain, tuple(evidence), 0.0, count)
        pstates, joint = generate_pstates(evidence, domain)
        ranked = sorted((pstate_interval(joint, ps).plausibility, -ps.index)
                        for ps in pstates)
        ranked.reverse()
        keep = ranked[count - 1][0]
        drop = ranked[count][0]
        if keep > drop + 1e-12:
            threshold = round((keep + drop) / 2.0, 9)
            return Scenario(domain, tuple(evidence), threshold, count)
    raise GenerationError(
        f"could not separate {count} worlds by plausibility after "
        f"{_MAX_JITTER_ATTEMPTS} attempts (seed {seed})"
    )
