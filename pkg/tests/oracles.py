"""Independent brute-force oracles used to compute expected test values.

These deliberately avoid the package's bitmask kernel and planner search:
set arithmetic and exhaustive enumeration only, so they remain an
independent check on the implementation paths they verify.
"""

from __future__ import annotations

import itertools
from typing import Mapping, Sequence

FocalMap = Mapping[frozenset, float]


def oracle_support(focal: FocalMap, query: frozenset) -> float:
    return sum(mass for members, mass in focal.items() if members <= query)


def oracle_plausibility(focal: FocalMap, query: frozenset,
                        universe: frozenset) -> float:
    return 1.0 - oracle_support(focal, universe - query)


def oracle_joint(sources: Sequence[FocalMap]) -> dict[frozenset, float]:
    """Exhaustive product enumeration over focal-set combinations."""
    out: dict[frozenset, float] = {}
    for combo in itertools.product(*(list(f.items()) for f in sources)):
        members = frozenset(itertools.product(*(sorted(m) for m, _ in combo)))
        mass = 1.0
        for _, v in combo:
            mass *= v
        out[members] = out.get(members, 0.0) + mass
    return out


def oracle_project(focal: FocalMap, image: Mapping[str, frozenset],
                   ) -> dict[frozenset, float]:
    """Exhaustive relation-image projection with merging."""
    out: dict[frozenset, float] = {}
    for members, mass in focal.items():
        target = frozenset().union(*(image[e] for e in members))
        out[target] = out.get(target, 0.0) + mass
    return out


def oracle_prefix_trie(sequences: Sequence[tuple]) -> dict:
    """Plain nested-dict prefix trie over step-key sequences."""
    root: dict = {}
    for seq in sequences:
        node = root
        for key in seq:
            node = node.setdefault(key, {})
        node.setdefault(None, 0)
        node[None] += 1
    return root


def trie_sequences(trie: dict, prefix: tuple = ()) -> list[tuple]:
    """Flatten a nested-dict trie back into its sequence multiset."""
    out: list[tuple] = []
    for key, sub in trie.items():
        if key is None:
            out.extend([prefix] * sub)
        else:
            out.extend(trie_sequences(sub, prefix + (key,)))
    return out


def exhaustive_completions(domain, ps) -> list[tuple[str, ...]]:
    """Every operator-name sequence that achieves the goal, by brute force.

    Tries every alternative of every plot step and every helper candidate
    for unmet satisfiable literals.  Exponential; small domains only.
    """
    from uplan.domain import apply_primitive, necessary_binding
    from uplan.state import first_binding, match_atom, substitute

    n = domain.n_levels

    def achieve(op, current, seq, depth):
        env = necessary_binding(op, current.level(op.level))
        if env is None:
            return
        yield from sat_phase(op, current, seq, dict(env), 0, depth)

    def sat_phase(op, current, seq, env, i, depth):
        if i == len(op.satisfiable):
            yield from body(op, current, seq, env, depth)
            return
        lit = op.satisfiable[i]
        ext = first_binding((lit,), current.level(op.level).facts, env)
        if ext is not None:
            yield from sat_phase(op, current, seq, dict(ext), i + 1, depth)
            return
        if depth <= 0 or not lit.positive:
            return
        target = substitute(lit.atom, env)
        for cand in domain.operators:
            if not (op.level <= cand.level <= n):
                continue
            if not any(match_atom(p, target, {}) is not None
                       or match_atom(target, p, {}) is not None
                       for p in cand.post):
                continue
            for cur2, seq2 in achieve(cand, current, seq, depth - 1):
                ext2 = first_binding((lit,), cur2.level(op.level).facts, env)
                if ext2 is not None:
                    yield from sat_phase(op, cur2, seq2, dict(ext2), i + 1, depth)

    def body(op, current, seq, env, depth):
        seq = seq + (op.name,)
        if op.is_primitive:
            yield apply_primitive(op, current, domain, binding=env), seq
            return
        states = [(current, seq)]
        for alternatives in op.plot or ():
            nxt = []
            for cur, s in states:
                for entry in alternatives:
                    child = domain.operator(entry.child_operator)
                    nxt.extend(achieve(child, cur, s, depth))
            states = nxt
        for cur, s in states:
            facts = cur.level(op.level).facts
            if all(substitute(p, env) in facts for p in op.post):
                yield cur, s

    goal = domain.goal_operator
    results = {seq for _, seq in achieve(goal, ps, (), domain.config.helper_depth)}
    return sorted(results)
