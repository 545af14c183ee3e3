"""Ground facts, patterns, condition formulas and world-state descriptions.

Facts are flat predicates over constant arguments, e.g. ``range(far)``.
Patterns are facts whose arguments may be variables written ``?x``; a
conjunction of positive/negated patterns forms the condition language used
by operator preconditions, probability tables and causal rules.  States are
closed-world: a fact not present in a level description is false.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from .errors import ValidationError

_ATOM_RE = re.compile(r"^([A-Za-z_][\w-]*)(?:\(([^()]*)\))?$")
_TERM_RE = re.compile(r"^\??[A-Za-z_][\w-]*$")

Binding = dict[str, str]


@dataclass(frozen=True)
class Atom:
    """A predicate with constant or variable (``?x``) arguments."""

    name: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(self.args)})"

    @property
    def is_ground(self) -> bool:
        return not any(a.startswith("?") for a in self.args)

    def variables(self) -> set[str]:
        return {a for a in self.args if a.startswith("?")}


# A ground Atom doubles as a fact; the alias marks intent at use sites.
Fact = Atom


@dataclass(frozen=True)
class Literal:
    """A positive or negated atom inside a condition conjunction."""

    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"!{self.atom}"


Wff = tuple[Literal, ...]


def parse_atom(text: str) -> Atom:
    m = _ATOM_RE.match(text.strip())
    if not m:
        raise ValidationError(f"malformed fact or pattern: {text!r}")
    name, argtext = m.group(1), m.group(2)
    if argtext is None or argtext.strip() == "":
        args: tuple[str, ...] = ()
    else:
        args = tuple(a.strip() for a in argtext.split(","))
        for a in args:
            if not _TERM_RE.match(a):
                raise ValidationError(f"malformed argument {a!r} in {text!r}")
    return Atom(name, args)


def parse_literal(text: str) -> Literal:
    text = text.strip()
    if text.startswith("!"):
        return Literal(parse_atom(text[1:]), positive=False)
    return Literal(parse_atom(text), positive=True)


def parse_wff(text: str) -> Wff:
    """Parse a comma-separated conjunction of literals; empty text is the empty wff."""
    text = text.strip()
    if not text:
        return ()
    return tuple(parse_literal(part) for part in text.split(",") if part.strip())


def substitute(atom: Atom, binding: Mapping[str, str]) -> Atom:
    if atom.is_ground:
        return atom
    return Atom(atom.name, tuple(binding.get(a, a) for a in atom.args))


def match_atom(pattern: Atom, fact: Fact, binding: Mapping[str, str]) -> Optional[Binding]:
    """Unify a pattern against one ground fact, extending ``binding``; None on mismatch."""
    if pattern.name != fact.name or len(pattern.args) != len(fact.args):
        return None
    out = dict(binding)
    for p, f in zip(pattern.args, fact.args):
        if p.startswith("?"):
            bound = out.get(p)
            if bound is None:
                out[p] = f
            elif bound != f:
                return None
        elif p != f:
            return None
    return out


def _sorted_facts(facts: frozenset[Fact]) -> list[Fact]:
    return sorted(facts, key=str)


def satisfy(wff: Wff, facts: frozenset[Fact], binding: Optional[Mapping[str, str]] = None,
            meter=None) -> Iterator[Binding]:
    """Yield every binding (in deterministic order) under which ``wff`` holds.

    Positive literals bind variables by matching against the facts in sorted
    order; negated literals must be ground once reached and are checked under
    the closed-world assumption.
    """
    start: Binding = dict(binding) if binding else {}

    def walk(idx: int, env: Binding) -> Iterator[Binding]:
        if idx == len(wff):
            yield env
            return
        lit = wff[idx]
        atom = substitute(lit.atom, env)
        if lit.positive:
            if atom.is_ground:
                if meter is not None:
                    meter.tick()
                if atom in facts:
                    yield from walk(idx + 1, env)
            else:
                for fact in _sorted_facts(facts):
                    if meter is not None:
                        meter.tick()
                    ext = match_atom(atom, fact, env)
                    if ext is not None:
                        yield from walk(idx + 1, ext)
        else:
            if not atom.is_ground:
                raise ValidationError(
                    f"negated literal !{atom} has unbound variables; "
                    "negations may only use variables bound earlier in the conjunction"
                )
            if meter is not None:
                meter.tick()
            if atom not in facts:
                yield from walk(idx + 1, env)

    yield from walk(0, start)


def first_binding(wff: Wff, facts: frozenset[Fact],
                  binding: Optional[Mapping[str, str]] = None,
                  meter=None) -> Optional[Binding]:
    for env in satisfy(wff, facts, binding, meter=meter):
        return env
    return None


def holds(wff: Wff, facts: frozenset[Fact],
          binding: Optional[Mapping[str, str]] = None, meter=None) -> bool:
    return first_binding(wff, facts, binding, meter=meter) is not None


@dataclass(frozen=True)
class LevelDescription:
    """A complete closed-world description of one world at one abstraction level."""

    level: int
    facts: frozenset[Fact]

    def __contains__(self, fact: Fact) -> bool:
        return fact in self.facts

    def render(self) -> str:
        return " ".join(str(f) for f in _sorted_facts(self.facts))


@dataclass(frozen=True)
class PState:
    """One possible world described at every abstraction level.

    ``levels[i]`` describes abstraction level ``i + 1`` (1 = most abstract,
    n = most detailed).  Entries above the detail level are None until the
    state has been abstracted.  ``index`` is the world's position in the
    canonical cross-product order and serves as the deterministic tie key.
    """

    id: str
    index: int
    levels: tuple[Optional[LevelDescription], ...]
    mass: float = 0.0
    elements: tuple[str, ...] = ()
    intervals: tuple = ()

    def level(self, i: int) -> LevelDescription:
        desc = self.levels[i - 1]
        if desc is None:
            raise ValidationError(f"p-state {self.id} has no description at level {i}")
        return desc

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def fully_abstracted(self) -> bool:
        return all(d is not None for d in self.levels)
