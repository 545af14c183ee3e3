"""Domain document parser and validator.

A domain is a single indentation-structured text document with top-level
sections ``config``, ``frames``, ``templates``, ``compat``, ``mappings``,
``operators``, ``causal``, ``ka``, ``incompat`` and ``evidence``.  The
parser rejects unknown sections and keys, reports every problem with its
line number, and cross-validates the whole document (operator references,
plot acyclicity, mapping coverage, compatibility consistency, mass sums)
before returning a DomainSpec.  The exact grammar is documented in the
project README.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .domain import (
    CausalRule,
    DomainSpec,
    IncompatEntry,
    KnowledgeAcquisitionOperator,
    PlannerConfig,
    PlotEntry,
    ProbabilityFunction,
    ReductionOperator,
    StateChange,
)
from .errors import ValidationError
from .evidence import CompatibilityRelation, Frame, MassDistribution
from .state import Atom, Literal, parse_atom, parse_literal, parse_wff

_SECTIONS = (
    "config", "frames", "templates", "compat", "mappings",
    "operators", "causal", "ka", "incompat", "evidence",
)
_REQUIRED_SECTIONS = ("config", "frames", "templates", "operators")

_CONFIG_KEYS = (
    "levels", "goal", "plausibility-threshold", "support-threshold",
    "offsets", "partial-plan-policy", "belief-cutoff", "cost-ceiling",
    "helper-depth", "causal-cap",
)
_OPERATOR_KEYS = (
    "level", "necessary", "satisfiable", "plot", "change",
    "probability", "post", "planfail",
)

_NAME_RE = re.compile(r"^[A-Za-z_][\w-]*$")
_FOCAL_RE = re.compile(r"\{([^{}]*)\}=(\S+)")
_ENTRY_RE = re.compile(r"^([A-Za-z_][\w-]*)=(\S+)$")


@dataclass
class _Node:
    lineno: int
    text: str
    children: list["_Node"] = field(default_factory=list)


class _Errors:
    def __init__(self) -> None:
        self.items: list[str] = []

    def add(self, lineno: int, message: str) -> None:
        self.items.append(f"line {lineno}: {message}")

    def check(self) -> None:
        if self.items:
            raise ValidationError(self.items)


def _tree(text: str, errors: _Errors) -> list[_Node]:
    """Group physical lines into a tree by indentation depth."""
    roots: list[_Node] = []
    stack: list[tuple[int, _Node]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        if "\t" in raw[: len(raw) - len(raw.lstrip())]:
            errors.add(lineno, "indentation must use spaces, not tabs")
            continue
        indent = len(stripped) - len(stripped.lstrip())
        node = _Node(lineno, stripped.strip())
        while stack and stack[-1][0] >= indent:
            stack.pop()
        if not stack:
            if indent != 0:
                errors.add(lineno, "unexpected indentation at top level")
                continue
            roots.append(node)
        else:
            stack[-1][1].children.append(node)
        stack.append((indent, node))
    return roots


def _split_key(node: _Node, errors: _Errors) -> Optional[tuple[str, str]]:
    if ":" not in node.text:
        errors.add(node.lineno, f"expected 'key: value', got {node.text!r}")
        return None
    key, _, value = node.text.partition(":")
    return key.strip(), value.strip()


def _parse_float(value: str, node: _Node, errors: _Errors) -> Optional[float]:
    if value.lower() in ("inf", "infinity"):
        return float("inf")
    try:
        return float(value)
    except ValueError:
        errors.add(node.lineno, f"expected a number, got {value!r}")
        return None


def _parse_int(value: str, node: _Node, errors: _Errors) -> Optional[int]:
    try:
        return int(value)
    except ValueError:
        errors.add(node.lineno, f"expected an integer, got {value!r}")
        return None


def _parse_facts(value: str, node: _Node, errors: _Errors, *,
                 allow_empty: bool = False, ground: bool = False) -> tuple[Atom, ...]:
    value = value.strip()
    if not value:
        if not allow_empty:
            errors.add(node.lineno, "expected at least one fact")
        return ()
    out = []
    for part in value.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            atom = parse_atom(part)
        except ValidationError as exc:
            errors.add(node.lineno, str(exc))
            continue
        if ground and not atom.is_ground:
            errors.add(node.lineno, f"fact {atom} must be ground here")
            continue
        out.append(atom)
    return tuple(out)


def _parse_wff_line(value: str, node: _Node, errors: _Errors):
    try:
        return parse_wff(value)
    except ValidationError as exc:
        errors.add(node.lineno, str(exc))
        return ()


class _Parser:
    def __init__(self, text: str, name: str) -> None:
        self.errors = _Errors()
        self.name = name
        self.roots = _tree(text, self.errors)
        self.config_raw: dict[str, tuple[_Node, str]] = {}
        self.frames: dict[str, Frame] = {}
        self.frame_lines: dict[str, int] = {}
        self.templates: dict[tuple[str, str], tuple[Atom, ...]] = {}
        self.template_lines: dict[tuple[str, str], int] = {}
        self.compat_raw: list[tuple[_Node, str, str, list[tuple[str, str]]]] = []
        self.mappings: dict[int, dict[Atom, tuple[Atom, ...]]] = {}
        self.mapping_lines: dict[tuple[int, Atom], int] = {}
        self.operators: list[ReductionOperator] = []
        self.operator_lines: dict[str, int] = {}
        self.causal: list[CausalRule] = []
        self.ka: list[KnowledgeAcquisitionOperator] = []
        self.incompat: list[IncompatEntry] = []
        self.incompat_lines: list[int] = []
        self.evidence_raw: list[tuple[_Node, str, list[tuple[list[str], float]]]] = []

    # ------------------------------------------------------------- sections

    def run(self) -> DomainSpec:
        seen: set[str] = set()
        for node in self.roots:
            if not node.text.endswith(":"):
                self.errors.add(node.lineno, f"expected a section header, got {node.text!r}")
                continue
            section = node.text[:-1].strip()
            if section not in _SECTIONS:
                self.errors.add(node.lineno, f"unknown section {section!r}")
                continue
            if section in seen:
                self.errors.add(node.lineno, f"duplicate section {section!r}")
                continue
            seen.add(section)
            getattr(self, f"_section_{section}")(node)
        for required in _REQUIRED_SECTIONS:
            if required not in seen:
                self.errors.add(0, f"missing required section {required!r}")
        self.errors.check()
        spec = self._assemble()
        self.errors.check()
        return spec

    def _section_config(self, node: _Node) -> None:
        for child in node.children:
            kv = _split_key(child, self.errors)
            if kv is None:
                continue
            key, value = kv
            if key not in _CONFIG_KEYS:
                self.errors.add(child.lineno, f"unknown config key {key!r}")
                continue
            if key in self.config_raw:
                self.errors.add(child.lineno, f"duplicate config key {key!r}")
                continue
            self.config_raw[key] = (child, value)

    def _section_frames(self, node: _Node) -> None:
        for child in node.children:
            m = re.match(r"^([A-Za-z_][\w-]*)\s+level=(\d+):\s*(.*)$", child.text)
            if not m:
                self.errors.add(child.lineno,
                                "expected 'NAME level=N: elem elem ...'")
                continue
            fid, level, elems = m.group(1), int(m.group(2)), m.group(3).split()
            if fid in self.frames:
                self.errors.add(child.lineno, f"duplicate frame {fid!r}")
                continue
            bad = [e for e in elems if not _NAME_RE.match(e)]
            if bad:
                self.errors.add(child.lineno, f"invalid element labels {bad}")
                continue
            try:
                self.frames[fid] = Frame(fid, tuple(elems), level=level)
                self.frame_lines[fid] = child.lineno
            except ValidationError as exc:
                self.errors.add(child.lineno, str(exc))

    def _section_templates(self, node: _Node) -> None:
        for child in node.children:
            kv = _split_key(child, self.errors)
            if kv is None:
                continue
            head, value = kv
            parts = head.split()
            if len(parts) != 2:
                self.errors.add(child.lineno, "expected 'FRAME ELEMENT: fact, ...'")
                continue
            fid, elem = parts
            key = (fid, elem)
            if key in self.templates:
                self.errors.add(child.lineno, f"duplicate template for {fid} {elem}")
                continue
            facts = _parse_facts(value, child, self.errors, ground=True)
            self.templates[key] = facts
            self.template_lines[key] = child.lineno

    def _section_compat(self, node: _Node) -> None:
        for child in node.children:
            kv = _split_key(child, self.errors)
            if kv is None:
                continue
            head, value = kv
            parts = head.split()
            if len(parts) != 2:
                self.errors.add(child.lineno,
                                "expected 'LOWER UPPER: low>up low>up ...'")
                continue
            pairs: list[tuple[str, str]] = []
            ok = True
            for token in value.split():
                if ">" not in token:
                    self.errors.add(child.lineno, f"expected 'low>up', got {token!r}")
                    ok = False
                    continue
                low, _, up = token.partition(">")
                pairs.append((low, up))
            if ok:
                self.compat_raw.append((child, parts[0], parts[1], pairs))

    def _section_mappings(self, node: _Node) -> None:
        for child in node.children:
            m = re.match(r"^(\d+)->(\d+):$", child.text.replace(" ", ""))
            if not m:
                self.errors.add(child.lineno, "expected a mapping block 'I->J:'")
                continue
            src, dst = int(m.group(1)), int(m.group(2))
            if dst != src - 1:
                self.errors.add(child.lineno,
                                f"mappings must link adjacent levels, got {src}->{dst}")
                continue
            table = self.mappings.setdefault(src, {})
            for entry in child.children:
                if "=>" not in entry.text:
                    self.errors.add(entry.lineno, "expected 'fact => fact, ...'")
                    continue
                lhs, _, rhs = entry.text.partition("=>")
                try:
                    source = parse_atom(lhs)
                except ValidationError as exc:
                    self.errors.add(entry.lineno, str(exc))
                    continue
                if not source.is_ground:
                    self.errors.add(entry.lineno, f"mapping source {source} must be ground")
                    continue
                if source in table:
                    self.errors.add(entry.lineno,
                                    f"duplicate mapping for {source} at level {src}")
                    continue
                image = _parse_facts(rhs, entry, self.errors,
                                     allow_empty=True, ground=True)
                table[source] = image
                self.mapping_lines[(src, source)] = entry.lineno

    def _section_operators(self, node: _Node) -> None:
        for child in node.children:
            m = re.match(r"^operator\s+([A-Za-z_][\w-]*):$", child.text)
            if not m:
                self.errors.add(child.lineno, "expected 'operator NAME:'")
                continue
            name = m.group(1)
            if name in self.operator_lines:
                self.errors.add(child.lineno, f"duplicate operator {name!r}")
                continue
            self.operator_lines[name] = child.lineno
            op = self._parse_operator(name, child)
            if op is not None:
                self.operators.append(op)

    def _parse_operator(self, name: str, node: _Node) -> Optional[ReductionOperator]:
        fields: dict[str, object] = {
            "level": None, "necessary": (), "satisfiable": (), "plot": None,
            "change": None, "probability": ProbabilityFunction(), "post": (),
            "planfail": "backtrack",
        }
        seen: set[str] = set()
        broken = False
        for child in node.children:
            kv = _split_key(child, self.errors)
            if kv is None:
                broken = True
                continue
            key, value = kv
            first = key.split()[0]
            if first == "when":
                self.errors.add(child.lineno,
                                "'when' lines belong inside a probability block")
                broken = True
                continue
            if first not in _OPERATOR_KEYS:
                self.errors.add(child.lineno,
                                f"unknown operator key {first!r} in {name!r}")
                broken = True
                continue
            if first in seen:
                self.errors.add(child.lineno, f"duplicate key {first!r} in {name!r}")
                broken = True
                continue
            seen.add(first)
            if first == "level":
                fields["level"] = _parse_int(value, child, self.errors)
            elif first == "necessary":
                fields["necessary"] = _parse_wff_line(value, child, self.errors)
            elif first == "satisfiable":
                fields["satisfiable"] = _parse_wff_line(value, child, self.errors)
            elif first == "plot":
                fields["plot"] = self._parse_plot(child)
            elif first == "change":
                fields["change"] = self._parse_change(child)
            elif first == "probability":
                fields["probability"] = self._parse_probability(child, value)
            elif first == "post":
                fields["post"] = _parse_facts(value, child, self.errors,
                                              allow_empty=True, ground=True)
            elif first == "planfail":
                fields["planfail"] = value
        if fields["level"] is None:
            self.errors.add(node.lineno, f"operator {name!r} is missing its level")
            return None
        if broken:
            return None
        try:
            return ReductionOperator(
                name=name,
                level=fields["level"],  # type: ignore[arg-type]
                necessary=fields["necessary"],  # type: ignore[arg-type]
                satisfiable=fields["satisfiable"],  # type: ignore[arg-type]
                plot=fields["plot"],  # type: ignore[arg-type]
                change=fields["change"],  # type: ignore[arg-type]
                probability=fields["probability"],  # type: ignore[arg-type]
                post=fields["post"],  # type: ignore[arg-type]
                planfail=fields["planfail"],  # type: ignore[arg-type]
            )
        except ValidationError as exc:
            self.errors.add(node.lineno, str(exc))
            return None

    def _parse_plot(self, node: _Node) -> Optional[tuple]:
        steps = []
        for child in node.children:
            kv = _split_key(child, self.errors)
            if kv is None:
                continue
            key, value = kv
            if key != "step":
                self.errors.add(child.lineno, f"expected 'step:', got {key!r}")
                continue
            entries = []
            for token in value.split():
                m = _ENTRY_RE.match(token)
                if not m:
                    self.errors.add(child.lineno,
                                    f"expected 'operator=fulfilment', got {token!r}")
                    continue
                fulf = _parse_float(m.group(2), child, self.errors)
                if fulf is None:
                    continue
                try:
                    entries.append(PlotEntry(m.group(1), fulf))
                except ValidationError as exc:
                    self.errors.add(child.lineno, str(exc))
            if entries:
                steps.append(tuple(entries))
            else:
                self.errors.add(child.lineno, "plot step has no entries")
        return tuple(steps) if steps else None

    def _parse_change(self, node: _Node) -> StateChange:
        add: tuple[Atom, ...] = ()
        delete: tuple[Atom, ...] = ()
        for child in node.children:
            kv = _split_key(child, self.errors)
            if kv is None:
                continue
            key, value = kv
            if key == "add":
                add = _parse_facts(value, child, self.errors,
                                   allow_empty=True, ground=True)
            elif key == "del":
                delete = _parse_facts(value, child, self.errors, allow_empty=True)
            else:
                self.errors.add(child.lineno,
                                f"unknown change key {key!r} (use add/del)")
        return StateChange(add=add, delete=delete)

    def _parse_probability(self, node: _Node, inline: str) -> ProbabilityFunction:
        if inline:
            value = _parse_float(inline, node, self.errors)
            return ProbabilityFunction(default=value if value is not None else 1.0)
        rules = []
        default = None
        for child in node.children:
            kv = _split_key(child, self.errors)
            if kv is None:
                continue
            key, value = kv
            if key == "default":
                default = _parse_float(value, child, self.errors)
            elif key.startswith("when ") or key == "when":
                wff = _parse_wff_line(key[4:].strip(), child, self.errors)
                v = _parse_float(value, child, self.errors)
                if v is not None:
                    rules.append((wff, v))
            else:
                self.errors.add(child.lineno,
                                f"unknown probability key {key!r} (use when/default)")
        if default is None:
            self.errors.add(node.lineno, "probability block is missing 'default:'")
            default = 1.0
        try:
            return ProbabilityFunction(tuple(rules), default)
        except ValidationError as exc:
            self.errors.add(node.lineno, str(exc))
            return ProbabilityFunction()

    def _section_causal(self, node: _Node) -> None:
        for child in node.children:
            m = re.match(r"^rule\s+([A-Za-z_][\w-]*):$", child.text)
            if not m:
                self.errors.add(child.lineno, "expected 'rule NAME:'")
                continue
            name = m.group(1)
            trigger = None
            kind = "+"
            condition = ()
            add: tuple[Atom, ...] = ()
            delete: tuple[Atom, ...] = ()
            for line in child.children:
                kv = _split_key(line, self.errors)
                if kv is None:
                    continue
                key, value = kv
                if key == "trigger":
                    text = value.strip()
                    if text and text[0] in "+-":
                        kind, text = text[0], text[1:]
                    else:
                        kind = ""
                    try:
                        trigger = parse_atom(text)
                    except ValidationError as exc:
                        self.errors.add(line.lineno, str(exc))
                elif key == "when":
                    condition = _parse_wff_line(value, line, self.errors)
                elif key == "add":
                    add = _parse_facts(value, line, self.errors,
                                       allow_empty=True, ground=True)
                elif key == "del":
                    delete = _parse_facts(value, line, self.errors, allow_empty=True)
                else:
                    self.errors.add(line.lineno, f"unknown rule key {key!r}")
            if trigger is None:
                self.errors.add(child.lineno, f"rule {name!r} has no trigger")
                continue
            scope = trigger.variables()
            for lit in condition:
                if lit.positive:
                    scope |= lit.atom.variables()
            loose = [d for d in delete if not d.variables() <= scope]
            if loose:
                self.errors.add(child.lineno,
                                f"rule {name!r}: delete effects {[str(d) for d in loose]} "
                                "use variables not bound by the trigger or condition")
                continue
            try:
                self.causal.append(CausalRule(name, trigger, kind, condition,
                                              add, delete))
            except ValidationError as exc:
                self.errors.add(child.lineno, str(exc))

    def _section_ka(self, node: _Node) -> None:
        for child in node.children:
            m = re.match(r"^acquire\s+([A-Za-z_][\w-]*):$", child.text)
            if not m:
                self.errors.add(child.lineno, "expected 'acquire NAME:'")
                continue
            name = m.group(1)
            frame_id = None
            cells: list[frozenset[str]] = []
            cost = None
            for line in child.children:
                kv = _split_key(line, self.errors)
                if kv is None:
                    continue
                key, value = kv
                if key == "frame":
                    frame_id = value
                elif key == "partition":
                    for cell_text in value.split("|"):
                        members = frozenset(cell_text.split())
                        if members:
                            cells.append(members)
                elif key == "cost":
                    cost = _parse_float(value, line, self.errors)
                else:
                    self.errors.add(line.lineno, f"unknown acquisition key {key!r}")
            if frame_id is None or cost is None or not cells:
                self.errors.add(child.lineno,
                                f"acquisition {name!r} needs frame, partition and cost")
                continue
            try:
                self.ka.append(
                    KnowledgeAcquisitionOperator(name, frame_id, tuple(cells), cost)
                )
            except ValidationError as exc:
                self.errors.add(child.lineno, str(exc))

    def _section_incompat(self, node: _Node) -> None:
        for child in node.children:
            if "~" not in child.text:
                self.errors.add(child.lineno, "expected 'pattern ~ operator'")
                continue
            lhs, _, rhs = child.text.partition("~")
            try:
                literal = parse_literal(lhs.strip())
            except ValidationError as exc:
                self.errors.add(child.lineno, str(exc))
                continue
            opname = rhs.strip()
            if not _NAME_RE.match(opname):
                self.errors.add(child.lineno, f"invalid operator name {opname!r}")
                continue
            self.incompat.append(IncompatEntry(literal, opname))
            self.incompat_lines.append(child.lineno)

    def _section_evidence(self, node: _Node) -> None:
        for child in node.children:
            kv = _split_key(child, self.errors)
            if kv is None:
                continue
            fid, value = kv
            focal: list[tuple[list[str], float]] = []
            consumed = ""
            for m in _FOCAL_RE.finditer(value):
                consumed += m.group(0) + " "
                mass = _parse_float(m.group(2), child, self.errors)
                if mass is None:
                    continue
                members = m.group(1).split()
                focal.append((members, mass))
            if value.replace(" ", "") != "".join(
                    t.replace(" ", "") for t in consumed.split()):
                leftover = _FOCAL_RE.sub("", value).strip()
                if leftover:
                    self.errors.add(child.lineno,
                                    f"unparsed evidence text {leftover!r}")
            if not focal:
                self.errors.add(child.lineno, f"no focal sets for frame {fid!r}")
                continue
            self.evidence_raw.append((child, fid, focal))

    # ------------------------------------------------------------- assembly

    def _config(self) -> Optional[PlannerConfig]:
        def take(key: str) -> Optional[tuple[_Node, str]]:
            return self.config_raw.get(key)

        levels_raw = take("levels")
        goal_raw = take("goal")
        if levels_raw is None or goal_raw is None:
            self.errors.add(0, "config must declare 'levels' and 'goal'")
            return None
        levels = _parse_int(levels_raw[1], levels_raw[0], self.errors)
        if levels is None:
            return None
        kwargs: dict = {"n_levels": levels, "goal": goal_raw[1]}
        for key, attr in (
            ("plausibility-threshold", "plausibility_threshold"),
            ("support-threshold", "support_threshold"),
            ("belief-cutoff", "belief_cutoff"),
            ("cost-ceiling", "cost_ceiling"),
        ):
            raw = take(key)
            if raw is not None:
                value = _parse_float(raw[1], raw[0], self.errors)
                if value is not None:
                    kwargs[attr] = value
        for key, attr in (("helper-depth", "helper_depth"),
                          ("causal-cap", "causal_cap")):
            raw = take(key)
            if raw is not None:
                value = _parse_int(raw[1], raw[0], self.errors)
                if value is not None:
                    kwargs[attr] = value
        raw = take("partial-plan-policy")
        if raw is not None:
            kwargs["partial_plan_policy"] = raw[1]
        raw = take("offsets")
        if raw is not None:
            offsets: dict[int, float] = {}
            for token in raw[1].split():
                m = re.match(r"^(\d+)=(\S+)$", token)
                if not m:
                    self.errors.add(raw[0].lineno,
                                    f"expected 'gap=offset', got {token!r}")
                    continue
                value = _parse_float(m.group(2), raw[0], self.errors)
                if value is not None:
                    offsets[int(m.group(1))] = value
            kwargs["offsets"] = offsets
        try:
            return PlannerConfig(**kwargs)
        except ValidationError as exc:
            self.errors.add(0, str(exc))
            return None

    def _assemble(self) -> Optional[DomainSpec]:
        config = self._config()
        if config is None or not self.frames:
            if not self.frames:
                self.errors.add(0, "no frames declared")
            return None
        n = config.n_levels
        for fid, frame in self.frames.items():
            if frame.level > n:
                self.errors.add(self.frame_lines[fid],
                                f"frame {fid!r} is at level {frame.level}, "
                                f"but the domain has {n} levels")

        # templates: every element covered, frames known
        for (fid, elem), _facts in self.templates.items():
            lineno = self.template_lines[(fid, elem)]
            frame = self.frames.get(fid)
            if frame is None:
                self.errors.add(lineno, f"template for unknown frame {fid!r}")
            elif elem not in frame.elements:
                self.errors.add(lineno,
                                f"template for unknown element {elem!r} of {fid!r}")
        for fid, frame in self.frames.items():
            for elem in frame.elements:
                facts = self.templates.get((fid, elem))
                if not facts:
                    self.errors.add(self.frame_lines[fid],
                                    f"element {elem!r} of frame {fid!r} has no "
                                    "template facts")

        # compatibility relations
        relations: list[CompatibilityRelation] = []
        for node, low_id, up_id, pairs in self.compat_raw:
            lower = self.frames.get(low_id)
            upper = self.frames.get(up_id)
            if lower is None or upper is None:
                self.errors.add(node.lineno,
                                f"relation references unknown frame "
                                f"{low_id if lower is None else up_id!r}")
                continue
            try:
                relations.append(CompatibilityRelation(lower, upper,
                                                       frozenset(pairs)))
            except ValidationError as exc:
                for item in exc.errors:
                    self.errors.add(node.lineno, item)
        if n > 1:
            lowers = {r.lower.id for r in relations}
            uppers = {r.upper.id for r in relations}
            for fid, frame in self.frames.items():
                if frame.level > 1 and fid not in lowers:
                    self.errors.add(self.frame_lines[fid],
                                    f"frame {fid!r} has no compatibility relation "
                                    "to the level above")
                if frame.level < n and fid not in uppers:
                    self.errors.add(self.frame_lines[fid],
                                    f"frame {fid!r} has no compatibility relation "
                                    "to the level below")

        # mapping tables for every level gap
        if n > 1:
            for src in range(n, 1, -1):
                if src not in self.mappings:
                    self.errors.add(0, f"missing mapping table {src}->{src - 1}")
            for src in self.mappings:
                if not (2 <= src <= n):
                    self.errors.add(0, f"mapping table {src}->{src - 1} is outside "
                                       "the declared levels")
        elif self.mappings:
            self.errors.add(0, "mapping tables declared for a single-level domain")

        # operators
        by_name = {op.name: op for op in self.operators}
        for op in self.operators:
            lineno = self.operator_lines[op.name]
            if not (1 <= op.level <= n):
                self.errors.add(lineno, f"operator {op.name!r} level {op.level} "
                                        f"outside 1..{n}")
                continue
            if op.level == n:
                if op.change is None:
                    self.errors.add(lineno, f"operator {op.name!r} at the detail "
                                            "level needs a 'change' block")
                if op.plot is not None:
                    self.errors.add(lineno, f"operator {op.name!r} at the detail "
                                            "level cannot have a plot")
            else:
                if op.plot is None:
                    self.errors.add(lineno, f"operator {op.name!r} needs a plot")
                if op.change is not None:
                    self.errors.add(lineno, f"operator {op.name!r} above the detail "
                                            "level cannot have a 'change' block")
            if op.plot:
                for step in op.plot:
                    for entry in step:
                        child = by_name.get(entry.child_operator)
                        if child is None:
                            self.errors.add(lineno,
                                            f"plot of {op.name!r} references unknown "
                                            f"operator {entry.child_operator!r}")
                        elif child.level != op.level + 1:
                            self.errors.add(lineno,
                                            f"plot of {op.name!r} (level {op.level}) "
                                            f"references {child.name!r} at level "
                                            f"{child.level}; expected {op.level + 1}")
            scope: set[str] = set()
            for lit in op.necessary + op.satisfiable:
                if lit.positive:
                    scope |= lit.atom.variables()
            if op.change is not None:
                loose = [d for d in op.change.delete if not d.variables() <= scope]
                if loose:
                    self.errors.add(lineno,
                                    f"operator {op.name!r}: delete effects "
                                    f"{[str(d) for d in loose]} use unbound variables")
                overlap = set(op.change.add) & {
                    d for d in op.change.delete if d.is_ground}
                if overlap:
                    self.errors.add(lineno,
                                    f"operator {op.name!r} both adds and deletes "
                                    f"{sorted(str(o) for o in overlap)}")

        self._check_plot_cycles(by_name)

        # goal
        goal = by_name.get(config.goal)
        if goal is None:
            self.errors.add(0, f"goal operator {config.goal!r} is not defined")
        elif goal.level != 1:
            self.errors.add(self.operator_lines[goal.name],
                            f"goal operator {goal.name!r} must be at level 1")

        # causal rules: add effects must be ground (checked at parse); nothing more

        # knowledge acquisition operators
        for ka in self.ka:
            frame = self.frames.get(ka.frame_id)
            if frame is None:
                self.errors.add(0, f"acquisition {ka.name!r} references unknown "
                                   f"frame {ka.frame_id!r}")
                continue
            if frame.level != n:
                self.errors.add(0, f"acquisition {ka.name!r} must discriminate a "
                                   f"detail-level frame, got level {frame.level}")
            unknown = {e for cell in ka.cells for e in cell} - set(frame.elements)
            if unknown:
                self.errors.add(0, f"acquisition {ka.name!r} references unknown "
                                   f"elements {sorted(unknown)}")

        # incompatibility table
        for entry, lineno in zip(self.incompat, self.incompat_lines):
            if entry.operator not in by_name:
                self.errors.add(lineno, f"incompatibility references unknown "
                                        f"operator {entry.operator!r}")

        self._check_mapping_coverage(n, by_name)
        self._check_template_compat(n, relations)

        evidence = self._evidence(n)

        if self.errors.items:
            return None
        return DomainSpec(
            name=self.name,
            frames=tuple(self.frames.values()),
            relations=tuple(relations),
            mappings={k: dict(v) for k, v in self.mappings.items()},
            templates=dict(self.templates),
            operators=tuple(self.operators),
            causal_rules=tuple(self.causal),
            ka_operators=tuple(self.ka),
            incompat=tuple(self.incompat),
            config=config,
            evidence=evidence,
        )

    def _check_plot_cycles(self, by_name: dict[str, ReductionOperator]) -> None:
        WHITE, GREY, BLACK = 0, 1, 2
        color = {name: WHITE for name in by_name}
        stack: list[str] = []

        def visit(name: str) -> Optional[list[str]]:
            color[name] = GREY
            stack.append(name)
            op = by_name[name]
            for step in op.plot or ():
                for entry in step:
                    child = entry.child_operator
                    if child not in by_name:
                        continue
                    if color[child] == GREY:
                        return stack[stack.index(child):] + [child]
                    if color[child] == WHITE:
                        cycle = visit(child)
                        if cycle:
                            return cycle
            stack.pop()
            color[name] = BLACK
            return None

        for name in by_name:
            if color[name] == WHITE:
                cycle = visit(name)
                if cycle:
                    self.errors.add(self.operator_lines[cycle[0]],
                                    "plot references form a cycle: "
                                    + " -> ".join(cycle))
                    return

    def _check_mapping_coverage(self, n: int,
                                by_name: dict[str, ReductionOperator]) -> None:
        """Every fact reachable at a level must map to the level above."""
        if n == 1:
            return
        reachable: set[Atom] = set()
        for (fid, _elem), facts in self.templates.items():
            frame = self.frames.get(fid)
            if frame is not None and frame.level == n:
                reachable.update(facts)
        for op in by_name.values():
            if op.change is not None and op.level == n:
                reachable.update(a for a in op.change.add if a.is_ground)
        for rule in self.causal:
            reachable.update(a for a in rule.add if a.is_ground)
        for src in range(n, 1, -1):
            table = self.mappings.get(src, {})
            image: set[Atom] = set()
            for fact in sorted(reachable, key=str):
                if fact not in table:
                    self.errors.add(0, f"fact {fact} reachable at level {src} has "
                                       f"no mapping to level {src - 1}")
                else:
                    image.update(table[fact])
            reachable = image

    def _check_template_compat(self, n: int,
                               relations: list[CompatibilityRelation]) -> None:
        """Mapped template facts must land on compatible elements above."""
        if n == 1:
            return
        rel_index: dict[tuple[str, str], CompatibilityRelation] = {}
        for rel in relations:
            rel_index[(rel.lower.id, rel.upper.id)] = rel
        owners: dict[Atom, list[tuple[str, str]]] = {}
        for (fid, elem), facts in self.templates.items():
            for fact in facts:
                owners.setdefault(fact, []).append((fid, elem))
        for (fid, elem), facts in sorted(self.templates.items()):
            frame = self.frames.get(fid)
            if frame is None or frame.level == 1:
                continue
            table = self.mappings.get(frame.level, {})
            for fact in facts:
                for mapped in table.get(fact, ()):
                    for up_fid, up_elem in owners.get(mapped, []):
                        up_frame = self.frames.get(up_fid)
                        if up_frame is None or up_frame.level != frame.level - 1:
                            continue
                        rel = rel_index.get((fid, up_fid))
                        if rel is None:
                            self.errors.add(
                                self.template_lines[(fid, elem)],
                                f"fact {fact} of {fid}.{elem} maps into frame "
                                f"{up_fid!r} but no compatibility relation links them")
                        elif (elem, up_elem) not in rel.pairs:
                            self.errors.add(
                                self.template_lines[(fid, elem)],
                                f"fact {fact} of {fid}.{elem} maps to {mapped} of "
                                f"{up_fid}.{up_elem}, which the compatibility "
                                "relation does not allow")

    def _evidence(self, n: int) -> Optional[tuple[MassDistribution, ...]]:
        if not self.evidence_raw:
            return None
        out: list[MassDistribution] = []
        seen: set[str] = set()
        for node, fid, focal in self.evidence_raw:
            frame = self.frames.get(fid)
            if frame is None:
                self.errors.add(node.lineno, f"evidence for unknown frame {fid!r}")
                continue
            if frame.level != n:
                self.errors.add(node.lineno,
                                f"evidence must target detail-level frames; "
                                f"{fid!r} is at level {frame.level}")
                continue
            if fid in seen:
                self.errors.add(node.lineno, f"duplicate evidence for frame {fid!r}")
                continue
            seen.add(fid)
            mapping: dict[tuple[str, ...], float] = {}
            for members, mass in focal:
                if members == ["*"]:
                    key = frame.elements
                else:
                    key = tuple(members)
                if key in mapping:
                    self.errors.add(node.lineno,
                                    f"duplicate focal set {{{' '.join(key)}}}")
                    continue
                mapping[key] = mass
            try:
                out.append(MassDistribution.from_members(frame, mapping))
            except ValidationError as exc:
                self.errors.add(node.lineno, str(exc))
        missing = [f.id for f in self.frames.values()
                   if f.level == n and f.id not in seen]
        if missing and out:
            self.errors.add(0, f"evidence section does not cover detail-level "
                               f"frames {missing}")
        return tuple(out) if out else None


def load_domain_text(text: str, name: str = "domain") -> DomainSpec:
    """Parse and validate a domain document from a string."""
    return _Parser(text, name).run()


def load_domain(path: str | Path) -> DomainSpec:
    """Parse and validate a domain document from a file."""
    path = Path(path)
    return load_domain_text(path.read_text(), name=path.stem)


def fixture_path(name: str) -> Path:
    """Path of a bundled domain fixture, e.g. ``fixture_path('aircombat')``."""
    return Path(__file__).parent / "fixtures" / f"{name}.dom"
