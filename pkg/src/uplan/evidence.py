"""Evidential reasoning kernel: frames, mass functions and belief intervals.

A frame is an exhaustive set of mutually exclusive element labels for one
aspect of the world.  Belief about that aspect arrives as a mass function
over subsets of the frame; support and plausibility of a proposition are the
classic lower/upper bounds derived from it.  Frames at adjacent abstraction
levels are linked by compatibility relations, which carry mass between
levels; independent frames combine into a cross-product frame.

Focal sets are bitmasks internally; the arithmetic lives in ``uplan._core``
(compiled kernel with a pure-Python fallback).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ._core import kernel_for
from .errors import ValidationError

MASS_SUM_TOLERANCE = 1e-9

#: Separator used to build cross-product element labels ("far+fighter").
PRODUCT_SEPARATOR = "+"


@dataclass(frozen=True)
class Frame:
    """An ordered, exhaustive set of mutually exclusive element labels."""

    id: str
    elements: tuple[str, ...]
    level: int = 1

    def __post_init__(self):
        if not self.elements:
            raise ValidationError(f"frame {self.id!r} has no elements")
        if len(set(self.elements)) != len(self.elements):
            raise ValidationError(f"frame {self.id!r} has duplicate elements")
        if self.level < 1:
            raise ValidationError(f"frame {self.id!r} has invalid level {self.level}")
        object.__setattr__(self, "_index", {e: i for i, e in enumerate(self.elements)})

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def mask_of(self, members: Iterable[str]) -> int:
        mask = 0
        for label in members:
            idx = self._index.get(label)
            if idx is None:
                raise ValidationError(f"element {label!r} is not in frame {self.id!r}")
            mask |= 1 << idx
        return mask

    def labels_of(self, mask: int) -> tuple[str, ...]:
        return tuple(e for i, e in enumerate(self.elements) if mask >> i & 1)


@dataclass(frozen=True)
class Proposition:
    """A nonempty disjunction of elements of one frame."""

    frame: Frame
    members: frozenset[str]

    def __post_init__(self):
        if not self.members:
            raise ValidationError(f"empty proposition over frame {self.frame.id!r}")
        # mask_of also validates membership
        object.__setattr__(self, "_mask", self.frame.mask_of(self.members))

    @property
    def mask(self) -> int:
        return self._mask

    @property
    def is_full(self) -> bool:
        return self._mask == self.frame.full_mask

    def __str__(self) -> str:
        ordered = [e for e in self.frame.elements if e in self.members]
        return "{" + " ".join(ordered) + "}"


@dataclass(frozen=True, order=False)
class EvidentialInterval:
    """Lower (support) and upper (plausibility) belief bounds."""

    support: float
    plausibility: float

    def __post_init__(self):
        if not (-1e-12 <= self.support <= 1.0 + 1e-12):
            raise ValidationError(f"support {self.support} outside [0, 1]")
        if not (-1e-12 <= self.plausibility <= 1.0 + 1e-12):
            raise ValidationError(f"plausibility {self.plausibility} outside [0, 1]")
        if self.support > self.plausibility + 1e-12:
            raise ValidationError(
                f"support {self.support} exceeds plausibility {self.plausibility}"
            )

    def key(self) -> tuple[float, float]:
        """Sort key for the fixed comparison rule: support first, then plausibility."""
        return (self.support, self.plausibility)

    def __str__(self) -> str:
        return f"[{self.support:.4f}, {self.plausibility:.4f}]"


def compare_intervals(x: EvidentialInterval, y: EvidentialInterval) -> int:
    """-1, 0 or 1 as x ranks below, ties with, or ranks above y.

    Greater support wins; equal support falls back to greater plausibility.
    Full ties are left to the caller's stable key.
    """
    if x.key() < y.key():
        return -1
    if x.key() > y.key():
        return 1
    return 0


@dataclass(frozen=True)
class MassDistribution:
    """A unit of belief distributed over focal subsets of one frame.

    Stored sparsely: only focal sets with strictly positive mass.  The masses
    must sum to 1 within ``MASS_SUM_TOLERANCE``; anything else is rejected as
    an authoring error rather than silently renormalized.
    """

    frame: Frame
    masks: tuple[int, ...] = field(default=())
    masses: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if len(self.masks) != len(self.masses):
            raise ValidationError("masks and masses differ in length")
        if not self.masks:
            raise ValidationError(
                f"mass distribution over frame {self.frame.id!r} has no focal sets"
            )
        seen = set()
        for mask, mass in zip(self.masks, self.masses):
            if mask == 0 or mask > self.frame.full_mask:
                raise ValidationError(
                    f"focal set mask {mask:#x} invalid for frame {self.frame.id!r}"
                )
            if mask in seen:
                raise ValidationError(
                    f"duplicate focal set {self.frame.labels_of(mask)} "
                    f"in frame {self.frame.id!r}"
                )
            seen.add(mask)
            if not (0.0 < mass <= 1.0):
                raise ValidationError(
                    f"mass {mass} for focal set {self.frame.labels_of(mask)} "
                    "outside (0, 1]"
                )
        total = sum(self.masses)
        if abs(total - 1.0) > MASS_SUM_TOLERANCE:
            raise ValidationError(
                f"masses over frame {self.frame.id!r} sum to {total!r}, not 1; "
                "renormalization is refused"
            )

    @classmethod
    def from_members(cls, frame: Frame,
                     focal: Mapping[Iterable[str], float]) -> "MassDistribution":
        """Build from a mapping of member collections (or Propositions) to mass."""
        items = []
        for members, mass in focal.items():
            if isinstance(members, Proposition):
                mask = members.mask
            else:
                mask = frame.mask_of(members)
            items.append((mask, float(mass)))
        items.sort()
        return cls(frame, tuple(m for m, _ in items), tuple(v for _, v in items))

    @classmethod
    def vacuous(cls, frame: Frame) -> "MassDistribution":
        return cls(frame, (frame.full_mask,), (1.0,))

    def focal_items(self) -> tuple[tuple[Proposition, float], ...]:
        return tuple(
            (Proposition(self.frame, frozenset(self.frame.labels_of(mask))), mass)
            for mask, mass in zip(self.masks, self.masses)
        )

    def mass_of(self, members: Iterable[str]) -> float:
        mask = self.frame.mask_of(members)
        for m, v in zip(self.masks, self.masses):
            if m == mask:
                return v
        return 0.0

    @property
    def _kernel(self):
        return kernel_for(self.frame.size)


def _check_frame(m: MassDistribution, a: Proposition) -> None:
    if a.frame.id != m.frame.id:
        raise ValidationError(
            f"proposition over frame {a.frame.id!r} queried against "
            f"distribution over frame {m.frame.id!r}"
        )


def support(m: MassDistribution, a: Proposition) -> float:
    """Total mass of focal sets contained in ``a``."""
    _check_frame(m, a)
    return m._kernel.support(m.masks, m.masses, a.mask)


def plausibility(m: MassDistribution, a: Proposition) -> float:
    """1 minus the support of the complement of ``a``."""
    _check_frame(m, a)
    return m._kernel.plausibility(m.masks, m.masses, a.mask, m.frame.full_mask)


def _clamp_unit(value: float) -> float:
    # strip accumulation dust at the [0, 1] boundaries, well under tolerance
    if -MASS_SUM_TOLERANCE < value < 0.0:
        return 0.0
    if 1.0 < value < 1.0 + MASS_SUM_TOLERANCE:
        return 1.0
    return value


def interval(m: MassDistribution, a: Proposition) -> EvidentialInterval:
    s = _clamp_unit(support(m, a))
    p = _clamp_unit(plausibility(m, a))
    if p < s <= p + MASS_SUM_TOLERANCE:
        s = p
    return EvidentialInterval(s, p)


def product_frame(frames: Sequence[Frame], id: str | None = None) -> Frame:
    """The cross-product frame; element labels join component labels with '+'."""
    if not frames:
        raise ValidationError("cannot build a product of zero frames")
    labels = tuple(
        PRODUCT_SEPARATOR.join(combo)
        for combo in itertools.product(*(f.elements for f in frames))
    )
    pid = id if id is not None else "*".join(f.id for f in frames)
    return Frame(pid, labels, level=frames[0].level)


def joint_mass(sources: Sequence[MassDistribution],
               frame_id: str | None = None) -> MassDistribution:
    """Combine independent mass functions over distinct frames into one
    distribution over their cross-product frame.

    Focal sets of the result are products of focal-set combinations and carry
    the product of the component masses.
    """
    if not sources:
        raise ValidationError("joint_mass needs at least one distribution")
    ids = [m.frame.id for m in sources]
    if len(set(ids)) != len(ids):
        raise ValidationError(f"duplicate frames in joint_mass: {ids}")
    frames = [m.frame for m in sources]
    target = product_frame(frames, id=frame_id)

    masks = list(sources[0].masks)
    masses = list(sources[0].masses)
    size = sources[0].frame.size
    for m in sources[1:]:
        kern = kernel_for(size * m.frame.size)
        masks, masses = kern.product_pair(masks, masses, m.masks, m.masses,
                                          m.frame.size)
        size *= m.frame.size
    return MassDistribution(target, tuple(int(x) for x in masks), tuple(masses))


@dataclass(frozen=True)
class CompatibilityRelation:
    """Which elements of two adjacent-level frames can be true simultaneously.

    ``lower`` is the more detailed frame (level exactly one below ``upper``).
    Every element on both sides must appear in at least one pair, otherwise a
    level would stop being an exhaustive description.
    """

    lower: Frame
    upper: Frame
    pairs: frozenset[tuple[str, str]]

    def __post_init__(self):
        if self.lower.level != self.upper.level + 1:
            raise ValidationError(
                f"relation {self.lower.id!r} -> {self.upper.id!r} links levels "
                f"{self.lower.level} and {self.upper.level}; only adjacent levels "
                "may be related"
            )
        lowers = {l for l, _ in self.pairs}
        uppers = {u for _, u in self.pairs}
        for label, _ in self.pairs:
            self.lower.mask_of([label])
        for _, label in self.pairs:
            self.upper.mask_of([label])
        missing_low = set(self.lower.elements) - lowers
        missing_up = set(self.upper.elements) - uppers
        problems = []
        if missing_low:
            problems.append(
                f"elements {sorted(missing_low)} of {self.lower.id!r} have no "
                "compatible element above"
            )
        if missing_up:
            problems.append(
                f"elements {sorted(missing_up)} of {self.upper.id!r} have no "
                "compatible element below"
            )
        if problems:
            raise ValidationError(problems)

    def image_up(self) -> list[int]:
        """Per lower-element target masks on the upper frame."""
        out = [0] * self.lower.size
        for low, up in self.pairs:
            out[self.lower.elements.index(low)] |= 1 << self.upper.elements.index(up)
        return out

    def image_down(self) -> list[int]:
        out = [0] * self.upper.size
        for low, up in self.pairs:
            out[self.upper.elements.index(up)] |= 1 << self.lower.elements.index(low)
        return out


def _project_image(m: MassDistribution, image: Sequence[int],
                   target: Frame) -> MassDistribution:
    kern = kernel_for(max(m.frame.size, target.size))
    masks, masses = kern.project(m.masks, m.masses, list(image))
    if masks and masks[0] == 0:
        raise ValidationError(
            f"projection from {m.frame.id!r} to {target.id!r} maps a focal set "
            "to the empty set; the relation is not exhaustive"
        )
    return MassDistribution(target, tuple(int(x) for x in masks), tuple(masses))


def project(m: MassDistribution, rel: CompatibilityRelation,
            direction: str) -> MassDistribution:
    """Carry a mass function across one compatibility relation.

    ``direction='up'`` projects from the lower (detailed) frame to the upper
    (abstract) one; ``'down'`` goes the other way.  Focal sets map to the
    union of their compatible elements; equal images merge.
    """
    if direction == "up":
        if m.frame.id != rel.lower.id:
            raise ValidationError(
                f"distribution is over {m.frame.id!r}, expected {rel.lower.id!r}"
            )
        return _project_image(m, rel.image_up(), rel.upper)
    if direction == "down":
        if m.frame.id != rel.upper.id:
            raise ValidationError(
                f"distribution is over {m.frame.id!r}, expected {rel.upper.id!r}"
            )
        return _project_image(m, rel.image_down(), rel.lower)
    raise ValidationError(f"direction must be 'up' or 'down', got {direction!r}")


def marginalize(joint: MassDistribution, components: Sequence[Frame],
                index: int) -> MassDistribution:
    """Recover one component distribution from a cross-product distribution.

    This is projection through the canonical product-to-component element
    map (each product element is compatible with exactly its own component
    element); it shares the projection kernel with ``project``.
    """
    sizes = [f.size for f in components]
    total = 1
    for s in sizes:
        total *= s
    if joint.frame.size != total:
        raise ValidationError(
            f"joint frame {joint.frame.id!r} has {joint.frame.size} elements, "
            f"components imply {total}"
        )
    if not (0 <= index < len(components)):
        raise ValidationError(f"component index {index} out of range")
    stride = 1
    for s in sizes[index + 1:]:
        stride *= s
    image = []
    for flat in range(total):
        comp = (flat // stride) % sizes[index]
        image.append(1 << comp)
    return _project_image(joint, image, components[index])
