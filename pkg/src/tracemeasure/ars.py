"""Probability spaces over the strategies of a weighted rewrite system.

A finite abstract rewrite system assigns every ordered pair of objects a
natural-number multiplicity (how many distinct ways the step can be taken).
Objects with outgoing multiplicity are reducible; a *strategy* picks one
target for every reducible object. The space of all strategies carries a
product probability: each choice at `a` happens with weight
multiplicity / degree(a).

Implements:

- ``WeightedArs``     -- immutable system with sparse multiplicities
- ``Strategy``        -- a total choice function on reducible objects
- ``Box``             -- the set of strategies agreeing on finitely many choices
- ``box_prob``        -- exact product weight of a box
- ``enumerate_strategies`` -- the full (finite) strategy space
- ``outer_measure``   -- exact measure of a strategy set, as a weight sum
- ``is_measurable``   -- the splitting identity checked over every subset
- ``parse_ars``       -- the one-rule-per-line text format

All probabilities are exact `fractions.Fraction` values; no floats anywhere.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

ObjId = str

DEFAULT_STRATEGY_CAP = 1 << 20
DEFAULT_SUBSET_CAP = 1 << 16

_NAME_RE = re.compile(r"[A-Za-z0-9_']+\Z")


class ArsError(Exception):
    """Base class for errors raised by this module."""


class UnknownObject(ArsError):
    def __init__(self, obj: ObjId):
        super().__init__(f"object not in system: {obj!r}")
        self.obj = obj


class StrategySpaceTooLarge(ArsError):
    pass


class ExactMeasureUnavailable(ArsError):
    pass


class MeasurabilityCheckInfeasible(ArsError):
    pass


class ArsParseError(ArsError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# ---------------------------------------------------------------- system --


@dataclass(frozen=True)
class WeightedArs:
    """A finite rewrite system with natural-number step multiplicities.

    ``rules`` holds only nonzero entries as (source, target, multiplicity)
    triples; everything else is implicitly zero. The object set may include
    isolated (normal) objects that appear in no rule.
    """

    objects: frozenset[ObjId]
    rules: tuple[tuple[ObjId, ObjId, int], ...]

    def __post_init__(self) -> None:
        out: dict[ObjId, dict[ObjId, int]] = {}
        seen: set[tuple[ObjId, ObjId]] = set()
        for a, b, m in self.rules:
            if a not in self.objects or b not in self.objects:
                raise UnknownObject(a if a not in self.objects else b)
            if m < 1:
                raise ArsError(f"multiplicity must be >= 1: {a} -> {b} : {m}")
            if (a, b) in seen:
                raise ArsError(f"duplicate rule entry: {a} -> {b}")
            seen.add((a, b))
            out.setdefault(a, {})[b] = m
        # Sorted adjacency keeps enumeration and sampling deterministic.
        adjacency = {
            a: tuple(sorted(targets.items())) for a, targets in out.items()
        }
        object.__setattr__(self, "_adjacency", adjacency)

    @classmethod
    def from_rules(
        cls,
        rules: Iterable[tuple[ObjId, ObjId, int]],
        extra_objects: Iterable[ObjId] = (),
    ) -> "WeightedArs":
        """Build a system from rule triples, accumulating repeated edges."""
        acc: dict[tuple[ObjId, ObjId], int] = {}
        objects: set[ObjId] = set(extra_objects)
        for a, b, m in rules:
            objects.add(a)
            objects.add(b)
            acc[(a, b)] = acc.get((a, b), 0) + m
        triples = tuple(sorted((a, b, m) for (a, b), m in acc.items()))
        return cls(objects=frozenset(objects), rules=triples)

    # -- basic queries ----------------------------------------------------

    def _targets(self, a: ObjId) -> tuple[tuple[ObjId, int], ...]:
        self._require(a)
        return self._adjacency.get(a, ())  # type: ignore[attr-defined]

    def _require(self, a: ObjId) -> None:
        if a not in self.objects:
            raise UnknownObject(a)

    def mult(self, a: ObjId, b: ObjId) -> int:
        """Step multiplicity of a -> b (0 when absent)."""
        self._require(a)
        self._require(b)
        for target, m in self._adjacency.get(a, ()):  # type: ignore[attr-defined]
            if target == b:
                return m
        return 0

    def degree(self, a: ObjId) -> int:
        """Total outgoing multiplicity of `a`; zero iff `a` is normal."""
        return sum(m for _, m in self._targets(a))

    def is_normal(self, a: ObjId) -> bool:
        return self.degree(a) == 0

    def non_normal_objects(self) -> tuple[ObjId, ...]:
        """The reducible objects, in sorted order."""
        return tuple(sorted(a for a in self.objects if not self.is_normal(a)))

    def choices(self, a: ObjId) -> tuple[ObjId, ...]:
        """Distinct targets reachable in one step from `a`."""
        return tuple(b for b, _ in self._targets(a))


# ------------------------------------------------------------ strategies --


@dataclass(frozen=True)
class Strategy:
    """A total choice function: one target per reducible object.

    Stored as a sorted tuple of (object, target) pairs so strategies are
    hashable and canonical.
    """

    choices: tuple[tuple[ObjId, ObjId], ...]

    @classmethod
    def of(cls, mapping: Mapping[ObjId, ObjId]) -> "Strategy":
        return cls(tuple(sorted(mapping.items())))

    def mapping(self) -> dict[ObjId, ObjId]:
        return dict(self.choices)

    def target(self, a: ObjId) -> ObjId:
        for obj, tgt in self.choices:
            if obj == a:
                return tgt
        raise KeyError(a)


def enumerate_strategies(
    ars: WeightedArs, cap: int = DEFAULT_STRATEGY_CAP
) -> tuple[Strategy, ...]:
    """All strategies of `ars`, i.e. the product of per-object target sets.

    Multiplicity never changes *which* strategies exist, only their weight.
    Raises StrategySpaceTooLarge when the product exceeds `cap` (checked
    before any enumeration happens).
    """
    sources = ars.non_normal_objects()
    total = 1
    for a in sources:
        total *= len(ars.choices(a))
        if total > cap:
            raise StrategySpaceTooLarge(
                f"strategy space too large: more than {cap} strategies"
            )
    result = [Strategy(())]
    for a in sources:
        result = [
            Strategy(s.choices + ((a, b),)) for s in result for b in ars.choices(a)
        ]
    return tuple(result)


def strategy_weight(ars: WeightedArs, f: Strategy) -> Fraction:
    """Product weight of a single strategy: prod mult(a, f(a)) / degree(a)."""
    _check_total(ars, f)
    w = Fraction(1)
    for a, b in f.choices:
        w *= Fraction(ars.mult(a, b), ars.degree(a))
    return w


def _check_total(ars: WeightedArs, f: Strategy) -> None:
    mapping = f.mapping()
    for a in ars.non_normal_objects():
        if a not in mapping:
            raise ArsError(f"strategy misses a choice for reducible object {a!r}")
    for a, b in mapping.items():
        if ars.mult(a, b) < 1:
            raise ArsError(f"strategy uses a zero-multiplicity step {a!r} -> {b!r}")


# ----------------------------------------------------------------- boxes --


@dataclass(frozen=True)
class Box:
    """The set of strategies agreeing with finitely many fixed choices.

    The empty box is the whole strategy space. Invariants (every constrained
    object reducible, every constrained pair an actual rule) are validated
    against a concrete system by `box_prob` and friends.
    """

    constraints: tuple[tuple[ObjId, ObjId], ...]

    @classmethod
    def of(cls, mapping: Mapping[ObjId, ObjId]) -> "Box":
        return cls(tuple(sorted(mapping.items())))

    @classmethod
    def full(cls, f: Strategy) -> "Box":
        """The singleton box pinning every choice of `f`."""
        return cls(f.choices)

    def mapping(self) -> dict[ObjId, ObjId]:
        return dict(self.constraints)

    def contains(self, f: Strategy) -> bool:
        m = f.mapping()
        return all(m.get(a) == b for a, b in self.constraints)


def _validate_box(ars: WeightedArs, box: Box) -> None:
    seen: set[ObjId] = set()
    for a, b in box.constraints:
        ars._require(a)
        ars._require(b)
        if a in seen:
            raise ArsError(f"box constrains {a!r} twice")
        seen.add(a)
        if ars.is_normal(a):
            raise ArsError(f"constrained object is normal: {a!r}")
        if ars.mult(a, b) < 1:
            raise ArsError(f"box uses a zero-multiplicity step {a!r} -> {b!r}")


def box_prob(ars: WeightedArs, box: Box) -> Fraction:
    """Exact box weight: prod over constraints of mult(a, a') / degree(a).

    The empty box covers every strategy and has weight 1. No enumeration is
    involved; this is a closed-form product.
    """
    _validate_box(ars, box)
    p = Fraction(1)
    for a, b in box.constraints:
        p *= Fraction(ars.mult(a, b), ars.degree(a))
    return p


def enumerate_boxes(
    ars: WeightedArs, cap: int = DEFAULT_STRATEGY_CAP
) -> Iterator[Box]:
    """Yield every box of the system (each reducible object free or pinned)."""
    sources = ars.non_normal_objects()
    total = 1
    for a in sources:
        total *= len(ars.choices(a)) + 1
        if total > cap:
            raise StrategySpaceTooLarge(
                f"strategy space too large: more than {cap} boxes"
            )

    def rec(i: int, acc: tuple[tuple[ObjId, ObjId], ...]) -> Iterator[Box]:
        if i == len(sources):
            yield Box(acc)
            return
        a = sources[i]
        yield from rec(i + 1, acc)  # leave `a` unconstrained
        for b in ars.choices(a):
            yield from rec(i + 1, acc + ((a, b),))

    yield from rec(0, ())


# ------------------------------------------------------------ event sets --


@dataclass(frozen=True)
class ExplicitStrategies:
    strategies: frozenset[Strategy]


@dataclass(frozen=True)
class BoxUnion:
    boxes: tuple[Box, ...]


@dataclass(frozen=True)
class Complement:
    inner: "EventSet"


@dataclass(frozen=True)
class Intersection:
    left: "EventSet"
    right: "EventSet"


EventSet = Union[ExplicitStrategies, BoxUnion, Complement, Intersection]

EMPTY_EVENT: EventSet = ExplicitStrategies(frozenset())


def event_members(
    ars: WeightedArs, ev: EventSet, cap: int = DEFAULT_STRATEGY_CAP
) -> frozenset[Strategy]:
    """Materialize an event set as the strategies it contains."""
    space = enumerate_strategies(ars, cap)

    def members(e: EventSet) -> frozenset[Strategy]:
        match e:
            case ExplicitStrategies(strategies):
                for f in strategies:
                    _check_total(ars, f)
                return strategies
            case BoxUnion(boxes):
                for box in boxes:
                    _validate_box(ars, box)
                return frozenset(
                    f for f in space if any(b.contains(f) for b in boxes)
                )
            case Complement(inner):
                return frozenset(space) - members(inner)
            case Intersection(left, right):
                return members(left) & members(right)
        raise TypeError(f"not an event set: {e!r}")

    return members(ev)


def outer_measure(
    ars: WeightedArs, ev: EventSet, cap: int = DEFAULT_STRATEGY_CAP
) -> Fraction:
    """Exact measure of a strategy set on a finite system.

    On finite systems the infimum over countable box covers is attained by
    the cover of singleton (full) boxes, so the measure is the plain sum of
    member weights. The empty set has measure 0, the whole space measure 1.
    """
    try:
        members = event_members(ars, ev, cap)
    except StrategySpaceTooLarge as exc:
        raise ExactMeasureUnavailable(f"exact measure unavailable: {exc}") from exc
    return sum((strategy_weight(ars, f) for f in members), Fraction(0))


def is_measurable(
    ars: WeightedArs,
    ev: EventSet,
    strategy_cap: int = DEFAULT_STRATEGY_CAP,
    subset_cap: int = DEFAULT_SUBSET_CAP,
) -> bool:
    """Check the splitting identity P(S) = P(S & A) + P(S & ~A) for all S.

    Quantifies over every subset S of the strategy space, so the space is
    capped at `subset_cap` subsets (2**|space| of them).
    """
    space = tuple(enumerate_strategies(ars, strategy_cap))
    if 1 << len(space) > subset_cap:
        raise MeasurabilityCheckInfeasible(
            f"measurability check infeasible: 2^{len(space)} subsets exceeds cap"
        )
    weights = {f: strategy_weight(ars, f) for f in space}
    inside = event_members(ars, ev, strategy_cap)

    def p(sset: Iterable[Strategy]) -> Fraction:
        return sum((weights[f] for f in sset), Fraction(0))

    for mask in range(1 << len(space)):
        s = [f for i, f in enumerate(space) if mask >> i & 1]
        inter = [f for f in s if f in inside]
        rest = [f for f in s if f not in inside]
        if p(s) != p(inter) + p(rest):
            return False
    return True


# --------------------------------------------------------------- parsing --


def parse_ars(text: str) -> WeightedArs:
    """Parse the rule-per-line text format.

    Each line is ``a -> b : m`` with the multiplicity optional (default 1);
    ``#`` starts a comment; blank lines are skipped. Object names match
    [A-Za-z0-9_']+. Repeated ``a -> b`` lines accumulate multiplicity.
    """
    rules: list[tuple[ObjId, ObjId, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise ArsParseError("expected 'source -> target [: mult]'", lineno)
        lhs, rhs = line.split("->", 1)
        source = lhs.strip()
        mult = 1
        if ":" in rhs:
            rhs, mult_text = rhs.split(":", 1)
            try:
                mult = int(mult_text.strip())
            except ValueError:
                raise ArsParseError(
                    f"multiplicity is not an integer: {mult_text.strip()!r}", lineno
                ) from None
            if mult < 1:
                raise ArsParseError(f"multiplicity must be >= 1, got {mult}", lineno)
        target = rhs.strip()
        for name in (source, target):
            if not _NAME_RE.match(name):
                raise ArsParseError(f"bad object name: {name!r}", lineno)
        rules.append((source, target, mult))
    return WeightedArs.from_rules(rules)


def format_ars(ars: WeightedArs) -> str:
    """Render a system back into the text format (sorted, explicit mults)."""
    lines = [
        f"{a} -> {b}" + (f" : {m}" if m != 1 else "")
        for a, b, m in sorted(ars.rules)
    ]
    return "\n".join(lines) + "\n"
