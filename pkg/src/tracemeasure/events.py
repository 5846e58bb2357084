"""Trace events over a weighted rewrite system, exact and sampled.

A sampled strategy induces a trajectory from any start object: follow the
chosen step until a normal object appears. Choices are drawn once per object
and memoized, so a trajectory that revisits an object repeats itself forever.
This module computes event probabilities three ways:

- exactly by acyclic recursion (``reach_prob_exact``),
- as a least-fixpoint iteration for cyclic systems (``reach_prob_cyclic``),
- and by seeded lazy sampling (``sample_event``).

Stopping-time probabilities (``stopping_prob``) are exact on every finite
system: a trajectory that stops never revisits an object, so the stopping
paths are the revisit-free paths and there are finitely many of them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .ars import ArsError, ObjId, WeightedArs

DEFAULT_STEP_CAP = 4096


class CyclicSystem(ArsError):
    pass


# ---------------------------------------------------------------- events --


@dataclass(frozen=True)
class Reach:
    """Trajectory from `source` passes through `target`."""

    source: ObjId
    target: ObjId


@dataclass(frozen=True)
class StopsAtStep:
    """Trajectory from `source` first hits a normal object at exactly step n."""

    source: ObjId
    steps: int

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("step index must be >= 1")


@dataclass(frozen=True)
class StopsWithin:
    """Trajectory from `source` hits a normal object at some step <= n."""

    source: ObjId
    steps: int

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("step index must be >= 1")


@dataclass(frozen=True)
class NeverStops:
    """Trajectory from `source` never reaches a normal object."""

    source: ObjId


TraceEvent = Union[Reach, StopsAtStep, StopsWithin, NeverStops]


@dataclass(frozen=True)
class ProbInterval:
    """An exact enclosure [lower, upper]; `exact` means the bounds agree."""

    lower: Fraction
    upper: Fraction

    def __post_init__(self) -> None:
        if not 0 <= self.lower <= self.upper <= 1:
            raise ValueError(f"bad interval [{self.lower}, {self.upper}]")

    @property
    def exact(self) -> bool:
        return self.lower == self.upper


# ----------------------------------------------------------- exact reach --


def reach_prob_exact(ars: WeightedArs, source: ObjId, target: ObjId) -> Fraction:
    """Probability that the trajectory from `source` ever visits `target`.

    Requires the subgraph reachable from `source` to be acyclic; on cyclic
    systems use `reach_prob_cyclic` or `sample_event` instead.
    """
    ars._require(source)
    ars._require(target)
    _require_acyclic(ars, source)

    memo: dict[ObjId, Fraction] = {}

    def pr(a: ObjId) -> Fraction:
        if a == target:
            return Fraction(1)
        if ars.is_normal(a):
            return Fraction(0)
        if a not in memo:
            deg = ars.degree(a)
            memo[a] = sum(
                (Fraction(m, deg) * pr(b) for b, m in ars._targets(a)),
                Fraction(0),
            )
        return memo[a]

    return pr(source)


def _require_acyclic(ars: WeightedArs, source: ObjId) -> None:
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[ObjId, int] = {}

    def visit(a: ObjId) -> None:
        color[a] = GREY
        for b, _ in ars._targets(a):
            c = color.get(b, WHITE)
            if c == GREY:
                raise CyclicSystem("cyclic system: use fixpoint or sampling")
            if c == WHITE:
                visit(b)
        color[a] = BLACK

    visit(source)


def reach_prob_cyclic(
    ars: WeightedArs, source: ObjId, target: ObjId, tol: Fraction
) -> Fraction:
    """Least-fixpoint iteration for reachability, tolerant of cycles.

    Iterates x_a <- sum mult/degree * x_b from zero until the largest
    component change drops below `tol`; the result is an exact rational that
    under-approximates the least fixpoint by at most the achieved bound.
    Choices are re-drawn per visit in this reading, which extends (and on
    cyclic systems deliberately differs from) the memoized sampler.
    """
    ars._require(source)
    ars._require(target)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    reachable = _reachable_from(ars, source)
    x: dict[ObjId, Fraction] = {a: Fraction(0) for a in reachable}
    while True:
        delta = Fraction(0)
        nxt: dict[ObjId, Fraction] = {}
        for a in reachable:
            if a == target:
                val = Fraction(1)
            elif ars.is_normal(a):
                val = Fraction(0)
            else:
                deg = ars.degree(a)
                val = sum(
                    (Fraction(m, deg) * x[b] for b, m in ars._targets(a)),
                    Fraction(0),
                )
            nxt[a] = val
            delta = max(delta, abs(val - x[a]))
        x = nxt
        if delta < tol:
            return x[source]


def _reachable_from(ars: WeightedArs, source: ObjId) -> tuple[ObjId, ...]:
    seen = {source}
    stack = [source]
    while stack:
        a = stack.pop()
        for b, _ in ars._targets(a):
            if b not in seen:
                seen.add(b)
                stack.append(b)
    return tuple(sorted(seen))


# -------------------------------------------------------- stopping times --


def _stop_masses(
    ars: WeightedArs, source: ObjId, horizon: int
) -> tuple[dict[int, Fraction], Fraction, Fraction]:
    """Exact stopping mass per step up to `horizon`.

    Returns (stopped_at, looping, alive): `stopped_at[k]` is the probability
    of first reaching a normal object at step k; `looping` is the mass of
    trajectories that provably repeat forever (a revisit under a memoized
    choice function is a permanent cycle); `alive` is the mass still running
    at the horizon, undetermined either way.
    """
    stopped: dict[int, Fraction] = {}
    looping = Fraction(0)
    alive = Fraction(0)

    def walk(a: ObjId, prob: Fraction, depth: int, visited: frozenset[ObjId]) -> None:
        nonlocal looping, alive
        if ars.is_normal(a):
            stopped[depth] = stopped.get(depth, Fraction(0)) + prob
            return
        if depth == horizon:
            alive += prob
            return
        deg = ars.degree(a)
        for b, m in ars._targets(a):
            branch = prob * Fraction(m, deg)
            if b in visited:
                looping += branch
            else:
                walk(b, branch, depth + 1, visited | {b})

    ars._require(source)
    walk(source, Fraction(1), 0, frozenset({source}))
    return stopped, looping, alive


def stopping_prob(
    ars: WeightedArs, event: TraceEvent, step_cap: int = DEFAULT_STEP_CAP
) -> Union[Fraction, ProbInterval]:
    """Exact stopping-time probability of a trace event.

    StopsAtStep / StopsWithin return exact Fractions. NeverStops returns a
    ProbInterval: exact whenever `step_cap` covers every revisit-free path
    (at most the number of reachable reducible objects), otherwise the
    enclosure [provably-looping mass, 1 - stopped-so-far].
    """
    match event:
        case StopsAtStep(source, n):
            if n > step_cap:
                raise ArsError(f"step {n} exceeds step cap {step_cap}")
            stopped, _, _ = _stop_masses(ars, source, n)
            return stopped.get(n, Fraction(0))
        case StopsWithin(source, n):
            if n > step_cap:
                raise ArsError(f"step {n} exceeds step cap {step_cap}")
            stopped, _, _ = _stop_masses(ars, source, n)
            return sum(
                (p for k, p in stopped.items() if k <= n), Fraction(0)
            )
        case NeverStops(source):
            bound = len(
                [a for a in _reachable_from(ars, source) if not ars.is_normal(a)]
            )
            horizon = min(step_cap, bound)
            stopped, looping, alive = _stop_masses(ars, source, horizon)
            ever = sum(stopped.values(), Fraction(0))
            return ProbInterval(lower=looping, upper=Fraction(1) - ever)
        case Reach(source, target):
            raise ArsError(
                "stopping_prob handles stopping events; use reach_prob_exact "
                "for reachability"
            )
    raise TypeError(f"not a trace event: {event!r}")


# --------------------------------------------------------------- sampling --


class LazyStrategySampler:
    """Draws a strategy lazily: one memoized weighted choice per object.

    Revisiting an object reuses the recorded choice, which is what makes a
    sampled trajectory a function of the strategy rather than a Markov walk.
    """

    def __init__(self, ars: WeightedArs, rng: random.Random):
        self.ars = ars
        self.rng = rng
        self.choices: dict[ObjId, ObjId] = {}

    def choice(self, a: ObjId) -> ObjId:
        if a in self.choices:
            return self.choices[a]
        targets = self.ars._targets(a)
        if not targets:
            raise ArsError(f"no choice to draw at normal object {a!r}")
        pick = self.rng.randrange(self.ars.degree(a))
        acc = 0
        for b, m in targets:
            acc += m
            if pick < acc:
                self.choices[a] = b
                return b
        raise AssertionError("weighted draw fell through")

    def trajectory(
        self, source: ObjId, step_cap: int
    ) -> tuple[list[ObjId], bool, bool]:
        """Walk from `source`; returns (path, stopped, looped)."""
        path = [source]
        visited = {source}
        current = source
        for _ in range(step_cap):
            if self.ars.is_normal(current):
                return path, True, False
            current = self.choice(current)
            path.append(current)
            if current in visited:
                # Memoized choices make the continuation periodic from here.
                return path, False, True
            visited.add(current)
        if self.ars.is_normal(current):
            return path, True, False
        return path, False, False


@dataclass(frozen=True)
class SampleReport:
    event: TraceEvent
    samples: int
    hits: int
    estimate: Fraction
    seed: int
    step_cap: int


def sample_event(
    ars: WeightedArs,
    event: TraceEvent,
    samples: int,
    step_cap: int = DEFAULT_STEP_CAP,
    seed: int = 0,
) -> SampleReport:
    """Monte Carlo estimate of a trace event under lazy strategy sampling.

    Deterministic for a fixed seed. Trajectories that hit the step cap
    without stopping count as non-stopping.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = random.Random(seed)
    hits = 0
    for _ in range(samples):
        sampler = LazyStrategySampler(ars, rng)
        match event:
            case Reach(source, target):
                path, _, _ = sampler.trajectory(source, step_cap)
                hit = target in path
            case StopsAtStep(source, n):
                path, stopped, _ = sampler.trajectory(source, step_cap)
                hit = stopped and len(path) - 1 == n
            case StopsWithin(source, n):
                path, stopped, _ = sampler.trajectory(source, step_cap)
                hit = stopped and len(path) - 1 <= n
            case NeverStops(source):
                _, stopped, _ = sampler.trajectory(source, step_cap)
                hit = not stopped
            case _:
                raise TypeError(f"not a trace event: {event!r}")
        hits += int(hit)
    return SampleReport(
        event=event,
        samples=samples,
        hits=hits,
        estimate=Fraction(hits, samples),
        seed=seed,
        step_cap=step_cap,
    )


# ---------------------------------------------------------------- ladder --


def ladder(n: int) -> WeightedArs:
    """The stopping-ladder fixture with reducible levels a0..an.

    Rules a_i -> a_{i+1} and a_i -> a'_{i+1} for 0 <= i <= n, each with
    multiplicity 1. Stopping at exactly step k has probability 2**-k for
    every k <= n (the frontier object a_{n+1} keeps step n honest).
    """
    if n < 1:
        raise ValueError("ladder size must be >= 1")
    rules = []
    for i in range(n + 1):
        rules.append((f"a{i}", f"a{i + 1}", 1))
        rules.append((f"a{i}", f"a'{i + 1}", 1))
    return WeightedArs.from_rules(rules)


def parse_event(tokens: list[str]) -> TraceEvent:
    """Parse CLI-style event words: reach a b | stops-at a 3 | ..."""
    if not tokens:
        raise ValueError("missing event")
    kind, *rest = tokens
    try:
        match kind:
            case "reach":
                (source, target) = rest
                return Reach(source, target)
            case "stops-at":
                (source, n) = rest
                return StopsAtStep(source, int(n))
            case "stops-within":
                (source, n) = rest
                return StopsWithin(source, int(n))
            case "never-stops":
                (source,) = rest
                return NeverStops(source)
    except (ValueError, TypeError) as exc:
        raise ValueError(f"malformed event {' '.join(tokens)!r}: {exc}") from exc
    raise ValueError(f"unknown event kind {kind!r}")
