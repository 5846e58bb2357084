"""Reduction for the projector calculus, non-deterministic and probabilistic.

The symmetric relation (`sym_step`) rearranges sums (commutativity,
associativity), distributes applications and abstractions over sums, and
commutes a projector past an application when the typing side condition
holds. `canonical_form` orients all of that except the projector/application
commutation into a normal form: sums are flattened, sorted multisets, pushed
out of application heads and abstraction bodies.

Reduction proper has three redexes: beta, type-beta, and the projector. In
non-deterministic mode a projector over a sum steps to any extractable
sub-sum of the projected type. In probabilistic mode it steps to one of the
alpha-distinct summands of the projected type, with probability
multiplicity / total; a summand group must be normal before the projector
fires (free variables count as inert, so open summands participate — a
single summand of the projected type fires with probability 1).

Redex selection is leftmost-outermost over the canonical form; the
"proj-first" and "beta-first" strategies reorder only the preferred kind.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Iterable, Iterator, Optional, Union

from .syntax import (
    App,
    Arrow,
    Lam,
    Proj,
    Scale,
    Sum,
    TApp,
    TLam,
    Term,
    alpha_eq,
    fresh_name,
    free_var_names,
    subst_term,
    sum_of,
    sum_parts,
    term_key,
    type_key,
    type_subst_term,
    Var,
)
from .typecheck import TypingError, type_of
from .typenf import nf_as_arrow, nf_multiset_leq, reify_nf, type_nf

DEFAULT_STEP_CAP = 256
NONDET_COMBO_CAP = 4096

STRATEGIES = ("leftmost-outermost", "proj-first", "beta-first")

NONDET = "nondet"
PROB = "prob"


class ReductionError(Exception):
    pass


class NotARedex(ReductionError):
    pass


class ProjectorNotReady(ReductionError):
    """A summand of the projector body is not yet normal.

    The probabilistic projector only fires on a fully normal body: both the
    candidates of the projected type and the remainder it will discard.
    Firing over a still-reducible remainder would throw away mass that the
    remainder could still contribute once reduced.
    """


class StepCapExceeded(ReductionError):
    pass


# ---------------------------------------------------------- distributions --


@dataclass(frozen=True)
class Distribution:
    """Exact distribution over terms; `residual` flags truncated mass."""

    entries: tuple[tuple[Term, Fraction], ...]
    residual: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        total = self.residual
        seen = set()
        for term, p in self.entries:
            if p <= 0:
                raise ValueError(f"probability must be positive, got {p}")
            key = term_key(term)
            if key in seen:
                raise ValueError("distribution entries must be alpha-distinct")
            seen.add(key)
            total += p
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def of(
        cls, pairs: Iterable[tuple[Term, Fraction]], residual: Fraction = Fraction(0)
    ) -> "Distribution":
        """Merge alpha-equal terms, sort for determinism, and validate."""
        merged: dict = {}
        for term, p in pairs:
            key = term_key(term)
            if key in merged:
                merged[key] = (merged[key][0], merged[key][1] + p)
            else:
                merged[key] = (term, p)
        entries = tuple(
            (t, p) for _, (t, p) in sorted(merged.items(), key=lambda kv: repr(kv[0]))
        )
        return cls(entries=entries, residual=residual)

    def prob_of(self, term: Term) -> Fraction:
        key = term_key(term)
        for t, p in self.entries:
            if term_key(t) == key:
                return p
        return Fraction(0)

    def support(self) -> tuple[Term, ...]:
        return tuple(t for t, _ in self.entries)

    def sample(self, rng: random.Random) -> Term:
        if self.residual:
            raise ValueError("cannot sample a truncated distribution")
        u = rng.random()
        acc = 0.0
        for term, p in self.entries:
            acc += float(p)
            if u < acc:
                return term
        return self.entries[-1][0]


# --------------------------------------------------------- canonical form --


def canonical_form(t: Term) -> Term:
    """Orient the sum laws: flatten + sort sums, push them out of heads/bodies."""
    match t:
        case Var():
            return t
        case Lam(x, ty, body):
            b = canonical_form(body)
            if isinstance(b, Sum):
                return _sum_sorted([Lam(x, ty, p) for p in sum_parts(b)])
            return Lam(x, ty, b)
        case App(f, a):
            fc = canonical_form(f)
            ac = canonical_form(a)
            if isinstance(fc, Sum):
                return _sum_sorted([App(p, ac) for p in sum_parts(fc)])
            return App(fc, ac)
        case Sum():
            parts = [canonical_form(p) for p in sum_parts(t)]
            flat: list[Term] = []
            for p in parts:
                flat.extend(sum_parts(p))
            return _sum_sorted(flat)
        case Proj(ty, body):
            return Proj(ty, canonical_form(body))
        case TLam(x, body):
            return TLam(x, canonical_form(body))
        case TApp(f, ty):
            return TApp(canonical_form(f), ty)
        case Scale(p, body):
            return Scale(p, canonical_form(body))
    raise TypeError(f"not a term: {t!r}")


def _sum_sorted(parts: list[Term]) -> Term:
    return sum_of(sorted(parts, key=term_key))


# ------------------------------------------------------- symmetric steps --


def sym_step_tagged(t: Term) -> list[tuple[Term, str]]:
    """All single symmetric-step variants of `t`, with the rule that fired."""
    seen: set = set()
    out: list[tuple[Term, str]] = []
    for sub, plug in _contexts(t):
        for variant, rule in _local_sym(sub):
            new = plug(variant)
            key = (term_key(new), rule)
            if key not in seen:
                seen.add(key)
                out.append((new, rule))
    return out


def sym_step(t: Term) -> list[Term]:
    uniq: dict = {}
    for new, _ in sym_step_tagged(t):
        uniq.setdefault(term_key(new), new)
    return list(uniq.values())


def _local_sym(t: Term) -> Iterator[tuple[Term, str]]:
    match t:
        case Sum(a, b):
            yield Sum(b, a), "sum-comm"
            if isinstance(a, Sum):
                yield Sum(a.left, Sum(a.right, b)), "sum-assoc"
            if isinstance(b, Sum):
                yield Sum(Sum(a, b.left), b.right), "sum-assoc"
            # reverse distribution: rt + st -> (r + s) t
            if (
                isinstance(a, App)
                and isinstance(b, App)
                and alpha_eq(a.arg, b.arg)
            ):
                yield App(Sum(a.fn, b.fn), a.arg), "app-dist"
            # reverse distribution: \x.r + \x.s -> \x.(r + s)
            if (
                isinstance(a, Lam)
                and isinstance(b, Lam)
                and type_key(a.var_type) == type_key(b.var_type)
            ):
                merged = _merge_lams(a, b)
                if merged is not None:
                    yield merged, "lam-dist"
        case App(f, arg):
            if isinstance(f, Sum):
                yield Sum(App(f.left, arg), App(f.right, arg)), "app-dist"
            # projector/application commutation, forward direction
            if isinstance(f, Proj) and isinstance(f.type, Arrow):
                cod = _proj_app_codomain(f.body, f.type)
                if cod is not None:
                    yield Proj(f.type.right, App(f.body, arg)), "proj-app"
        case Proj(ty, body):
            # projector/application commutation, reverse direction
            if isinstance(body, App):
                dom = _proj_app_domain(body.fn, ty)
                if dom is not None:
                    yield App(Proj(Arrow(dom, ty), body.fn), body.arg), "proj-app"
        case Lam(x, ty, body):
            if isinstance(body, Sum):
                yield (
                    Sum(Lam(x, ty, body.left), Lam(x, ty, body.right)),
                    "lam-dist",
                )
    # other node shapes have no root-level symmetric variant


def _merge_lams(a: Lam, b: Lam) -> Optional[Term]:
    avoid = free_var_names(a.body) | free_var_names(b.body)
    x = fresh_name(a.var, avoid - {a.var})
    left = a.body if x == a.var else subst_term(a.body, a.var, Var(x, a.var_type))
    right = b.body if x == b.var else subst_term(b.body, b.var, Var(x, b.var_type))
    return Lam(x, a.var_type, Sum(left, right))


def _proj_app_codomain(body: Term, annot: Arrow):
    """Side condition for the forward commutation: body : A -> (B /\\ C)."""
    try:
        subject = type_nf(type_of(body))
    except TypingError:
        return None
    arrow = nf_as_arrow(subject)
    if arrow is None:
        return None
    dom, cod = arrow
    want_dom = type_nf(annot.left)
    want_cod = type_nf(annot.right)
    if dom != want_dom:
        return None
    if nf_multiset_leq(want_cod, cod) and len(want_cod) < len(cod):
        return cod
    return None


def _proj_app_domain(fn: Term, result_type) -> Optional[Term]:
    """Side condition for the reverse commutation; returns the domain type."""
    try:
        subject = type_nf(type_of(fn))
    except TypingError:
        return None
    arrow = nf_as_arrow(subject)
    if arrow is None:
        return None
    dom, cod = arrow
    want = type_nf(result_type)
    if nf_multiset_leq(want, cod) and len(want) < len(cod):
        return reify_nf(dom)
    return None


# ------------------------------------------------------------- contexts --

_CHILD_FIELDS = {
    Lam: ("body",),
    App: ("fn", "arg"),
    Sum: ("left", "right"),
    Proj: ("body",),
    TLam: ("body",),
    TApp: ("fn",),
    Scale: ("body",),
}


def _replace_child(t: Term, field_name: str, new: Term) -> Term:
    match t:
        case Lam(x, ty, _):
            return Lam(x, ty, new)
        case App(f, a):
            return App(new, a) if field_name == "fn" else App(f, new)
        case Sum(a, b):
            return Sum(new, b) if field_name == "left" else Sum(a, new)
        case Proj(ty, _):
            return Proj(ty, new)
        case TLam(x, _):
            return TLam(x, new)
        case TApp(_, ty):
            return TApp(new, ty)
        case Scale(p, _):
            return Scale(p, new)
    raise TypeError(f"no children: {t!r}")


def _contexts(t: Term):
    """Yield (subterm, plug) pairs for every position, preorder."""
    yield t, lambda new: new
    for field_name in _CHILD_FIELDS.get(type(t), ()):
        child = getattr(t, field_name)

        def outer_plug(new: Term, _f=field_name) -> Term:
            return _replace_child(t, _f, new)

        for sub, plug in _contexts(child):

            def composed(new: Term, _plug=plug, _outer=outer_plug) -> Term:
                return _outer(_plug(new))

            yield sub, composed


# ------------------------------------------------------ projector redexes --


@dataclass(frozen=True)
class ProjAnalysis:
    groups: tuple[tuple[Term, int], ...]
    rest: tuple[Term, ...]
    not_ready: tuple[Term, ...]
    blocked_rest: bool

    @property
    def firable(self) -> bool:
        return bool(self.groups) and not self.not_ready and not self.blocked_rest


def analyze_projector(t: Proj) -> ProjAnalysis:
    """Split the canonical summands into projected groups and remainder.

    Each summand is canonicalized on its own (one may expand into several),
    but the body's left-to-right order is kept: the groups come out in
    first-occurrence order, which the translation relies on for images that
    are stable under substitution. The multiset of summands is the same as
    for the fully canonical body, so distributions are unaffected.
    """
    parts = [
        q for p in sum_parts(t.body) for q in sum_parts(canonical_form(p))
    ]
    want = type_nf(t.type)
    groups: dict = {}
    order: list = []
    rest: list[Term] = []
    for p in parts:
        try:
            matches = type_nf(type_of(p)) == want
        except TypingError:
            matches = False
        if matches:
            key = term_key(p)
            if key not in groups:
                groups[key] = [p, 0]
                order.append(key)
            groups[key][1] += 1
        else:
            rest.append(p)
    blocked = False
    if groups and rest:
        try:
            blocked = type_nf(type_of(sum_of(rest))) == want
        except TypingError:
            blocked = False
    not_ready = tuple(p for p in parts if not is_normal(p))
    return ProjAnalysis(
        groups=tuple((groups[k][0], groups[k][1]) for k in order),
        rest=tuple(rest),
        not_ready=not_ready,
        blocked_rest=blocked,
    )


def projector_distribution(t: Proj) -> Distribution:
    """The exact one-step distribution of a probabilistic projector redex.

    Summands of the projected type are grouped up to alpha/canonical form;
    group i is chosen with probability multiplicity_i / total. Raises
    NotARedex when no summand has the projected type (or the remainder
    itself does), ProjectorNotReady when any summand — candidate or
    remainder — is not yet normal.
    """
    analysis = analyze_projector(t)
    if not analysis.groups:
        raise NotARedex("projector body has no summand of the projected type")
    if analysis.blocked_rest:
        raise NotARedex("sum remainder itself has the projected type")
    if analysis.not_ready:
        raise ProjectorNotReady("a summand of the body is not normal yet")
    total = sum(count for _, count in analysis.groups)
    return Distribution.of(
        (rep, Fraction(count, total)) for rep, count in analysis.groups
    )


def nondet_extractions(t: Proj, combo_cap: int = NONDET_COMBO_CAP) -> list[Term]:
    """All sub-sums of the projected type extractable by the plain rule.

    Requires at least two summands (the rule splits the sum in two). The
    sub-multisets are enumerated per alpha-group count vector while the
    combination count stays under `combo_cap`; beyond that only single
    summands and whole groups are tried.
    """
    parts = list(sum_parts(canonical_form(t.body)))
    if len(parts) < 2:
        return []
    want = type_nf(t.type)
    groups: dict = {}
    order: list = []
    for p in parts:
        key = term_key(p)
        if key not in groups:
            groups[key] = [p, 0]
            order.append(key)
        groups[key][1] += 1
    reps = [groups[k][0] for k in order]
    counts = [groups[k][1] for k in order]

    def candidate(vector: tuple[int, ...]) -> Optional[Term]:
        chosen: list[Term] = []
        for rep, k in zip(reps, vector):
            chosen.extend([rep] * k)
        total = sum(vector)
        if total == 0 or total == len(parts):
            return None
        cand = sum_of(chosen)
        try:
            if type_nf(type_of(cand)) == want:
                return cand
        except TypingError:
            return None
        return None

    vectors: list[tuple[int, ...]]
    if prod(c + 1 for c in counts) <= combo_cap:
        vectors = [()]
        for c in counts:
            vectors = [v + (k,) for v in vectors for k in range(c + 1)]
    else:
        vectors = []
        for i, c in enumerate(counts):
            single = tuple(1 if j == i else 0 for j in range(len(counts)))
            whole = tuple(c if j == i else 0 for j in range(len(counts)))
            vectors.extend([single, whole])

    out: dict = {}
    for v in vectors:
        cand = candidate(tuple(v))
        if cand is not None:
            out.setdefault(term_key(cand), cand)
    return list(out.values())


# ----------------------------------------------------------- redex search --


def redexes(t: Term, mode: str = PROB) -> list[tuple[tuple[int, ...], str]]:
    """All redex positions in leftmost-outermost (preorder) order."""
    found: list[tuple[tuple[int, ...], str]] = []

    def walk(u: Term, path: tuple[int, ...]) -> None:
        match u:
            case App(Lam(), _):
                found.append((path, "beta"))
            case TApp(TLam(), _):
                found.append((path, "type-beta"))
            case Proj():
                if mode == PROB:
                    analysis = analyze_projector(u)
                    if analysis.firable:
                        found.append((path, "proj"))
                elif nondet_extractions(u):
                    found.append((path, "proj"))
        for i, field_name in enumerate(_CHILD_FIELDS.get(type(u), ())):
            walk(getattr(u, field_name), path + (i,))

    walk(t, ())
    return found


def is_normal(t: Term) -> bool:
    """No probabilistic-mode redex anywhere in the term."""
    return not redexes(t, PROB)


def _subterm_at(t: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        t = getattr(t, _CHILD_FIELDS[type(t)][i])
    return t


def _plug_at(t: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    field_name = _CHILD_FIELDS[type(t)][path[0]]
    child = getattr(t, field_name)
    return _replace_child(t, field_name, _plug_at(child, path[1:], new))


def _select(
    t: Term, mode: str, strategy: str
) -> Optional[tuple[tuple[int, ...], str]]:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    rs = redexes(t, mode)
    if not rs:
        return None
    if strategy == "proj-first":
        preferred = [r for r in rs if r[1] == "proj"]
        if preferred:
            return preferred[0]
    elif strategy == "beta-first":
        preferred = [r for r in rs if r[1] in ("beta", "type-beta")]
        if preferred:
            return preferred[0]
    return rs[0]


def _contract(redex: Term, kind: str) -> Term:
    if kind == "beta":
        assert isinstance(redex, App) and isinstance(redex.fn, Lam)
        return subst_term(redex.fn.body, redex.fn.var, redex.arg)
    if kind == "type-beta":
        assert isinstance(redex, TApp) and isinstance(redex.fn, TLam)
        return type_subst_term(redex.fn.body, {redex.fn.var: redex.type})
    raise ValueError(kind)


def reduce_step(
    t: Term,
    mode: str = PROB,
    strategy: str = "leftmost-outermost",
    seed: Optional[int] = None,
) -> Union[list[Term], Distribution, Term]:
    """One reduction step at the strategy-selected redex of `canonical_form(t)`.

    mode="nondet": the list of legal reducts (a projector may have several).
    mode="prob":   the exact Distribution over reducts, or a sampled single
                   reduct when `seed` is given. Beta and type-beta steps are
                   deterministic in both modes.
    """
    c = canonical_form(t)
    sel = _select(c, mode, strategy)
    if sel is None:
        raise NotARedex("term has no redex")
    path, kind = sel
    redex = _subterm_at(c, path)
    if kind in ("beta", "type-beta"):
        reduct = _plug_at(c, path, _contract(redex, kind))
        if mode == NONDET:
            return [reduct]
        dist = Distribution.of([(reduct, Fraction(1))])
    elif mode == NONDET:
        assert isinstance(redex, Proj)
        uniq: dict = {}
        for extraction in nondet_extractions(redex):
            plugged = _plug_at(c, path, extraction)
            uniq.setdefault(term_key(plugged), plugged)
        return list(uniq.values())
    else:
        assert isinstance(redex, Proj)
        local = projector_distribution(redex)
        dist = Distribution.of(
            (_plug_at(c, path, reduct), p) for reduct, p in local.entries
        )
    if seed is None:
        return dist
    return dist.sample(random.Random(seed))


def normal_distribution(
    t: Term,
    step_cap: int = DEFAULT_STEP_CAP,
    strategy: str = "leftmost-outermost",
) -> Distribution:
    """Exact distribution over normal forms under the given strategy.

    Expands the whole probabilistic reduction tree, merging branches by
    canonical form. Branches still reducible after `step_cap` steps are
    reported as `residual` mass rather than silently dropped.
    """
    results: list[tuple[Term, Fraction]] = []
    residual = Fraction(0)
    work: list[tuple[Term, Fraction, int]] = [(canonical_form(t), Fraction(1), 0)]
    while work:
        term, mass, steps = work.pop()
        sel = _select(term, PROB, strategy)
        if sel is None:
            results.append((term, mass))
            continue
        if steps >= step_cap:
            residual += mass
            continue
        path, kind = sel
        redex = _subterm_at(term, path)
        if kind in ("beta", "type-beta"):
            children = [(_plug_at(term, path, _contract(redex, kind)), Fraction(1))]
        else:
            assert isinstance(redex, Proj)
            local = projector_distribution(redex)
            children = [
                (_plug_at(term, path, reduct), p) for reduct, p in local.entries
            ]
        for child, p in children:
            work.append((canonical_form(child), mass * p, steps + 1))
    return Distribution.of(results, residual=residual)


def sample_normal_form(
    t: Term,
    rng: random.Random,
    step_cap: int = DEFAULT_STEP_CAP,
    strategy: str = "leftmost-outermost",
) -> tuple[Term, int]:
    """Sample one reduction trajectory to a normal form; returns (term, steps)."""
    term = canonical_form(t)
    for steps in range(step_cap + 1):
        sel = _select(term, PROB, strategy)
        if sel is None:
            return term, steps
        path, kind = sel
        redex = _subterm_at(term, path)
        if kind in ("beta", "type-beta"):
            term = canonical_form(_plug_at(term, path, _contract(redex, kind)))
        else:
            assert isinstance(redex, Proj)
            local = projector_distribution(redex)
            picked = local.sample(rng)
            term = canonical_form(_plug_at(term, path, picked))
    raise StepCapExceeded(f"no normal form within {step_cap} steps")
