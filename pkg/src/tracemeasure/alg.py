"""The scalar-weighted calculus: typing, distribution grammar, reduction.

Terms reuse the shared syntax tree, restricted to variables, abstractions,
applications, type abstractions, type applications, sums, and scalar
weights. Projectors and conjunction types are not part of this calculus,
and types compare alpha-syntactically — there is no equivalence relation
on them here.

A *pseudo-term* is anything the grammar above produces. A *term* (in the
distribution sense) additionally carries probability weights: every sum is
a weighted combination sum_i p_i.r_i with each p_i in (0, 1], sum_i p_i = 1,
recursively at every position. `is_distribution` checks that grammar;
`as_distribution` splits the top level of such a combination positionally,
without merging equal summands.

The rewrite system has oriented rules (beta, type-beta, scalar folding
p.q.r -> (pq).r, weight distribution p.(r+s) -> p.r + p.s, and
factorisation p.r + q.r -> (p+q).r) and symmetric moves (commutativity and
associativity of +, distribution of application and abstraction over +,
and 1.r <-> r). `alg_reduce_step` returns every one-step reduct.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .syntax import (
    App,
    Arrow,
    Conj,
    Forall,
    Lam,
    Proj,
    Scale,
    Sum,
    TApp,
    TLam,
    Term,
    TVar,
    Type,
    alpha_eq,
    free_type_vars,
    free_vars,
    fresh_name,
    free_var_names,
    subst_term,
    sum_parts,
    term_key,
    type_alpha_eq,
    type_key,
    type_subst,
    type_subst_term,
    Var,
)
from .typecheck import (
    ArgumentMismatch,
    EscapingTypeVariable,
    IncoherentLabels,
    NotAForall,
    NotAnArrow,
    TypingError,
)


class SumTypeMismatch(TypingError):
    pass


class NotADistribution(ValueError):
    pass


# ------------------------------------------------------------------ typing --


def _check_scalar_type(ty: Type, pos=None) -> None:
    match ty:
        case TVar():
            return
        case Arrow(a, b):
            _check_scalar_type(a, pos)
            _check_scalar_type(b, pos)
        case Conj():
            raise TypingError(
                "conjunction types are not part of this calculus", "type", pos
            )
        case Forall(_, body):
            _check_scalar_type(body, pos)


def _check_coherent_syntactic(occurrences, rule: str, pos) -> None:
    by_name: dict[str, list[Type]] = {}
    for name, ty in sorted(occurrences, key=lambda o: o[0]):
        by_name.setdefault(name, []).append(ty)
    for name, types in by_name.items():
        first = types[0]
        for other in types[1:]:
            if not type_alpha_eq(first, other):
                raise IncoherentLabels(
                    f"variable {name} used at incompatible types", rule, pos
                )


def alg_type_of(t: Term) -> Type:
    """Type a term of this calculus; sums need equal types on both sides."""
    match t:
        case Var(_, ty, pos):
            _check_scalar_type(ty, pos)
            return ty
        case Lam(x, ty, body, pos):
            _check_scalar_type(ty, pos)
            occurrences = set(free_vars(body)) | {(x, ty)}
            _check_coherent_syntactic(occurrences, "abs", pos)
            return Arrow(ty, alg_type_of(body))
        case App(f, a, pos):
            _check_coherent_syntactic(free_vars(t), "app", pos)
            fn_type = alg_type_of(f)
            if not isinstance(fn_type, Arrow):
                raise NotAnArrow(
                    "application head is not a function", "app", pos
                )
            arg_type = alg_type_of(a)
            if not type_alpha_eq(fn_type.left, arg_type):
                raise ArgumentMismatch(
                    "argument type does not match the function domain",
                    "app",
                    pos,
                )
            return fn_type.right
        case Sum(a, b, pos):
            _check_coherent_syntactic(free_vars(t), "sum", pos)
            left = alg_type_of(a)
            right = alg_type_of(b)
            if not type_alpha_eq(left, right):
                raise SumTypeMismatch(
                    "summands must have the same type", "sum", pos
                )
            return left
        case Scale(_, body, pos):
            return alg_type_of(body)
        case TLam(x, body, pos):
            for _, ty in free_vars(body):
                if x in free_type_vars(ty):
                    raise EscapingTypeVariable(
                        f"type variable {x} appears free in the context",
                        "tabs",
                        pos,
                    )
            return Forall(x, alg_type_of(body))
        case TApp(f, ty, pos):
            _check_scalar_type(ty, pos)
            fn_type = alg_type_of(f)
            if not isinstance(fn_type, Forall):
                raise NotAForall(
                    "type application head is not polymorphic", "tapp", pos
                )
            return type_subst(fn_type.body, {fn_type.var: ty})
        case Proj(_, _, pos):
            raise TypingError(
                "projectors are not part of this calculus", "proj", pos
            )
    raise TypeError(f"not a term: {t!r}")


def is_well_typed_alg(t: Term) -> bool:
    try:
        alg_type_of(t)
    except TypingError:
        return False
    return True


# ------------------------------------------------- the distribution grammar --


def is_distribution(t: Term) -> bool:
    """Whether `t` matches the weighted (unit-sum) grammar, recursively.

    A bare unweighted term counts as the one-point distribution 1.r; a sum
    qualifies only when every summand is weighted and the weights are in
    (0, 1] and sum to exactly 1.
    """
    parts = list(sum_parts(t))
    if len(parts) >= 2:
        total = Fraction(0)
        for p in parts:
            if not isinstance(p, Scale):
                return False
            if not (0 < p.factor <= 1):
                return False
            total += p.factor
            if not is_distribution(p.body):
                return False
        return total == 1
    match t:
        case Scale(factor, body):
            return factor == 1 and is_distribution(body)
        case Var():
            return True
        case Lam(_, _, body):
            return is_distribution(body)
        case App(f, a):
            return is_distribution(f) and is_distribution(a)
        case TLam(_, body):
            return is_distribution(body)
        case TApp(f, _):
            return is_distribution(f)
    return False


@dataclass(frozen=True)
class DistTerm:
    """The top level of a weighted combination, split positionally."""

    entries: tuple[tuple[Fraction, Term], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise NotADistribution("a distribution needs at least one entry")
        total = Fraction(0)
        for p, _ in self.entries:
            if not (0 < p <= 1):
                raise NotADistribution(f"weight {p} outside (0, 1]")
            total += p
        if total != 1:
            raise NotADistribution(f"weights sum to {total}, not 1")

    def merged(self) -> tuple[tuple[Fraction, Term], ...]:
        """Entries with alpha-equal bodies combined, sorted for determinism."""
        acc: dict = {}
        for p, r in self.entries:
            key = term_key(r)
            if key in acc:
                acc[key] = (acc[key][0] + p, acc[key][1])
            else:
                acc[key] = (p, r)
        return tuple(acc[k] for k in sorted(acc, key=repr))


def as_distribution(t: Term) -> DistTerm:
    """Split the top level of `t` into weighted entries, positionally.

    Raises NotADistribution when the top level is not a unit-sum weighted
    combination (for example a weighted unscaled sum, or a lone weight
    below 1).
    """
    parts = list(sum_parts(t))
    if len(parts) == 1:
        match t:
            case Scale(factor, body):
                return DistTerm(((factor, body),))
            case _:
                return DistTerm(((Fraction(1), t),))
    entries = []
    for p in parts:
        if not isinstance(p, Scale):
            raise NotADistribution("sum has an unweighted summand")
        entries.append((p.factor, p.body))
    return DistTerm(tuple(entries))


# --------------------------------------------------------------- reduction --

ORIENTED = "reduce"
SYMMETRIC = "sym"


def alg_step_tagged(t: Term) -> list[tuple[Term, str, str]]:
    """All one-step reducts as (term, rule, kind) with kind reduce|sym."""
    seen: set = set()
    out: list[tuple[Term, str, str]] = []
    for sub, plug in _contexts(t):
        for variant, rule, kind in _local_steps(sub):
            new = plug(variant)
            key = (term_key(new), rule)
            if key not in seen:
                seen.add(key)
                out.append((new, rule, kind))
    return out


def alg_reduce_step(t: Term) -> list[Term]:
    """The set of one-step reducts under every rule, symmetric moves included."""
    uniq: dict = {}
    for new, _, _ in alg_step_tagged(t):
        uniq.setdefault(term_key(new), new)
    return list(uniq.values())


def alg_oriented_step(t: Term) -> list[tuple[Term, str]]:
    return [
        (new, rule)
        for new, rule, kind in alg_step_tagged(t)
        if kind == ORIENTED
    ]


def _local_steps(t: Term) -> Iterator[tuple[Term, str, str]]:
    # oriented rules
    match t:
        case App(Lam(x, _, body), arg):
            yield subst_term(body, x, arg), "beta", ORIENTED
        case TApp(TLam(x, body), ty):
            yield type_subst_term(body, {x: ty}), "type-beta", ORIENTED
        case Scale(p, Scale(q, body)):
            yield Scale(p * q, body), "scalar-fold", ORIENTED
        case Scale(p, Sum(a, b)):
            yield Sum(Scale(p, a), Scale(p, b)), "weight-dist", ORIENTED
    match t:
        case Sum(Scale(p, a), Scale(q, b)) if alpha_eq(a, b):
            yield Scale(p + q, a), "factor", ORIENTED
    # symmetric moves
    match t:
        case Sum(a, b):
            yield Sum(b, a), "sum-comm", SYMMETRIC
            if isinstance(a, Sum):
                yield Sum(a.left, Sum(a.right, b)), "sum-assoc", SYMMETRIC
            if isinstance(b, Sum):
                yield Sum(Sum(a, b.left), b.right), "sum-assoc", SYMMETRIC
            if isinstance(a, App) and isinstance(b, App) and alpha_eq(a.arg, b.arg):
                yield App(Sum(a.fn, b.fn), a.arg), "app-dist", SYMMETRIC
            if (
                isinstance(a, Lam)
                and isinstance(b, Lam)
                and type_key(a.var_type) == type_key(b.var_type)
            ):
                merged = _merge_lams(a, b)
                if merged is not None:
                    yield merged, "lam-dist", SYMMETRIC
        case App(Sum(a, b), arg):
            yield Sum(App(a, arg), App(b, arg)), "app-dist", SYMMETRIC
        case Lam(x, ty, Sum(a, b)):
            yield Sum(Lam(x, ty, a), Lam(x, ty, b)), "lam-dist", SYMMETRIC
    match t:
        case Scale(factor, body) if factor == 1:
            yield body, "unit-weight", SYMMETRIC
    yield Scale(Fraction(1), t), "unit-weight-intro", SYMMETRIC


def _merge_lams(a: Lam, b: Lam) -> Optional[Term]:
    avoid = free_var_names(a.body) | free_var_names(b.body)
    x = fresh_name(a.var, avoid - {a.var})
    left = a.body if x == a.var else subst_term(a.body, a.var, Var(x, a.var_type))
    right = b.body if x == b.var else subst_term(b.body, b.var, Var(x, b.var_type))
    return Lam(x, a.var_type, Sum(left, right))


_CHILD_FIELDS = {
    Lam: ("body",),
    App: ("fn", "arg"),
    Sum: ("left", "right"),
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
        case TLam(x, _):
            return TLam(x, new)
        case TApp(_, ty):
            return TApp(new, ty)
        case Scale(p, _):
            return Scale(p, new)
    raise TypeError(f"no children: {t!r}")


def _contexts(t: Term):
    yield t, lambda new: new
    for field_name in _CHILD_FIELDS.get(type(t), ()):
        child = getattr(t, field_name)

        def outer_plug(new: Term, _f=field_name) -> Term:
            return _replace_child(t, _f, new)

        for sub, plug in _contexts(child):

            def composed(new: Term, _plug=plug, _outer=outer_plug) -> Term:
                return _outer(_plug(new))

            yield sub, composed


# ------------------------------------------------------ scalar normal form --


def linear_parts(t: Term) -> list[tuple[Fraction, Term]]:
    """Flatten weights through top-level sums: [(weight, core), ...].

    The cores are the maximal non-sum, non-weight subterms reachable from
    the root through + and weights only; this is the normal form the
    oriented scalar rules reach at the top level.
    """
    match t:
        case Sum(a, b):
            return linear_parts(a) + linear_parts(b)
        case Scale(p, body):
            return [(p * q, core) for q, core in linear_parts(body)]
        case _:
            return [(Fraction(1), t)]


def scalar_normal_form(t: Term) -> tuple[tuple[Fraction, Term], ...]:
    """Merge `linear_parts` by alpha class — the unique factorised form."""
    acc: dict = {}
    for p, core in linear_parts(t):
        key = term_key(core)
        if key in acc:
            acc[key] = (acc[key][0] + p, acc[key][1])
        else:
            acc[key] = (p, core)
    return tuple(acc[k] for k in sorted(acc, key=repr))
