"""Context-free typing for the projector calculus.

Variables carry their own types, so a judgement needs no environment; the
price is a coherence side condition: wherever two subterms join (abstraction,
application, sum), all free occurrences of one variable name must wear
equivalent labels. Eliminations work modulo the type equivalence, e.g. a
projection succeeds whenever the subject's type is equivalent to some
conjunction strictly containing the requested factor.
"""

from __future__ import annotations

from typing import Iterable

from .syntax import (
    App,
    Arrow,
    Conj,
    Forall,
    Lam,
    Pos,
    Proj,
    Scale,
    Sum,
    TApp,
    TLam,
    Term,
    Type,
    Var,
    free_type_vars,
    free_vars,
    type_subst,
)
from .typenf import (
    nf_as_arrow,
    nf_as_forall,
    nf_multiset_leq,
    reify_nf,
    type_equiv,
    type_nf,
)


class TypingError(Exception):
    def __init__(self, message: str, rule: str, pos: Pos = None):
        where = f" at {pos[0]}:{pos[1]}" if pos else ""
        super().__init__(f"[{rule}]{where} {message}")
        self.rule = rule
        self.pos = pos


class IncoherentLabels(TypingError):
    pass


class NotAnArrow(TypingError):
    pass


class NotAConj(TypingError):
    pass


class NotAForall(TypingError):
    pass


class EscapingTypeVariable(TypingError):
    pass


class ArgumentMismatch(TypingError):
    pass


def check_coherent(
    occurrences: Iterable[tuple[str, Type]], rule: str, pos: Pos = None
) -> None:
    """All labels of one variable name must be pairwise equivalent."""
    by_name: dict[str, list[Type]] = {}
    for name, ty in occurrences:
        by_name.setdefault(name, []).append(ty)
    for name, labels in by_name.items():
        first = labels[0]
        for other in labels[1:]:
            if not type_equiv(first, other):
                raise IncoherentLabels(
                    f"variable {name!r} occurs with inequivalent labels",
                    rule,
                    pos,
                )


def type_of(t: Term) -> Type:
    """The (unique up to equivalence) type of a well-formed term."""
    match t:
        case Var(_, ty):
            return ty
        case Lam(x, ty, body):
            body_type = type_of(body)
            check_coherent(set(free_vars(body)) | {(x, ty)}, "abstraction", t.pos)
            return Arrow(ty, body_type)
        case App(f, a):
            fn_type = type_of(f)
            arg_type = type_of(a)
            check_coherent(free_vars(t), "application", t.pos)
            arrow = nf_as_arrow(type_nf(fn_type))
            if arrow is None:
                raise NotAnArrow(
                    "function part is not equivalent to an arrow type",
                    "application",
                    t.pos,
                )
            dom, cod = arrow
            if type_nf(arg_type) != dom:
                raise ArgumentMismatch(
                    "argument type does not match the function domain",
                    "application",
                    t.pos,
                )
            return reify_nf(cod)
        case Sum(a, b):
            left = type_of(a)
            right = type_of(b)
            check_coherent(free_vars(t), "sum", t.pos)
            return Conj(left, right)
        case Proj(ty, body):
            subject = type_of(body)
            want = type_nf(ty)
            have = type_nf(subject)
            if not nf_multiset_leq(want, have) or len(want) == len(have):
                raise NotAConj(
                    "subject is not equivalent to a conjunction strictly "
                    "containing the projected type",
                    "projection",
                    t.pos,
                )
            return ty
        case TLam(x, body):
            body_type = type_of(body)
            env_types = {ty for _, ty in free_vars(body)}
            if any(x in free_type_vars(ty) for ty in env_types):
                raise EscapingTypeVariable(
                    f"type variable {x!r} occurs free in the label of a free "
                    "variable",
                    "type-abstraction",
                    t.pos,
                )
            return Forall(x, body_type)
        case TApp(f, ty):
            fn_type = type_of(f)
            body_nf = nf_as_forall(type_nf(fn_type))
            if body_nf is None:
                raise NotAForall(
                    "subject is not equivalent to a quantified type",
                    "type-application",
                    t.pos,
                )
            quantified = reify_nf((("forall", body_nf),))
            assert isinstance(quantified, Forall)
            return type_subst(quantified.body, {quantified.var: ty})
        case Scale():
            raise TypingError(
                "scalar weights are not part of this calculus", "scale", t.pos
            )
    raise TypeError(f"not a term: {t!r}")


def is_well_typed(t: Term) -> bool:
    try:
        type_of(t)
    except TypingError:
        return False
    return True
