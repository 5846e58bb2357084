"""Abstract syntax shared by the projector calculus and the scaled calculus.

Terms and types are immutable dataclasses. Variables carry their type as a
label, so typing needs no context; binders bind by name with capture-avoiding
substitution. Alpha-equivalence goes through `term_key` / `type_key`, which
produce hashable de Bruijn-style keys (source positions never participate in
equality).

The `Scale` node and the `Proj` node belong to different calculi; each
calculus' operations reject the foreign constructor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

Pos = Optional[tuple[int, int]]  # (line, column)


# ----------------------------------------------------------------- types --


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class Arrow:
    left: "Type"
    right: "Type"


@dataclass(frozen=True)
class Conj:
    left: "Type"
    right: "Type"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Type"


Type = Union[TVar, Arrow, Conj, Forall]


def free_type_vars(t: Type) -> frozenset[str]:
    match t:
        case TVar(name):
            return frozenset({name})
        case Arrow(a, b) | Conj(a, b):
            return free_type_vars(a) | free_type_vars(b)
        case Forall(x, body):
            return free_type_vars(body) - {x}
    raise TypeError(f"not a type: {t!r}")


def type_subst(t: Type, mapping: dict[str, Type]) -> Type:
    """Capture-avoiding substitution of type variables."""
    if not mapping:
        return t
    match t:
        case TVar(name):
            return mapping.get(name, t)
        case Arrow(a, b):
            return Arrow(type_subst(a, mapping), type_subst(b, mapping))
        case Conj(a, b):
            return Conj(type_subst(a, mapping), type_subst(b, mapping))
        case Forall(x, body):
            inner = {k: v for k, v in mapping.items() if k != x}
            if not inner:
                return t
            clash = set().union(*(free_type_vars(v) for v in inner.values()))
            if x in clash:
                fresh = fresh_name(x, clash | free_type_vars(body) | set(inner))
                body = type_subst(body, {x: TVar(fresh)})
                x = fresh
            return Forall(x, type_subst(body, inner))
    raise TypeError(f"not a type: {t!r}")


def type_key(t: Type, env: Optional[dict[str, int]] = None, depth: int = 0):
    """Hashable alpha-canonical key (bound variables as de Bruijn indices)."""
    env = env or {}
    match t:
        case TVar(name):
            if name in env:
                return ("tb", depth - env[name] - 1)
            return ("tf", name)
        case Arrow(a, b):
            return ("arr", type_key(a, env, depth), type_key(b, env, depth))
        case Conj(a, b):
            return ("conj", type_key(a, env, depth), type_key(b, env, depth))
        case Forall(x, body):
            return ("all", type_key(body, {**env, x: depth}, depth + 1))
    raise TypeError(f"not a type: {t!r}")


def type_alpha_eq(a: Type, b: Type) -> bool:
    return type_key(a) == type_key(b)


def fresh_name(base: str, avoid: set[str]) -> str:
    """A name not in `avoid`, derived from `base` by numeric suffixing."""
    root = base.rstrip("0123456789")
    if base not in avoid:
        return base
    i = 1
    while f"{root}{i}" in avoid:
        i += 1
    return f"{root}{i}"


# ----------------------------------------------------------------- terms --


@dataclass(frozen=True)
class Var:
    name: str
    type: Type
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Lam:
    var: str
    var_type: Type
    body: "Term"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Sum:
    left: "Term"
    right: "Term"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Proj:
    """Type-indexed projector of the non-deterministic calculus."""

    type: Type
    body: "Term"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class TLam:
    var: str
    body: "Term"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class TApp:
    fn: "Term"
    type: Type
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Scale:
    """Scalar weight of the algebraic calculus (exact positive rational)."""

    factor: Fraction
    body: "Term"
    pos: Pos = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.factor <= 0:
            raise ValueError(f"scalar must be positive, got {self.factor}")


Term = Union[Var, Lam, App, Sum, Proj, TLam, TApp, Scale]


def free_vars(t: Term) -> frozenset[tuple[str, Type]]:
    """Free term variables with their labels; distinct labels stay distinct."""
    match t:
        case Var(name, ty):
            return frozenset({(name, ty)})
        case Lam(x, _, body):
            return frozenset((n, ty) for n, ty in free_vars(body) if n != x)
        case App(f, a) | Sum(f, a):
            return free_vars(f) | free_vars(a)
        case Proj(_, body) | TLam(_, body) | Scale(_, body):
            return free_vars(body)
        case TApp(f, _):
            return free_vars(f)
    raise TypeError(f"not a term: {t!r}")


def free_var_names(t: Term) -> frozenset[str]:
    return frozenset(n for n, _ in free_vars(t))


def free_type_vars_in_term(t: Term) -> frozenset[str]:
    """Type variables occurring free in labels, annotations, or bodies."""
    match t:
        case Var(_, ty):
            return free_type_vars(ty)
        case Lam(_, ty, body):
            return free_type_vars(ty) | free_type_vars_in_term(body)
        case App(f, a) | Sum(f, a):
            return free_type_vars_in_term(f) | free_type_vars_in_term(a)
        case Proj(ty, body):
            return free_type_vars(ty) | free_type_vars_in_term(body)
        case TLam(x, body):
            return free_type_vars_in_term(body) - {x}
        case TApp(f, ty):
            return free_type_vars_in_term(f) | free_type_vars(ty)
        case Scale(_, body):
            return free_type_vars_in_term(body)
    raise TypeError(f"not a term: {t!r}")


def subst_term(t: Term, name: str, replacement: Term) -> Term:
    """Capture-avoiding substitution of `replacement` for variable `name`."""
    repl_names = free_var_names(replacement)

    def go(t: Term) -> Term:
        match t:
            case Var(n, _):
                return replacement if n == name else t
            case Lam(x, ty, body):
                if x == name:
                    return t
                if x in repl_names and name in free_var_names(body):
                    fresh = fresh_name(x, repl_names | free_var_names(body) | {name})
                    body = subst_term(body, x, Var(fresh, ty))
                    x = fresh
                return Lam(x, ty, go(body))
            case App(f, a):
                return App(go(f), go(a))
            case Sum(a, b):
                return Sum(go(a), go(b))
            case Proj(ty, body):
                return Proj(ty, go(body))
            case TLam(x, body):
                return TLam(x, go(body))
            case TApp(f, ty):
                return TApp(go(f), ty)
            case Scale(p, body):
                return Scale(p, go(body))
        raise TypeError(f"not a term: {t!r}")

    return go(t)


def type_subst_term(t: Term, mapping: dict[str, Type]) -> Term:
    """Substitute type variables throughout labels, annotations and binders."""
    if not mapping:
        return t
    match t:
        case Var(n, ty):
            return Var(n, type_subst(ty, mapping))
        case Lam(x, ty, body):
            return Lam(x, type_subst(ty, mapping), type_subst_term(body, mapping))
        case App(f, a):
            return App(type_subst_term(f, mapping), type_subst_term(a, mapping))
        case Sum(a, b):
            return Sum(type_subst_term(a, mapping), type_subst_term(b, mapping))
        case Proj(ty, body):
            return Proj(type_subst(ty, mapping), type_subst_term(body, mapping))
        case TLam(x, body):
            inner = {k: v for k, v in mapping.items() if k != x}
            if not inner:
                return t
            clash = set().union(*(free_type_vars(v) for v in inner.values()))
            if x in clash:
                fresh = fresh_name(
                    x, clash | free_type_vars_in_term(body) | set(inner)
                )
                body = type_subst_term(body, {x: TVar(fresh)})
                x = fresh
            return TLam(x, type_subst_term(body, inner))
        case TApp(f, ty):
            return TApp(type_subst_term(f, mapping), type_subst(ty, mapping))
        case Scale(p, body):
            return Scale(p, type_subst_term(body, mapping))
    raise TypeError(f"not a term: {t!r}")


def term_key(
    t: Term,
    venv: Optional[dict[str, int]] = None,
    tenv: Optional[dict[str, int]] = None,
    vdepth: int = 0,
    tdepth: int = 0,
):
    """Hashable alpha-canonical key for terms (ignores positions)."""
    venv = venv or {}
    tenv = tenv or {}

    def tk(ty: Type):
        return type_key(ty, tenv, tdepth)

    match t:
        case Var(n, ty):
            if n in venv:
                return ("bv", vdepth - venv[n] - 1, tk(ty))
            return ("fv", n, tk(ty))
        case Lam(x, ty, body):
            return (
                "lam",
                tk(ty),
                term_key(body, {**venv, x: vdepth}, tenv, vdepth + 1, tdepth),
            )
        case App(f, a):
            return (
                "app",
                term_key(f, venv, tenv, vdepth, tdepth),
                term_key(a, venv, tenv, vdepth, tdepth),
            )
        case Sum(a, b):
            return (
                "sum",
                term_key(a, venv, tenv, vdepth, tdepth),
                term_key(b, venv, tenv, vdepth, tdepth),
            )
        case Proj(ty, body):
            return ("proj", tk(ty), term_key(body, venv, tenv, vdepth, tdepth))
        case TLam(x, body):
            return (
                "tlam",
                term_key(body, venv, {**tenv, x: tdepth}, vdepth, tdepth + 1),
            )
        case TApp(f, ty):
            return ("tapp", term_key(f, venv, tenv, vdepth, tdepth), tk(ty))
        case Scale(p, body):
            return ("scale", p, term_key(body, venv, tenv, vdepth, tdepth))
    raise TypeError(f"not a term: {t!r}")


def alpha_eq(a: Term, b: Term) -> bool:
    return term_key(a) == term_key(b)


def sum_parts(t: Term) -> Iterator[Term]:
    """Flatten a (possibly nested) sum into its summands, left to right."""
    if isinstance(t, Sum):
        yield from sum_parts(t.left)
        yield from sum_parts(t.right)
    else:
        yield t


def sum_of(parts: list[Term]) -> Term:
    """Right-nested sum of `parts` (at least one part required)."""
    if not parts:
        raise ValueError("empty sum has no representation")
    acc = parts[-1]
    for p in reversed(parts[:-1]):
        acc = Sum(p, acc)
    return acc


def subterms(t: Term) -> Iterator[Term]:
    yield t
    match t:
        case Var():
            return
        case Lam(_, _, body) | Proj(_, body) | TLam(_, body) | Scale(_, body):
            yield from subterms(body)
        case App(f, a) | Sum(f, a):
            yield from subterms(f)
            yield from subterms(a)
        case TApp(f, _):
            yield from subterms(f)


# -------------------------------------------------------------- printing --

_ATOM, _APP, _SCALE, _SUM, _TOP = range(5)


def format_type(t: Type, prec: int = 0) -> str:
    """Concrete syntax: `/\\` binds tighter than `->`; `forall X.` is loosest.

    prec levels: 0 = top (forall allowed), 1 = arrow, 2 = conjunction, 3 = atom.
    """
    match t:
        case TVar(name):
            return name
        case Arrow(a, b):
            s = f"{format_type(a, 2)} -> {format_type(b, 1)}"
            return f"({s})" if prec > 1 else s
        case Conj(a, b):
            s = f"{format_type(a, 3)} /\\ {format_type(b, 2)}"
            return f"({s})" if prec > 2 else s
        case Forall(x, body):
            s = f"forall {x}. {format_type(body, 0)}"
            return f"({s})" if prec > 0 else s
    raise TypeError(f"not a type: {t!r}")


def format_term(t: Term, compress_sums: bool = True) -> str:
    """Concrete syntax, re-parseable by the package parser.

    Bound variable occurrences whose label matches the binder print without
    the label. Runs of alpha-equal summands compress to `n.term` when
    `compress_sums` is set (the n-fold-sum shorthand). The shorthand belongs
    to the projector dialect only: print algebraic terms with
    `compress_sums=False`, or `n.` collides with the scalar-weight prefix.
    """

    def fmt(t: Term, prec: int, bound: dict[str, Type]) -> str:
        match t:
            case Var(n, ty):
                binder = bound.get(n)
                if binder is not None and type_key(binder) == type_key(ty):
                    return n
                return f"{n}:{format_type(ty, 2)}"
            case Lam(x, ty, body):
                s = (
                    f"\\{x}:{format_type(ty, 1)}. "
                    f"{fmt(body, _TOP, {**bound, x: ty})}"
                )
                return f"({s})" if prec < _TOP else s
            case TLam(x, body):
                s = f"/\\{x}. {fmt(body, _TOP, bound)}"
                return f"({s})" if prec < _TOP else s
            case App(f, a):
                s = f"{fmt(f, _APP, bound)} {fmt(a, _ATOM, bound)}"
                return f"({s})" if prec < _APP else s
            case TApp(f, ty):
                s = f"{fmt(f, _APP, bound)} {{{format_type(ty, 0)}}}"
                return f"({s})" if prec < _APP else s
            case Proj(ty, body):
                return f"pi[{format_type(ty, 0)}]({fmt(body, _TOP, bound)})"
            case Scale(p, body):
                num = str(p) if p.denominator > 1 else str(p.numerator)
                s = f"{num}.{fmt(body, _SCALE, bound)}"
                return f"({s})" if prec < _SCALE else s
            case Sum():
                parts = list(sum_parts(t))
                pieces = []
                if compress_sums:
                    i = 0
                    while i < len(parts):
                        j = i
                        key = term_key(parts[i])
                        while j + 1 < len(parts) and term_key(parts[j + 1]) == key:
                            j += 1
                        n = j - i + 1
                        inner = fmt(parts[i], _SCALE, bound)
                        pieces.append(f"{n}.{inner}" if n > 1 else inner)
                        i = j + 1
                else:
                    pieces = [fmt(p, _SCALE, bound) for p in parts]
                s = " + ".join(pieces)
                return f"({s})" if prec < _SUM else s
        raise TypeError(f"not a term: {t!r}")

    return fmt(t, _TOP, {})
