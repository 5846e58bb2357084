"""Seeded random term generators and the curated simulation corpora.

The generators produce well-typed terms for both calculi, sized by a depth
bound, using a shared naming context so that every free variable name is
used at exactly one type (label coherence by construction).

Two conventions keep the substitution-identity checks on safe ground:

- free variables created inside projector bodies use the `w` namespace and
  never appear elsewhere, while substitution targets are drawn from the
  `v`/`u` namespaces — so substituting a term never merges or retypes a
  projector's summands;
- projector annotations and summand types use only the atoms A and B,
  while type substitution always targets the atom C — so substituting a
  type never changes which summands a projector can extract;
- replacement terms for the weighted-side term substitution start with a
  constructor, never a weight or a sum — splicing a weighted combination
  into a bare summand position flattens into the enclosing sum and changes
  the positional weight vector, and with it the image's multiplicities.

These restrictions dodge real counterexamples (substitutions that collapse
two summands into one, retype a summand into the projected type, or
reshape a weighted combination change the affected distribution and break
the commutation identity); the unit tests document those corners
explicitly.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from .parser import parse_alg_term, parse_lambda_term
from .syntax import (
    App,
    Arrow,
    Conj,
    Lam,
    Proj,
    Scale,
    Sum,
    TApp,
    TLam,
    Term,
    TVar,
    Type,
    free_type_vars,
    free_vars,
    subterms,
    sum_of,
    sum_parts,
    type_key,
    Var,
)

ATOMS = ("A", "B", "C")
PROJ_ATOMS = ("A", "B")
SUBST_TVAR = "C"


class _Gen:
    """Naming context: one name per (namespace, type) — coherent by design."""

    def __init__(self, rng: random.Random) -> None:
        self.rng = rng
        self._names: dict = {}
        self._binders = 0

    def fresh_binder(self, base: str = "x") -> str:
        self._binders += 1
        return f"{base}{self._binders}"

    def free_var(self, ty: Type, namespace: str = "v") -> Term:
        key = (namespace, type_key(ty))
        if key not in self._names:
            count = sum(1 for ns, _ in self._names if ns == namespace)
            self._names[key] = f"{namespace}{count + 1}"
        return Var(self._names[key], ty)


# ------------------------------------------------------------------- types --


def gen_lambda_type(g: _Gen, depth: int, atoms=ATOMS, allow_conj=True) -> Type:
    r = g.rng.random()
    if depth <= 0 or r < 0.45:
        return TVar(g.rng.choice(atoms))
    if r < 0.75 or not allow_conj:
        return Arrow(
            gen_lambda_type(g, depth - 1, atoms, allow_conj),
            gen_lambda_type(g, depth - 1, atoms, allow_conj),
        )
    return Conj(
        gen_lambda_type(g, depth - 1, atoms, allow_conj),
        gen_lambda_type(g, depth - 1, atoms, allow_conj),
    )


def gen_alg_type(g: _Gen, depth: int, atoms=ATOMS) -> Type:
    return gen_lambda_type(g, depth, atoms=atoms, allow_conj=False)


# --------------------------------------------------------- projector parts --


def _gen_normal(
    g: _Gen, depth: int, ty: Type, env: dict, sum_free: bool = False
) -> Term:
    """A normal, projector-free term of the given type (w-namespace leaves).

    `sum_free` keeps sums out of the term entirely: a summand generated for
    a projector body must stay one summand under canonicalization, and a
    sum — at the top or under a chain of abstractions, which distribute
    over sums — would split into several summands and dissolve the group.
    """
    r = g.rng.random()
    match ty:
        case Arrow(a, b) if depth > 0 and r < 0.6:
            x = g.fresh_binder()
            return Lam(
                x, a, _gen_normal(g, depth - 1, b, {**env, x: a}, sum_free)
            )
        case Conj(a, b) if depth > 0 and r < 0.6 and not sum_free:
            return Sum(
                _gen_normal(g, depth - 1, a, env),
                _gen_normal(g, depth - 1, b, env),
            )
    bound = [
        (name, bty)
        for name, bty in env.items()
        if type_key(bty) == type_key(ty)
    ]
    if bound and g.rng.random() < 0.5:
        name, bty = g.rng.choice(bound)
        return Var(name, bty)
    return g.free_var(ty, "w")


def _gen_projector(g: _Gen, depth: int, ty: Type, env: dict) -> Optional[Term]:
    """A firing projector of type `ty`, or None when ty is out of scope."""
    if free_type_vars(ty) - set(PROJ_ATOMS):
        return None
    group_size = g.rng.randint(1, 3)
    parts = [
        _gen_normal(g, depth, ty, env, sum_free=True) for _ in range(group_size)
    ]
    with_rest = group_size < 2 or g.rng.random() < 0.4
    if with_rest:
        other_atom = "B" if type_key(ty) == type_key(TVar("A")) else "A"
        parts.append(_gen_normal(g, depth, TVar(other_atom), env))
    g.rng.shuffle(parts)
    return Proj(ty, sum_of(parts))


# ------------------------------------------------- projector-calculus terms --


def gen_lambda_term(g: _Gen, depth: int, ty: Type, env: Optional[dict] = None) -> Term:
    env = env or {}
    r = g.rng.random()
    if depth > 0:
        if r < 0.15:
            proj = _gen_projector(g, depth - 1, ty, env)
            if proj is not None:
                return proj
        if r < 0.25 and depth >= 2:
            dom = gen_lambda_type(g, 1)
            x = g.fresh_binder()
            body = gen_lambda_term(g, depth - 2, ty, {**env, x: dom})
            arg = gen_lambda_term(g, depth - 2, dom, env)
            return App(Lam(x, dom, body), arg)
        if r < 0.33:
            x_ty = g.rng.choice(ATOMS)
            tvar = g.fresh_binder("X")
            body = gen_lambda_term(g, depth - 1, ty, env)
            return TApp(TLam(tvar, body), TVar(x_ty))
        match ty:
            case Arrow(a, b) if r < 0.8:
                x = g.fresh_binder()
                return Lam(x, a, gen_lambda_term(g, depth - 1, b, {**env, x: a}))
            case Conj(a, b) if r < 0.8:
                return Sum(
                    gen_lambda_term(g, depth - 1, a, env),
                    gen_lambda_term(g, depth - 1, b, env),
                )
    bound = [
        (name, bty)
        for name, bty in env.items()
        if type_key(bty) == type_key(ty)
    ]
    if bound and g.rng.random() < 0.4:
        name, bty = g.rng.choice(bound)
        return Var(name, bty)
    return g.free_var(ty, "v")


def random_lambda_term(rng: random.Random, depth: int = 5) -> Term:
    g = _Gen(rng)
    ty = gen_lambda_type(g, min(depth, 3))
    return gen_lambda_term(g, depth, ty)


def lambda_subst_cases(
    rng: random.Random, count: int, depth: int = 5
) -> tuple[list[tuple[Term, str, Type]], list[tuple[Term, str, Term]]]:
    """(type-substitution cases, term-substitution cases) for the projector side."""
    type_cases: list[tuple[Term, str, Type]] = []
    term_cases: list[tuple[Term, str, Term]] = []
    while len(type_cases) < count or len(term_cases) < count:
        g = _Gen(rng)
        ty = gen_lambda_type(g, min(depth, 3))
        t = gen_lambda_term(g, depth, ty)
        if len(type_cases) < count:
            replacement = gen_lambda_type(g, 2, atoms=PROJ_ATOMS)
            type_cases.append((t, SUBST_TVAR, replacement))
        if len(term_cases) < count:
            safe = _safe_subst_vars(t)
            if safe:
                name, vty = safe[rng.randrange(len(safe))]
                s = gen_lambda_term(g, min(depth, 3), vty)
                term_cases.append((t, name, s))
    return type_cases, term_cases


def _safe_subst_vars(t: Term) -> list[tuple[str, Type]]:
    """Free v-namespace variables (never inside projector bodies), sorted."""
    inside_proj: set[str] = set()
    for sub in subterms(t):
        if isinstance(sub, Proj):
            inside_proj |= {name for name, _ in free_vars(sub.body)}
    return sorted(
        (name, ty)
        for name, ty in free_vars(t)
        if name.startswith("v") and name not in inside_proj
    )


# -------------------------------------------------- weighted-calculus terms --


# Weight vectors are drawn from a small-denominator pool: the image of a
# weighted combination repeats each branch m_i times with m_i built from
# the products of the other denominators, so coprime denominators would
# blow the image up exponentially under nesting.
_WEIGHT_POOL: tuple[tuple[Fraction, ...], ...] = (
    (Fraction(1, 2), Fraction(1, 2)),
    (Fraction(1, 2), Fraction(1, 2)),
    (Fraction(1, 3), Fraction(2, 3)),
    (Fraction(1, 4), Fraction(3, 4)),
    (Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)),
    (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)),
)


def _gen_weights(g: _Gen, k: int) -> list[Fraction]:
    pool = [w for w in _WEIGHT_POOL if len(w) == k]
    weights = list(pool[g.rng.randrange(len(pool))])
    g.rng.shuffle(weights)
    return weights


def gen_alg_term(g: _Gen, depth: int, ty: Type, env: Optional[dict] = None) -> Term:
    env = env or {}
    r = g.rng.random()
    if depth > 0:
        if r < 0.25:
            k = g.rng.randint(2, 3)
            weights = _gen_weights(g, k)
            branches = [gen_alg_term(g, depth - 1, ty, env) for _ in range(k)]
            return sum_of(
                [Scale(w, b) for w, b in zip(weights, branches)]
            )
        if r < 0.32:
            return Scale(Fraction(1), gen_alg_term(g, depth - 1, ty, env))
        if r < 0.38:
            return Sum(
                gen_alg_term(g, depth - 1, ty, env),
                gen_alg_term(g, depth - 1, ty, env),
            )
        if r < 0.46 and depth >= 2:
            dom = gen_alg_type(g, 1)
            x = g.fresh_binder()
            body = gen_alg_term(g, depth - 2, ty, {**env, x: dom})
            arg = gen_alg_term(g, depth - 2, dom, env)
            return App(Lam(x, dom, body), arg)
        if r < 0.54:
            tvar = g.fresh_binder("X")
            body = gen_alg_term(g, depth - 1, ty, env)
            return TApp(TLam(tvar, body), TVar(g.rng.choice(ATOMS)))
        match ty:
            case Arrow(a, b) if r < 0.85:
                x = g.fresh_binder()
                return Lam(x, a, gen_alg_term(g, depth - 1, b, {**env, x: a}))
    bound = [
        (name, bty)
        for name, bty in env.items()
        if type_key(bty) == type_key(ty)
    ]
    if bound and g.rng.random() < 0.4:
        name, bty = g.rng.choice(bound)
        return Var(name, bty)
    return g.free_var(ty, "u")


def random_alg_term(rng: random.Random, depth: int = 5) -> Term:
    g = _Gen(rng)
    ty = gen_alg_type(g, min(depth, 3))
    return gen_alg_term(g, depth, ty)


IMAGE_SIZE_CAP = 600
REPLACEMENT_SIZE_CAP = 150


def _image_size(t: Term) -> int:
    """Node count of the projector-calculus image, without building it.

    Each weighted combination repeats branch i a multiplicity of
    numerator_i times the product of the other lowest-term denominators,
    so nested weights can blow the image size up multiplicatively; the
    estimate lets the generator redraw oversized sources cheaply.
    """
    match t:
        case Sum() | Scale():
            entries = [
                (p.factor, p.body) if isinstance(p, Scale) else (Fraction(1), p)
                for p in sum_parts(t)
            ]
            denom_prod = 1
            for w, _ in entries:
                denom_prod *= w.denominator
            size = 1
            for w, body in entries:
                m = w.numerator * (denom_prod // w.denominator)
                size += m * (1 + _image_size(body))
            return size
        case Var():
            return 1
        case Lam(_, _, body) | TLam(_, body):
            return 1 + _image_size(body)
        case App(f, a):
            return 1 + _image_size(f) + _image_size(a)
        case TApp(f, _):
            return 1 + _image_size(f)
    return 1


def alg_subst_cases(
    rng: random.Random, count: int, depth: int = 5
) -> tuple[list[tuple[Term, str, Type]], list[tuple[Term, str, Term]]]:
    type_cases: list[tuple[Term, str, Type]] = []
    term_cases: list[tuple[Term, str, Term]] = []
    while len(type_cases) < count or len(term_cases) < count:
        g = _Gen(rng)
        ty = gen_alg_type(g, min(depth, 3))
        t = gen_alg_term(g, depth, ty)
        if _image_size(t) > IMAGE_SIZE_CAP:
            continue
        if len(type_cases) < count:
            replacement = gen_alg_type(g, 2, atoms=PROJ_ATOMS)
            type_cases.append((t, SUBST_TVAR, replacement))
        if len(term_cases) < count:
            frees = sorted(
                (n, vty) for n, vty in free_vars(t) if n.startswith("u")
            )
            if frees:
                name, vty = frees[rng.randrange(len(frees))]
                s = gen_alg_term(g, min(depth, 3), vty)
                if (
                    not isinstance(s, (Sum, Scale))
                    and _image_size(s) <= REPLACEMENT_SIZE_CAP
                ):
                    term_cases.append((t, name, s))
    return type_cases, term_cases


# --------------------------------------------------------- curated corpora --

# Forward-direction corpus: one entry per proof case of the weighted-to-
# projector simulation, in the weighted calculus's concrete syntax.
FORWARD_CORPUS_SOURCES: tuple[tuple[str, str], ...] = (
    ("three-branch golden", "3/4.a:A + 1/8.b:A + 1/8.c:A"),
    ("single unit entry", "1.a:A"),
    ("bare variable", "a:A"),
    ("unit over a distribution", "1.(1/2.a:A + 1/2.b:A)"),
    ("two-branch half-half", "1/2.a:A + 1/2.b:A"),
    ("left-nested associativity", "(1/4.a:A + 1/4.b:A) + 1/2.c:A"),
    ("sum under an abstraction", "\\x:A. (a:A + x)"),
    ("beta to a distribution", "(\\x:A. (1/2.x + 1/2.b:A)) a:A"),
    (
        "type-beta with mergeable branches",
        "(/\\X. (1/2.(\\x:X. x) + 1/2.(\\y:X. y))) {A}",
    ),
    ("nested unit weights", "1.1.a:A"),
    ("pseudo-term weight over a sum", "1/2.(a:A + b:A)"),
    ("factorisation to one branch", "1/4.a:A + 3/4.a:A"),
    ("factorisation with a bystander", "1/4.a:A + 1/4.b:A + 1/2.b:A"),
    ("nested distribution", "1/2.(1/3.a:A + 2/3.b:A) + 1/2.c:A"),
    ("distribution in argument position", "(\\x:A. x) (1/2.a:A + 1/2.b:A)"),
    ("sum in function position", "((\\x:A. x) + (\\y:A. y)) a:A"),
    ("distribution under a type binder", "/\\X. (1/2.(\\x:X. x) + 1/2.(\\y:X. y))"),
    ("bound variable in a branch", "\\x:A. (1/2.x + 1/2.a:A)"),
    ("reducible branch", "1/2.((\\x:A. x) a:A) + 1/2.b:A"),
    ("repeated branch weights", "1/6.a:A + 1/6.a:A + 2/3.b:A"),
)

# Backward-direction corpus: one entry per case of the projector-to-weighted
# simulation, in the projector calculus's concrete syntax. The two entries
# marked `pi` exercise the documented exclusion (the projector/application
# commutation has no weighted counterpart).
BACKWARD_CORPUS_SOURCES: tuple[tuple[str, str], ...] = (
    ("commutativity", "x:A + y:A"),
    ("associativity", "(x:A + y:A) + z:A"),
    ("application over a sum", "(f:A->B + g:A->B) x:A"),
    ("abstraction over a sum", "\\x:A. (x + y:A)"),
    ("beta step", "(\\x:A. x) y:A"),
    ("type-beta step", "(/\\X. \\x:X. x) {A}"),
    ("root projector, two branches", "pi[A](x:A + y:A)"),
    ("root projector with remainder", "pi[A](x:A + y:A + z:B)"),
    ("root projector, multiplicity", "pi[A](x:A + x:A + y:A)"),
    ("single-branch projector", "pi[A](x:A)"),
    ("embedded projector", "\\w:B. pi[A](x:A + y:A)"),
    ("pi: commutation redex", "(pi[A->B](h:A->(B/\\C))) x:A"),
    ("pi: commutation with a firing group", "(pi[A->B](f:A->B + h:A->(B/\\C))) x:A"),
    ("projector over abstractions", "pi[A->A](\\x:A. x + \\y:A. y)"),
    ("projector discarding a remainder", "pi[A](x:A + y:A + (\\w:B. w))"),
    ("beta under an abstraction", "\\x:A. (\\y:A. y) x"),
    ("beta next to a sum", "(\\x:A. x) y:A + z:A"),
    ("sum under a type binder", "/\\X. (x:A + y:A)"),
    ("projector under a type binder", "/\\X. pi[A](x:A + y:A)"),
    ("sum of two projectors", "pi[A](x:A + y:A) + pi[A](x:A + y:A)"),
)


def forward_corpus() -> list[tuple[str, Term]]:
    return [(label, parse_alg_term(src)) for label, src in FORWARD_CORPUS_SOURCES]


def backward_corpus() -> list[tuple[str, Term]]:
    return [
        (label, parse_lambda_term(src)) for label, src in BACKWARD_CORPUS_SOURCES
    ]
