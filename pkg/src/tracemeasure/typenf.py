"""Canonical normal form for types modulo the three congruence axioms.

The equivalence on types of the projector calculus is generated by:

    A /\\ B          ~  B /\\ A
    (A /\\ B) /\\ C  ~  A /\\ (B /\\ C)
    A -> (B /\\ C)   ~  (A -> B) /\\ (A -> C)

closed under congruence. A type's normal form is the sorted multiset of its
*factors*: conjunctions flatten, arrows distribute over their codomain's
factors, and quantified bodies normalize in place (the quantifier does not
distribute). Two types are equivalent iff their normal forms are equal.

Normal forms are nested tuples with de Bruijn indices for bound variables,
so they are hashable and order-comparable via `repr`.
"""

from __future__ import annotations

from typing import Optional

from .syntax import Arrow, Conj, Forall, TVar, Type, fresh_name

# Factor shapes:
#   ("atom", name)              free type variable
#   ("bvar", index)             bound type variable (de Bruijn index)
#   ("arrow", full_nf, factor)  domain is a full NF, codomain a single factor
#   ("forall", full_nf)         quantified body kept whole
# A full NF is a tuple of factors sorted by repr, duplicates preserved.

TypeNF = tuple


def _sorted(factors: list) -> TypeNF:
    return tuple(sorted(factors, key=repr))


def type_nf(t: Type, env: Optional[dict[str, int]] = None, depth: int = 0) -> TypeNF:
    """Full normal form of a type: its sorted factor multiset."""
    env = env or {}
    match t:
        case TVar(name):
            if name in env:
                return (("bvar", depth - env[name] - 1),)
            return (("atom", name),)
        case Conj(a, b):
            return _sorted(list(type_nf(a, env, depth)) + list(type_nf(b, env, depth)))
        case Arrow(a, b):
            dom = type_nf(a, env, depth)
            return _sorted([("arrow", dom, g) for g in type_nf(b, env, depth)])
        case Forall(x, body):
            inner = type_nf(body, {**env, x: depth}, depth + 1)
            return (("forall", inner),)
    raise TypeError(f"not a type: {t!r}")


def type_equiv(a: Type, b: Type) -> bool:
    """Equivalence modulo commutativity, associativity, and distribution."""
    return type_nf(a) == type_nf(b)


def nf_factor_count(nf: TypeNF) -> int:
    return len(nf)


def nf_multiset_leq(small: TypeNF, big: TypeNF) -> bool:
    """Multiset inclusion of factor lists (duplicates counted)."""
    from collections import Counter

    cs, cb = Counter(small), Counter(big)
    return all(cb[f] >= n for f, n in cs.items())


def nf_as_arrow(nf: TypeNF) -> Optional[tuple[TypeNF, TypeNF]]:
    """View a normal form as an arrow: all factors arrows with one domain.

    Returns (domain_nf, codomain_nf) or None if the type is not equivalent
    to any arrow type.
    """
    if not nf:
        return None
    doms = set()
    cods = []
    for f in nf:
        if f[0] != "arrow":
            return None
        doms.add(f[1])
        cods.append(f[2])
    if len(doms) != 1:
        return None
    return next(iter(doms)), _sorted(cods)


def nf_as_forall(nf: TypeNF) -> Optional[TypeNF]:
    """The quantified body when the normal form is a single quantifier."""
    if len(nf) == 1 and nf[0][0] == "forall":
        return nf[0][1]
    return None


def reify_nf(nf: TypeNF) -> Type:
    """Rebuild a concrete type from a normal form.

    Bound variables get fresh names T1, T2, ... chosen to avoid the free
    atoms in scope; factor order follows the normal form, so reification is
    deterministic and `type_nf(reify_nf(x)) == x`.
    """
    atoms: set[str] = set()

    def collect(nf_or_factor) -> None:
        if isinstance(nf_or_factor, tuple) and nf_or_factor and isinstance(
            nf_or_factor[0], str
        ):
            tag = nf_or_factor[0]
            if tag == "atom":
                atoms.add(nf_or_factor[1])
            elif tag == "arrow":
                collect_full(nf_or_factor[1])
                collect(nf_or_factor[2])
            elif tag == "forall":
                collect_full(nf_or_factor[1])
        else:
            collect_full(nf_or_factor)

    def collect_full(full: TypeNF) -> None:
        for f in full:
            collect(f)

    collect_full(nf)

    def build_factor(f, binders: list[str]) -> Type:
        tag = f[0]
        if tag == "atom":
            return TVar(f[1])
        if tag == "bvar":
            return TVar(binders[-1 - f[1]])
        if tag == "arrow":
            return Arrow(build_full(f[1], binders), build_factor(f[2], binders))
        if tag == "forall":
            name = fresh_name(f"T{len(binders) + 1}", atoms | set(binders))
            return Forall(name, build_full(f[1], binders + [name]))
        raise ValueError(f"bad factor: {f!r}")

    def build_full(full: TypeNF, binders: list[str]) -> Type:
        parts = [build_factor(f, binders) for f in full]
        acc = parts[-1]
        for p in reversed(parts[:-1]):
            acc = Conj(p, acc)
        return acc

    return build_full(nf, [])
