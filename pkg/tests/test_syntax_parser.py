"""Concrete syntax: parsing, printing, alpha-equivalence, substitution."""

import random
from fractions import Fraction

import pytest

from tracemeasure import format_term, format_type, parse_alg_term, parse_lambda_term, parse_type
from tracemeasure.corpus import random_alg_term, random_lambda_term
from tracemeasure.parser import ParseError
from tracemeasure.syntax import (
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
    TVar,
    Var,
    alpha_eq,
    free_type_vars,
    free_vars,
    subst_term,
    sum_of,
    sum_parts,
    term_key,
    type_alpha_eq,
    type_subst,
)

A, B, C = TVar("A"), TVar("B"), TVar("C")


# -- types --------------------------------------------------------------------


def test_type_precedence():
    assert parse_type("A -> B -> C") == Arrow(A, Arrow(B, C))
    assert parse_type("A /\\ B -> C") == Arrow(Conj(A, B), C)
    assert parse_type("A -> B /\\ C") == Arrow(A, Conj(B, C))
    assert parse_type("(A -> B) -> C") == Arrow(Arrow(A, B), C)


def test_conj_associates_right():
    assert parse_type("A /\\ B /\\ C") == Conj(A, Conj(B, C))


def test_forall_extends_right():
    assert parse_type("forall X. X -> A") == Forall("X", Arrow(TVar("X"), A))
    assert parse_type("(forall X. X) -> A") == Arrow(Forall("X", TVar("X")), A)


def test_type_round_trip_fixed():
    for text in [
        "A",
        "A -> B",
        "A /\\ B /\\ C",
        "(A -> B) /\\ C",
        "forall X. (X -> X) /\\ A",
        "forall X. forall Y. X -> Y",
    ]:
        assert parse_type(format_type(parse_type(text))) == parse_type(text)


def test_type_alpha_equivalence():
    assert type_alpha_eq(parse_type("forall X. X -> A"), parse_type("forall Y. Y -> A"))
    assert not type_alpha_eq(parse_type("forall X. X"), parse_type("forall X. A"))
    assert not type_alpha_eq(parse_type("A -> B"), parse_type("B -> A"))


def test_type_substitution():
    t = parse_type("X -> forall X. X /\\ Y")
    out = type_subst(t, {"X": A, "Y": B})
    # The bound X is untouched; the free occurrences are replaced.
    assert out == parse_type("A -> forall X. X /\\ B")


def test_type_subst_capture_avoidance():
    t = parse_type("forall X. X -> Y")
    out = type_subst(t, {"Y": TVar("X")})
    assert type_alpha_eq(out, parse_type("forall Z. Z -> X"))
    assert free_type_vars(out) == frozenset({"X"})


# -- terms: parsing ------------------------------------------------------------


def test_parse_labelled_variable():
    assert parse_lambda_term("x:A") == Var("x", A)
    assert parse_lambda_term("x:A -> B") == Var("x", Arrow(A, B))


def test_bound_occurrence_inherits_label():
    t = parse_lambda_term("\\x:A. x")
    assert t == Lam("x", A, Var("x", A))


def test_free_variable_requires_label():
    with pytest.raises(ParseError):
        parse_lambda_term("x")
    with pytest.raises(ParseError):
        parse_lambda_term("\\x:A. y")


def test_application_associates_left():
    t = parse_lambda_term("f:A -> A -> A x:A y:A")
    assert t == App(App(Var("f", Arrow(A, Arrow(A, A))), Var("x", A)), Var("y", A))


def test_sum_and_projector():
    t = parse_lambda_term("pi[A](x:A + y:A)")
    assert t == Proj(A, Sum(Var("x", A), Var("y", A)))


def test_nfold_shorthand_expands():
    assert parse_lambda_term("3.x:A") == sum_of([Var("x", A)] * 3)
    assert parse_lambda_term("2.x:A + y:A") == sum_of(
        [Var("x", A), Var("x", A), Var("y", A)]
    )


def test_type_abstraction_and_application():
    t = parse_lambda_term("(/\\X. \\x:X. x) {A}")
    assert t == TApp(TLam("X", Lam("x", TVar("X"), Var("x", TVar("X")))), A)


def test_lambda_dialect_rejects_fractions():
    with pytest.raises(ParseError):
        parse_lambda_term("1/2.x:A")


def test_alg_dialect_scalars():
    t = parse_alg_term("1/2.x:A + 1/2.y:A")
    assert t == Sum(Scale(Fraction(1, 2), Var("x", A)), Scale(Fraction(1, 2), Var("y", A)))
    assert parse_alg_term("1.x:A") == Scale(Fraction(1), Var("x", A))


def test_alg_dialect_rejects_bad_scalars():
    for text in ["0.x:A", "3/2.x:A", "2.x:A"]:
        with pytest.raises(ParseError):
            parse_alg_term(text)


def test_alg_dialect_rejects_projector():
    with pytest.raises(ParseError):
        parse_alg_term("pi[A](x:A)")


def test_parse_error_position():
    with pytest.raises(ParseError) as exc:
        parse_lambda_term("\\x:A. (x +)")
    assert exc.value.line == 1
    assert exc.value.col > 1
    assert f"{exc.value.line}:{exc.value.col}:" in str(exc.value)


def test_comments_and_whitespace():
    t = parse_lambda_term("# a comment\n  \\x:A.  # binder\n    x\n")
    assert t == Lam("x", A, Var("x", A))


# -- terms: printing -----------------------------------------------------------


def test_format_omits_matching_labels():
    assert format_term(parse_lambda_term("\\x:A. x")) == "\\x:A. x"
    # A shadowing label that differs from the binder stays explicit.
    s = format_term(Lam("x", A, Var("x", B)))
    assert s == "\\x:A. x:B"


def test_format_compresses_repeated_summands():
    t = parse_lambda_term("x:A + x:A + y:A")
    assert format_term(t) == "2.x:A + y:A"
    assert format_term(t, compress_sums=False) == "x:A + x:A + y:A"


def test_format_scale_and_parens():
    t = parse_alg_term("1/2.(x:A + y:A)")
    assert format_term(t) == "1/2.(x:A + y:A)"


def test_round_trip_fixed_terms():
    for text in [
        "\\x:A. \\y:B. x",
        "pi[A -> B](f:A -> B + g:A -> B)",
        "(/\\X. \\x:X. x) {A /\\ B}",
        "f:A -> A (x:A + y:A)",
        "(\\x:A. x) y:A",
    ]:
        t = parse_lambda_term(text)
        assert alpha_eq(parse_lambda_term(format_term(t)), t)


def reassociate(t):
    """Right-nest every sum; printing flattens nesting, so round trips are
    only exact up to sum association."""
    match t:
        case Sum():
            return sum_of([reassociate(p) for p in sum_parts(t)])
        case Lam(x, ty, body):
            return Lam(x, ty, reassociate(body))
        case TLam(x, body):
            return TLam(x, reassociate(body))
        case App(f, a):
            return App(reassociate(f), reassociate(a))
        case TApp(f, ty):
            return TApp(reassociate(f), ty)
        case Proj(ty, body):
            return Proj(ty, reassociate(body))
        case Scale(p, body):
            return Scale(p, reassociate(body))
    return t


def test_round_trip_random_lambda_terms():
    rng = random.Random(5)
    for _ in range(120):
        t = random_lambda_term(rng, depth=4)
        want = term_key(reassociate(t))
        assert term_key(reassociate(parse_lambda_term(format_term(t)))) == want
        assert (
            term_key(reassociate(parse_lambda_term(format_term(t, compress_sums=False))))
            == want
        )


def test_round_trip_random_alg_terms():
    # Compression is projector-dialect shorthand; alg text must not use it.
    rng = random.Random(6)
    for _ in range(120):
        t = random_alg_term(rng, depth=4)
        back = parse_alg_term(format_term(t, compress_sums=False))
        assert term_key(reassociate(back)) == term_key(reassociate(t))


def test_alg_repeated_branches_print_reparseably():
    t = parse_alg_term("1/3.x:A + 1/3.x:A + 1/3.x:A")
    assert parse_alg_term(format_term(t, compress_sums=False)) == t


# -- alpha-equivalence and substitution ------------------------------------------


def test_alpha_eq_binders():
    assert alpha_eq(parse_lambda_term("\\x:A. x"), parse_lambda_term("\\y:A. y"))
    assert alpha_eq(parse_lambda_term("/\\X. \\x:X. x"), parse_lambda_term("/\\Y. \\z:Y. z"))
    assert not alpha_eq(parse_lambda_term("\\x:A. x"), parse_lambda_term("\\x:B. x"))


def test_sum_is_not_commutative_syntactically():
    assert not alpha_eq(parse_lambda_term("x:A + y:A"), parse_lambda_term("y:A + x:A"))


def test_free_vars_carry_labels():
    t = parse_lambda_term("\\x:A. x y:B")
    assert free_vars(t) == frozenset({("y", B)})


def test_subst_replaces_free_occurrences():
    t = parse_lambda_term("\\x:A. x y:A")
    out = subst_term(t, "y", Var("z", A))
    assert alpha_eq(out, parse_lambda_term("\\x:A. x z:A"))


def test_subst_avoids_capture():
    t = parse_lambda_term("\\x:A. y:A")
    out = subst_term(t, "y", Var("x", A))
    # The binder must rename: the substituted x stays free.
    assert ("x", A) in free_vars(out)
    assert alpha_eq(out, Lam("w", A, Var("x", A)))


def test_sum_parts_flattens():
    t = parse_lambda_term("x:A + y:A + z:A")
    assert [p.name for p in sum_parts(t)] == ["x", "y", "z"]
    assert sum_of(list(sum_parts(t))) == t
