"""Probabilistic and non-deterministic reduction of the projector calculus."""

import random
from fractions import Fraction
from math import lcm

import pytest

from tracemeasure import (
    Distribution,
    format_term,
    normal_distribution,
    parse_lambda_term,
    reach_prob_exact,
    reduce_step,
    sample_normal_form,
    type_equiv,
    type_of,
)
from tracemeasure.ars import WeightedArs
from tracemeasure.corpus import random_lambda_term
from tracemeasure.reduction import (
    NotARedex,
    ProjectorNotReady,
    StepCapExceeded,
    canonical_form,
    is_normal,
    nondet_extractions,
    projector_distribution,
    redexes,
)
from tracemeasure.syntax import sum_parts, term_key

P = parse_lambda_term


def dist_of(text, **kw):
    d = normal_distribution(P(text), **kw)
    return {format_term(t): p for t, p in d.entries}, d.residual


# -- canonical form -------------------------------------------------------------


def test_canonical_flattens_and_sorts_sums():
    c = canonical_form(P("(z:B + y:A) + x:A"))
    assert format_term(c, compress_sums=False) in ("x:A + y:A + z:B", "y:A + x:A + z:B")
    # Whatever the order, it is a fixed one: idempotence pins it.
    assert term_key(canonical_form(c)) == term_key(c)


def test_canonical_distributes_application():
    c = canonical_form(P("(f:A -> B + g:A -> B) x:A"))
    parts = {format_term(p) for p in sum_parts(c)}
    assert parts == {"f:(A -> B) x:A", "g:(A -> B) x:A"}


def test_canonical_argument_sums_stay_put():
    # Only *heads* distribute; the argument sum is untouched.
    c = canonical_form(P("f:A /\\ A -> B (x:A + y:A)"))
    assert format_term(c) == "f:(A /\\ A -> B) (x:A + y:A)"


def test_canonical_distributes_abstraction():
    c = canonical_form(P("\\x:A. (y:B + z:B)"))
    parts = {format_term(p) for p in sum_parts(c)}
    assert parts == {"\\x:A. y:B", "\\x:A. z:B"}


def test_canonical_idempotent_on_random_terms():
    rng = random.Random(31)
    for _ in range(150):
        t = random_lambda_term(rng, depth=4)
        c = canonical_form(t)
        assert term_key(canonical_form(c)) == term_key(c)


# -- the projector redex -----------------------------------------------------------


def test_projector_uniform_two_summands():
    d = projector_distribution(P("pi[A](x:A + y:A)"))
    assert d.prob_of(P("x:A")) == Fraction(1, 2)
    assert d.prob_of(P("y:A")) == Fraction(1, 2)


def test_projector_counts_multiplicity():
    d = projector_distribution(P("pi[A](x:A + x:A + y:A)"))
    assert d.prob_of(P("x:A")) == Fraction(2, 3)
    assert d.prob_of(P("y:A")) == Fraction(1, 3)


def test_projector_weighted_summands():
    d = projector_distribution(P("pi[A](2.x:A + 3.y:A + z:B)"))
    assert d.prob_of(P("x:A")) == Fraction(2, 5)
    assert d.prob_of(P("y:A")) == Fraction(3, 5)


def test_projector_single_candidate_is_sure():
    d = projector_distribution(P("pi[A](x:A + y:B)"))
    assert d.entries == ((P("x:A"), Fraction(1)),)
    # Even a lone summand (an untypable but syntactically fine subject).
    d = projector_distribution(P("pi[A](x:A)"))
    assert d.prob_of(P("x:A")) == 1


def test_projector_requires_normal_summands():
    with pytest.raises(ProjectorNotReady):
        projector_distribution(P("pi[A]((\\x:A. x) y:A)"))


def test_stuck_projector_is_normal():
    t = P("pi[C](x:A + y:B)")
    assert is_normal(t)
    assert redexes(t) == []
    with pytest.raises(NotARedex):
        reduce_step(t)


# -- one-step reduction --------------------------------------------------------------


def test_beta_step_is_deterministic():
    d = reduce_step(P("(\\x:A. x) y:A"))
    assert isinstance(d, Distribution)
    assert d.entries == ((P("y:A"), Fraction(1)),)


def test_type_beta_step():
    d = reduce_step(P("(/\\X. \\x:X. x) {A}"))
    assert d.prob_of(P("\\x:A. x")) == 1


def test_reduce_step_seeded_sampling():
    t = P("pi[A](x:A + y:A)")
    picks = {format_term(reduce_step(t, seed=s)) for s in range(12)}
    assert picks == {"x:A", "y:A"}
    assert format_term(reduce_step(t, seed=5)) == format_term(reduce_step(t, seed=5))


def test_nondet_mode_lists_extractions():
    outs = reduce_step(P("pi[A](x:A + y:A)"), mode="nondet")
    assert {format_term(u) for u in outs} == {"x:A", "y:A"}
    # Extracting a conjunction takes a sub-sum, not a summand.
    outs = reduce_step(P("pi[A /\\ A](x:A + y:A + z:B)"), mode="nondet")
    assert {format_term(u) for u in outs} == {"x:A + y:A"}


def test_nondet_extractions_match_step():
    t = P("pi[A](x:A + y:A)")
    assert {format_term(u) for u in nondet_extractions(t)} == {"x:A", "y:A"}


# -- distributions over normal forms ---------------------------------------------------


def test_normal_distribution_simple():
    got, residual = dist_of("pi[A](x:A + y:A)")
    assert got == {"x:A": Fraction(1, 2), "y:A": Fraction(1, 2)}
    assert residual == 0


def test_normal_distribution_nested_projectors():
    got, _ = dist_of("pi[A](pi[A](x:A + y:A) + z:B)")
    assert got == {"x:A": Fraction(1, 2), "y:A": Fraction(1, 2)}


def test_normal_distribution_inside_sum():
    got, _ = dist_of("pi[A](x:A + y:A) + z:B")
    assert got == {"x:A + z:B": Fraction(1, 2), "y:A + z:B": Fraction(1, 2)}


def test_normal_distribution_merges_after_beta():
    got, _ = dist_of("pi[A]((\\x:A. x) y:A + y:A)")
    assert got == {"y:A": Fraction(1)}


def test_strategy_order_changes_the_answer():
    # One term, two stopped distributions: the probability space is a
    # property of the strategy, not of the term.
    witness = "(/\\X. (pi[A](x:A + y:X))) {A}"
    for strat in ("leftmost-outermost", "beta-first"):
        got, _ = dist_of(witness, strategy=strat)
        assert got == {"x:A": Fraction(1, 2), "y:A": Fraction(1, 2)}, strat
    got, _ = dist_of(witness, strategy="proj-first")
    assert got == {"x:A": Fraction(1)}


def test_residual_mass_reported():
    d = normal_distribution(P("pi[A](x:A + y:A)"), step_cap=0)
    assert d.entries == ()
    assert d.residual == 1


def test_unknown_strategy_rejected():
    with pytest.raises(ValueError):
        normal_distribution(P("(\\x:A. x) y:A"), strategy="rightmost")


# -- Distribution container ------------------------------------------------------------


def test_distribution_merges_alpha_equal():
    d = Distribution.of([(P("\\x:A. x"), Fraction(1, 2)), (P("\\y:A. y"), Fraction(1, 2))])
    assert len(d.entries) == 1
    assert d.prob_of(P("\\z:A. z")) == 1


def test_distribution_validates_total():
    with pytest.raises(ValueError):
        Distribution.of([(P("x:A"), Fraction(1, 3))])
    with pytest.raises(ValueError):
        Distribution.of([(P("x:A"), Fraction(0))])


# -- the reduction tree as a weighted system ---------------------------------------------


def induced_system(t, strategy="leftmost-outermost", node_cap=400):
    """Unfold the reduction tree into rule triples with integer multiplicities.

    Each distinct canonical form becomes an object; a step distribution
    {u_i: p_i} becomes edges with multiplicities p_i * lcm(denominators).
    Returns (system, name-of map).
    """
    start = canonical_form(t)
    names = {term_key(start): "t0"}
    frontier = [start]
    rules = []
    while frontier:
        node = frontier.pop()
        try:
            d = reduce_step(node, strategy=strategy)
        except NotARedex:
            continue
        denom = lcm(*(p.denominator for _, p in d.entries))
        for child, p in d.entries:
            child = canonical_form(child)
            key = term_key(child)
            if key not in names:
                names[key] = f"t{len(names)}"
                frontier.append(child)
                if len(names) > node_cap:
                    raise RuntimeError("reduction tree too large for the test")
            rules.append((names[term_key(node)], names[key], int(p * denom)))
    system = WeightedArs.from_rules(rules)
    return system, lambda u: names[term_key(canonical_form(u))]


@pytest.mark.parametrize(
    "text",
    [
        "pi[A](x:A + y:A)",
        "pi[A](2.x:A + 3.y:A + z:B)",
        "pi[A](pi[A](x:A + y:A) + z:B)",
        "pi[A](x:A + y:A) + pi[B](u:B + v:B)",
        "(\\x:A. pi[B](u:B + v:B)) y:A",
    ],
)
def test_reach_probabilities_match_normal_distribution(text):
    t = P(text)
    system, name_of = induced_system(t)
    d = normal_distribution(t)
    assert d.residual == 0
    for nf, p in d.entries:
        assert reach_prob_exact(system, name_of(t), name_of(nf)) == p


def test_reach_cross_check_on_random_terms():
    rng = random.Random(37)
    checked = 0
    for _ in range(100):
        t = random_lambda_term(rng, depth=4)
        d = normal_distribution(t)
        if d.residual:
            continue
        start = canonical_form(t)
        moved = len(d.entries) != 1 or term_key(d.entries[0][0]) != term_key(start)
        if not moved:
            continue
        system, name_of = induced_system(t)
        for nf, p in d.entries:
            assert reach_prob_exact(system, name_of(t), name_of(nf)) == p
        checked += 1
    assert checked >= 25


# -- subject reduction -------------------------------------------------------------------


def test_subject_reduction_on_random_terms():
    rng = random.Random(41)
    reduced = 0
    for _ in range(150):
        t = random_lambda_term(rng, depth=4)
        ty = type_of(t)
        try:
            d = reduce_step(t)
        except NotARedex:
            continue
        reduced += 1
        for u, _ in d.entries:
            assert type_equiv(type_of(u), ty), format_term(t)
    assert reduced >= 30


def test_normal_forms_are_normal_and_typed():
    rng = random.Random(43)
    for _ in range(80):
        t = random_lambda_term(rng, depth=4)
        d = normal_distribution(t)
        if d.residual:
            continue
        for nf, _ in d.entries:
            assert is_normal(nf)


# -- sampling ---------------------------------------------------------------------------


def test_sampled_frequencies_track_exact_distribution():
    t = P("pi[A](2.x:A + 3.y:A + z:B)")
    n = 3000
    rng = random.Random(47)
    hits = 0
    for _ in range(n):
        nf, steps = sample_normal_form(t, rng)
        assert steps == 1
        hits += int(term_key(nf) == term_key(P("x:A")))
    p = 2 / 5
    sigma = (p * (1 - p) / n) ** 0.5
    assert abs(hits / n - p) < 4 * sigma


def test_sample_respects_step_cap():
    with pytest.raises(StepCapExceeded):
        sample_normal_form(P("pi[A](x:A + y:A)"), random.Random(0), step_cap=0)


def test_sample_returns_step_count():
    nf, steps = sample_normal_form(P("(\\x:A. x) y:A"), random.Random(1))
    assert steps == 1
    assert term_key(nf) == term_key(P("y:A"))
