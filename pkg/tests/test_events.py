"""Trace events: exact reachability, stopping times, and seeded sampling."""

from fractions import Fraction

import pytest

from tracemeasure import (
    NeverStops,
    ProbInterval,
    Reach,
    StopsAtStep,
    StopsWithin,
    ladder,
    parse_ars,
    reach_prob_cyclic,
    reach_prob_exact,
    sample_event,
    stopping_prob,
)
from tracemeasure.ars import ArsError
from tracemeasure.events import CyclicSystem, parse_event

FOUR_RULE = parse_ars("a -> b\na -> c\nc -> d\nc -> e\n")
SELF_LOOP = parse_ars("a -> a\na -> b\n")


# -- exact reachability -----------------------------------------------------


def test_reach_goldens_four_rule():
    assert reach_prob_exact(FOUR_RULE, "a", "b") == Fraction(1, 2)
    assert reach_prob_exact(FOUR_RULE, "a", "c") == Fraction(1, 2)
    assert reach_prob_exact(FOUR_RULE, "a", "d") == Fraction(1, 4)
    assert reach_prob_exact(FOUR_RULE, "a", "e") == Fraction(1, 4)


def test_reach_source_is_target():
    assert reach_prob_exact(FOUR_RULE, "a", "a") == 1
    assert reach_prob_exact(FOUR_RULE, "d", "d") == 1


def test_reach_unreachable():
    assert reach_prob_exact(FOUR_RULE, "b", "d") == 0
    assert reach_prob_exact(FOUR_RULE, "d", "a") == 0


def test_reach_respects_multiplicity():
    ars = parse_ars("a -> b : 2\na -> c\n")
    assert reach_prob_exact(ars, "a", "b") == Fraction(2, 3)
    assert reach_prob_exact(ars, "a", "c") == Fraction(1, 3)


def test_reach_rejects_cycles():
    with pytest.raises(CyclicSystem):
        reach_prob_exact(SELF_LOOP, "a", "b")
    # The cycle must lie in the reachable part to matter.
    ars = parse_ars("a -> b\nc -> c\n")
    assert reach_prob_exact(ars, "a", "b") == 1


def test_cyclic_iteration_agrees_on_acyclic_systems():
    tol = Fraction(1, 10**9)
    for target in "bcde":
        assert reach_prob_cyclic(FOUR_RULE, "a", target, tol) == reach_prob_exact(
            FOUR_RULE, "a", target
        )


def test_cyclic_iteration_approaches_fixpoint():
    # Per-visit choice reading: the self loop retries, so the fixpoint is 1.
    tol = Fraction(1, 1024)
    p = reach_prob_cyclic(SELF_LOOP, "a", "b", tol)
    assert isinstance(p, Fraction)
    assert 0 < 1 - p < tol


def test_cyclic_iteration_validates_tolerance():
    with pytest.raises(ValueError):
        reach_prob_cyclic(SELF_LOOP, "a", "b", Fraction(0))


# -- stopping times -----------------------------------------------------------


def test_ladder_stop_at_step_goldens():
    lad = ladder(8)
    for k in range(1, 9):
        assert stopping_prob(lad, StopsAtStep("a0", k)) == Fraction(1, 2**k)
    # Both targets of the last rung are normal, so the tail mass stops too.
    assert stopping_prob(lad, StopsAtStep("a0", 9)) == Fraction(1, 2**8)
    assert stopping_prob(lad, StopsAtStep("a0", 10)) == 0


def test_ladder_stops_within():
    lad = ladder(6)
    assert stopping_prob(lad, StopsWithin("a0", 3)) == Fraction(7, 8)
    assert stopping_prob(lad, StopsWithin("a0", 7)) == 1


def test_ladder_never_stops_is_exactly_zero():
    result = stopping_prob(ladder(12), NeverStops("a0"))
    assert isinstance(result, ProbInterval)
    assert result.exact
    assert result.lower == 0


def test_never_stops_exact_on_self_loop():
    # Memoized choices: picking the loop once means looping forever.
    result = stopping_prob(SELF_LOOP, NeverStops("a"))
    assert result.exact
    assert result.lower == Fraction(1, 2)


def test_never_stops_interval_when_horizon_short():
    result = stopping_prob(ladder(30), NeverStops("a0"), step_cap=5)
    assert isinstance(result, ProbInterval)
    assert not result.exact
    assert result.lower == 0
    assert result.upper == Fraction(1, 32)


def test_stopping_rejects_steps_beyond_cap():
    with pytest.raises(ArsError):
        stopping_prob(ladder(4), StopsAtStep("a0", 100), step_cap=10)


def test_stopping_rejects_reach():
    with pytest.raises(ArsError):
        stopping_prob(FOUR_RULE, Reach("a", "b"))


def test_step_index_validation():
    with pytest.raises(ValueError):
        StopsAtStep("a", 0)
    with pytest.raises(ValueError):
        StopsWithin("a", -3)


def test_ladder_shape():
    lad = ladder(3)
    assert len(lad.rules) == 8
    assert lad.is_normal("a'2")
    assert lad.is_normal("a4")
    assert not lad.is_normal("a3")
    with pytest.raises(ValueError):
        ladder(0)


# -- sampling -----------------------------------------------------------------


def test_sampling_is_seed_deterministic():
    a = sample_event(FOUR_RULE, Reach("a", "d"), samples=500, seed=42)
    b = sample_event(FOUR_RULE, Reach("a", "d"), samples=500, seed=42)
    assert a == b
    c = sample_event(FOUR_RULE, Reach("a", "d"), samples=500, seed=43)
    assert c.hits != a.hits  # these seeds happen to disagree


def test_sampling_estimate_matches_hits():
    report = sample_event(FOUR_RULE, Reach("a", "e"), samples=400, seed=1)
    assert report.estimate == Fraction(report.hits, 400)
    assert report.seed == 1


def test_sampling_frequency_near_exact_value():
    n = 2000
    p = Fraction(1, 4)
    report = sample_event(FOUR_RULE, Reach("a", "d"), samples=n, seed=7)
    sigma = (float(p) * (1 - float(p)) / n) ** 0.5
    assert abs(float(report.estimate) - float(p)) < 4 * sigma


def test_sampling_uses_memoized_choices_on_cycles():
    # A per-visit walk would almost never report non-stopping here; the
    # strategy reading gives the loop choice its full 1/2 weight.
    report = sample_event(SELF_LOOP, NeverStops("a"), samples=2000, seed=3)
    assert abs(float(report.estimate) - 0.5) < 0.05


def test_sampling_stop_events():
    lad = ladder(5)
    at2 = sample_event(lad, StopsAtStep("a0", 2), samples=3000, seed=11)
    assert abs(float(at2.estimate) - 0.25) < 0.04
    within2 = sample_event(lad, StopsWithin("a0", 2), samples=3000, seed=11)
    assert abs(float(within2.estimate) - 0.75) < 0.04


def test_sampling_validates_count():
    with pytest.raises(ValueError):
        sample_event(FOUR_RULE, Reach("a", "b"), samples=0)


# -- event words --------------------------------------------------------------


def test_parse_event_forms():
    assert parse_event(["reach", "a", "b"]) == Reach("a", "b")
    assert parse_event(["stops-at", "a0", "3"]) == StopsAtStep("a0", 3)
    assert parse_event(["stops-within", "a0", "2"]) == StopsWithin("a0", 2)
    assert parse_event(["never-stops", "a0"]) == NeverStops("a0")


@pytest.mark.parametrize(
    "tokens",
    [[], ["reach", "a"], ["stops-at", "a"], ["stops-at", "a", "x"], ["nope", "a"]],
)
def test_parse_event_rejects(tokens):
    with pytest.raises(ValueError):
        parse_event(tokens)
