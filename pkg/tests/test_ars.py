"""Strategy spaces, boxes, and the exact outer measure on finite systems."""

import random
from fractions import Fraction
from itertools import combinations

import pytest

from tracemeasure import (
    Box,
    BoxUnion,
    Complement,
    ExplicitStrategies,
    Intersection,
    Strategy,
    WeightedArs,
    box_prob,
    enumerate_boxes,
    enumerate_strategies,
    format_ars,
    is_measurable,
    outer_measure,
    parse_ars,
    strategy_weight,
)
from tracemeasure.ars import (
    ArsError,
    ArsParseError,
    ExactMeasureUnavailable,
    MeasurabilityCheckInfeasible,
    StrategySpaceTooLarge,
    UnknownObject,
    event_members,
)

FOUR_RULE = parse_ars("a -> b\na -> c\nc -> d\nc -> e\n")
TWO_MULT = parse_ars("a -> b : 2\na -> c\n")


def random_system(rng, max_objects=6, max_mult=3):
    names = [f"o{i}" for i in range(rng.randrange(2, max_objects + 1))]
    rules = []
    for a in names:
        targets = rng.sample(names, rng.randrange(0, len(names)))
        for b in targets:
            rules.append((a, b, rng.randrange(1, max_mult + 1)))
    return WeightedArs.from_rules(rules, extra_objects=names)


# -- construction ---------------------------------------------------------


def test_from_rules_accumulates_repeats():
    ars = WeightedArs.from_rules([("a", "b", 1), ("a", "b", 2), ("a", "c", 1)])
    assert ars.mult("a", "b") == 3
    assert ars.degree("a") == 4


def test_mult_zero_when_absent():
    assert FOUR_RULE.mult("a", "d") == 0
    assert FOUR_RULE.mult("b", "a") == 0


def test_normal_objects():
    assert FOUR_RULE.is_normal("b")
    assert not FOUR_RULE.is_normal("a")
    assert FOUR_RULE.non_normal_objects() == ("a", "c")


def test_unknown_object_rejected():
    with pytest.raises(UnknownObject):
        FOUR_RULE.degree("zzz")
    with pytest.raises(UnknownObject):
        WeightedArs(objects=frozenset({"a"}), rules=(("a", "b", 1),))


def test_zero_multiplicity_rejected():
    with pytest.raises(ArsError):
        WeightedArs(objects=frozenset({"a", "b"}), rules=(("a", "b", 0),))


# -- strategies and weights ------------------------------------------------


def test_enumerate_strategies_four_rule():
    fs = enumerate_strategies(FOUR_RULE)
    assert len(fs) == 4
    mappings = {frozenset(f.mapping().items()) for f in fs}
    assert frozenset({("a", "b"), ("c", "d")}) in mappings
    assert frozenset({("a", "c"), ("c", "e")}) in mappings
    assert all(set(f.mapping()) == {"a", "c"} for f in fs)


def test_strategy_weights_sum_to_one():
    total = sum(strategy_weight(FOUR_RULE, f) for f in enumerate_strategies(FOUR_RULE))
    assert total == 1


def test_strategy_weight_uniform_case():
    f = Strategy.of({"a": "b", "c": "d"})
    assert strategy_weight(FOUR_RULE, f) == Fraction(1, 4)


def test_strategy_weight_respects_multiplicity():
    assert strategy_weight(TWO_MULT, Strategy.of({"a": "b"})) == Fraction(2, 3)
    assert strategy_weight(TWO_MULT, Strategy.of({"a": "c"})) == Fraction(1, 3)


def test_partial_strategy_rejected():
    with pytest.raises(ArsError):
        strategy_weight(FOUR_RULE, Strategy.of({"a": "b"}))


def test_strategy_must_follow_rules():
    with pytest.raises(ArsError):
        strategy_weight(FOUR_RULE, Strategy.of({"a": "d", "c": "d"}))


def test_weights_sum_to_one_randomized():
    rng = random.Random(7)
    for _ in range(25):
        ars = random_system(rng)
        if not ars.non_normal_objects():
            continue
        fs = enumerate_strategies(ars)
        assert sum(strategy_weight(ars, f) for f in fs) == 1


def test_strategy_space_cap():
    # 21 independent binary choices exceed the default 2**20 cap.
    rules = []
    for i in range(21):
        rules.append((f"x{i}", "stop", 1))
        rules.append((f"x{i}", "loop", 1))
    big = WeightedArs.from_rules(rules)
    with pytest.raises(StrategySpaceTooLarge):
        enumerate_strategies(big)
    with pytest.raises(ExactMeasureUnavailable):
        outer_measure(big, BoxUnion((Box.of({"x0": "stop"}),)))


# -- boxes ------------------------------------------------------------------


def test_empty_box_is_whole_space():
    assert box_prob(FOUR_RULE, Box.of({})) == 1
    assert all(Box.of({}).contains(f) for f in enumerate_strategies(FOUR_RULE))


def test_box_prob_closed_form():
    assert box_prob(FOUR_RULE, Box.of({"a": "b"})) == Fraction(1, 2)
    assert box_prob(FOUR_RULE, Box.of({"a": "b", "c": "e"})) == Fraction(1, 4)
    assert box_prob(TWO_MULT, Box.of({"a": "b"})) == Fraction(2, 3)


def test_box_rejects_normal_or_non_rule_constraints():
    with pytest.raises(ArsError):
        box_prob(FOUR_RULE, Box.of({"b": "a"}))  # b is normal
    with pytest.raises(ArsError):
        box_prob(FOUR_RULE, Box.of({"a": "e"}))  # not a rule
    with pytest.raises(ArsError):
        box_prob(FOUR_RULE, Box((("a", "b"), ("a", "c"))))  # a pinned twice


def test_full_box_weight_is_strategy_weight():
    for f in enumerate_strategies(FOUR_RULE):
        assert box_prob(FOUR_RULE, Box.full(f)) == strategy_weight(FOUR_RULE, f)


def test_enumerate_boxes_count():
    # Each reducible object is either free or pinned to one of its targets.
    boxes = list(enumerate_boxes(FOUR_RULE))
    assert len(boxes) == 9  # (2 + 1) * (2 + 1)
    assert len(set(boxes)) == 9


# -- outer measure -----------------------------------------------------------


def test_measure_of_empty_and_whole():
    assert outer_measure(FOUR_RULE, ExplicitStrategies(frozenset())) == 0
    assert outer_measure(FOUR_RULE, BoxUnion((Box.of({}),))) == 1


def test_measure_matches_box_prob():
    for box in enumerate_boxes(FOUR_RULE):
        assert outer_measure(FOUR_RULE, BoxUnion((box,))) == box_prob(FOUR_RULE, box)


def test_measure_of_singleton():
    f = Strategy.of({"a": "b", "c": "d"})
    assert outer_measure(FOUR_RULE, ExplicitStrategies(frozenset({f}))) == Fraction(1, 4)


def test_union_is_not_double_counted():
    overlapping = BoxUnion((Box.of({"a": "b"}), Box.of({"c": "d"})))
    # 1/2 + 1/2 would double-count the strategy choosing both b and d.
    assert outer_measure(FOUR_RULE, overlapping) == Fraction(3, 4)


def test_complement_and_intersection():
    ev = BoxUnion((Box.of({"a": "b"}),))
    assert outer_measure(FOUR_RULE, Complement(ev)) == Fraction(1, 2)
    both = Intersection(ev, BoxUnion((Box.of({"c": "d"}),)))
    assert outer_measure(FOUR_RULE, both) == Fraction(1, 4)


def cover_infimum(ars, members):
    """Brute-force the defining infimum: cheapest box family covering the set.

    Finite systems have finitely many boxes, and a minimal cover never
    repeats a box, so scanning subsets of the box list is exhaustive.
    """
    boxes = list(enumerate_boxes(ars))
    best = None
    # A minimal-cost cover keeps only boxes covering some member privately,
    # so it never needs more boxes than the set has members.
    for r in range(min(len(boxes), len(members)) + 1):
        for family in combinations(boxes, r):
            if all(any(b.contains(f) for b in family) for f in members):
                cost = sum((box_prob(ars, b) for b in family), Fraction(0))
                if best is None or cost < best:
                    best = cost
    return best


@pytest.mark.parametrize(
    "event",
    [
        ExplicitStrategies(frozenset()),
        ExplicitStrategies(frozenset({Strategy.of({"a": "b", "c": "d"})})),
        ExplicitStrategies(
            frozenset(
                {
                    Strategy.of({"a": "b", "c": "d"}),
                    Strategy.of({"a": "c", "c": "e"}),
                }
            )
        ),
        BoxUnion((Box.of({"a": "b"}),)),
        BoxUnion((Box.of({"a": "b"}), Box.of({"c": "d"}))),
        Complement(BoxUnion((Box.of({"a": "b"}),))),
    ],
)
def test_measure_equals_cover_infimum(event):
    members = event_members(FOUR_RULE, event)
    assert outer_measure(FOUR_RULE, event) == cover_infimum(FOUR_RULE, members)


def test_cover_infimum_with_multiplicities():
    rng = random.Random(11)
    for _ in range(6):
        ars = random_system(rng, max_objects=3)
        fs = enumerate_strategies(ars)
        if not fs or len(fs) > 4:
            continue
        picked = frozenset(f for f in fs if rng.random() < 0.5)
        ev = ExplicitStrategies(picked)
        assert outer_measure(ars, ev) == cover_infimum(ars, picked)


# -- measurability ------------------------------------------------------------


def test_boxes_and_unions_are_measurable():
    assert is_measurable(FOUR_RULE, BoxUnion((Box.of({"a": "b"}),)))
    assert is_measurable(
        FOUR_RULE, BoxUnion((Box.of({"a": "b"}), Box.of({"c": "e"})))
    )
    assert is_measurable(FOUR_RULE, Complement(BoxUnion((Box.of({"a": "b"}),))))


def test_every_subset_measurable_on_finite_system():
    # With finitely many strategies the measure is a sum of point masses,
    # so the splitting identity holds for arbitrary sets.
    fs = enumerate_strategies(FOUR_RULE)
    for r in range(len(fs) + 1):
        for picked in combinations(fs, r):
            assert is_measurable(FOUR_RULE, ExplicitStrategies(frozenset(picked)))


def test_measurability_check_cap():
    rules = []
    for i in range(5):
        rules.append((f"x{i}", "stop", 1))
        rules.append((f"x{i}", "loop", 1))
    ars = WeightedArs.from_rules(rules)
    # 2^32 subsets of the 32-strategy space blow the subset cap.
    with pytest.raises(MeasurabilityCheckInfeasible):
        is_measurable(ars, BoxUnion((Box.of({"x0": "stop"}),)), subset_cap=1 << 16)


# -- text format ---------------------------------------------------------------


def test_parse_format_round_trip():
    text = format_ars(FOUR_RULE)
    assert parse_ars(text) == FOUR_RULE
    assert format_ars(parse_ars("a -> b : 2\na -> c\n")) == "a -> b : 2\na -> c\n"


def test_parse_accumulates_and_comments():
    ars = parse_ars("# doubled edge\na -> b\na -> b\na -> c : 3\n\n")
    assert ars.mult("a", "b") == 2
    assert ars.mult("a", "c") == 3


def test_parse_round_trip_randomized():
    rng = random.Random(3)
    for _ in range(20):
        ars = random_system(rng)
        again = parse_ars(format_ars(ars))
        assert again.rules == ars.rules
        # Isolated objects are not representable in the text form.
        assert again.objects == frozenset(
            {x for a, b, _ in ars.rules for x in (a, b)}
        )


@pytest.mark.parametrize(
    "bad",
    ["a b", "a -> b : x", "a -> b : 0", "a -> b : -1", "-> b", "a -> ", "a => b"],
)
def test_parse_errors(bad):
    with pytest.raises(ArsParseError):
        parse_ars(bad)


def test_parse_error_carries_line_number():
    with pytest.raises(ArsParseError) as exc:
        parse_ars("a -> b\nwhoops\n")
    assert "2" in str(exc.value)
