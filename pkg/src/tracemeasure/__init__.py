"""Probability measures on rewrite strategies, a probabilistic projector
calculus, and exact translation to and from its weighted counterpart."""

from .ars import (
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
from .events import (
    NeverStops,
    ProbInterval,
    Reach,
    StopsAtStep,
    StopsWithin,
    ladder,
    reach_prob_cyclic,
    reach_prob_exact,
    sample_event,
    stopping_prob,
)
from .parser import parse_alg_term, parse_lambda_term, parse_type
from .reduction import (
    Distribution,
    normal_distribution,
    reduce_step,
    sample_normal_form,
)
from .syntax import format_term, format_type
from .translate import (
    check_simulation_backward,
    check_simulation_forward,
    check_substitution_lemmas,
    to_alg,
    to_lambda,
)
from .typecheck import type_of
from .typenf import type_equiv

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BoxUnion",
    "Complement",
    "Distribution",
    "ExplicitStrategies",
    "Intersection",
    "NeverStops",
    "ProbInterval",
    "Reach",
    "StopsAtStep",
    "StopsWithin",
    "Strategy",
    "WeightedArs",
    "box_prob",
    "check_simulation_backward",
    "check_simulation_forward",
    "check_substitution_lemmas",
    "enumerate_boxes",
    "enumerate_strategies",
    "format_ars",
    "format_term",
    "format_type",
    "is_measurable",
    "ladder",
    "normal_distribution",
    "outer_measure",
    "parse_alg_term",
    "parse_ars",
    "parse_lambda_term",
    "parse_type",
    "reach_prob_cyclic",
    "reach_prob_exact",
    "reduce_step",
    "sample_event",
    "sample_normal_form",
    "stopping_prob",
    "strategy_weight",
    "to_alg",
    "to_lambda",
    "type_equiv",
    "type_of",
]
