"""Command-line entry point.

Subcommands:
  ars       prob-box | prob-event | measurable | sample | ladder
  lambda    typecheck | reduce | dist | sample
  translate to-lambda | to-alg
  check     simulation | lemmas

Probabilities print as exact rationals with an advisory decimal in
parentheses (10 significant digits); `--json` switches every command to
one JSON object per output line, with rationals as exact strings.

Exit codes: 0 success, 1 check failed, 2 input error (parse or typing),
3 exact computation infeasible (caps or cyclic system), 4 untranslatable
term. The sampling seed defaults to a fixed constant, can be set by the
TRACEMEASURE_SEED environment variable, and is overridden by --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from collections import Counter
from fractions import Fraction
from typing import Optional

from .ars import (
    ArsError,
    ArsParseError,
    Box,
    BoxUnion,
    ExactMeasureUnavailable,
    MeasurabilityCheckInfeasible,
    StrategySpaceTooLarge,
    WeightedArs,
    box_prob,
    format_ars,
    is_measurable,
    parse_ars,
)
from .events import (
    CyclicSystem,
    ProbInterval,
    Reach,
    ladder,
    parse_event,
    reach_prob_cyclic,
    reach_prob_exact,
    sample_event,
    stopping_prob,
)
from .parser import ParseError, parse_alg_term, parse_lambda_term
from .rationals import format_decimal
from .reduction import (
    DEFAULT_STEP_CAP,
    StepCapExceeded,
    normal_distribution,
    sample_normal_form,
)
from .syntax import Term, format_term, format_type
from .translate import (
    ProjectorNormalForm,
    TranslationError,
    check_simulation_backward,
    check_simulation_forward,
    check_substitution_lemmas,
    to_alg,
    to_lambda,
)
from .typecheck import TypingError, type_of

DEFAULT_SEED = 20240802

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_UNTRANSLATABLE = 4


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _prob_text(p: Fraction) -> str:
    return f"{p} ({format_decimal(p)})"


def _emit(args: argparse.Namespace, human: str, payload: dict) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def _resolve_seed(args: argparse.Namespace) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("TRACEMEASURE_SEED")
    if env is not None:
        return int(env)
    return DEFAULT_SEED


def _load_ars(args: argparse.Namespace, shift_into: Optional[str] = None) -> WeightedArs:
    if getattr(args, "ladder", None) is not None:
        # With --ladder the file positional is absent, so argparse has
        # filled it with the first token of the next positional; put it back.
        if shift_into is not None and args.file is not None:
            setattr(args, shift_into, [args.file] + getattr(args, shift_into))
            args.file = None
        return ladder(args.ladder)
    if args.file is None:
        raise ArsParseError("no input: give a file or --ladder N", 0)
    with open(args.file, "r", encoding="utf-8") as fh:
        return parse_ars(fh.read())


def _parse_box(ars: WeightedArs, text: str) -> Box:
    pairs: dict[str, str] = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "->" not in chunk:
            raise ArsParseError(f"box constraint {chunk!r} is not 'a->b'", 0)
        source, target = (part.strip() for part in chunk.split("->", 1))
        if source in pairs:
            raise ArsError(f"box constrains {source!r} twice")
        pairs[source] = target
    box = Box.of(pairs)
    box_prob(ars, box)  # validates names and multiplicities
    return box


def _read_term(path: str) -> tuple[str, Term]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".lp"):
        return "lambda", parse_lambda_term(text)
    if path.endswith(".alg"):
        return "alg", parse_alg_term(text)
    raise ParseError(f"cannot tell the calculus from {path!r} (use .lp or .alg)", 0, 0)


# -------------------------------------------------------------------- ars --


def cmd_ars_prob_box(args: argparse.Namespace) -> int:
    ars = _load_ars(args)
    box = _parse_box(ars, args.box)
    p = box_prob(ars, box)
    _emit(
        args,
        _prob_text(p),
        {"box": args.box, "exact": str(p), "decimal": float(p)},
    )
    return EXIT_OK


def cmd_ars_prob_event(args: argparse.Namespace) -> int:
    ars = _load_ars(args, shift_into="event")
    event = parse_event(args.event)
    if isinstance(event, Reach):
        try:
            p = reach_prob_exact(ars, event.source, event.target)
        except CyclicSystem as exc:
            if args.tol is None:
                return _fail(
                    f"{exc}; pass --tol for a fixpoint value or use `ars sample`",
                    EXIT_INFEASIBLE,
                )
            p = reach_prob_cyclic(
                ars, event.source, event.target, tol=Fraction(args.tol)
            )
            _emit(
                args,
                f"~{_prob_text(p)}",
                {
                    "event": " ".join(args.event),
                    "approx": True,
                    "exact": str(p),
                    "decimal": float(p),
                },
            )
            return EXIT_OK
        _emit(
            args,
            _prob_text(p),
            {"event": " ".join(args.event), "exact": str(p), "decimal": float(p)},
        )
        return EXIT_OK
    steps = getattr(event, "steps", None)
    if steps is not None and steps > args.step_cap:
        return _fail(
            f"step {steps} exceeds --step-cap {args.step_cap}", EXIT_INFEASIBLE
        )
    result = stopping_prob(ars, event, step_cap=args.step_cap)
    if isinstance(result, ProbInterval) and not result.exact:
        _emit(
            args,
            f"[{result.lower}, {result.upper}] "
            f"({format_decimal(result.lower)}, {format_decimal(result.upper)})",
            {
                "event": " ".join(args.event),
                "lower": str(result.lower),
                "upper": str(result.upper),
            },
        )
        return EXIT_OK
    p = result.lower if isinstance(result, ProbInterval) else result
    _emit(
        args,
        _prob_text(p),
        {"event": " ".join(args.event), "exact": str(p), "decimal": float(p)},
    )
    return EXIT_OK


def cmd_ars_measurable(args: argparse.Namespace) -> int:
    ars = _load_ars(args, shift_into="boxes")
    boxes = tuple(_parse_box(ars, text) for text in args.boxes)
    event = BoxUnion(boxes)
    answer = is_measurable(
        ars, event, strategy_cap=args.strategy_cap, subset_cap=args.subset_cap
    )
    _emit(
        args,
        "measurable" if answer else "not measurable",
        {"boxes": list(args.boxes), "measurable": answer},
    )
    return EXIT_OK


def cmd_ars_sample(args: argparse.Namespace) -> int:
    ars = _load_ars(args, shift_into="event")
    event = parse_event(args.event)
    seed = _resolve_seed(args)
    report = sample_event(
        ars, event, samples=args.samples, seed=seed, step_cap=args.step_cap
    )
    human = (
        f"hits {report.hits}/{report.samples}\n"
        f"estimate {_prob_text(report.estimate)}"
    )
    _emit(
        args,
        human,
        {
            "event": " ".join(args.event),
            "hits": report.hits,
            "samples": report.samples,
            "estimate": str(report.estimate),
            "decimal": float(report.estimate),
            "seed": seed,
        },
    )
    return EXIT_OK


def cmd_ars_ladder(args: argparse.Namespace) -> int:
    system = ladder(args.n)
    text = format_ars(system)
    _emit(args, text, {"n": args.n, "system": text})
    return EXIT_OK


# ----------------------------------------------------------------- lambda --


def cmd_lambda_typecheck(args: argparse.Namespace) -> int:
    _, term = _read_term(args.file)
    ty = type_of(term)
    text = format_type(ty)
    _emit(args, text, {"type": text})
    return EXIT_OK


def cmd_lambda_reduce(args: argparse.Namespace) -> int:
    _, term = _read_term(args.file)
    seed = _resolve_seed(args)
    normal, steps = sample_normal_form(
        term, random.Random(seed), step_cap=args.step_cap, strategy=args.strategy
    )
    text = format_term(normal)
    _emit(args, text, {"term": text, "steps": steps, "seed": seed})
    return EXIT_OK


def cmd_lambda_dist(args: argparse.Namespace) -> int:
    _, term = _read_term(args.file)
    dist = normal_distribution(term, step_cap=args.step_cap, strategy=args.strategy)
    for entry, p in dist.entries:
        text = format_term(entry)
        _emit(
            args,
            f"{text} : {_prob_text(p)}",
            {"term": text, "prob": str(p), "decimal": float(p)},
        )
    if dist.residual:
        _emit(
            args,
            f"residual : {_prob_text(dist.residual)}",
            {"residual": str(dist.residual), "decimal": float(dist.residual)},
        )
    return EXIT_OK


def cmd_lambda_sample(args: argparse.Namespace) -> int:
    _, term = _read_term(args.file)
    seed = _resolve_seed(args)
    rng = random.Random(seed)
    counts: Counter = Counter()
    for _ in range(args.samples):
        normal, _ = sample_normal_form(
            term, rng, step_cap=args.step_cap, strategy=args.strategy
        )
        counts[format_term(normal)] += 1
    for text in sorted(counts):
        freq = Fraction(counts[text], args.samples)
        _emit(
            args,
            f"{text} : {counts[text]}/{args.samples} ({format_decimal(freq)})",
            {
                "term": text,
                "count": counts[text],
                "samples": args.samples,
                "seed": seed,
            },
        )
    return EXIT_OK


# -------------------------------------------------------------- translate --


def cmd_translate_to_lambda(args: argparse.Namespace) -> int:
    dialect, term = _read_term(args.file)
    if dialect != "alg":
        return _fail("to-lambda expects a weighted-calculus file (.alg)", EXIT_INPUT)
    result = to_lambda(term)
    text = format_term(result)
    _emit(args, text, {"term": text})
    return EXIT_OK


def cmd_translate_to_alg(args: argparse.Namespace) -> int:
    dialect, term = _read_term(args.file)
    if dialect != "lambda":
        return _fail("to-alg expects a projector-calculus file (.lp)", EXIT_INPUT)
    result = to_alg(term)
    text = format_term(result, compress_sums=False)
    _emit(args, text, {"term": text})
    return EXIT_OK


# ------------------------------------------------------------------ check --


def cmd_check_simulation(args: argparse.Namespace) -> int:
    dialect, term = _read_term(args.file)
    if dialect == "alg":
        report = check_simulation_forward(term, step_cap=args.step_cap)
        if report.excluded is not None:
            _emit(
                args,
                f"excluded: {report.excluded}",
                {"excluded": report.excluded},
            )
            return EXIT_UNTRANSLATABLE
        image_text = format_term(report.image, compress_sums=False)
        _emit(args, f"image: {image_text}", {"image": image_text})
        _emit(
            args,
            f"term-grammar: {'yes' if report.is_term else 'no'}",
            {"is_term": report.is_term},
        )
        for i, target in enumerate(report.targets, start=1):
            entries = " + ".join(
                f"{p}.{format_term(body, compress_sums=False)}"
                for p, body in target.entries
            )
            verdict = "ok" if target.mixture_ok else "FAIL"
            _emit(
                args,
                f"target {i}: {entries} -> {verdict}",
                {"target": i, "entries": entries, "ok": target.mixture_ok},
            )
        _emit(
            args,
            "result: ok" if report.ok else "result: FAILED",
            {"ok": report.ok},
        )
        return EXIT_OK if report.ok else EXIT_CHECK_FAILED
    report = check_simulation_backward(term)
    for rec in report.records:
        line = f"{rec.kind} {rec.rule}: {rec.status}"
        if rec.note:
            line += f" ({rec.note})"
        _emit(
            args,
            line,
            {
                "kind": rec.kind,
                "rule": rec.rule,
                "status": rec.status,
                "note": rec.note,
            },
        )
    _emit(
        args,
        f"exclusions: {len(report.exclusions)}",
        {"exclusions": len(report.exclusions)},
    )
    _emit(
        args,
        "result: ok" if report.ok else "result: FAILED",
        {"ok": report.ok},
    )
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


def cmd_check_lemmas(args: argparse.Namespace) -> int:
    from .corpus import alg_subst_cases, lambda_subst_cases

    seed = _resolve_seed(args)
    rng = random.Random(seed)
    backward_type, backward_term = lambda_subst_cases(rng, args.count, args.depth)
    forward_type, forward_term = alg_subst_cases(rng, args.count, args.depth)
    report = check_substitution_lemmas(
        forward_type=forward_type,
        forward_term=forward_term,
        backward_type=backward_type,
        backward_term=backward_term,
    )
    _emit(
        args,
        f"checked {report.checked}",
        {"checked": report.checked, "seed": seed},
    )
    for failure in report.failures:
        _emit(
            args,
            f"failure {failure.direction}/{failure.kind}: {failure.detail}",
            {
                "direction": failure.direction,
                "kind": failure.kind,
                "detail": failure.detail,
            },
        )
    _emit(
        args,
        f"failures {len(report.failures)}",
        {"failures": len(report.failures)},
    )
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


# ------------------------------------------------------------------ wiring --


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--json", action="store_true", help="JSON-lines output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracemeasure",
        description="probability measures on rewrite strategies, and the "
        "probabilistic projector calculus with its weighted counterpart",
    )
    top = parser.add_subparsers(dest="command", required=True)

    ars = top.add_parser("ars", help="rewrite-system probabilities")
    ars_sub = ars.add_subparsers(dest="subcommand", required=True)

    p = ars_sub.add_parser("prob-box", help="closed-form probability of a box")
    p.add_argument("file", nargs="?", default=None)
    p.add_argument("box", help='constraints like "a->b,c->d"')
    p.add_argument("--ladder", type=int, default=None, metavar="N")
    _add_common(p)
    p.set_defaults(func=cmd_ars_prob_box)

    p = ars_sub.add_parser("prob-event", help="exact probability of an event")
    p.add_argument("file", nargs="?", default=None)
    p.add_argument("event", nargs="+", help="reach a b | stops-at a n | stops-within a n | never-stops a")
    p.add_argument("--ladder", type=int, default=None, metavar="N")
    p.add_argument("--step-cap", type=int, default=4096)
    p.add_argument("--tol", default=None, help="fixpoint tolerance for cyclic systems")
    _add_common(p)
    p.set_defaults(func=cmd_ars_prob_event)

    p = ars_sub.add_parser("measurable", help="splitting check for a box union")
    p.add_argument("file", nargs="?", default=None)
    p.add_argument("boxes", nargs="+", help="one or more boxes")
    p.add_argument("--ladder", type=int, default=None, metavar="N")
    p.add_argument("--strategy-cap", type=int, default=1 << 20)
    p.add_argument("--subset-cap", type=int, default=1 << 16)
    _add_common(p)
    p.set_defaults(func=cmd_ars_measurable)

    p = ars_sub.add_parser("sample", help="Monte Carlo estimate of an event")
    p.add_argument("file", nargs="?", default=None)
    p.add_argument("event", nargs="+")
    p.add_argument("--ladder", type=int, default=None, metavar="N")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--step-cap", type=int, default=4096)
    _add_common(p)
    p.set_defaults(func=cmd_ars_sample)

    p = ars_sub.add_parser("ladder", help="print the two-way ladder system")
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_ars_ladder)

    lam = top.add_parser("lambda", help="projector-calculus operations")
    lam_sub = lam.add_subparsers(dest="subcommand", required=True)

    p = lam_sub.add_parser("typecheck")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=cmd_lambda_typecheck)

    p = lam_sub.add_parser("reduce", help="sample one reduction to normal form")
    p.add_argument("file")
    p.add_argument("--strategy", default="leftmost-outermost",
                   choices=("leftmost-outermost", "proj-first", "beta-first"))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--step-cap", type=int, default=DEFAULT_STEP_CAP)
    _add_common(p)
    p.set_defaults(func=cmd_lambda_reduce)

    p = lam_sub.add_parser("dist", help="exact distribution over normal forms")
    p.add_argument("file")
    p.add_argument("--strategy", default="leftmost-outermost",
                   choices=("leftmost-outermost", "proj-first", "beta-first"))
    p.add_argument("--step-cap", type=int, default=DEFAULT_STEP_CAP)
    _add_common(p)
    p.set_defaults(func=cmd_lambda_dist)

    p = lam_sub.add_parser("sample", help="sampled normal-form frequencies")
    p.add_argument("file")
    p.add_argument("--strategy", default="leftmost-outermost",
                   choices=("leftmost-outermost", "proj-first", "beta-first"))
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--step-cap", type=int, default=DEFAULT_STEP_CAP)
    _add_common(p)
    p.set_defaults(func=cmd_lambda_sample)

    tr = top.add_parser("translate", help="between the two calculi")
    tr_sub = tr.add_subparsers(dest="subcommand", required=True)

    p = tr_sub.add_parser("to-lambda", help="weighted to projector calculus")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=cmd_translate_to_lambda)

    p = tr_sub.add_parser("to-alg", help="projector to weighted calculus")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=cmd_translate_to_alg)

    chk = top.add_parser("check", help="executable theorem checks")
    chk_sub = chk.add_subparsers(dest="subcommand", required=True)

    p = chk_sub.add_parser("simulation", help="simulation check for a term file")
    p.add_argument("file")
    p.add_argument("--step-cap", type=int, default=64)
    _add_common(p)
    p.set_defaults(func=cmd_check_simulation)

    p = chk_sub.add_parser("lemmas", help="substitution identities on random terms")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_check_lemmas)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ArsParseError, ParseError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    except TypingError as exc:
        return _fail(str(exc), EXIT_INPUT)
    except ProjectorNormalForm as exc:
        return _fail(str(exc), EXIT_UNTRANSLATABLE)
    except TranslationError as exc:
        return _fail(str(exc), EXIT_UNTRANSLATABLE)
    except (
        StrategySpaceTooLarge,
        ExactMeasureUnavailable,
        MeasurabilityCheckInfeasible,
        CyclicSystem,
        StepCapExceeded,
    ) as exc:
        return _fail(str(exc), EXIT_INFEASIBLE)
    except ArsError as exc:
        return _fail(str(exc), EXIT_INPUT)
    except FileNotFoundError as exc:
        return _fail(str(exc), EXIT_INPUT)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
