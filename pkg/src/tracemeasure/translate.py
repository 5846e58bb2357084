"""Exact translations between the weighted and the projector calculus.

Going to the projector calculus, a weighted combination sum_i (n_i/d_i).r_i
becomes a projector over a multiset sum: each branch is repeated
m_i = n_i * prod_{k != i} d_k times, so the projector's firing weights
m_i / sum m_j equal the original weights exactly — integer arithmetic with
no drift. Unweighted summands count as weight 1. All other constructors
map homomorphically.

Coming back, a projector node is replaced by the weighted combination of
its own one-step reducts, using the projector's exact firing distribution;
everything else maps homomorphically. A projector that cannot fire has no
image — that is the documented untranslatable case — and the commutation
move of a projector past an application (available in the symmetric
relation) has no counterpart on the weighted side, so it is reported as an
exclusion rather than checked.

The check_* functions run the two simulation statements and the
substitution identities as exact, reportable checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Iterable, Optional

from .alg import (
    DistTerm,
    NotADistribution,
    SYMMETRIC,
    alg_step_tagged,
    alg_type_of,
    as_distribution,
    is_distribution,
)
from .reduction import (
    NotARedex,
    ProjectorNotReady,
    Distribution,
    normal_distribution,
    analyze_projector,
    projector_distribution,
    redexes,
    sym_step_tagged,
    _contract,
    _plug_at,
    _subterm_at,
)
from .syntax import (
    App,
    Lam,
    Proj,
    Scale,
    Sum,
    TApp,
    TLam,
    Term,
    Type,
    subterms,
    sum_of,
    sum_parts,
    term_key,
    type_alpha_eq,
    type_subst_term,
    subst_term,
    Var,
)
from .typecheck import TypingError

RULE_PI = "proj-app"


class TranslationError(ValueError):
    pass


class HeterogeneousSum(TranslationError):
    """A translated sum whose summands do not share one type."""


class UntypableSummand(TranslationError):
    pass


class ProjectorNormalForm(TranslationError):
    """A projector with no firing step has no image in the weighted calculus."""


class WeightInProjectorTerm(TranslationError):
    pass


# ------------------------------------------------------------ multiplicity --


@dataclass(frozen=True)
class MultiplicityPlan:
    """Integer multiplicities m_i = n_i * prod_{k != i} d_k for weights n_i/d_i.

    The ratios m_i / sum m_j reproduce weight_i / sum weight_j exactly, for
    any representation of the weights (denominators are taken from the
    lowest-terms form).
    """

    weights: tuple[Fraction, ...]
    multiplicities: tuple[int, ...]
    scale: int

    @classmethod
    def from_weights(cls, weights: Iterable[Fraction]) -> "MultiplicityPlan":
        ws = tuple(Fraction(w) for w in weights)
        if not ws:
            raise ValueError("need at least one weight")
        if any(w <= 0 for w in ws):
            raise ValueError("weights must be positive")
        denoms = [w.denominator for w in ws]
        scale = prod(denoms)
        mults = tuple(
            w.numerator * prod(d for k, d in enumerate(denoms) if k != i)
            for i, w in enumerate(ws)
        )
        return cls(weights=ws, multiplicities=mults, scale=scale)

    @property
    def total(self) -> int:
        return sum(self.multiplicities)

    @property
    def probabilities(self) -> tuple[Fraction, ...]:
        total = self.total
        return tuple(Fraction(m, total) for m in self.multiplicities)


# ------------------------------------------------------------ to projector --


def to_lambda(r: Term) -> Term:
    """Translate a weighted-calculus term into the projector calculus."""
    match r:
        case Var():
            return r
        case Lam(x, ty, body):
            return Lam(x, ty, to_lambda(body))
        case App(f, a):
            return App(to_lambda(f), to_lambda(a))
        case TLam(x, body):
            return TLam(x, to_lambda(body))
        case TApp(f, ty):
            return TApp(to_lambda(f), ty)
        case Sum() | Scale():
            return _translate_combination(r)
        case Proj():
            raise TranslationError(
                "projectors are not part of the weighted calculus"
            )
    raise TypeError(f"not a term: {r!r}")


def _translate_combination(r: Term) -> Term:
    """sum_i p_i.r_i  ->  projector over m_i-fold repeated branches."""
    entries: list[tuple[Fraction, Term]] = []
    for part in sum_parts(r):
        if isinstance(part, Scale):
            entries.append((part.factor, part.body))
        else:
            entries.append((Fraction(1), part))
    common = _common_type(entry for _, entry in entries)
    plan = MultiplicityPlan.from_weights(w for w, _ in entries)
    copies: list[Term] = []
    for m, (_, body) in zip(plan.multiplicities, entries):
        translated = to_lambda(body)
        copies.extend([translated] * m)
    return Proj(common, sum_of(copies))


def _common_type(bodies: Iterable[Term]) -> Type:
    first: Optional[Type] = None
    for body in bodies:
        try:
            ty = alg_type_of(body)
        except TypingError as exc:
            raise UntypableSummand(f"summand does not type: {exc}") from exc
        if first is None:
            first = ty
        elif not type_alpha_eq(first, ty):
            raise HeterogeneousSum(
                "summands of a translated sum must share one type"
            )
    assert first is not None
    return first


# ------------------------------------------------------------- to weighted --


def to_alg(t: Term) -> Term:
    """Translate a projector-calculus term into the weighted calculus."""
    match t:
        case Var():
            return t
        case Lam(x, ty, body):
            return Lam(x, ty, to_alg(body))
        case App(f, a):
            return App(to_alg(f), to_alg(a))
        case TLam(x, body):
            return TLam(x, to_alg(body))
        case TApp(f, ty):
            return TApp(to_alg(f), ty)
        case Sum(left, right):
            return Sum(to_alg(left), to_alg(right))
        case Proj():
            # Build the image in the body's first-occurrence group order
            # (not the distribution's sorted order) so substituting into an
            # image matches the image of the substituted term.
            analysis = analyze_projector(t)
            if not analysis.groups or analysis.blocked_rest or analysis.not_ready:
                try:
                    projector_distribution(t)
                except (NotARedex, ProjectorNotReady) as exc:
                    raise ProjectorNormalForm(
                        f"projector cannot fire, so it has no image: {exc}"
                    ) from exc
                raise AssertionError("analysis and distribution disagree")
            total = sum(count for _, count in analysis.groups)
            return sum_of(
                [
                    Scale(Fraction(count, total), to_alg(rep))
                    for rep, count in analysis.groups
                ]
            )
        case Scale():
            raise WeightInProjectorTerm(
                "weights are not part of the projector calculus"
            )
    raise TypeError(f"not a term: {t!r}")


# ------------------------------------------------------------ AC utilities --


def ac_canonical(t: Term) -> Term:
    """Flatten and sort sums at every position (no other rearrangement)."""
    match t:
        case Var():
            return t
        case Lam(x, ty, body):
            return Lam(x, ty, ac_canonical(body))
        case App(f, a):
            return App(ac_canonical(f), ac_canonical(a))
        case TLam(x, body):
            return TLam(x, ac_canonical(body))
        case TApp(f, ty):
            return TApp(ac_canonical(f), ty)
        case Proj(ty, body):
            return Proj(ty, ac_canonical(body))
        case Scale(p, body):
            return Scale(p, ac_canonical(body))
        case Sum():
            parts: list[Term] = []
            for p in sum_parts(t):
                parts.extend(sum_parts(ac_canonical(p)))
            return sum_of(sorted(parts, key=term_key))
    raise TypeError(f"not a term: {t!r}")


def ac_equal(a: Term, b: Term) -> bool:
    return term_key(ac_canonical(a)) == term_key(ac_canonical(b))


# ------------------------------------------------------- forward simulation --


@dataclass(frozen=True)
class BranchRecord:
    weight: Fraction
    target: Term
    matched: bool


@dataclass(frozen=True)
class TargetRecord:
    """One reachable weighted combination and its branch-by-branch match."""

    entries: tuple[tuple[Fraction, Term], ...]
    branches: tuple[BranchRecord, ...]
    mixture_ok: bool


@dataclass(frozen=True)
class ForwardReport:
    source: Term
    image: Optional[Term]
    is_term: bool
    targets: tuple[TargetRecord, ...]
    excluded: Optional[str] = None

    @property
    def ok(self) -> bool:
        if self.excluded is not None:
            return False
        return bool(self.targets) and all(t.mixture_ok for t in self.targets)


def _reachable_distributions(
    r: Term, search_depth: int, max_targets: int
) -> list[DistTerm]:
    """Weighted combinations reachable from r, deduplicated by merged form.

    A node only counts as a target when each of its weighted branches is
    itself a unit-sum combination or carries no weights at all; symmetric
    moves also produce pseudo-terms with dangling sub-unit weights (for
    example distributing an abstraction over a weighted sum), and the
    mixture identity is not claimed for those.
    """

    def admissible(dist: DistTerm) -> bool:
        return all(
            is_distribution(body)
            or not any(isinstance(s, Scale) for s in subterms(body))
            for _, body in dist.entries
        )

    found: dict = {}
    visited = {term_key(r)}
    frontier = [r]
    for _ in range(search_depth + 1):
        for node in frontier:
            try:
                dist = as_distribution(node)
            except NotADistribution:
                dist = None
            if dist is not None and not admissible(dist):
                dist = None
            if dist is not None:
                sig = tuple(
                    (p, term_key(body)) for p, body in dist.merged()
                )
                if sig not in found:
                    found[sig] = dist
                    if len(found) >= max_targets:
                        return list(found.values())
        next_frontier: list[Term] = []
        for node in frontier:
            for new, rule, _ in alg_step_tagged(node):
                if rule == "unit-weight-intro":
                    continue
                key = term_key(new)
                if key not in visited:
                    visited.add(key)
                    next_frontier.append(new)
        frontier = next_frontier
        if not frontier:
            break
    return list(found.values())


def _dist_as_map(d: Distribution) -> dict:
    return {term_key(t): p for t, p in d.entries}


def check_simulation_forward(
    r: Term,
    step_cap: int = 64,
    search_depth: int = 4,
    max_targets: int = 8,
) -> ForwardReport:
    """Check that the image of r reaches each branch with its exact weight.

    For every weighted combination sum_i p_i.t_i reachable from r, the
    normal-form distribution of the image of r must equal the p_i-weighted
    mixture of the normal-form distributions of the images of the t_i —
    compared exactly on rationals.
    """
    is_term = is_distribution(r)
    try:
        image = to_lambda(r)
    except TranslationError as exc:
        return ForwardReport(
            source=r,
            image=None,
            is_term=is_term,
            targets=(),
            excluded=f"untranslatable: {exc}",
        )
    image_dist = normal_distribution(image, step_cap=step_cap)
    if image_dist.residual:
        return ForwardReport(
            source=r,
            image=image,
            is_term=is_term,
            targets=(),
            excluded="step cap exceeded while normalizing the image",
        )
    image_map = _dist_as_map(image_dist)
    targets = []
    for dist in _reachable_distributions(r, search_depth, max_targets):
        merged = dist.merged()
        mixture: dict = {}
        branches = []
        mixture_ok = True
        for p, body in merged:
            try:
                branch_image = to_lambda(body)
            except TranslationError:
                branches.append(BranchRecord(p, body, False))
                mixture_ok = False
                continue
            branch_dist = normal_distribution(branch_image, step_cap=step_cap)
            if branch_dist.residual:
                branches.append(BranchRecord(p, body, False))
                mixture_ok = False
                continue
            branch_map = _dist_as_map(branch_dist)
            for key, q in branch_map.items():
                mixture[key] = mixture.get(key, Fraction(0)) + p * q
            matched = all(
                image_map.get(key, Fraction(0)) >= p * q
                for key, q in branch_map.items()
            )
            branches.append(BranchRecord(p, body, matched))
        if mixture_ok:
            mixture_ok = mixture == image_map
        targets.append(
            TargetRecord(
                entries=tuple(merged),
                branches=tuple(branches),
                mixture_ok=mixture_ok,
            )
        )
    return ForwardReport(
        source=r, image=image, is_term=is_term, targets=tuple(targets)
    )


# ------------------------------------------------------ backward simulation --


@dataclass(frozen=True)
class StepRecord:
    kind: str  # "sym" | "beta" | "type-beta" | "proj"
    rule: str
    status: str  # "equal" | "one-step" | "by-definition" | "embedded"
    #             | "absorbed" | "rule-pi-excluded" | "untranslatable"
    #             | "failed"
    note: str = ""


@dataclass(frozen=True)
class BackwardReport:
    source: Term
    records: tuple[StepRecord, ...]

    @property
    def ok(self) -> bool:
        return all(rec.status != "failed" for rec in self.records)

    @property
    def exclusions(self) -> tuple[StepRecord, ...]:
        return tuple(
            rec for rec in self.records if rec.status == "rule-pi-excluded"
        )


def _sym_images_once(t: Term) -> list[Term]:
    return [new for new, _, kind in alg_step_tagged(t) if kind == SYMMETRIC]


def _oriented_images_once(t: Term) -> list[Term]:
    return [new for new, _, kind in alg_step_tagged(t) if kind == "reduce"]


def check_simulation_backward(t: Term) -> BackwardReport:
    """Check each one-step move of t against its image, move by move.

    Symmetric moves must commute with translation (equality or one
    symmetric step on the weighted side); the projector/application
    commutation has no weighted counterpart and is recorded as the
    documented exclusion. Weight-one reductions must map to one oriented
    step (steps inside a projector body are absorbed by its distribution
    and recorded as such). A firing projector at the root *is* its weighted
    combination by definition; embedded ones are checked locally. A source
    outside the translation's domain (some projector subterm is not a
    probabilistic redex) cannot state the claim at all and is recorded as
    untranslatable rather than failed.
    """
    records: list[StepRecord] = []
    try:
        image = to_alg(t)
    except TranslationError as exc:
        # A source whose only move is the commutation rule (its projector
        # group is not firable) is the same documented exclusion, not a
        # simulation failure.
        if any(rule == RULE_PI for _, rule in sym_step_tagged(t)):
            return BackwardReport(
                source=t,
                records=(
                    StepRecord(
                        kind="sym",
                        rule=RULE_PI,
                        status="rule-pi-excluded",
                        note=f"source has no image: {exc}",
                    ),
                ),
            )
        return BackwardReport(
            source=t,
            records=(
                StepRecord(
                    kind="sym",
                    rule="-",
                    status="untranslatable",
                    note=f"source has no image: {exc}",
                ),
            ),
        )

    for variant, rule in sym_step_tagged(t):
        if rule == RULE_PI:
            records.append(
                StepRecord(
                    kind="sym",
                    rule=rule,
                    status="rule-pi-excluded",
                    note="commutation past an application is not simulated",
                )
            )
            continue
        try:
            variant_image = to_alg(variant)
        except TranslationError as exc:
            records.append(
                StepRecord(
                    kind="sym",
                    rule=rule,
                    status="failed",
                    note=f"variant has no image: {exc}",
                )
            )
            continue
        if ac_equal(image, variant_image):
            records.append(StepRecord(kind="sym", rule=rule, status="equal"))
        elif any(
            ac_equal(s, variant_image) for s in _sym_images_once(image)
        ):
            records.append(StepRecord(kind="sym", rule=rule, status="one-step"))
        else:
            records.append(
                StepRecord(
                    kind="sym",
                    rule=rule,
                    status="failed",
                    note="no single symmetric step matches",
                )
            )

    for path, kind in redexes(t):
        redex = _subterm_at(t, path)
        if kind in ("beta", "type-beta"):
            reduct = _plug_at(t, path, _contract(redex, kind))
            try:
                reduct_image = to_alg(reduct)
            except TranslationError as exc:
                records.append(
                    StepRecord(
                        kind=kind,
                        rule=kind,
                        status="failed",
                        note=f"reduct has no image: {exc}",
                    )
                )
                continue
            if any(
                ac_equal(s, reduct_image)
                for s in _oriented_images_once(image)
            ):
                records.append(
                    StepRecord(kind=kind, rule=kind, status="one-step")
                )
            elif ac_equal(image, reduct_image):
                records.append(
                    StepRecord(
                        kind=kind,
                        rule=kind,
                        status="absorbed",
                        note="step inside a projector body; image unchanged",
                    )
                )
            else:
                records.append(
                    StepRecord(
                        kind=kind,
                        rule=kind,
                        status="failed",
                        note="no single oriented step matches",
                    )
                )
        else:
            assert isinstance(redex, Proj)
            local = projector_distribution(redex)
            expected = sum_of(
                [Scale(p, to_alg(s)) for s, p in local.entries]
            )
            local_image = to_alg(redex)
            status = "by-definition" if not path else "embedded"
            if ac_equal(local_image, expected):
                records.append(
                    StepRecord(kind="proj", rule="proj", status=status)
                )
            else:
                records.append(
                    StepRecord(
                        kind="proj",
                        rule="proj",
                        status="failed",
                        note="projector image differs from its mixture",
                    )
                )
    return BackwardReport(source=t, records=tuple(records))


# ------------------------------------------------------ substitution lemmas --


@dataclass(frozen=True)
class LemmaFailure:
    direction: str  # "forward" | "backward"
    kind: str  # "type" | "term"
    detail: str


@dataclass(frozen=True)
class LemmaReport:
    checked: int
    failures: tuple[LemmaFailure, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def forward_type_case(r: Term, var: str, ty: Type) -> bool:
    """Image of r, then substitute the type == substitute, then image."""
    left = type_subst_term(to_lambda(r), {var: ty})
    right = to_lambda(type_subst_term(r, {var: ty}))
    return term_key(left) == term_key(right)


def forward_term_case(r: Term, var: str, s: Term) -> bool:
    left = subst_term(to_lambda(r), var, to_lambda(s))
    right = to_lambda(subst_term(r, var, s))
    return term_key(left) == term_key(right)


def backward_type_case(t: Term, var: str, ty: Type) -> bool:
    left = type_subst_term(to_alg(t), {var: ty})
    right = to_alg(type_subst_term(t, {var: ty}))
    return term_key(left) == term_key(right)


def backward_term_case(t: Term, var: str, s: Term) -> bool:
    left = subst_term(to_alg(t), var, to_alg(s))
    right = to_alg(subst_term(t, var, s))
    return term_key(left) == term_key(right)


def check_substitution_lemmas(
    forward_type: Iterable[tuple[Term, str, Type]] = (),
    forward_term: Iterable[tuple[Term, str, Term]] = (),
    backward_type: Iterable[tuple[Term, str, Type]] = (),
    backward_term: Iterable[tuple[Term, str, Term]] = (),
) -> LemmaReport:
    """Run every provided substitution-commutation case; collect failures."""
    checked = 0
    failures: list[LemmaFailure] = []

    def run(direction: str, kind: str, case_fn, args) -> None:
        nonlocal checked
        checked += 1
        try:
            passed = case_fn(*args)
        except Exception as exc:  # report, never mask
            failures.append(
                LemmaFailure(direction, kind, f"raised {type(exc).__name__}: {exc}")
            )
            return
        if not passed:
            failures.append(
                LemmaFailure(direction, kind, f"mismatch on {args[0]!r}")
            )

    for case in forward_type:
        run("forward", "type", forward_type_case, case)
    for case in forward_term:
        run("forward", "term", forward_term_case, case)
    for case in backward_type:
        run("backward", "type", backward_type_case, case)
    for case in backward_term:
        run("backward", "term", backward_term_case, case)
    return LemmaReport(checked=checked, failures=tuple(failures))
