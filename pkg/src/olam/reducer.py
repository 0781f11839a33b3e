"""Single-step probabilistic reduction and seeded sampling runs.

A step fires one redex.  Applications and projections contract with
probability 1.  A forced choice splits into its two branches with the
annotated probability and its complement.  A forced oracle call steps by
rewriting every outermost forced occurrence of that oracle at once, each
hole filled from the oracle's rule table against the shared context.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import ReductionError
from .oracles import OracleRegistry
from .syntax import (
    DEFAULT_FUEL,
    App,
    Choice,
    Efq,
    Force,
    Fuel,
    HoleContext,
    Lam,
    MergeTerm,
    OracleOccurrence,
    Pair,
    Proj,
    Rational,
    Term,
    TraceTerm,
    children,
    decompose_oracle_context,
    oracle_names,
    replace_at,
    subnode_at,
    substitute,
)

__all__ = [
    "TermRedex",
    "StepOutcome",
    "SampleResult",
    "find_redexes",
    "step",
    "deterministic_strategy",
    "run_sample",
    "sample_seed",
]


@dataclass(frozen=True, slots=True)
class TermRedex:
    """A fireable position.  kind is one of beta, proj, choice, oracle.

    An oracle redex stands for the simultaneous rewrite of all outermost
    forced occurrences of one oracle; its path is the first occurrence.
    """

    path: tuple[int, ...]
    kind: str
    oracle: str | None = None
    context: HoleContext | None = None
    occurrences: tuple[OracleOccurrence, ...] | None = None


@dataclass(frozen=True, slots=True)
class StepOutcome:
    """One result of firing a redex, with its probability and rule label."""

    term: Term
    prob: Rational
    label: str


@dataclass(frozen=True, slots=True)
class SampleResult:
    """Final term of one sampled run, its path probability, and the steps."""

    term: Term
    prob: Rational
    trace: tuple[StepOutcome, ...]


def _is_plain_redex(node: Term) -> str | None:
    match node:
        case App(Lam(), _):
            return "beta"
        case Proj(Pair(), _):
            return "proj"
        case Force(Choice()):
            return "choice"
    return None


def find_redexes(t: Term) -> list[TermRedex]:
    """Every fireable position, in leftmost-outermost (preorder) order.

    Only term positions count: type annotations and the interiors of
    evidence terms are never searched.  All outermost forced occurrences
    of one oracle form a single redex.
    """
    redexes: list[TermRedex] = []

    def walk(node, path: tuple[int, ...]) -> None:
        if isinstance(node, (TraceTerm, MergeTerm)):
            return
        if isinstance(node, Term):
            kind = _is_plain_redex(node)
            if kind is not None:
                redexes.append(TermRedex(path, kind))
        if isinstance(node, Lam):
            walk(node.body, path + (1,))
            return
        if isinstance(node, Efq):
            walk(node.body, path + (0,))
            return
        for i, child in enumerate(children(node)):
            if isinstance(child, Term):
                walk(child, path + (i,))

    walk(t, ())
    for name in sorted(oracle_names(t)):
        context, occurrences = decompose_oracle_context(t, name)
        if occurrences:
            redexes.append(
                TermRedex(
                    occurrences[0].path,
                    "oracle",
                    oracle=name,
                    context=context,
                    occurrences=occurrences,
                )
            )
    redexes.sort(key=lambda r: r.path)
    return redexes


def step(
    t: Term, redex: TermRedex, registry: OracleRegistry | None = None
) -> list[StepOutcome]:
    """All outcomes of firing the redex.  Deterministic rules give one
    outcome with probability 1; a choice gives exactly two."""
    if redex.kind == "oracle":
        return [_oracle_step(t, redex, registry)]
    node = subnode_at(t, redex.path)
    match node:
        case App(Lam(x, _, body), arg) if redex.kind == "beta":
            new = substitute(body, x, arg)
            return [StepOutcome(replace_at(t, redex.path, new), Fraction(1), "beta")]
        case Proj(Pair(left, right), index) if redex.kind == "proj":
            new = left if index == 0 else right
            return [StepOutcome(replace_at(t, redex.path, new), Fraction(1), "proj")]
        case Force(Choice(left, prob, right)) if redex.kind == "choice":
            return [
                StepOutcome(replace_at(t, redex.path, left), prob, "left"),
                StepOutcome(replace_at(t, redex.path, right), 1 - prob, "right"),
            ]
    raise ReductionError(
        "InvalidRedexPath",
        f"no {redex.kind} redex at position {list(redex.path)}",
    )


def _oracle_step(
    t: Term, redex: TermRedex, registry: OracleRegistry | None
) -> StepOutcome:
    if registry is None:
        raise ReductionError(
            "MissingRegistry",
            f"cannot step oracle {redex.oracle} without a registry",
        )
    assert redex.oracle is not None
    context, occurrences = decompose_oracle_context(t, redex.oracle)
    if not occurrences or occurrences[0].path != redex.path:
        raise ReductionError(
            "InvalidRedexPath",
            f"no redex of oracle {redex.oracle} at position {list(redex.path)}",
        )
    contents = {
        occ.index: registry.eval(redex.oracle, context, occ.index, occ.arg)
        for occ in occurrences
    }
    return StepOutcome(context.fill(contents), Fraction(1), "oracle")


def deterministic_strategy(t: Term) -> TermRedex | None:
    """The unique redex fired by runs: first in preorder, or None at a
    normal form."""
    redexes = find_redexes(t)
    return redexes[0] if redexes else None


def run_sample(
    t: Term,
    seed: int,
    fuel: Fuel | int = DEFAULT_FUEL,
    registry: OracleRegistry | None = None,
) -> SampleResult:
    """One seeded run to normal form under the deterministic strategy.

    Choices draw a 64-bit uniform and take the left branch when it falls
    below the annotated probability, so a given seed fixes the whole run.
    """
    budget = fuel if isinstance(fuel, Fuel) else Fuel(fuel)
    rng = random.Random(seed)
    prob = Fraction(1)
    steps: list[StepOutcome] = []
    current = t
    while True:
        redex = deterministic_strategy(current)
        if redex is None:
            break
        budget.spend()
        outcomes = step(current, redex, registry)
        if redex.kind == "choice":
            draw = Fraction(rng.getrandbits(64), 2**64)
            chosen = outcomes[0] if draw < outcomes[0].prob else outcomes[1]
        else:
            chosen = outcomes[0]
        prob *= chosen.prob
        steps.append(chosen)
        current = chosen.term
    return SampleResult(current, prob, tuple(steps))


_MASK = (1 << 64) - 1


def sample_seed(seed: int, index: int) -> int:
    """Stable per-sample seed: one splitmix64 round on seed + index."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)
