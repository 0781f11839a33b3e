"""Evidence for probabilistic evaluation: traces, merges, distributions.

A trace lists the terms of one reduction path; a merge bundles several
paths from one source to one target and sums their probabilities.  This
module rechecks such evidence step by step against the reduction rules,
derives the judgment a piece of evidence supports, enumerates the exact
output distribution of a term, and reads off an oracle's frequency over
a width-n simultaneous call.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .checker import Environment, infer_type
from .errors import TraceError
from .oracles import OracleRegistry
from .printer import term_key
from .reducer import StepOutcome, deterministic_strategy, find_redexes, step
from .syntax import (
    DEFAULT_FUEL,
    Force,
    Fuel,
    MergeTerm,
    OracleCall,
    OracleRef,
    Rational,
    Term,
    TraceTerm,
    alpha_eq,
    decompose_oracle_context,
    make_tuple,
    oracle_names,
    pair_spine,
    subnode_at,
    tuple_components,
)

__all__ = [
    "TraceQuadruple",
    "MapstoJudgment",
    "Distribution",
    "produced_sequence",
    "forced_oracle_form",
    "not_equiv_nd",
    "check_trace",
    "derive_judgment",
    "enumerate_paths",
    "enumerate_distribution",
    "oracle_frequency",
]


@dataclass(frozen=True, slots=True)
class TraceQuadruple:
    """One rechecked reduction step: terms, probability, and rule label."""

    before: Term
    after: Term
    prob: Rational
    label: str


@dataclass(frozen=True, slots=True)
class MapstoJudgment:
    """source evaluates to target with this probability, per the witness."""

    source: Term
    target: Term
    prob: Rational
    witness: Term


class Distribution:
    """Exact outcome probabilities, keyed by canonical printed form.

    Only positive masses are stored; items come back sorted by key so
    output is reproducible.
    """

    def __init__(self) -> None:
        self._entries: dict[str, tuple[Term, Fraction]] = {}

    def add(self, term: Term, prob: Rational) -> None:
        if prob == 0:
            return
        key = term_key(term)
        entry = self._entries.get(key)
        if entry is None:
            self._entries[key] = (term, Fraction(prob))
        else:
            self._entries[key] = (entry[0], entry[1] + prob)

    def prob_of(self, term: Term) -> Fraction:
        entry = self._entries.get(term_key(term))
        return entry[1] if entry is not None else Fraction(0)

    def items(self) -> list[tuple[Term, Fraction]]:
        return [self._entries[key] for key in sorted(self._entries)]

    def support(self) -> list[Term]:
        return [rep for rep, _ in self.items()]

    def total(self) -> Fraction:
        return sum((p for _, p in self.items()), Fraction(0))

    def as_key_map(self) -> dict[str, Fraction]:
        return {key: prob for key, (_, prob) in self._entries.items()}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, term: Term) -> bool:
        return term_key(term) in self._entries

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.as_key_map() == other.as_key_map()

    def __repr__(self) -> str:
        inside = ", ".join(f"{rep} -> {p}" for rep, p in self.items())
        return f"Distribution({inside})"


def produced_sequence(
    steps: Sequence[StepOutcome], initial: Term
) -> tuple[Term, ...]:
    """Term sequence of a run: the start term, then each step's result."""
    return (initial,) + tuple(outcome.term for outcome in steps)


def not_equiv_nd(
    path1: Sequence[TraceQuadruple], path2: Sequence[TraceQuadruple]
) -> bool:
    """Whether two step sequences resolve the same first divergence point
    to opposite branches.

    Requires oracle-free paths with the same start; the first differing
    steps must share a before-term and take the two sides of one choice,
    with complementary probabilities.
    """
    if any(q.label == "oracle" for q in (*path1, *path2)):
        return False
    if not path1 or not path2:
        return False
    if not alpha_eq(path1[0].before, path2[0].before):
        return False
    for q1, q2 in zip(path1, path2):
        if (
            alpha_eq(q1.before, q2.before)
            and alpha_eq(q1.after, q2.after)
            and q1.prob == q2.prob
            and q1.label == q2.label
        ):
            continue
        return (
            alpha_eq(q1.before, q2.before)
            and {q1.label, q2.label} == {"left", "right"}
            and q1.prob + q2.prob == 1
        )
    return False


# ------------------------------------------------------- step candidates


def _step_candidates(
    u: Term, v: Term, registry: OracleRegistry | None
) -> list[tuple[Fraction, str]]:
    """All (probability, label) readings of u stepping to v in one move."""
    found: list[tuple[Fraction, str]] = []
    for redex in find_redexes(u):
        if redex.kind == "oracle" and registry is None:
            continue
        for outcome in step(u, redex, registry):
            if outcome.prob == 0:
                continue
            entry = (Fraction(outcome.prob), outcome.label)
            if entry not in found and alpha_eq(outcome.term, v):
                found.append(entry)
    if found:
        return found
    _diagnose_failed_step(u, v, registry)
    raise TraceError(
        "RuleMismatch", f"no rule steps {u} to {v}"
    )


def _diagnose_failed_step(
    u: Term, v: Term, registry: OracleRegistry | None
) -> None:
    """Tell apart a wrong oracle answer from a step that fits no rule: if
    v has the shape of an oracle rewrite of u, the replay must have
    disagreed on the filled values."""
    for name in sorted(oracle_names(u)):
        context, occurrences = decompose_oracle_context(u, name)
        if not occurrences:
            continue
        try:
            guess = {
                occ.index: subnode_at(v, occ.path) for occ in occurrences
            }
        except (IndexError, TypeError):
            continue
        if not alpha_eq(context.fill(guess), v):
            continue
        if registry is None:
            raise TraceError(
                "MissingRegistry",
                f"cannot replay oracle {name} without a registry",
            )
        raise TraceError(
            "OracleReplayMismatch",
            f"oracle {name} does not produce {v} from {u}",
        )


def _chain_probs(
    seq: Sequence[Term], registry: OracleRegistry | None
) -> set[Fraction]:
    """Achievable probabilities of the step chain through seq."""
    probs = {Fraction(1)}
    for u, v in zip(seq, seq[1:]):
        step_probs = {p for p, _ in _step_candidates(u, v, registry)}
        probs = {acc * p for acc in probs for p in step_probs}
    return probs


def _merge_sums(
    sequences: list[tuple[Term, ...]], registry: OracleRegistry | None
) -> set[Fraction]:
    """Achievable total probabilities of a merge: over every assignment of
    labeled readings to branches under which all branch pairs resolve a
    common divergence point oppositely.

    Readings that satisfy the pairwise condition necessarily organize
    into a binary tree: at each step the live branches either all carry
    the same labeled step, or partition into a left group and a right
    group with complementary probabilities, and every leaf holds exactly
    one branch.  The search walks that tree directly instead of crossing
    whole readings, so shared prefixes are never re-labeled per branch.
    """
    n = len(sequences)
    allow_oracle = n == 1
    cands: list[list[list[tuple[Fraction, str]]]] = []
    for seq in sequences:
        per_step = []
        for u, v in zip(seq, seq[1:]):
            found = _step_candidates(u, v, registry)
            if not allow_oracle:
                found = [c for c in found if c[1] != "oracle"]
            per_step.append(found)
        cands.append(per_step)

    memo: dict[tuple[frozenset, int], frozenset] = {}

    def splits(members: tuple[int, ...]):
        for bits in range(1, 1 << len(members)):
            if bits == (1 << len(members)) - 1:
                continue
            left = tuple(m for k, m in enumerate(members) if bits >> k & 1)
            right = tuple(m for k, m in enumerate(members) if not bits >> k & 1)
            yield left, right

    def solve(group: frozenset, depth: int) -> frozenset:
        """Sums of per-branch products over steps from depth on, over
        every completion in which the group's members pairwise diverge."""
        key = (group, depth)
        cached = memo.get(key)
        if cached is not None:
            return cached
        if len(group) == 1:
            (i,) = group
            acc = {Fraction(1)}
            for step_cands in cands[i][depth:]:
                probs = {p for p, _ in step_cands}
                acc = {a * p for a in acc for p in probs}
            out = frozenset(acc)
            memo[key] = out
            return out
        # two branches whose readings never diverge are indistinguishable,
        # so a live group must still have steps ahead
        if any(depth >= len(cands[i]) for i in group):
            memo[key] = frozenset()
            return frozenset()
        by_class: dict[str, list[int]] = {}
        for i in sorted(group):
            key_i = term_key(sequences[i][depth + 1])
            by_class.setdefault(key_i, []).append(i)
        out_set: set[Fraction] = set()
        if len(by_class) == 1:
            members = tuple(sorted(group))
            shared = set(cands[members[0]][depth])
            for i in members[1:]:
                shared &= set(cands[i][depth])
            for p in {p for p, _ in shared}:
                for s in solve(group, depth + 1):
                    out_set.add(p * s)
            left_probs = {p for p, lab in shared if lab == "left"}
            for p in left_probs:
                if (1 - p, "right") not in shared:
                    continue
                for left, right in splits(members):
                    for a in solve(frozenset(left), depth + 1):
                        for b in solve(frozenset(right), depth + 1):
                            out_set.add(p * a + (1 - p) * b)
        elif len(by_class) == 2:
            first, second = by_class.values()
            shared1 = set.intersection(*(set(cands[i][depth]) for i in first))
            shared2 = set.intersection(*(set(cands[i][depth]) for i in second))
            for p, lab in shared1:
                if lab == "left" and (1 - p, "right") in shared2:
                    for a in solve(frozenset(first), depth + 1):
                        for b in solve(frozenset(second), depth + 1):
                            out_set.add(p * a + (1 - p) * b)
                if lab == "right" and (1 - p, "left") in shared2:
                    for a in solve(frozenset(first), depth + 1):
                        for b in solve(frozenset(second), depth + 1):
                            out_set.add(p * a + (1 - p) * b)
        out = frozenset(out_set)
        memo[key] = out
        return out

    sums = set(solve(frozenset(range(n)), 0))
    if not sums:
        raise TraceError(
            "NDConditionViolated",
            "no labeling makes the merged paths pairwise distinguishable",
        )
    return sums


# ------------------------------------------------------ judgment checking


def forced_oracle_form(t: Term) -> tuple[str, Term | None] | None:
    """Oracle name and argument when t is a forced oracle, else None."""
    match t:
        case Force(OracleRef(o)):
            return o, None
        case Force(OracleCall(o, arg)):
            return o, arg
    return None


def _frequency_shape(witness: Term, source: Term) -> int | None:
    """Width n when the witness reads as a frequency table for source."""
    if forced_oracle_form(source) is None:
        return None
    if not isinstance(witness, TraceTerm) or len(witness.steps) != 2:
        return None
    spine = pair_spine(witness.steps[0])
    if all(alpha_eq(part, source) for part in spine):
        return len(spine)
    return None


def _check_frequency(
    witness: TraceTerm,
    claim: MapstoJudgment,
    width: int,
    registry: OracleRegistry | None,
) -> None:
    if registry is None:
        raise TraceError(
            "MissingRegistry", "cannot replay an oracle without a registry"
        )
    if witness.prob is not None and witness.prob != 1:
        raise TraceError(
            "ProbabilityMismatch",
            f"frequency evidence carries probability {witness.prob}, not 1",
        )
    forced = forced_oracle_form(claim.source)
    assert forced is not None
    name, _ = forced
    tup = witness.steps[0]
    context, occurrences = decompose_oracle_context(tup, name)
    contents = {
        occ.index: registry.eval(name, context, occ.index, occ.arg)
        for occ in occurrences
    }
    result = context.fill(contents)
    if not alpha_eq(result, witness.steps[1]):
        raise TraceError(
            "OracleReplayMismatch",
            f"oracle {name} does not produce {witness.steps[1]}",
        )
    hits = sum(
        1
        for part in tuple_components(result, width)
        if alpha_eq(part, claim.target)
    )
    if claim.prob != Fraction(hits, width):
        raise TraceError(
            "ProbabilityMismatch",
            f"target occurs {hits} of {width} times, "
            f"not with probability {claim.prob}",
        )


def check_trace(
    env: Environment,
    witness: Term,
    claim: MapstoJudgment,
    registry: OracleRegistry | None = None,
) -> bool:
    """Recheck a claimed judgment against its evidence.

    Every consecutive pair of a trace must be one reduction step; a merge
    additionally needs a labeling of its branches under which every pair
    resolves its first divergence point to opposite sides of one choice.
    The claimed probability must be achievable, and for a frequency table
    it must equal the target's share of the rewritten tuple.
    """
    source_type = infer_type(env, claim.source, registry)
    target_type = infer_type(env, claim.target, registry)
    if not alpha_eq(source_type, target_type):
        raise TraceError(
            "ClaimTypeMismatch",
            f"source has type {source_type} but target has {target_type}",
        )
    if not 0 <= claim.prob <= 1:
        raise TraceError(
            "ProbabilityMismatch", f"probability {claim.prob} outside [0, 1]"
        )
    width = _frequency_shape(witness, claim.source)
    if width is not None:
        assert isinstance(witness, TraceTerm)
        _check_frequency(witness, claim, width, registry)
        return True
    match witness:
        case TraceTerm(steps, annotated):
            if not steps:
                raise TraceError("BrokenChain", "empty trace")
            if annotated is not None and annotated != claim.prob:
                raise TraceError(
                    "ProbabilityMismatch",
                    f"trace annotated {annotated}, claim says {claim.prob}",
                )
            if not alpha_eq(steps[0], claim.source):
                raise TraceError(
                    "BrokenChain", "trace does not start at the source"
                )
            if not alpha_eq(steps[-1], claim.target):
                raise TraceError(
                    "BrokenChain", "trace does not end at the target"
                )
            if claim.prob not in _chain_probs(steps, registry):
                raise TraceError(
                    "ProbabilityMismatch",
                    f"no labeling of the trace has probability {claim.prob}",
                )
        case MergeTerm(source, branches, target, annotated):
            if annotated is not None and annotated != claim.prob:
                raise TraceError(
                    "ProbabilityMismatch",
                    f"merge annotated {annotated}, claim says {claim.prob}",
                )
            if not alpha_eq(source, claim.source):
                raise TraceError(
                    "BrokenChain", "merge does not start at the source"
                )
            if not alpha_eq(target, claim.target):
                raise TraceError(
                    "BrokenChain", "merge does not end at the target"
                )
            if not branches:
                raise TraceError(
                    "IncompleteWitnesses", "merge carries no paths"
                )
            sequences = [(source, *branch, target) for branch in branches]
            if claim.prob not in _merge_sums(sequences, registry):
                raise TraceError(
                    "ProbabilityMismatch",
                    f"no valid labeling sums to probability {claim.prob}",
                )
        case _:
            raise TraceError(
                "NotEvidence", f"{type(witness).__name__} is not evidence"
            )
    return True


def derive_judgment(
    env: Environment,
    term: Term,
    registry: OracleRegistry | None = None,
) -> MapstoJudgment:
    """The judgment a free-standing piece of evidence supports.

    An unannotated witness must determine its probability uniquely.
    """
    match term:
        case TraceTerm(steps, annotated):
            if not steps:
                raise TraceError("BrokenChain", "empty trace")
            source, target = steps[0], steps[-1]
        case MergeTerm(source, _, target, annotated):
            pass
        case _:
            raise TraceError(
                "NotEvidence", f"{type(term).__name__} is not evidence"
            )
    if annotated is not None:
        prob = annotated
    else:
        if isinstance(term, TraceTerm):
            achievable = _chain_probs(term.steps, registry)
        else:
            sequences = [
                (term.source, *branch, term.target) for branch in term.branches
            ]
            if not sequences:
                raise TraceError(
                    "IncompleteWitnesses", "merge carries no paths"
                )
            achievable = _merge_sums(sequences, registry)
        if len(achievable) != 1:
            raise TraceError(
                "ProbabilityMismatch",
                "unannotated evidence with ambiguous probability; "
                f"candidates {sorted(achievable)}",
            )
        (prob,) = achievable
    claim = MapstoJudgment(source, target, prob, term)
    check_trace(env, term, claim, registry)
    return claim


# ----------------------------------------------------- exact enumeration


def enumerate_paths(
    env: Environment,
    t: Term,
    registry: OracleRegistry | None = None,
    fuel: Fuel | int = DEFAULT_FUEL,
) -> list[tuple[Fraction, tuple[TraceQuadruple, ...]]]:
    """Every reduction path of t under the deterministic strategy.

    Branches at each choice, drops zero-probability sides, and spends
    fuel per explored edge.  Paths come back in left-first order, each
    with its probability and its fully labeled steps.
    """
    infer_type(env, t, registry)
    budget = fuel if isinstance(fuel, Fuel) else Fuel(fuel)
    finished: list[tuple[Fraction, tuple[TraceQuadruple, ...]]] = []
    stack: list[tuple[Term, Fraction, tuple[TraceQuadruple, ...]]] = [
        (t, Fraction(1), ())
    ]
    while stack:
        current, prob, quads = stack.pop()
        redex = deterministic_strategy(current)
        if redex is None:
            finished.append((prob, quads))
            continue
        outcomes = step(current, redex, registry)
        live = [o for o in outcomes if o.prob > 0]
        for outcome in reversed(live):
            budget.spend()
            stack.append(
                (
                    outcome.term,
                    prob * outcome.prob,
                    quads
                    + (
                        TraceQuadruple(
                            current, outcome.term, outcome.prob, outcome.label
                        ),
                    ),
                )
            )
    return finished


def enumerate_distribution(
    env: Environment,
    t: Term,
    registry: OracleRegistry | None = None,
    fuel: Fuel | int = DEFAULT_FUEL,
) -> tuple[Distribution, list[MapstoJudgment]]:
    """Exact output distribution of t with evidence for every outcome.

    Paths free of oracle steps that share an outcome are merged into one
    judgment; each path through an oracle step keeps its own trace.
    """
    dist = Distribution()
    groups: dict[str, list[tuple[Fraction, tuple[Term, ...], bool]]] = {}
    for prob, quads in enumerate_paths(env, t, registry, fuel):
        seq = (t,) + tuple(q.after for q in quads)
        saw_oracle = any(q.label == "oracle" for q in quads)
        dist.add(seq[-1], prob)
        groups.setdefault(term_key(seq[-1]), []).append(
            (prob, seq, saw_oracle)
        )

    judgments: list[MapstoJudgment] = []
    for key in sorted(groups):
        paths = groups[key]
        plain = [(p, s) for p, s, saw in paths if not saw]
        through_oracle = [(p, s) for p, s, saw in paths if saw]
        if len(plain) == 1:
            prob, seq = plain[0]
            judgments.append(
                MapstoJudgment(t, seq[-1], prob, TraceTerm(seq, prob))
            )
        elif plain:
            total = sum((p for p, _ in plain), Fraction(0))
            target = plain[0][1][-1]
            branch_middles = tuple(tuple(s[1:-1]) for _, s in plain)
            judgments.append(
                MapstoJudgment(
                    t,
                    target,
                    total,
                    MergeTerm(t, branch_middles, target, total),
                )
            )
        for prob, seq in through_oracle:
            judgments.append(
                MapstoJudgment(t, seq[-1], prob, TraceTerm(seq, prob))
            )
    return dist, judgments


def oracle_frequency(
    env: Environment,
    oracle: str,
    arg: Term | None,
    width: int,
    registry: OracleRegistry,
) -> tuple[Distribution, list[MapstoJudgment]]:
    """Observed distribution of one oracle over a width-n batched call.

    Builds the n-tuple of the forced call, fires the single simultaneous
    rewrite, and reads each outcome's share of the components.  Every
    judgment reuses the two-line tuple trace as its evidence.
    """
    if width < 1:
        raise TraceError("FrequencyWidth", f"width {width} must be positive")
    if arg is None:
        subject: Term = Force(OracleRef(oracle))
    else:
        subject = Force(OracleCall(oracle, arg))
    infer_type(env, subject, registry)
    tup = make_tuple([subject] * width)
    context, occurrences = decompose_oracle_context(tup, oracle)
    contents = {
        occ.index: registry.eval(oracle, context, occ.index, occ.arg)
        for occ in occurrences
    }
    result = context.fill(contents)
    dist = Distribution()
    for part in tuple_components(result, width):
        dist.add(part, Fraction(1, width))
    witness = TraceTerm((tup, result), Fraction(1))
    judgments = [
        MapstoJudgment(subject, rep, prob, witness)
        for rep, prob in dist.items()
    ]
    return dist, judgments
