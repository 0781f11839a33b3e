"""Abstract syntax for the calculus: terms, type constructors, kinds.

Three levels share one node protocol (children/rebuild) so that paths,
substitution and alpha-equality are generic.  All nodes are immutable and
hashable; probabilities are exact Fractions.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ReductionError

Rational = Fraction

DEFAULT_FUEL = 100_000


class Fuel:
    """Shared step budget for one normalization or enumeration session."""

    def __init__(self, steps: int = DEFAULT_FUEL):
        self.left = steps

    def spend(self) -> None:
        if self.left <= 0:
            raise ReductionError("FuelExhausted", "step budget exhausted")
        self.left -= 1


class Node:
    __slots__ = ()

    def __str__(self) -> str:
        from . import printer

        return printer.show(self)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self})"


class Term(Node):
    __slots__ = ()


class TypeCon(Node):
    __slots__ = ()


class Kind(Node):
    __slots__ = ()


# ---------------------------------------------------------------- terms


@dataclass(frozen=True, slots=True)
class Var(Term):
    """Term variable (also signature constants declared with `atom n : T`)."""

    name: str


@dataclass(frozen=True, slots=True)
class OracleRef(Term):
    """Nullary oracle constant `#name`."""

    oracle: str


@dataclass(frozen=True, slots=True)
class OracleCall(Term):
    """Unary oracle applied to an argument, `#name t`."""

    oracle: str
    arg: Term


@dataclass(frozen=True, slots=True)
class Lam(Term):
    """Abstraction `\\x:T. t`; the annotation is outside the binder scope."""

    var: str
    var_type: TypeCon
    body: Term


@dataclass(frozen=True, slots=True)
class App(Term):
    fun: Term
    arg: Term


@dataclass(frozen=True, slots=True)
class Choice(Term):
    """Transparent probabilistic choice: left with probability p, right with 1-p."""

    left: Term
    prob: Rational
    right: Term


@dataclass(frozen=True, slots=True)
class Force(Term):
    """Postfix `!`: forces a choice or an oracle computation to yield a value."""

    body: Term


@dataclass(frozen=True, slots=True)
class Pair(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Proj(Term):
    pair: Term
    index: int  # 0 or 1


@dataclass(frozen=True, slots=True)
class Efq(Term):
    """`efq(t : T)`: from absurdity t, any quantifier-free type T."""

    body: Term
    target: TypeCon


@dataclass(frozen=True, slots=True)
class TraceTerm(Term):
    """Recorded computation [t1, ..., tn]: the produced term sequence of one
    reduction path.  prob None means the probability is not yet derived."""

    steps: tuple[Term, ...]
    prob: Rational | None = None


@dataclass(frozen=True, slots=True)
class MergeTerm(Term):
    """Recorded merge [t, [k1 / ... / kn], s]: several reduction paths from t
    to s; each branch holds the intermediate terms only."""

    source: Term
    branches: tuple[tuple[Term, ...], ...]
    target: Term
    prob: Rational | None = None


@dataclass(frozen=True, slots=True)
class Hole(Term):
    """Internal marker for context holes; never appears in user programs."""

    index: int


# ------------------------------------------------------- type constructors


@dataclass(frozen=True, slots=True)
class TypeName(TypeCon):
    """Atomic constructor declared in the signature."""

    name: str


@dataclass(frozen=True, slots=True)
class TypeAbs(TypeCon):
    """Constructor-level abstraction `\\\\x:T. phi` over a term variable."""

    var: str
    var_type: TypeCon
    body: TypeCon


@dataclass(frozen=True, slots=True)
class TypeApp(TypeCon):
    """Constructor applied to a term argument."""

    con: TypeCon
    arg: Term


@dataclass(frozen=True, slots=True)
class Forall(TypeCon):
    var: str
    var_type: TypeCon
    body: TypeCon


@dataclass(frozen=True, slots=True)
class ChoiceType(TypeCon):
    """Type of transparent probabilistic choices over the body type."""

    body: TypeCon


@dataclass(frozen=True, slots=True)
class OpaqueType(TypeCon):
    """Type of opaque oracle computations yielding the body type."""

    body: TypeCon


@dataclass(frozen=True, slots=True)
class Conj(TypeCon):
    left: TypeCon
    right: TypeCon


@dataclass(frozen=True, slots=True)
class Bottom(TypeCon):
    pass


# ---------------------------------------------------------------- kinds


@dataclass(frozen=True, slots=True)
class Star(Kind):
    pass


@dataclass(frozen=True, slots=True)
class KindPi(Kind):
    """Kind of constructors abstracting over a term of the annotated type."""

    var: str
    var_type: TypeCon
    body: Kind


# A binder node owns exactly one bound name; the annotation sits outside it.
BINDERS = (Lam, TypeAbs, Forall, KindPi)


def children(node: Node) -> tuple[Node, ...]:
    """Child nodes in printed order; the basis for paths and traversal."""
    match node:
        case Var() | OracleRef() | Hole() | TypeName() | Bottom() | Star():
            return ()
        case OracleCall(_, arg):
            return (arg,)
        case Lam(_, a, b) | TypeAbs(_, a, b) | Forall(_, a, b) | KindPi(_, a, b):
            return (a, b)
        case App(f, a):
            return (f, a)
        case Choice(l, _, r):
            return (l, r)
        case Force(b) | Proj(b, _) | ChoiceType(b) | OpaqueType(b):
            return (b,)
        case Pair(l, r) | Conj(l, r):
            return (l, r)
        case Efq(b, t):
            return (b, t)
        case TypeApp(c, a):
            return (c, a)
        case TraceTerm(steps, _):
            return steps
        case MergeTerm(src, branches, tgt, _):
            flat: list[Node] = [src]
            for br in branches:
                flat.extend(br)
            flat.append(tgt)
            return tuple(flat)
    raise TypeError(f"unknown node {type(node).__name__}")


def rebuild(node: Node, kids: tuple[Node, ...]) -> Node:
    match node:
        case Var() | OracleRef() | Hole() | TypeName() | Bottom() | Star():
            return node
        case OracleCall(o, _):
            return OracleCall(o, kids[0])
        case Lam(x, _, _):
            return Lam(x, kids[0], kids[1])
        case TypeAbs(x, _, _):
            return TypeAbs(x, kids[0], kids[1])
        case Forall(x, _, _):
            return Forall(x, kids[0], kids[1])
        case KindPi(x, _, _):
            return KindPi(x, kids[0], kids[1])
        case App(_, _):
            return App(kids[0], kids[1])
        case Choice(_, p, _):
            return Choice(kids[0], p, kids[1])
        case Force(_):
            return Force(kids[0])
        case Proj(_, i):
            return Proj(kids[0], i)
        case ChoiceType(_):
            return ChoiceType(kids[0])
        case OpaqueType(_):
            return OpaqueType(kids[0])
        case Pair(_, _):
            return Pair(kids[0], kids[1])
        case Conj(_, _):
            return Conj(kids[0], kids[1])
        case Efq(_, _):
            return Efq(kids[0], kids[1])
        case TypeApp(_, _):
            return TypeApp(kids[0], kids[1])
        case TraceTerm(_, p):
            return TraceTerm(tuple(kids), p)
        case MergeTerm(_, branches, _, p):
            out: list[tuple[Term, ...]] = []
            i = 1
            for br in branches:
                out.append(tuple(kids[i : i + len(br)]))
                i += len(br)
            return MergeTerm(kids[0], tuple(out), kids[i], p)
    raise TypeError(f"unknown node {type(node).__name__}")


def subnode_at(node: Node, path: tuple[int, ...]) -> Node:
    for i in path:
        kids = children(node)
        if i >= len(kids):
            raise IndexError(f"no child {i} at {type(node).__name__}")
        node = kids[i]
    return node


def replace_at(node: Node, path: tuple[int, ...], new: Node) -> Node:
    if not path:
        return new
    kids = list(children(node))
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return rebuild(node, tuple(kids))


# ------------------------------------------------------------ free names


def free_term_vars(node: Node) -> frozenset[str]:
    match node:
        case Var(n):
            return frozenset((n,))
        case Lam(x, a, b) | TypeAbs(x, a, b) | Forall(x, a, b) | KindPi(x, a, b):
            return free_term_vars(a) | (free_term_vars(b) - {x})
        case _:
            out: frozenset[str] = frozenset()
            for c in children(node):
                out |= free_term_vars(c)
            return out


def free_con_names(node: Node) -> frozenset[str]:
    if isinstance(node, TypeName):
        return frozenset((node.name,))
    out: frozenset[str] = frozenset()
    for c in children(node):
        out |= free_con_names(c)
    return out


def oracle_names(node: Node) -> frozenset[str]:
    match node:
        case OracleRef(o):
            return frozenset((o,))
        case OracleCall(o, arg):
            return frozenset((o,)) | oracle_names(arg)
        case _:
            out: frozenset[str] = frozenset()
            for c in children(node):
                out |= oracle_names(c)
            return out


def fresh_name(base: str, avoid: frozenset[str] | set[str]) -> str:
    if base not in avoid:
        return base
    k = 1
    while f"{base}{k}" in avoid:
        k += 1
    return f"{base}{k}"


# ----------------------------------------------------------- substitution


def _with_binder(node: Node, var: str, var_type: TypeCon, body: Node) -> Node:
    match node:
        case Lam(_, _, _):
            return Lam(var, var_type, body)
        case TypeAbs(_, _, _):
            return TypeAbs(var, var_type, body)
        case Forall(_, _, _):
            return Forall(var, var_type, body)
        case _:
            return KindPi(var, var_type, body)


def substitute(node: Node, name: str, replacement: Term) -> Node:
    """Capture-avoiding substitution of a term for a free term variable, at
    any of the three levels."""
    match node:
        case Var(n):
            return replacement if n == name else node
        case Lam(x, a, b) | TypeAbs(x, a, b) | Forall(x, a, b) | KindPi(x, a, b):
            a2 = substitute(a, name, replacement)
            if x == name:
                return _with_binder(node, x, a2, b)
            if x in free_term_vars(replacement) and name in free_term_vars(b):
                x2 = fresh_name(
                    x, free_term_vars(replacement) | free_term_vars(b) | {name}
                )
                b = substitute(b, x, Var(x2))
                x = x2
            return _with_binder(node, x, a2, substitute(b, name, replacement))
        case _:
            kids = children(node)
            if not kids:
                return node
            return rebuild(
                node, tuple(substitute(c, name, replacement) for c in kids)
            )


# --------------------------------------------------------- alpha-equality


def alpha_eq(a: Node, b: Node) -> bool:
    return _alpha(a, b, {}, {}, [0])


def _alpha(a: Node, b: Node, env_a: dict, env_b: dict, counter: list[int]) -> bool:
    if type(a) is not type(b):
        return False
    match a:
        case Var(n):
            m = b.name  # type: ignore[union-attr]
            ia, ib = env_a.get(n), env_b.get(m)
            return (ia is None and ib is None and n == m) or (
                ia is not None and ia == ib
            )
        case OracleRef(o):
            return o == b.oracle
        case OracleCall(o, arg):
            return o == b.oracle and _alpha(arg, b.arg, env_a, env_b, counter)
        case Hole(i):
            return i == b.index
        case TypeName(n):
            return n == b.name
        case Choice(l, p, r):
            return (
                p == b.prob
                and _alpha(l, b.left, env_a, env_b, counter)
                and _alpha(r, b.right, env_a, env_b, counter)
            )
        case Proj(t, i):
            return i == b.index and _alpha(t, b.pair, env_a, env_b, counter)
        case Lam(x, ta, body) | TypeAbs(x, ta, body) | Forall(x, ta, body) | KindPi(
            x, ta, body
        ):
            kb = children(b)
            if not _alpha(ta, kb[0], env_a, env_b, counter):
                return False
            counter[0] += 1
            ea = dict(env_a)
            eb = dict(env_b)
            ea[x] = counter[0]
            eb[b.var] = counter[0]  # type: ignore[union-attr]
            return _alpha(body, kb[1], ea, eb, counter)
        case TraceTerm(steps, p):
            return (
                p == b.prob
                and len(steps) == len(b.steps)
                and all(
                    _alpha(s, t, env_a, env_b, counter)
                    for s, t in zip(steps, b.steps)
                )
            )
        case MergeTerm(_, branches, _, p):
            if p != b.prob or tuple(len(x) for x in branches) != tuple(
                len(x) for x in b.branches
            ):
                return False
            ka, kb = children(a), children(b)
            return all(
                _alpha(x, y, env_a, env_b, counter) for x, y in zip(ka, kb)
            )
        case _:
            ka, kb = children(a), children(b)
            if len(ka) != len(kb):
                return False
            return all(
                _alpha(x, y, env_a, env_b, counter) for x, y in zip(ka, kb)
            )


def canonicalize(node: Node) -> Node:
    """Rename every bound term variable to ?0, ?1, ... in traversal order.

    `?` is not an identifier character, so canonical names cannot collide
    with free names; the printed canonical form is a stable alpha-class key.
    """
    return _canon(node, {}, [0])


def _canon(node: Node, env: dict[str, str], counter: list[int]) -> Node:
    match node:
        case Var(n):
            return Var(env.get(n, n))
        case Lam(x, a, b) | TypeAbs(x, a, b) | Forall(x, a, b) | KindPi(x, a, b):
            a2 = _canon(a, env, counter)
            nm = f"?{counter[0]}"
            counter[0] += 1
            env2 = dict(env)
            env2[x] = nm
            return _with_binder(node, nm, a2, _canon(b, env2, counter))
        case _:
            kids = children(node)
            if not kids:
                return node
            return rebuild(node, tuple(_canon(c, env, counter) for c in kids))


# -------------------------------------------------------------- contexts


@dataclass(frozen=True, slots=True)
class OracleOccurrence:
    """One extracted redex of an oracle: 1-based hole index, argument for the
    unary form (None for the nullary form), and the position path."""

    index: int
    arg: Term | None
    path: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class HoleContext:
    """A term with numbered holes 1..count at the extracted redex positions."""

    skeleton: Term
    count: int

    def fill(self, contents: dict[int, Term]) -> Term:
        def go(node: Node) -> Node:
            if isinstance(node, Hole):
                return contents[node.index]
            kids = children(node)
            if not kids:
                return node
            return rebuild(
                node,
                tuple(go(c) if isinstance(c, Term) else c for c in kids),
            )

        return go(self.skeleton)  # type: ignore[return-value]


def _is_oracle_redex(node: Node, oracle: str) -> bool:
    match node:
        case Force(OracleRef(o)) | Force(OracleCall(o, _)):
            return o == oracle
        case _:
            return False


def decompose_oracle_context(
    t: Term, oracle: str
) -> tuple[HoleContext, tuple[OracleOccurrence, ...]]:
    """Extract every outermost forced redex of the oracle, numbering holes
    1..n in left-to-right preorder.  fill() with the original redexes is the
    identity."""
    occurrences: list[OracleOccurrence] = []

    def go(node: Node, path: tuple[int, ...]) -> Node:
        if isinstance(node, Term) and _is_oracle_redex(node, oracle):
            body = node.body  # type: ignore[union-attr]
            arg = body.arg if isinstance(body, OracleCall) else None
            occurrences.append(OracleOccurrence(len(occurrences) + 1, arg, path))
            return Hole(len(occurrences))
        if isinstance(node, (TraceTerm, MergeTerm)):
            return node
        kids = children(node)
        if not kids:
            return node
        return rebuild(
            node,
            tuple(
                go(c, path + (i,)) if isinstance(c, Term) else c
                for i, c in enumerate(kids)
            ),
        )

    skeleton = go(t, ())
    return HoleContext(skeleton, len(occurrences)), tuple(occurrences)  # type: ignore[arg-type]


def original_redex(oracle: str, occ: OracleOccurrence) -> Term:
    if occ.arg is None:
        return Force(OracleRef(oracle))
    return Force(OracleCall(oracle, occ.arg))


# ---------------------------------------------------------------- tuples


def make_tuple(parts: list[Term]) -> Term:
    """Right-nested n-tuple; a 1-tuple is the term itself."""
    if not parts:
        raise ValueError("empty tuple")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Pair(p, out)
    return out


def pair_spine(t: Term) -> list[Term]:
    """Maximal unfolding of a right-nested tuple."""
    parts: list[Term] = []
    while isinstance(t, Pair):
        parts.append(t.left)
        t = t.right
    parts.append(t)
    return parts


def tuple_components(t: Term, n: int) -> list[Term]:
    """Unfold a right-nested tuple into exactly n components."""
    parts: list[Term] = []
    for _ in range(n - 1):
        if not isinstance(t, Pair):
            raise ValueError(f"not an {n}-tuple")
        parts.append(t.left)
        t = t.right
    parts.append(t)
    return parts
