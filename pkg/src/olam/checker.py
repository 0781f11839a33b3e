"""Kind and type assignment.

The algorithm is syntax-directed: every inferred type is returned in
constructor normal form, so conversion at comparison sites is plain
alpha-equality of normal forms.  Binders that would shadow an existing name
are renamed on entry, keeping environments duplicate-free.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import conversion
from .errors import CheckError
from .oracles import OracleRegistry
from .syntax import (
    App,
    Bottom,
    Choice,
    ChoiceType,
    Conj,
    Efq,
    Forall,
    Force,
    Hole,
    Kind,
    KindPi,
    Lam,
    MergeTerm,
    Node,
    OpaqueType,
    OracleCall,
    OracleRef,
    Pair,
    Proj,
    Star,
    Term,
    TraceTerm,
    TypeAbs,
    TypeApp,
    TypeCon,
    TypeName,
    Var,
    alpha_eq,
    children,
    free_term_vars,
    fresh_name,
    substitute,
)


class Environment:
    """Ordered signature: type atoms with kinds, term names with types.
    Stored classifiers are normalized; names are unique."""

    def __init__(self):
        self._cons: dict[str, Kind] = {}
        self._terms: dict[str, TypeCon] = {}

    def _copy(self) -> "Environment":
        env = Environment()
        env._cons = dict(self._cons)
        env._terms = dict(self._terms)
        return env

    def with_con(self, name: str, kind: Kind) -> "Environment":
        if name in self._cons or name in self._terms:
            raise CheckError("DuplicateName", f"{name!r} already bound")
        env = self._copy()
        env._cons[name] = kind
        return env

    def with_term(self, name: str, con: TypeCon) -> "Environment":
        if name in self._cons or name in self._terms:
            raise CheckError("DuplicateName", f"{name!r} already bound")
        env = self._copy()
        env._terms[name] = con
        return env

    def lookup_con(self, name: str) -> Kind:
        kind = self._cons.get(name)
        if kind is None:
            raise CheckError("UnboundConVar", f"unbound type atom {name!r}")
        return kind

    def lookup_term(self, name: str) -> TypeCon:
        con = self._terms.get(name)
        if con is None:
            raise CheckError("UnboundVar", f"unbound name {name!r}")
        return con

    def term_names(self) -> list[str]:
        return list(self._terms)

    def con_names(self) -> list[str]:
        return list(self._cons)

    def all_names(self) -> frozenset[str]:
        return frozenset(self._cons) | frozenset(self._terms)


def _enter_binder(
    env: Environment, var: str, var_type: TypeCon, body: Node
) -> tuple[Environment, str, Node]:
    """Bind var:var_type, renaming the binder if the name is taken."""
    if var in env.all_names():
        var2 = fresh_name(var, env.all_names() | free_term_vars(body))
        body = substitute(body, var, Var(var2))
        var = var2
    return env.with_term(var, var_type), var, body


def check_kind(
    env: Environment, kind: Kind, registry: OracleRegistry | None = None
) -> None:
    """Well-formedness of a kind."""
    match kind:
        case Star():
            return
        case KindPi(x, a, body):
            _check_star(env, a, registry)
            a_norm = conversion.normalize_con(a)
            env2, _, body = _enter_binder(env, x, a_norm, body)
            check_kind(env2, body, registry)  # type: ignore[arg-type]
        case _:
            raise CheckError("IllFormedKind", f"not a kind: {kind!r}")


def _check_star(
    env: Environment, con: TypeCon, registry: OracleRegistry | None = None
) -> None:
    kind = infer_kind(env, con, registry)
    if not isinstance(kind, Star):
        raise CheckError(
            "KindMismatch", f"{con} has kind {kind}, expected a value type"
        )


def infer_kind(
    env: Environment, con: TypeCon, registry: OracleRegistry | None = None
) -> Kind:
    """The unique kind of a constructor, normalized."""
    match con:
        case TypeName(n):
            return env.lookup_con(n)
        case Bottom():
            return Star()
        case TypeAbs(x, a, body):
            _check_star(env, a, registry)
            a_norm = conversion.normalize_con(a)
            env2, x, body = _enter_binder(env, x, a_norm, body)
            return KindPi(x, a_norm, infer_kind(env2, body, registry))  # type: ignore[arg-type]
        case TypeApp(fun, arg):
            fun_kind = infer_kind(env, fun, registry)
            if not isinstance(fun_kind, KindPi):
                raise CheckError(
                    "NotAKindFunction",
                    f"{fun} of kind {fun_kind} applied to a term",
                )
            check_type(env, arg, fun_kind.var_type, registry)
            return conversion.normalize_kind(
                substitute(fun_kind.body, fun_kind.var, arg)  # type: ignore[arg-type]
            )
        case Forall(x, a, body):
            _check_star(env, a, registry)
            a_norm = conversion.normalize_con(a)
            env2, _, body = _enter_binder(env, x, a_norm, body)
            _check_star(env2, body, registry)  # type: ignore[arg-type]
            return Star()
        case ChoiceType(body) | OpaqueType(body):
            _check_star(env, body, registry)
            return Star()
        case Conj(left, right):
            _check_star(env, left, registry)
            _check_star(env, right, registry)
            return Star()
    raise CheckError("IllFormedKind", f"not a constructor: {con!r}")


def infer_type(
    env: Environment, term: Term, registry: OracleRegistry | None = None
) -> TypeCon:
    """The type of a term, normalized."""
    match term:
        case Var(n):
            return env.lookup_term(n)
        case OracleRef(o):
            odef = _registry_lookup(registry, o)
            return conversion.normalize_con(odef.assoc_type)
        case OracleCall(o, arg):
            odef = _registry_lookup(registry, o)
            if odef.arity != 1:
                raise CheckError(
                    "NotAFunction", f"nullary oracle {o} applied to an argument"
                )
            var, dom, result = odef.dependent_type()
            check_type(env, arg, dom, registry)
            return conversion.normalize_con(
                OpaqueType(substitute(result, var, arg))  # type: ignore[arg-type]
            )
        case Lam(x, a, body):
            _check_star(env, a, registry)
            a_norm = conversion.normalize_con(a)
            env2, x, body = _enter_binder(env, x, a_norm, body)
            return Forall(x, a_norm, infer_type(env2, body, registry))  # type: ignore[arg-type]
        case App(fun, arg):
            fun_type = infer_type(env, fun, registry)
            if not isinstance(fun_type, Forall):
                raise CheckError(
                    "NotAFunction", f"{fun} of type {fun_type} applied"
                )
            check_type(env, arg, fun_type.var_type, registry)
            return conversion.normalize_con(
                substitute(fun_type.body, fun_type.var, arg)  # type: ignore[arg-type]
            )
        case Choice(left, p, right):
            if not 0 <= p <= 1:
                raise CheckError(
                    "ProbabilityOutOfRange", f"probability {p} outside [0, 1]"
                )
            left_type = infer_type(env, left, registry)
            right_type = infer_type(env, right, registry)
            if not alpha_eq(left_type, right_type):
                raise CheckError(
                    "BranchTypeMismatch",
                    f"branches typed {left_type} and {right_type}",
                )
            return ChoiceType(left_type)
        case Force(body):
            body_type = infer_type(env, body, registry)
            match body_type:
                case ChoiceType(inner) | OpaqueType(inner):
                    return inner
            raise CheckError(
                "NotAChoice",
                f"{body} of type {body_type} cannot be forced",
            )
        case Pair(left, right):
            return Conj(
                infer_type(env, left, registry), infer_type(env, right, registry)
            )
        case Proj(pair, index):
            pair_type = infer_type(env, pair, registry)
            if not isinstance(pair_type, Conj):
                raise CheckError(
                    "NotAPair", f"{pair} of type {pair_type} projected"
                )
            return pair_type.left if index == 0 else pair_type.right
        case Efq(body, target):
            body_type = infer_type(env, body, registry)
            if not isinstance(body_type, Bottom):
                raise CheckError(
                    "EfqOnNonBottom", f"{body} has type {body_type}"
                )
            _check_star(env, target, registry)
            target_norm = conversion.normalize_con(target)
            if _mentions_forall(target_norm):
                raise CheckError(
                    "EfqTargetContainsForall",
                    f"target {target_norm} contains a quantifier",
                )
            return target_norm
        case TraceTerm() | MergeTerm():
            raise CheckError(
                "EvidenceTerm",
                "recorded computations are judged by the trace engine, "
                "not typed as values",
            )
        case Hole(i):
            raise CheckError("HoleInTerm", f"context hole [_{i}] in a term")
    raise CheckError("IllFormedTerm", f"not a term: {term!r}")


def _registry_lookup(registry: OracleRegistry | None, name: str):
    if registry is None:
        raise CheckError("UnknownOracle", f"no oracle named {name}")
    return registry.lookup(name)


def _mentions_forall(node: Node) -> bool:
    if isinstance(node, Forall):
        return True
    return any(_mentions_forall(c) for c in children(node))


def check_type(
    env: Environment,
    term: Term,
    expected: TypeCon,
    registry: OracleRegistry | None = None,
) -> None:
    found = infer_type(env, term, registry)
    expected_norm = conversion.normalize_con(expected)
    if not alpha_eq(found, expected_norm):
        raise CheckError(
            "TypeMismatch", f"expected {expected_norm}, found {found}"
        )


def type_of_trace_term(env: Environment, term: Term, registry=None):
    """Entry point for recorded computations: their classifier is a
    reduction judgment, derived and checked by the trace engine."""
    from . import traces

    return traces.derive_judgment(env, term, registry)


def connective_skeleton(con: TypeCon):
    """Shape of a type with embedded terms erased: the tree of quantifiers,
    connectives and atoms, invariant under one-step reduction of a subject."""
    match con:
        case TypeName(n):
            return ("atom", n)
        case Bottom():
            return ("bottom",)
        case TypeApp(fun, _):
            return ("apply", connective_skeleton(fun))
        case TypeAbs(_, a, body):
            return ("abstract", connective_skeleton(a), connective_skeleton(body))
        case Forall(_, a, body):
            return ("forall", connective_skeleton(a), connective_skeleton(body))
        case ChoiceType(body):
            return ("choice", connective_skeleton(body))
        case OpaqueType(body):
            return ("opaque", connective_skeleton(body))
        case Conj(left, right):
            return ("conj", connective_skeleton(left), connective_skeleton(right))
    raise CheckError("IllFormedKind", f"not a constructor: {con!r}")


# ------------------------------------------------------------ whole programs


@dataclass(frozen=True, slots=True)
class CheckedProgram:
    """A checked source file: its signature, oracles, per-definition types,
    and the fully inlined main term."""

    env: Environment
    registry: OracleRegistry
    def_types: dict[str, TypeCon]
    main_term: Term | None
    main_type: TypeCon | None


def check_program(source, oracle_defs, require_main: bool = True) -> CheckedProgram:
    """Check declarations in order, validate oracles against the signature,
    then check each definition and inline earlier definitions into later
    ones; main comes out closed over the signature."""
    env = Environment()
    for decl in source.atoms:
        if isinstance(decl.classifier, Kind):
            check_kind(env, decl.classifier)
            env = env.with_con(
                decl.name, conversion.normalize_kind(decl.classifier)
            )
        else:
            _check_star(env, decl.classifier)
            env = env.with_term(
                decl.name, conversion.normalize_con(decl.classifier)
            )
    registry = OracleRegistry.load(env, oracle_defs)
    for name, _ in source.oracle_uses:
        registry.lookup(name)

    def_env = env
    def_types: dict[str, TypeCon] = {}
    inlined: dict[str, Term] = {}
    main_term: Term | None = None
    for d in source.definitions:
        inferred = infer_type(def_env, d.term, registry)
        if d.ascription is not None:
            _check_star(def_env, d.ascription, registry)
            expected = conversion.normalize_con(d.ascription)
            if not alpha_eq(inferred, expected):
                raise CheckError(
                    "TypeMismatch",
                    f"{d.name}: declared {expected}, inferred {inferred}",
                    (d.line, 1),
                )
        def_types[d.name] = inferred
        def_env = def_env.with_term(d.name, inferred)
        body = d.term
        for earlier, replacement in inlined.items():
            body = substitute(body, earlier, replacement)  # type: ignore[assignment]
        inlined[d.name] = body
        if d.name == "main":
            main_term = body
    if require_main and main_term is None:
        raise CheckError("MissingMain", "program has no main definition")
    main_type = def_types.get("main")
    return CheckedProgram(env, registry, def_types, main_term, main_type)
