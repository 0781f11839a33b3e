"""Oracle definitions and their evaluation.

An oracle answers for every extracted redex of a term at once.  Its behaviour
is a total rule list: each rule guards on the hole index, an index residue,
the argument (unary oracles), or the printed fingerprint of the surrounding
context; the mandatory final default makes the function total.  Outputs are
closed over the program signature and oracle-free, and every output is
checked against its type obligation when produced.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import printer
from .errors import OracleError
from .syntax import (
    Forall,
    HoleContext,
    OpaqueType,
    Star,
    Term,
    TypeCon,
    alpha_eq,
    canonicalize,
    free_term_vars,
    oracle_names,
    substitute,
)


@dataclass(frozen=True, slots=True)
class GuardIndexIn:
    indices: frozenset[int]


@dataclass(frozen=True, slots=True)
class GuardIndexMod:
    modulus: int
    residue: int


@dataclass(frozen=True, slots=True)
class GuardArg:
    pattern: Term


@dataclass(frozen=True, slots=True)
class GuardContext:
    fingerprint: str


@dataclass(frozen=True, slots=True)
class GuardDefault:
    pass


Guard = GuardIndexIn | GuardIndexMod | GuardArg | GuardContext | GuardDefault


@dataclass(frozen=True, slots=True)
class OracleRule:
    guard: Guard
    output: Term


@dataclass(frozen=True, slots=True)
class OracleDef:
    """Oracle of arity 0 (computations of a value type) or arity 1 (value
    type depending on the argument)."""

    name: str
    arity: int
    assoc_type: TypeCon
    rules: tuple[OracleRule, ...]

    def value_type(self) -> TypeCon:
        if self.arity != 0:
            raise OracleError(
                "ArityMismatch", f"oracle {self.name} has arity 1"
            )
        assert isinstance(self.assoc_type, OpaqueType)
        return self.assoc_type.body

    def dependent_type(self) -> tuple[str, TypeCon, TypeCon]:
        """(argument variable, argument type, result value type)."""
        if self.arity != 1:
            raise OracleError(
                "ArityMismatch", f"oracle {self.name} has arity 0"
            )
        assert isinstance(self.assoc_type, Forall)
        body = self.assoc_type.body
        assert isinstance(body, OpaqueType)
        return self.assoc_type.var, self.assoc_type.var_type, body.body


def context_fingerprint(ctx: HoleContext) -> str:
    """Printed context after canonical bound renaming, holes as [_i]."""
    return printer.show(canonicalize(ctx.skeleton))


def guard_matches(
    guard: Guard, ctx: HoleContext, index: int, arg: Term | None
) -> bool:
    match guard:
        case GuardIndexIn(indices):
            return index in indices
        case GuardIndexMod(modulus, residue):
            return index % modulus == residue
        case GuardArg(pattern):
            return arg is not None and alpha_eq(arg, pattern)
        case GuardContext(fingerprint):
            return context_fingerprint(ctx) == fingerprint
        case GuardDefault():
            return True
    raise TypeError(f"unknown guard {guard!r}")


def _check_output_shape(odef: OracleDef, output: Term, signature: frozenset[str]) -> None:
    if oracle_names(output):
        raise OracleError(
            "OutputContainsOracle",
            f"oracle {odef.name} output {output} mentions an oracle constant",
        )
    stray = free_term_vars(output) - signature
    if stray:
        raise OracleError(
            "OutputNotClosed",
            f"oracle {odef.name} output {output} has free names {sorted(stray)}",
        )


class OracleRegistry:
    """Validated, immutable-after-load collection of oracles, bound to the
    program signature its outputs are checked against."""

    def __init__(self, env):
        self._env = env
        self._defs: dict[str, OracleDef] = {}

    @classmethod
    def load(cls, env, defs) -> "OracleRegistry":
        registry = cls(env)
        for odef in defs:
            registry._add(odef)
        return registry

    def _add(self, odef: OracleDef) -> None:
        if odef.name in self._defs:
            raise OracleError(
                "DuplicateName", f"oracle {odef.name} defined twice"
            )
        validate_oracle(odef, self._env)
        self._defs[odef.name] = odef

    def names(self) -> list[str]:
        return sorted(self._defs)

    def get(self, name: str) -> OracleDef | None:
        return self._defs.get(name)

    def lookup(self, name: str) -> OracleDef:
        odef = self._defs.get(name)
        if odef is None:
            raise OracleError("UnknownOracle", f"no oracle named {name}")
        return odef

    def eval(
        self, name: str, ctx: HoleContext, index: int, arg: Term | None = None
    ) -> Term:
        return eval_oracle(self.lookup(name), ctx, index, arg, self._env)


def eval_oracle(
    odef: OracleDef,
    ctx: HoleContext,
    index: int,
    arg: Term | None = None,
    env=None,
) -> Term:
    """Output for hole `index` of the decomposed context: the first matching
    rule fires.  The output is re-checked against its type obligation."""
    if not 1 <= index <= ctx.count:
        raise OracleError(
            "HoleIndexOutOfRange", f"hole {index} of {ctx.count}"
        )
    if (arg is None) != (odef.arity == 0):
        raise OracleError(
            "ArityMismatch",
            f"oracle {odef.name} has arity {odef.arity}",
        )
    for rule in odef.rules:
        if guard_matches(rule.guard, ctx, index, arg):
            output = rule.output
            break
    else:  # unreachable: the default rule always matches
        raise OracleError("NoMatchingRule", f"oracle {odef.name} not total")
    if env is not None:
        from . import checker

        _check_output_shape(odef, output, frozenset(env.term_names()))
        if odef.arity == 0:
            expected = odef.value_type()
        else:
            var, _, result = odef.dependent_type()
            expected = substitute(result, var, arg)  # type: ignore[assignment]
        try:
            checker.check_type(env, output, expected)
        except Exception as exc:
            raise OracleError(
                "OutputIllTyped",
                f"oracle {odef.name} output {output} fails its obligation "
                f"{expected}: {exc}",
            ) from exc
    return output


def validate_oracle(odef: OracleDef, env) -> None:
    """Static validation: associated type shape and kind, outputs closed and
    oracle-free, and every statically checkable output well-typed."""
    from . import checker

    if odef.arity == 0:
        if not isinstance(odef.assoc_type, OpaqueType):
            raise OracleError(
                "OracleTypeInvalid",
                f"arity-0 oracle {odef.name} needs an opaque computation type",
            )
    elif odef.arity == 1:
        if not (
            isinstance(odef.assoc_type, Forall)
            and isinstance(odef.assoc_type.body, OpaqueType)
        ):
            raise OracleError(
                "OracleTypeInvalid",
                f"arity-1 oracle {odef.name} needs a dependent opaque type",
            )
    else:
        raise OracleError(
            "OracleTypeInvalid", f"oracle {odef.name} arity must be 0 or 1"
        )
    try:
        kind = checker.infer_kind(env, odef.assoc_type)
    except Exception as exc:
        raise OracleError(
            "OracleTypeInvalid",
            f"oracle {odef.name} type {odef.assoc_type}: {exc}",
        ) from exc
    if not isinstance(kind, Star):
        raise OracleError(
            "OracleTypeInvalid",
            f"oracle {odef.name} type has kind {kind}, not a value type",
        )
    signature = frozenset(env.term_names())
    if not odef.rules or not isinstance(odef.rules[-1].guard, GuardDefault):
        raise OracleError(
            "NoDefaultRule", f"oracle {odef.name} lacks a final default rule"
        )
    for rule in odef.rules:
        _check_output_shape(odef, rule.output, signature)
        if isinstance(rule.guard, GuardArg):
            _check_output_shape(odef, rule.guard.pattern, signature)
    if odef.arity == 0:
        expected = odef.value_type()
        for rule in odef.rules:
            try:
                checker.check_type(env, rule.output, expected)
            except Exception as exc:
                raise OracleError(
                    "OutputIllTyped",
                    f"oracle {odef.name} output {rule.output}: {exc}",
                ) from exc
    else:
        var, dom, result = odef.dependent_type()
        for rule in odef.rules:
            if isinstance(rule.guard, GuardArg):
                try:
                    checker.check_type(env, rule.guard.pattern, dom)
                    checker.check_type(
                        env,
                        rule.output,
                        substitute(result, var, rule.guard.pattern),  # type: ignore[arg-type]
                    )
                except Exception as exc:
                    raise OracleError(
                        "OutputIllTyped",
                        f"oracle {odef.name} rule for {rule.guard.pattern}: {exc}",
                    ) from exc
