"""Pretty-printer.  parse(show(x)) is the identity up to alpha-renaming for
every term, type constructor and kind that the surface grammar covers;
recorded computations ([...] forms) and holes print but do not re-parse."""
from __future__ import annotations

from . import syntax as s

# term precedence: 0 whole term, 1 application head, 2 postfix/argument
# type precedence: 0 whole type, 1 arrow operand, 2 conjunct, 3 application head


def show(node: s.Node) -> str:
    if isinstance(node, s.Term):
        return show_term(node, 0)
    if isinstance(node, s.TypeCon):
        return show_type(node, 0)
    return show_kind(node)


def _wrap(text: str, need: bool) -> str:
    return f"({text})" if need else text


def show_term(t: s.Term, prec: int = 0) -> str:
    match t:
        case s.Var(n):
            return n
        case s.OracleRef(o):
            return f"#{o}"
        case s.OracleCall(o, arg):
            return _wrap(f"#{o} {show_term(arg, 2)}", prec > 1)
        case s.Lam(x, a, b):
            return _wrap(f"\\{x}:{show_type(a, 0)}. {show_term(b, 0)}", prec > 0)
        case s.App(f, a):
            return _wrap(f"{show_term(f, 1)} {show_term(a, 2)}", prec > 1)
        case s.Choice(l, p, r):
            return f"choose[{p}]{{{show_term(l, 0)}}}{{{show_term(r, 0)}}}"
        case s.Force(b):
            return f"{show_term(b, 2)}!"
        case s.Pair(l, r):
            return f"<{show_term(l, 0)}, {show_term(r, 0)}>"
        case s.Proj(b, i):
            return f"{show_term(b, 2)}.{i}"
        case s.Efq(b, a):
            return f"efq({show_term(b, 0)} : {show_type(a, 0)})"
        case s.Hole(i):
            return f"[_{i}]"
        case s.TraceTerm(steps, p):
            inner = ", ".join(show_term(u, 0) for u in steps)
            return f"[{inner}]{_prob_suffix(p)}"
        case s.MergeTerm(src, branches, tgt, p):
            mid = " / ".join(
                ", ".join(show_term(u, 0) for u in br) for br in branches
            )
            return (
                f"[{show_term(src, 0)}, [{mid}], {show_term(tgt, 0)}]"
                f"{_prob_suffix(p)}"
            )
    raise TypeError(f"not a term: {t!r}")


def _prob_suffix(p) -> str:
    return "" if p is None else f"^{p}"


def show_type(c: s.TypeCon, prec: int = 0) -> str:
    match c:
        case s.TypeName(n):
            return n
        case s.Bottom():
            return "Bot"
        case s.Forall(x, a, b):
            if x not in s.free_term_vars(b):
                return _wrap(f"{show_type(a, 1)} -> {show_type(b, 0)}", prec > 0)
            return _wrap(f"forall {x}:{show_type(a, 0)}. {show_type(b, 0)}", prec > 0)
        case s.TypeAbs(x, a, b):
            return _wrap(f"\\\\{x}:{show_type(a, 0)}. {show_type(b, 0)}", prec > 0)
        case s.Conj(l, r):
            return _wrap(f"{show_type(l, 2)} /\\ {show_type(r, 1)}", prec > 1)
        case s.ChoiceType(b):
            return _wrap(f"Oplus {show_type(b, 2)}", prec > 2)
        case s.OpaqueType(b):
            return _wrap(f"Sigma {show_type(b, 2)}", prec > 2)
        case s.TypeApp(f, a):
            return f"{show_type(f, 3)} {show_term(a, 2)}"
    raise TypeError(f"not a type constructor: {c!r}")


def show_kind(k: s.Kind) -> str:
    match k:
        case s.Star():
            return "*"
        case s.KindPi(x, a, b):
            return f"pi {x}:{show_type(a, 0)}. {show_kind(b)}"
    raise TypeError(f"not a kind: {k!r}")


def term_key(t: s.Term) -> str:
    """Canonical alpha-class key: print after canonical bound renaming."""
    return show(s.canonicalize(t))


# reduction step labels, displayed exactly as the calculus writes them
LABEL_DISPLAY = {
    "beta": "β",
    "proj": "π",
    "left": "left",
    "right": "right",
    "oracle": "ω",
}


def show_label(label: str) -> str:
    return LABEL_DISPLAY[label]
