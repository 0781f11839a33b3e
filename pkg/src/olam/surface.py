"""Concrete syntax: lexer and parsers for program files (.olam), oracle
definition files (.oracle) and target distribution files (.dist).

Layout: a new top-level item starts at column 0; indented lines continue the
current item.  Comments run from `--` to end of line.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import oracles, syntax
from .errors import ParseError
from .syntax import (
    App,
    Bottom,
    Choice,
    ChoiceType,
    Conj,
    Efq,
    Forall,
    KindPi,
    Kind,
    Lam,
    OpaqueType,
    OracleCall,
    OracleRef,
    Pair,
    Proj,
    Force,
    Star,
    Term,
    TypeAbs,
    TypeApp,
    TypeCon,
    TypeName,
    Var,
    alpha_eq,
    fresh_name,
    free_term_vars,
)

KEYWORDS = frozenset(
    "forall pi choose efq atom use Oplus Sigma Bot "
    "oracle rule default arity type index mod arg context in".split()
)

_PUNCT = {
    ":": "COLON",
    "=": "EQ",
    "(": "LPAR",
    ")": "RPAR",
    "<": "LT",
    ">": "GT",
    ",": "COMMA",
    "[": "LBRACK",
    "]": "RBRACK",
    "{": "LBRACE",
    "}": "RBRACE",
    "!": "BANG",
    "#": "HASH",
    "*": "STAR",
}


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def _lex_line(text: str, line_no: int, out: list[Token]) -> None:
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in " \t\r":
            i += 1
            continue
        col = i + 1
        if c == "-":
            if text.startswith("--", i):
                return
            if text.startswith("->", i):
                out.append(Token("ARROW", "->", line_no, col))
                i += 2
                continue
            raise ParseError("Lexical", f"stray {c!r}", (line_no, col))
        if c == "/":
            if text.startswith("/\\", i):
                out.append(Token("AND", "/\\", line_no, col))
                i += 2
                continue
            out.append(Token("SLASH", "/", line_no, col))
            i += 1
            continue
        if c == "\\":
            if text.startswith("\\\\", i):
                out.append(Token("CONLAM", "\\\\", line_no, col))
                i += 2
            else:
                out.append(Token("LAM", "\\", line_no, col))
                i += 1
            continue
        if c == ".":
            nxt = text[i + 1] if i + 1 < n else ""
            after = text[i + 2] if i + 2 < n else ""
            if nxt in "01" and not _is_ident_char(after):
                out.append(Token("PROJ", nxt, line_no, col))
                i += 2
            else:
                out.append(Token("DOT", ".", line_no, col))
                i += 1
            continue
        if c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise ParseError("Lexical", "unterminated string", (line_no, col))
            out.append(Token("STRING", text[i + 1 : j], line_no, col))
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            out.append(Token("INT", text[i:j], line_no, col))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            out.append(Token("IDENT", text[i:j], line_no, col))
            i = j
            continue
        if c in _PUNCT:
            out.append(Token(_PUNCT[c], c, line_no, col))
            i += 1
            continue
        raise ParseError("Lexical", f"stray {c!r}", (line_no, col))


def tokenize(text: str, first_line: int = 1) -> list[Token]:
    out: list[Token] = []
    for k, line in enumerate(text.split("\n")):
        _lex_line(line, first_line + k, out)
    return out


def logical_lines(text: str) -> list[list[Token]]:
    """Group physical lines into top-level items by indentation."""
    groups: list[list[Token]] = []
    for k, line in enumerate(text.split("\n")):
        toks: list[Token] = []
        _lex_line(line, k + 1, toks)
        if not toks:
            continue
        if line[0] in " \t" and groups:
            groups[-1].extend(toks)
        else:
            groups.append(toks)
    return groups


class _Stream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token | None:
        i = self.pos + ahead
        return self.tokens[i] if i < len(self.tokens) else None

    def span(self) -> tuple[int, int] | None:
        t = self.peek() or (self.tokens[-1] if self.tokens else None)
        return (t.line, t.col) if t else None

    def error(self, message: str, code: str = "Syntax") -> ParseError:
        return ParseError(code, message, self.span())

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of input")
        self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t is None or t.kind != kind:
            found = t.value if t else "end of input"
            raise self.error(f"expected {kind}, found {found!r}")
        return self.next()

    def keyword(self, word: str) -> Token:
        t = self.peek()
        if t is None or t.kind != "IDENT" or t.value != word:
            found = t.value if t else "end of input"
            raise self.error(f"expected {word!r}, found {found!r}")
        return self.next()

    def at_keyword(self, word: str) -> bool:
        t = self.peek()
        return t is not None and t.kind == "IDENT" and t.value == word

    def ident(self) -> str:
        t = self.expect("IDENT")
        if t.value in KEYWORDS:
            raise ParseError(
                "Syntax", f"{t.value!r} is a reserved word", (t.line, t.col)
            )
        return t.value

    def done(self) -> None:
        t = self.peek()
        if t is not None:
            raise self.error(f"trailing input starting at {t.value!r}")


def parse_rational_text(text: str) -> Fraction:
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            frac = Fraction(int(num), int(den))
        else:
            frac = Fraction(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError("MalformedRational", f"bad rational {text!r}") from exc
    return frac


def _rational(ts: _Stream) -> Fraction:
    num = ts.expect("INT")
    if ts.peek() is not None and ts.peek().kind == "SLASH":
        ts.next()
        den = ts.expect("INT")
        if int(den.value) == 0:
            raise ParseError(
                "MalformedRational", "zero denominator", (den.line, den.col)
            )
        return Fraction(int(num.value), int(den.value))
    return Fraction(int(num.value))


def _probability(ts: _Stream) -> Fraction:
    t = ts.peek()
    p = _rational(ts)
    if not 0 <= p <= 1:
        raise ParseError(
            "ProbabilityOutOfRange",
            f"probability {p} outside [0, 1]",
            (t.line, t.col),
        )
    return p


_TERM_START = ("LPAR", "LT", "HASH")


def _starts_term_atom(t: Token | None) -> bool:
    if t is None:
        return False
    if t.kind in _TERM_START:
        return True
    return t.kind == "IDENT" and (
        t.value not in KEYWORDS or t.value in ("choose", "efq")
    )


def _term(ts: _Stream) -> Term:
    if ts.peek() is not None and ts.peek().kind == "LAM":
        ts.next()
        x = ts.ident()
        ts.expect("COLON")
        a = _type(ts)
        ts.expect("DOT")
        return Lam(x, a, _term(ts))
    head = _postfix(ts)
    while _starts_term_atom(ts.peek()):
        arg = _postfix(ts)
        if isinstance(head, OracleRef):
            head = OracleCall(head.oracle, arg)
        else:
            head = App(head, arg)
    return head


def _postfix(ts: _Stream) -> Term:
    t = _atom(ts)
    while ts.peek() is not None and ts.peek().kind in ("BANG", "PROJ"):
        tok = ts.next()
        t = Force(t) if tok.kind == "BANG" else Proj(t, int(tok.value))
    return t


def _atom(ts: _Stream) -> Term:
    tok = ts.peek()
    if tok is None:
        raise ts.error("expected a term")
    if tok.kind == "IDENT":
        if tok.value == "choose":
            ts.next()
            ts.expect("LBRACK")
            p = _probability(ts)
            ts.expect("RBRACK")
            ts.expect("LBRACE")
            left = _term(ts)
            ts.expect("RBRACE")
            ts.expect("LBRACE")
            right = _term(ts)
            ts.expect("RBRACE")
            return Choice(left, p, right)
        if tok.value == "efq":
            ts.next()
            ts.expect("LPAR")
            body = _term(ts)
            ts.expect("COLON")
            target = _type(ts)
            ts.expect("RPAR")
            return Efq(body, target)
        return Var(ts.ident())
    if tok.kind == "HASH":
        ts.next()
        return OracleRef(ts.ident())
    if tok.kind == "LT":
        ts.next()
        left = _term(ts)
        ts.expect("COMMA")
        right = _term(ts)
        ts.expect("GT")
        return Pair(left, right)
    if tok.kind == "LPAR":
        ts.next()
        inner = _term(ts)
        ts.expect("RPAR")
        return inner
    raise ts.error(f"expected a term, found {tok.value!r}")


def _type(ts: _Stream) -> TypeCon:
    if ts.at_keyword("forall"):
        ts.next()
        x = ts.ident()
        ts.expect("COLON")
        a = _type(ts)
        ts.expect("DOT")
        return Forall(x, a, _type(ts))
    if ts.peek() is not None and ts.peek().kind == "CONLAM":
        ts.next()
        x = ts.ident()
        ts.expect("COLON")
        a = _type(ts)
        ts.expect("DOT")
        return TypeAbs(x, a, _type(ts))
    left = _conj(ts)
    if ts.peek() is not None and ts.peek().kind == "ARROW":
        ts.next()
        right = _type(ts)
        return Forall(fresh_name("_", free_term_vars(right)), left, right)
    return left


def _conj(ts: _Stream) -> TypeCon:
    left = _unary(ts)
    if ts.peek() is not None and ts.peek().kind == "AND":
        ts.next()
        return Conj(left, _conj(ts))
    return left


def _unary(ts: _Stream) -> TypeCon:
    if ts.at_keyword("Oplus"):
        ts.next()
        return ChoiceType(_unary(ts))
    if ts.at_keyword("Sigma"):
        ts.next()
        return OpaqueType(_unary(ts))
    return _tyapp(ts)


def _tyapp(ts: _Stream) -> TypeCon:
    head = _tyatom(ts)
    while _starts_term_atom(ts.peek()):
        head = TypeApp(head, _postfix(ts))
    return head


def _tyatom(ts: _Stream) -> TypeCon:
    tok = ts.peek()
    if tok is None:
        raise ts.error("expected a type")
    if tok.kind == "IDENT" and tok.value == "Bot":
        ts.next()
        return Bottom()
    if tok.kind == "IDENT" and tok.value not in KEYWORDS:
        return TypeName(ts.ident())
    if tok.kind == "LPAR":
        ts.next()
        inner = _type(ts)
        ts.expect("RPAR")
        return inner
    raise ts.error(f"expected a type, found {tok.value!r}")


def _kind(ts: _Stream) -> Kind:
    if ts.peek() is not None and ts.peek().kind == "STAR":
        ts.next()
        return Star()
    if ts.at_keyword("pi"):
        ts.next()
        x = ts.ident()
        ts.expect("COLON")
        a = _type(ts)
        ts.expect("DOT")
        return KindPi(x, a, _kind(ts))
    raise ts.error("expected a kind")


def _starts_kind(ts: _Stream) -> bool:
    t = ts.peek()
    return t is not None and (
        t.kind == "STAR" or (t.kind == "IDENT" and t.value == "pi")
    )


def parse_term(text: str) -> Term:
    ts = _Stream(tokenize(text))
    t = _term(ts)
    ts.done()
    return t


def parse_type(text: str) -> TypeCon:
    ts = _Stream(tokenize(text))
    t = _type(ts)
    ts.done()
    return t


def parse_kind(text: str) -> Kind:
    ts = _Stream(tokenize(text))
    k = _kind(ts)
    ts.done()
    return k


# ----------------------------------------------------------- program files


@dataclass(frozen=True, slots=True)
class AtomDecl:
    """`atom n : K` (type-level, K a kind) or `atom n : T` (term constant)."""

    name: str
    classifier: Kind | TypeCon
    line: int


@dataclass(frozen=True, slots=True)
class Definition:
    name: str
    ascription: TypeCon | None
    term: Term
    line: int


@dataclass(frozen=True, slots=True)
class SourceFile:
    atoms: tuple[AtomDecl, ...]
    oracle_uses: tuple[tuple[str, int], ...]
    definitions: tuple[Definition, ...]

    def main(self) -> Definition | None:
        for d in self.definitions:
            if d.name == "main":
                return d
        return None


def parse_program(text: str) -> SourceFile:
    atoms: list[AtomDecl] = []
    uses: list[tuple[str, int]] = []
    defs: list[Definition] = []
    for toks in logical_lines(text):
        ts = _Stream(toks)
        line = toks[0].line
        if ts.at_keyword("atom"):
            if defs or uses:
                raise ts.error("atom declarations must precede oracle imports")
            ts.next()
            name = ts.ident()
            ts.expect("COLON")
            classifier = _kind(ts) if _starts_kind(ts) else _type(ts)
            ts.done()
            atoms.append(AtomDecl(name, classifier, line))
        elif ts.at_keyword("use"):
            if defs:
                raise ts.error("oracle imports must precede definitions")
            ts.next()
            uses.append((ts.ident(), line))
            ts.done()
        else:
            name = ts.ident()
            ascription = None
            if ts.peek() is not None and ts.peek().kind == "COLON":
                ts.next()
                ascription = _type(ts)
            ts.expect("EQ")
            term = _term(ts)
            ts.done()
            defs.append(Definition(name, ascription, term, line))
    source = SourceFile(tuple(atoms), tuple(uses), tuple(defs))
    _resolve(source)
    return source


def _resolve(source: SourceFile) -> None:
    """Every referenced name must be declared earlier in the file."""
    con_names: set[str] = set()
    term_names: set[str] = set()
    oracle_names = {name for name, _ in source.oracle_uses}
    seen: set[str] = set()
    for decl in source.atoms:
        if decl.name in seen:
            raise ParseError(
                "DuplicateName", f"{decl.name!r} declared twice", (decl.line, 1)
            )
        _check_names(decl.classifier, set(), con_names, term_names, set(), decl.line)
        seen.add(decl.name)
        if isinstance(decl.classifier, Kind):
            con_names.add(decl.name)
        else:
            term_names.add(decl.name)
    seen_uses: set[str] = set()
    for name, line in source.oracle_uses:
        if name in seen_uses:
            raise ParseError(
                "DuplicateName", f"oracle {name!r} imported twice", (line, 1)
            )
        seen_uses.add(name)
    for d in source.definitions:
        if d.name in seen:
            raise ParseError(
                "DuplicateName", f"{d.name!r} declared twice", (d.line, 1)
            )
        if d.ascription is not None:
            _check_names(d.ascription, set(), con_names, term_names, oracle_names, d.line)
        _check_names(d.term, set(), con_names, term_names, oracle_names, d.line)
        seen.add(d.name)
        term_names.add(d.name)


def _check_names(
    node: syntax.Node,
    bound: set[str],
    con_names: set[str],
    term_names: set[str],
    oracle_names: set[str],
    line: int,
) -> None:
    match node:
        case Var(n):
            if n not in bound and n not in term_names:
                raise ParseError("UnboundName", f"unbound name {n!r}", (line, 1))
        case TypeName(n):
            if n not in con_names:
                raise ParseError(
                    "UnboundName", f"unbound type atom {n!r}", (line, 1)
                )
        case OracleRef(o) | OracleCall(o, _):
            if o not in oracle_names:
                raise ParseError(
                    "UnboundName",
                    f"oracle {o!r} not imported (add `use {o}`)",
                    (line, 1),
                )
            for c in syntax.children(node):
                _check_names(c, bound, con_names, term_names, oracle_names, line)
        case syntax.Lam(x, a, b) | syntax.TypeAbs(x, a, b) | syntax.Forall(
            x, a, b
        ) | syntax.KindPi(x, a, b):
            _check_names(a, bound, con_names, term_names, oracle_names, line)
            _check_names(b, bound | {x}, con_names, term_names, oracle_names, line)
        case _:
            for c in syntax.children(node):
                _check_names(c, bound, con_names, term_names, oracle_names, line)


# ------------------------------------------------------------ oracle files


def parse_oracle_file(text: str) -> list[oracles.OracleDef]:
    defs: list[oracles.OracleDef] = []
    for toks in logical_lines(text):
        ts = _Stream(toks)
        ts.keyword("oracle")
        name = ts.ident()
        ts.keyword("arity")
        arity_tok = ts.expect("INT")
        arity = int(arity_tok.value)
        if arity not in (0, 1):
            raise ParseError(
                "Syntax",
                f"arity must be 0 or 1, got {arity}",
                (arity_tok.line, arity_tok.col),
            )
        ts.keyword("type")
        assoc = _type(ts)
        rules: list[oracles.OracleRule] = []
        saw_default = False
        while ts.peek() is not None:
            if ts.at_keyword("rule"):
                if saw_default:
                    raise ts.error("rules may not follow the default")
                ts.next()
                guard = _guard(ts, arity)
                ts.expect("ARROW")
                rules.append(oracles.OracleRule(guard, _term(ts)))
            elif ts.at_keyword("default"):
                ts.next()
                ts.expect("ARROW")
                rules.append(oracles.OracleRule(oracles.GuardDefault(), _term(ts)))
                saw_default = True
            else:
                raise ts.error("expected `rule` or `default`")
        if not saw_default:
            raise ParseError(
                "Syntax", f"oracle {name!r} lacks a default rule", (toks[0].line, 1)
            )
        ts.done()
        defs.append(oracles.OracleDef(name, arity, assoc, tuple(rules)))
    return defs


def _guard(ts: _Stream, arity: int) -> oracles.Guard:
    if ts.at_keyword("index"):
        ts.next()
        if ts.at_keyword("mod"):
            ts.next()
            k_tok = ts.expect("INT")
            ts.expect("EQ")
            r_tok = ts.expect("INT")
            k, r = int(k_tok.value), int(r_tok.value)
            if k < 1 or not 0 <= r < k:
                raise ParseError(
                    "MalformedGuard",
                    f"residue {r} mod {k} is not well-formed",
                    (k_tok.line, k_tok.col),
                )
            return oracles.GuardIndexMod(k, r)
        ts.keyword("in")
        ts.expect("LBRACE")
        indices: list[int] = []
        while True:
            i_tok = ts.expect("INT")
            if int(i_tok.value) < 1:
                raise ParseError(
                    "MalformedGuard",
                    "hole indices start at 1",
                    (i_tok.line, i_tok.col),
                )
            indices.append(int(i_tok.value))
            if ts.peek() is not None and ts.peek().kind == "COMMA":
                ts.next()
                continue
            break
        ts.expect("RBRACE")
        return oracles.GuardIndexIn(frozenset(indices))
    if ts.at_keyword("arg"):
        if arity != 1:
            raise ts.error("`arg` guards require arity 1", "MalformedGuard")
        ts.next()
        ts.expect("EQ")
        return oracles.GuardArg(_term(ts))
    if ts.at_keyword("context"):
        ts.next()
        ts.expect("EQ")
        return oracles.GuardContext(ts.expect("STRING").value)
    raise ts.error("expected a guard (index / arg / context)")


# ------------------------------------------------- target distribution files


def parse_distribution(text: str) -> list[tuple[Term, Fraction]]:
    entries: list[tuple[Term, Fraction]] = []
    for toks in logical_lines(text):
        ts = _Stream(toks)
        term = _term(ts)
        eq = ts.expect("EQ")
        prob = _rational(ts)
        ts.done()
        if not 0 <= prob <= 1:
            raise ParseError(
                "ProbabilityOutOfRange",
                f"probability {prob} outside [0, 1]",
                (eq.line, eq.col),
            )
        for prev, _ in entries:
            if alpha_eq(prev, term):
                raise ParseError(
                    "DuplicateOutcome",
                    f"outcome {prev} listed twice",
                    (toks[0].line, toks[0].col),
                )
        entries.append((term, prob))
    return entries
