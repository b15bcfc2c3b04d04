"""S-expression syntax for constraints and path-constraint files.

File grammar::

    file    := item*
    item    := (var NAME string|int high|low [LEN])
             | (domain "ALPHABET" LEN exact|up_to)
             | (delta N)
             | (obs COST expr)
             | expr
    expr    := (and expr*) | (or expr*) | (not expr)
             | (eqConst VAR "literal") | (OP term term)
    OP      := = | != | < | <= | > | >=
    term    := (charAt VAR INT) | (length VAR) | (concat term term)
             | VAR | "literal" | INT

``;`` starts a comment that runs to the end of the line.  String literals
accept ``\\"`` and ``\\\\`` escapes.  A JSON mirror of the expression
syntax is provided by :func:`to_json` / :func:`from_json`.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Mapping

from .constraints import (
    COMPARISONS,
    EXACT,
    HIGH,
    INT,
    LOW,
    STRING,
    UP_TO,
    And,
    CharAt,
    Cmp,
    Concat,
    Constraint,
    ConstraintError,
    Domain,
    DomainError,
    EqConst,
    IntLit,
    Length,
    Not,
    Or,
    StrLit,
    Var,
    literals,
)


class DslSyntaxError(ConstraintError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|;[^\n]*)
  | (?P<open>\()
  | (?P<close>\))
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<int>-?\d+(?![^\s()";]))
  | (?P<sym>[^\s()";]+)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


@dataclass
class _Node:
    """Parsed s-expression list with its opening position."""

    items: list
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos] == '"':
                raise DslSyntaxError("unterminated string literal", line, pos - line_start + 1)
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        nl = m.group().count("\n")
        if nl:
            line += nl
            line_start = m.start() + m.group().rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


def _read_all(text: str) -> list:
    toks = _tokenize(text)
    pos = 0

    def read():
        nonlocal pos
        t = toks[pos]
        if t.kind == "open":
            pos += 1
            node = _Node([], t.line, t.col)
            while toks[pos].kind != "close":
                if toks[pos].kind == "eof":
                    raise DslSyntaxError("unclosed '('", t.line, t.col)
                node.items.append(read())
            pos += 1
            return node
        if t.kind == "close":
            raise DslSyntaxError("unexpected ')'", t.line, t.col)
        pos += 1
        return t

    out = []
    while toks[pos].kind != "eof":
        out.append(read())
    return out


def _where(x) -> tuple[int, int]:
    return (x.line, x.col)


def _head(node) -> str | None:
    if isinstance(node, _Node) and node.items and isinstance(node.items[0], _Tok):
        if node.items[0].kind == "sym":
            return node.items[0].text
    return None


DEFAULT_DECLS = {"h": Var("h", STRING, HIGH), "l": Var("l", STRING, LOW)}


class _Parser:
    def __init__(self, decls: Mapping[str, Var], domain: Domain | None):
        self.decls = dict(decls)
        self.domain = domain

    def fail(self, msg: str, x) -> DslSyntaxError:
        return DslSyntaxError(msg, *_where(x))

    def arity(self, node: _Node, n: int, what: str) -> None:
        if len(node.items) - 1 != n:
            raise self.fail(f"{what} takes {n} argument(s), got {len(node.items) - 1}", node)

    def var(self, x) -> Var:
        if not (isinstance(x, _Tok) and x.kind == "sym"):
            raise self.fail("expected a variable name", x)
        v = self.decls.get(x.text)
        if v is None:
            raise self.fail(f"undeclared variable {x.text!r}", x)
        return v

    def int_(self, x) -> int:
        if not (isinstance(x, _Tok) and x.kind == "int"):
            raise self.fail("expected an integer", x)
        return int(x.text)

    def string(self, x) -> str:
        if not (isinstance(x, _Tok) and x.kind == "str"):
            raise self.fail("expected a string literal", x)
        s = _unquote(x.text)
        if self.domain is not None:
            bad = [ch for ch in s if ch not in self.domain.order]
            if bad:
                raise self.fail(f"literal {s!r} uses symbol {bad[0]!r} outside the alphabet", x)
        return s

    def term(self, x):
        if isinstance(x, _Tok):
            if x.kind == "str":
                return StrLit(self.string(x))
            if x.kind == "int":
                return IntLit(int(x.text))
            if x.kind == "sym":
                return self.var(x)
            raise self.fail("expected a term", x)
        head = _head(x)
        try:
            if head == "charAt":
                self.arity(x, 2, "charAt")
                v = self.var(x.items[1])
                if v.sort != STRING:
                    raise self.fail(f"charAt of {v.sort} variable {v.name}", x.items[1])
                i = self.int_(x.items[2])
                if i < 0:
                    raise self.fail("charAt index must be nonnegative", x.items[2])
                return CharAt(v, i)
            if head == "length":
                self.arity(x, 1, "length")
                v = self.var(x.items[1])
                if v.sort != STRING:
                    raise self.fail(f"length of {v.sort} variable {v.name}", x.items[1])
                return Length(v)
            if head == "concat":
                self.arity(x, 2, "concat")
                left, right = self.term(x.items[1]), self.term(x.items[2])
                for side, src in ((left, x.items[1]), (right, x.items[2])):
                    if isinstance(side, (IntLit, Length)) or (isinstance(side, Var) and side.sort != STRING):
                        raise self.fail("concat takes string terms", src)
                return Concat(left, right)
        except DslSyntaxError:
            raise
        except ConstraintError as e:
            raise self.fail(str(e), x) from e
        raise self.fail(f"unknown term form {head!r}", x)

    def expr(self, x) -> Constraint:
        head = _head(x)
        if head is None:
            raise self.fail("expected a parenthesized formula", x)
        args = x.items[1:]
        if head == "and":
            return And(tuple(self.expr(a) for a in args))
        if head == "or":
            return Or(tuple(self.expr(a) for a in args))
        if head == "not":
            self.arity(x, 1, "not")
            return Not(self.expr(args[0]))
        if head == "eqConst":
            self.arity(x, 2, "eqConst")
            return EqConst(self.var(args[0]), self.string(args[1]))
        if head in COMPARISONS:
            self.arity(x, 2, head)
            left, right = self.term(args[0]), self.term(args[1])
            try:
                return Cmp(head, left, right)
            except ConstraintError as e:
                raise self.fail(str(e), x) from e
        raise self.fail(f"unknown formula form {head!r}", x)


def parse_constraint(text: str, decls: Mapping[str, Var] | None = None,
                     domain: Domain | None = None) -> Constraint:
    """Parse a single formula.  Variables default to ``h`` (high) and ``l`` (low)."""
    nodes = _read_all(text)
    if len(nodes) != 1:
        where = nodes[1] if len(nodes) > 1 else _Tok("eof", "", 1, 1)
        raise DslSyntaxError(f"expected exactly one formula, found {len(nodes)}", *_where(where))
    return _Parser(DEFAULT_DECLS if decls is None else decls, domain).expr(nodes[0])


@dataclass
class Program:
    """Contents of a path-constraint file."""

    decls: dict[str, Var] = field(default_factory=dict)
    domain: Domain | None = None
    paths: list[tuple[int, Constraint]] = field(default_factory=list)
    formulas: list[Constraint] = field(default_factory=list)
    delta: int | None = None


def parse_program(text: str, domain: Domain | None = None) -> Program:
    """Parse a file of declarations, ``obs`` rows and bare formulas.

    A ``domain`` argument overrides the file's own ``(domain ...)`` form.
    Without any ``var`` declarations, ``h`` and ``l`` are implicitly declared.
    """
    nodes = _read_all(text)
    prog = Program()
    lengths: dict[str, int] = {}
    file_domain = None
    body = []
    for node in nodes:
        head = _head(node)
        p = _Parser({}, None)
        if head == "var":
            if len(node.items) not in (4, 5):
                raise p.fail("var takes NAME SORT TRACK [LENGTH]", node)
            name_tok, sort_tok, track_tok = node.items[1:4]
            if not (isinstance(name_tok, _Tok) and name_tok.kind == "sym"):
                raise p.fail("expected a variable name", name_tok)
            sort = sort_tok.text if isinstance(sort_tok, _Tok) else None
            track = track_tok.text if isinstance(track_tok, _Tok) else None
            if sort not in (STRING, INT):
                raise p.fail("sort must be 'string' or 'int'", sort_tok)
            if track not in (HIGH, LOW):
                raise p.fail("track must be 'high' or 'low'", track_tok)
            if name_tok.text in prog.decls:
                raise p.fail(f"variable {name_tok.text!r} declared twice", name_tok)
            prog.decls[name_tok.text] = Var(name_tok.text, sort, track)
            if len(node.items) == 5:
                lengths[name_tok.text] = p.int_(node.items[4])
        elif head == "domain":
            if len(node.items) != 4:
                raise p.fail("domain takes \"ALPHABET\" LENGTH MODE", node)
            alpha = p.string(node.items[1])
            k = p.int_(node.items[2])
            mode_tok = node.items[3]
            mode = mode_tok.text if isinstance(mode_tok, _Tok) else None
            if mode not in (EXACT, UP_TO):
                raise p.fail("mode must be 'exact' or 'up_to'", mode_tok)
            try:
                file_domain = Domain(alpha, k, mode)
            except ConstraintError as e:
                raise p.fail(str(e), node) from e
        elif head == "delta":
            p.arity(node, 1, "delta")
            prog.delta = p.int_(node.items[1])
            if prog.delta < 1:
                raise p.fail("delta must be >= 1", node.items[1])
        else:
            body.append(node)
    if not prog.decls:
        prog.decls = dict(DEFAULT_DECLS)
    base = domain or file_domain
    if base is not None and lengths and domain is None:
        try:
            base = Domain(base.alphabet, base.length_bound, base.length_mode,
                          tuple(sorted(lengths.items())))
        except ConstraintError as e:
            raise DslSyntaxError(str(e), 1, 1) from e
    prog.domain = base
    parser = _Parser(prog.decls, base)
    for node in body:
        if _head(node) == "obs":
            parser.arity(node, 2, "obs")
            cost = parser.int_(node.items[1])
            if cost < 0:
                raise parser.fail("cost must be nonnegative", node.items[1])
            prog.paths.append((cost, parser.expr(node.items[2])))
        else:
            prog.formulas.append(parser.expr(node))
    return prog


# -- serialization ---------------------------------------------------------


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, StrLit):
        return _quote(t.value)
    if isinstance(t, IntLit):
        return str(t.value)
    if isinstance(t, CharAt):
        return f"(charAt {t.var.name} {t.index})"
    if isinstance(t, Length):
        return f"(length {t.var.name})"
    if isinstance(t, Concat):
        return f"(concat {serialize_term(t.left)} {serialize_term(t.right)})"
    raise ConstraintError(f"not a term: {t!r}")


def serialize(c: Constraint) -> str:
    """DSL text for ``c``; ``parse_constraint(serialize(c))`` rebuilds ``c``."""
    if isinstance(c, Cmp):
        return f"({c.op} {serialize_term(c.left)} {serialize_term(c.right)})"
    if isinstance(c, EqConst):
        return f"(eqConst {c.var.name} {_quote(c.value)})"
    if isinstance(c, Not):
        return f"(not {serialize(c.child)})"
    if isinstance(c, (And, Or)):
        tag = "and" if isinstance(c, And) else "or"
        return "(" + " ".join([tag] + [serialize(ch) for ch in c.children]) + ")"
    raise ConstraintError(f"not a constraint: {c!r}")


def serialize_program(prog: Program) -> str:
    lines = []
    if prog.domain is not None:
        d = prog.domain
        lines.append(f"(domain {_quote(''.join(d.alphabet))} {d.length_bound} {d.length_mode})")
    if prog.delta is not None:
        lines.append(f"(delta {prog.delta})")
    for v in prog.decls.values():
        extra = ""
        if prog.domain is not None and any(n == v.name for n, _ in prog.domain.track_lengths):
            extra = f" {prog.domain.bound_for(v.name)}"
        lines.append(f"(var {v.name} {v.sort} {v.track}{extra})")
    for cost, c in prog.paths:
        lines.append(f"(obs {cost} {serialize(c)})")
    for c in prog.formulas:
        lines.append(serialize(c))
    return "\n".join(lines) + "\n"


def check_literals(c: Constraint, domain: Domain) -> None:
    """Raise DomainError if a literal of ``c`` uses a symbol outside the alphabet."""
    for s in literals(c):
        bad = [ch for ch in s if ch not in domain.order]
        if bad:
            raise DomainError(f"literal {s!r} uses symbol {bad[0]!r} outside the alphabet")


# -- JSON mirror -------------------------------------------------------------


def _term_json(t) -> Any:
    if isinstance(t, Var):
        return {"var": t.name}
    if isinstance(t, StrLit):
        return {"str": t.value}
    if isinstance(t, IntLit):
        return {"int": t.value}
    if isinstance(t, CharAt):
        return {"charAt": [t.var.name, t.index]}
    if isinstance(t, Length):
        return {"length": t.var.name}
    return {"concat": [_term_json(t.left), _term_json(t.right)]}


def to_json_obj(c: Constraint) -> Any:
    if isinstance(c, Cmp):
        return {"cmp": c.op, "left": _term_json(c.left), "right": _term_json(c.right)}
    if isinstance(c, EqConst):
        return {"eqConst": [c.var.name, c.value]}
    if isinstance(c, Not):
        return {"not": to_json_obj(c.child)}
    tag = "and" if isinstance(c, And) else "or"
    return {tag: [to_json_obj(ch) for ch in c.children]}


def to_json(c: Constraint) -> str:
    return json.dumps(to_json_obj(c), sort_keys=True)


def from_json(text: str | Any, decls: Mapping[str, Var] | None = None) -> Constraint:
    """Inverse of :func:`to_json`; accepts text or an already-decoded object."""
    obj = json.loads(text) if isinstance(text, str) else text
    decls = DEFAULT_DECLS if decls is None else decls

    def var(name):
        if name not in decls:
            raise ConstraintError(f"undeclared variable {name!r}")
        return decls[name]

    def term(o):
        (k, v), = o.items()
        if k == "var":
            return var(v)
        if k == "str":
            return StrLit(v)
        if k == "int":
            return IntLit(v)
        if k == "charAt":
            return CharAt(var(v[0]), v[1])
        if k == "length":
            return Length(var(v))
        if k == "concat":
            return Concat(term(v[0]), term(v[1]))
        raise ConstraintError(f"unknown JSON term {k!r}")

    def form(o):
        if "cmp" in o:
            return Cmp(o["cmp"], term(o["left"]), term(o["right"]))
        (k, v), = o.items()
        if k == "eqConst":
            return EqConst(var(v[0]), v[1])
        if k == "not":
            return Not(form(v))
        if k == "and":
            return And(tuple(form(x) for x in v))
        if k == "or":
            return Or(tuple(form(x) for x in v))
        raise ConstraintError(f"unknown JSON formula {k!r}")

    return form(obj)
