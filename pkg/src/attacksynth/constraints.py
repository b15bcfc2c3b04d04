"""Constraint AST over bounded string domains.

Atoms compare string terms (lexicographically) or integer terms
(numerically).  String terms are variables, literals, ``charAt`` and
``concat``; integer terms are ``length`` and integer literals.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Mapping, Union

DIGITS = "0123456789"
UPPERCASE = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"

EXACT = "exact"
UP_TO = "up_to"

STRING = "string"
INT = "int"
HIGH = "high"
LOW = "low"

COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


class ConstraintError(ValueError):
    """Base class for malformed constraints and domain violations."""


class SortError(ConstraintError):
    pass


class UndeclaredVariableError(ConstraintError):
    pass


class DomainError(ConstraintError):
    """A concrete string falls outside the domain's alphabet or length bound."""


@dataclass(frozen=True)
class Domain:
    """Bounded string domain shared by every string variable.

    ``track_lengths`` overrides ``length_bound`` for individual variables,
    e.g. a one-character low input against an eight-character secret.
    """

    alphabet: tuple[str, ...]
    length_bound: int
    length_mode: str = EXACT
    track_lengths: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        alphabet = self.alphabet
        if isinstance(alphabet, str):
            alphabet = tuple(alphabet)
        alphabet = tuple(alphabet)
        object.__setattr__(self, "alphabet", alphabet)
        if isinstance(self.track_lengths, Mapping):
            object.__setattr__(
                self, "track_lengths", tuple(sorted(self.track_lengths.items()))
            )
        if not alphabet:
            raise ConstraintError("alphabet must be nonempty")
        if len(set(alphabet)) != len(alphabet):
            raise ConstraintError("alphabet has duplicate symbols")
        if any(not isinstance(s, str) or len(s) != 1 for s in alphabet):
            raise ConstraintError("alphabet symbols must be single characters")
        if self.length_bound < 1:
            raise ConstraintError("length_bound must be >= 1")
        if self.length_mode not in (EXACT, UP_TO):
            raise ConstraintError(f"unknown length mode {self.length_mode!r}")
        for name, n in self.track_lengths:
            if n < 1:
                raise ConstraintError(f"length for {name!r} must be >= 1")

    @property
    def order(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.alphabet)}

    def bound_for(self, name: str) -> int:
        for n, k in self.track_lengths:
            if n == name:
                return k
        return self.length_bound

    def lengths_for(self, name: str) -> range:
        k = self.bound_for(name)
        return range(k, k + 1) if self.length_mode == EXACT else range(0, k + 1)

    def size(self, name: str = "h") -> int:
        """Number of strings the domain admits for variable ``name``."""
        a = len(self.alphabet)
        return sum(a**n for n in self.lengths_for(name))

    def strings(self, name: str = "h") -> Iterator[str]:
        for n in self.lengths_for(name):
            for t in product(self.alphabet, repeat=n):
                yield "".join(t)

    def check_string(self, s: str, name: str = "h") -> None:
        bad = [c for c in s if c not in self.order]
        if bad:
            raise DomainError(f"symbol {bad[0]!r} of {s!r} is outside the alphabet")
        if len(s) not in self.lengths_for(name):
            raise DomainError(
                f"{s!r} has length {len(s)}; {name} admits {self.length_mode} "
                f"{self.bound_for(name)}"
            )

    def contains(self, s: str, name: str = "h") -> bool:
        try:
            self.check_string(s, name)
        except DomainError:
            return False
        return True

    def random_string(self, rng: random.Random, name: str = "h") -> str:
        """Uniform draw over all strings admitted for ``name``."""
        a = len(self.alphabet)
        lengths = list(self.lengths_for(name))
        n = rng.choices(lengths, weights=[a**k for k in lengths])[0]
        return "".join(rng.choice(self.alphabet) for _ in range(n))

    def with_length(self, length_bound: int) -> "Domain":
        return Domain(self.alphabet, length_bound, self.length_mode, self.track_lengths)


@dataclass(frozen=True)
class Var:
    name: str
    sort: str = STRING
    track: str = HIGH

    def __str__(self):
        return self.name


H = Var("h", STRING, HIGH)
L = Var("l", STRING, LOW)


# -- terms -----------------------------------------------------------------


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class CharAt:
    var: Var
    index: int

    def __post_init__(self):
        if not isinstance(self.index, int) or self.index < 0:
            raise SortError(f"charAt index must be a nonnegative integer, got {self.index!r}")


@dataclass(frozen=True)
class Length:
    var: Var


@dataclass(frozen=True)
class Concat:
    left: "Term"
    right: "Term"


Term = Union[Var, StrLit, IntLit, CharAt, Length, Concat]


def term_sort(t: Term) -> str:
    if isinstance(t, Var):
        return t.sort
    if isinstance(t, (StrLit, CharAt, Concat)):
        return STRING
    return INT


# -- formulas --------------------------------------------------------------


@dataclass(frozen=True)
class Cmp:
    op: str
    left: Term
    right: Term

    def __post_init__(self):
        if self.op not in COMPARISONS:
            raise ConstraintError(f"unknown comparison {self.op!r}")
        ls, rs = term_sort(self.left), term_sort(self.right)
        if ls != rs:
            raise SortError(f"cannot compare {ls} with {rs} in ({self.op} ...)")
        if isinstance(self.left, Concat) or isinstance(self.right, Concat):
            for side in (self.left, self.right):
                _check_concat(side)


def _check_concat(t: Term) -> None:
    if isinstance(t, Concat):
        for part in (t.left, t.right):
            if term_sort(part) != STRING:
                raise SortError("concat takes string terms")
            _check_concat(part)


@dataclass(frozen=True)
class EqConst:
    """Marker atom fixing ``var`` to a concrete string."""

    var: Var
    value: str


@dataclass(frozen=True)
class And:
    children: tuple["Constraint", ...] = ()


@dataclass(frozen=True)
class Or:
    children: tuple["Constraint", ...] = ()


@dataclass(frozen=True)
class Not:
    child: "Constraint"


Constraint = Union[Cmp, EqConst, And, Or, Not]

TRUE = And(())
FALSE = Or(())


def conj(*parts: Constraint) -> Constraint:
    """Conjunction that flattens nested ``And`` nodes."""
    out: list[Constraint] = []
    for p in parts:
        if isinstance(p, And):
            out.extend(p.children)
        else:
            out.append(p)
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(*parts: Constraint) -> Constraint:
    out: list[Constraint] = []
    for p in parts:
        if isinstance(p, Or):
            out.extend(p.children)
        else:
            out.append(p)
    return out[0] if len(out) == 1 else Or(tuple(out))


# -- traversal -------------------------------------------------------------


def _term_vars(t: Term) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    elif isinstance(t, (CharAt, Length)):
        yield t.var
    elif isinstance(t, Concat):
        yield from _term_vars(t.left)
        yield from _term_vars(t.right)


def free_variables(c: Constraint) -> frozenset[Var]:
    if isinstance(c, Cmp):
        return frozenset(_term_vars(c.left)) | frozenset(_term_vars(c.right))
    if isinstance(c, EqConst):
        return frozenset((c.var,))
    if isinstance(c, Not):
        return free_variables(c.child)
    out: frozenset[Var] = frozenset()
    for ch in c.children:
        out |= free_variables(ch)
    return out


def free_names(c: Constraint) -> tuple[str, ...]:
    return tuple(sorted({v.name for v in free_variables(c)}))


def _subst_term(t: Term, name: str, s: str) -> Term:
    if isinstance(t, Var):
        return StrLit(s) if t.name == name else t
    if isinstance(t, CharAt):
        if t.var.name != name:
            return t
        return StrLit(s[t.index] if t.index < len(s) else "")
    if isinstance(t, Length):
        return IntLit(len(s)) if t.var.name == name else t
    if isinstance(t, Concat):
        left = _subst_term(t.left, name, s)
        right = _subst_term(t.right, name, s)
        if isinstance(left, StrLit) and isinstance(right, StrLit):
            return StrLit(left.value + right.value)
        return Concat(left, right)
    return t


def substitute(c: Constraint, v: Var | str, s: str, domain: Domain | None = None) -> Constraint:
    """Replace every occurrence of ``v`` by the literal ``s``.

    ``charAt``/``length``/``concat`` over the substituted variable fold to
    literals, so the result no longer mentions ``v``.
    """
    name = v.name if isinstance(v, Var) else v
    if isinstance(v, Var) and v.sort != STRING:
        raise SortError(f"cannot substitute a string for {v.sort} variable {name}")
    if domain is not None:
        domain.check_string(s, name)
    return _subst(c, name, s)


def _subst(c: Constraint, name: str, s: str) -> Constraint:
    if isinstance(c, Cmp):
        return Cmp(c.op, _subst_term(c.left, name, s), _subst_term(c.right, name, s))
    if isinstance(c, EqConst):
        if c.var.name == name:
            return TRUE if c.value == s else FALSE
        return c
    if isinstance(c, Not):
        return Not(_subst(c.child, name, s))
    return type(c)(tuple(_subst(ch, name, s) for ch in c.children))


def pin(c: Constraint, v: Var, s: str) -> Constraint:
    """``c`` conjoined with ``eqConst(v, s)``; counts like ``substitute``."""
    return conj(c, EqConst(v, s))


# -- canonical keys --------------------------------------------------------

_FLIP = {">": "<", ">=": "<="}


def _term_key(t: Term) -> str:
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
    return f"(concat {_term_key(t.left)} {_term_key(t.right)})"


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def canonical_key(c: Constraint) -> str:
    """Serialization that is invariant under reordering of and/or children,
    operand order of = and !=, and > / >= written as flipped < / <=."""
    if isinstance(c, Cmp):
        a, b = _term_key(c.left), _term_key(c.right)
        op = c.op
        if op in _FLIP:
            op, a, b = _FLIP[op], b, a
        elif op in ("=", "!=") and b < a:
            a, b = b, a
        return f"({op} {a} {b})"
    if isinstance(c, EqConst):
        return f"(eqConst {c.var.name} {_quote(c.value)})"
    if isinstance(c, Not):
        return f"(not {canonical_key(c.child)})"
    tag = "and" if isinstance(c, And) else "or"
    keys = sorted(canonical_key(ch) for ch in _flatten(c))
    return f"({tag}{''.join(' ' + k for k in keys)})"


def _flatten(c: And | Or) -> Iterator[Constraint]:
    for ch in c.children:
        if type(ch) is type(c):
            yield from _flatten(ch)
        else:
            yield ch


# -- reference semantics ---------------------------------------------------


@dataclass
class _Env:
    values: Mapping[str, str]
    order: dict[str, int] = field(default_factory=dict)


def _eval_term(t: Term, env: _Env):
    if isinstance(t, Var):
        return env.values[t.name]
    if isinstance(t, StrLit):
        return t.value
    if isinstance(t, IntLit):
        return t.value
    if isinstance(t, CharAt):
        s = env.values[t.var.name]
        return s[t.index] if t.index < len(s) else ""
    if isinstance(t, Length):
        return len(env.values[t.var.name])
    return _eval_term(t.left, env) + _eval_term(t.right, env)


def _cmp(op: str, a, b) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def evaluate(c: Constraint, values: Mapping[str, str], domain: Domain) -> bool:
    """Direct semantics of ``c`` under a concrete assignment.

    Strings compare in dictionary order induced by the domain's alphabet
    order (a proper prefix is smaller).
    """
    env = _Env(values, domain.order)
    return _eval(c, env)


def _eval(c: Constraint, env: _Env) -> bool:
    if isinstance(c, Cmp):
        a = _eval_term(c.left, env)
        b = _eval_term(c.right, env)
        if isinstance(a, str):
            a = [env.order[ch] for ch in a]
            b = [env.order[ch] for ch in b]
        return _cmp(c.op, a, b)
    if isinstance(c, EqConst):
        return env.values[c.var.name] == c.value
    if isinstance(c, Not):
        return not _eval(c.child, env)
    if isinstance(c, And):
        return all(_eval(ch, env) for ch in c.children)
    return any(_eval(ch, env) for ch in c.children)


def literals(c: Constraint) -> Iterator[str]:
    """All string literals appearing in ``c``."""
    if isinstance(c, Cmp):
        for t in (c.left, c.right):
            yield from _term_literals(t)
    elif isinstance(c, EqConst):
        yield c.value
    elif isinstance(c, Not):
        yield from literals(c.child)
    else:
        for ch in c.children:
            yield from literals(ch)


def _term_literals(t: Term) -> Iterator[str]:
    if isinstance(t, StrLit):
        yield t.value
    elif isinstance(t, Concat):
        yield from _term_literals(t.left)
        yield from _term_literals(t.right)
