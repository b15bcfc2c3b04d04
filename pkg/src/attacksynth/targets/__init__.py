"""Benchmark targets: cost-annotated path constraints plus reference costs.

Each generator returns the path constraints a symbolic executor would
report for a small string function, together with a concrete cost
function that replays the function's instruction count.  The concrete
function is only used to cross-check the constraint-based observation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Callable

from ..constraints import (
    DIGITS,
    EXACT,
    UPPERCASE,
    CharAt,
    Cmp,
    Concat,
    Domain,
    H,
    L,
    StrLit,
    Var,
    conj,
)
from ..dsl import Program, parse_program, serialize_program
from ..engine import ObservationConstraint, PathConstraint, generate_constraints

DEFAULT_DELTA = 10

# instruction counts of the early-exit PIN check: base cost plus one loop body per matched char
PIN_BASE = 63
PIN_STEP = 15

SI_LE_COST = 42
SI_GT_COST = 67

# synthetic costs; only their separation matters
SE_BASE = 40
SE_STEP = 15
IO_BASE = 30
IO_STEP = 15


class UnknownTargetError(KeyError):
    pass


@dataclass(frozen=True)
class TargetSpec:
    name: str
    domain: Domain
    paths: tuple[PathConstraint, ...]
    concrete_cost: Callable[[str, str], int] | None = None
    delta: int = DEFAULT_DELTA
    high: Var = H
    low: Var = L
    description: str = ""

    def classes(self, delta: int | None = None) -> list[ObservationConstraint]:
        return generate_constraints(self.paths, self.delta if delta is None else delta)

    def to_program(self) -> Program:
        return Program(
            decls={self.high.name: self.high, self.low.name: self.low},
            domain=self.domain,
            paths=[(p.cost, p.constraint) for p in self.paths],
            delta=self.delta,
        )

    def to_dsl(self) -> str:
        header = f"; {self.name}: {self.description}\n" if self.description else ""
        return header + serialize_program(self.to_program())


def _eq(i: int, j: int | None = None) -> Cmp:
    return Cmp("=", CharAt(H, i), CharAt(L, i if j is None else j))


def _ne(i: int, j: int | None = None) -> Cmp:
    return Cmp("!=", CharAt(H, i), CharAt(L, i if j is None else j))


def _first_mismatch(h: str, l: str) -> int:
    for i, (a, b) in enumerate(zip(h, l)):
        if a != b:
            return i
    return min(len(h), len(l))


# -- password checks -------------------------------------------------------------


def _pin_cost(n: int, h: str, l: str) -> int:
    return PIN_BASE + PIN_STEP * min(_first_mismatch(h, l), n)


def gen_pin_check(n: int = 4, alphabet: str = DIGITS) -> TargetSpec:
    """Early-exit comparison: one path per length of the matched prefix."""
    if n < 1:
        raise ValueError("n must be >= 1")
    paths = []
    for i in range(n):
        c = conj(*(_eq(j) for j in range(i)), _ne(i))
        paths.append(PathConstraint(c, PIN_BASE + PIN_STEP * i))
    paths.append(PathConstraint(conj(*(_eq(j) for j in range(n))), PIN_BASE + PIN_STEP * n))
    return TargetSpec("pci", Domain(alphabet, n, EXACT), tuple(paths), partial(_pin_cost, n),
                      description="early-exit password check")


def _constant_cost(n: int, h: str, l: str) -> int:
    return PIN_BASE + PIN_STEP * n


def gen_constant_time_check(n: int = 4, alphabet: str = UPPERCASE) -> TargetSpec:
    """Comparison that always scans every position: one path per
    match/mismatch pattern, all with the same cost."""
    if n < 1:
        raise ValueError("n must be >= 1")
    paths = []
    for pattern in product((True, False), repeat=n):
        c = conj(*(_eq(i) if same else _ne(i) for i, same in enumerate(pattern)))
        paths.append(PathConstraint(c, PIN_BASE + PIN_STEP * n))
    return TargetSpec("pcs", Domain(alphabet, n, EXACT), tuple(paths), partial(_constant_cost, n),
                      description="constant-time password check")


# -- string library functions ------------------------------------------------------


def _lex_key(domain: Domain, s: str) -> list[int]:
    order = domain.order
    return [order[c] for c in s]


def _si_cost(domain: Domain, h: str, l: str) -> int:
    return SI_LE_COST if _lex_key(domain, h) <= _lex_key(domain, l) else SI_GT_COST


def _scoi_cost(domain: Domain, suffix: str, h: str, l: str) -> int:
    lt = _lex_key(domain, h + suffix) < _lex_key(domain, l + suffix)
    return SI_LE_COST if lt else SI_GT_COST


def _se_cost(n: int, domain: Domain, h: str, l: str) -> int:
    i = _first_mismatch(h, l)
    if i >= n:
        return SE_BASE + SE_STEP * 2 * n
    below = domain.order[h[i]] < domain.order[l[i]]
    return SE_BASE + SE_STEP * (2 * i + (0 if below else 1))


def _io_cost(n: int, h: str, l: str) -> int:
    i = h.find(l[0])
    return IO_BASE + IO_STEP * (n if i < 0 else i)


KINDS = ("direct", "concat", "equals", "index_of")


def gen_string_inequality(kind: str = "direct", domain: Domain | None = None) -> TargetSpec:
    """String comparison targets.

    ``direct``: ``h <= l`` versus ``h > l``.
    ``concat``: the same comparison after appending a constant to both sides.
    ``equals``: character-by-character equality with an early exit whose
    cost depends on the mismatch position and on which side is smaller.
    ``index_of``: position of the first occurrence of ``l``'s single
    character in ``h``, or not found.
    """
    if kind == "direct":
        domain = domain or Domain(UPPERCASE, 2, EXACT)
        paths = (PathConstraint(Cmp("<=", H, L), SI_LE_COST),
                 PathConstraint(Cmp(">", H, L), SI_GT_COST))
        return TargetSpec("si", domain, paths, partial(_si_cost, domain),
                          description="lexicographic inequality")
    if kind == "concat":
        domain = domain or Domain(UPPERCASE, 4, EXACT)
        suffix = domain.alphabet[0]
        left, right = Concat(H, StrLit(suffix)), Concat(L, StrLit(suffix))
        paths = (PathConstraint(Cmp("<", left, right), SI_LE_COST),
                 PathConstraint(Cmp(">=", left, right), SI_GT_COST))
        return TargetSpec("scoi", domain, paths, partial(_scoi_cost, domain, suffix),
                          description="inequality of concatenated strings")
    if kind == "equals":
        domain = domain or Domain(UPPERCASE, 4, EXACT)
        n = domain.bound_for(H.name)
        if domain.length_mode != EXACT or domain.bound_for(L.name) != n:
            raise ValueError("equals target needs equal exact lengths")
        paths = []
        for i in range(n):
            prefix = [_eq(j) for j in range(i)]
            paths.append(PathConstraint(
                conj(*prefix, Cmp("<", CharAt(H, i), CharAt(L, i))), SE_BASE + SE_STEP * 2 * i))
            paths.append(PathConstraint(
                conj(*prefix, Cmp(">", CharAt(H, i), CharAt(L, i))), SE_BASE + SE_STEP * (2 * i + 1)))
        paths.append(PathConstraint(conj(*(_eq(j) for j in range(n))), SE_BASE + SE_STEP * 2 * n))
        return TargetSpec("se", domain, tuple(paths), partial(_se_cost, n, domain),
                          description="string equality with early exit")
    if kind == "index_of":
        domain = domain or Domain(UPPERCASE, 8, EXACT, {"l": 1})
        n = domain.bound_for(H.name)
        if domain.length_mode != EXACT or domain.bound_for(L.name) != 1:
            raise ValueError("index_of target needs an exact one-character low input")
        paths = []
        for i in range(n):
            c = conj(*(_ne(j, 0) for j in range(i)), _eq(i, 0))
            paths.append(PathConstraint(c, IO_BASE + IO_STEP * i))
        paths.append(PathConstraint(conj(*(_ne(j, 0) for j in range(n))), IO_BASE + IO_STEP * n))
        return TargetSpec("io", domain, tuple(paths), partial(_io_cost, n),
                          description="index of a character")
    raise ValueError(f"unsupported kind {kind!r}; expected one of {KINDS}")


# -- registry --------------------------------------------------------------------

BUILTINS: dict[str, Callable[[], TargetSpec]] = {
    "pci": gen_pin_check,
    "pcs": gen_constant_time_check,
    "se": partial(gen_string_inequality, "equals"),
    "si": partial(gen_string_inequality, "direct"),
    "si4": lambda: _renamed(gen_string_inequality("direct", Domain(UPPERCASE, 4, EXACT)), "si4"),
    "scoi": partial(gen_string_inequality, "concat"),
    "io": partial(gen_string_inequality, "index_of"),
}


def _renamed(t: TargetSpec, name: str) -> TargetSpec:
    return TargetSpec(name, t.domain, t.paths, t.concrete_cost, t.delta, t.high, t.low,
                      t.description)


def builtin(name: str) -> TargetSpec:
    try:
        return BUILTINS[name.lower()]()
    except KeyError:
        raise UnknownTargetError(
            f"unknown target {name!r}; built-ins are {', '.join(BUILTINS)}") from None


def data_file(name: str) -> str:
    """Text of the shipped DSL file for a built-in target."""
    return resources.files(__name__).joinpath("data", f"{name}.sexp").read_text()


def from_program(name: str, prog: Program) -> TargetSpec:
    if not prog.paths:
        raise ValueError(f"{name}: no (obs COST expr) rows")
    if prog.domain is None:
        raise ValueError(f"{name}: no domain; add (domain \"ALPHABET\" LEN MODE) or pass one")
    highs = [v for v in prog.decls.values() if v.track == "high"]
    lows = [v for v in prog.decls.values() if v.track == "low"]
    if len(highs) != 1 or len(lows) != 1:
        raise ValueError(f"{name}: need exactly one high and one low variable")
    return TargetSpec(name, prog.domain,
                      tuple(PathConstraint(c, cost) for cost, c in prog.paths),
                      None, prog.delta or DEFAULT_DELTA, highs[0], lows[0])


def load_target(ref: str, domain: Domain | None = None) -> TargetSpec:
    """A built-in target by name, or a DSL file by path."""
    if ref.lower() in BUILTINS and domain is None:
        return builtin(ref)
    path = Path(ref)
    if not path.exists():
        if ref.lower() in BUILTINS:
            return from_program(ref.lower(), parse_program(data_file(ref.lower()), domain))
        raise UnknownTargetError(f"no built-in target or file named {ref!r}")
    return from_program(path.stem, parse_program(path.read_text(), domain))


def write_data_files(directory: Path) -> list[Path]:
    out = []
    for name in BUILTINS:
        p = Path(directory) / f"{name}.sexp"
        p.write_text(builtin(name).to_dsl())
        out.append(p)
    return out
