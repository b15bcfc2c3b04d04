"""Shared oracles: brute-force enumeration and random formula generation."""
from __future__ import annotations

import itertools
import random
import sys
from pathlib import Path

import pytest

from attacksynth.constraints import (
    COMPARISONS,
    EXACT,
    UP_TO,
    And,
    CharAt,
    Cmp,
    Concat,
    Domain,
    EqConst,
    IntLit,
    Length,
    Not,
    Or,
    StrLit,
    Var,
    evaluate,
)

sys.path.insert(0, str(Path(__file__).parent))

X = Var("x")
Y = Var("y")


def assignments(domain: Domain, tracks):
    """Every assignment of ``tracks`` admitted by the domain."""
    pools = [list(domain.strings(t)) for t in tracks]
    for vals in itertools.product(*pools):
        yield dict(zip(tracks, vals))


def brute_count(c, domain: Domain, tracks) -> int:
    return sum(evaluate(c, a, domain) for a in assignments(domain, tracks))


def brute_models(c, domain: Domain, tracks) -> set[tuple[str, ...]]:
    return {tuple(a[t] for t in tracks) for a in assignments(domain, tracks) if evaluate(c, a, domain)}


class FormulaGen:
    """Random in-scope formulas over string variables x and y."""

    def __init__(self, rng: random.Random, alphabet: str, variables=(X, Y)):
        self.rng = rng
        self.alphabet = alphabet
        self.vars = variables

    def literal(self) -> str:
        return "".join(self.rng.choice(self.alphabet) for _ in range(self.rng.randint(0, 3)))

    def term(self, depth: int = 1):
        r = self.rng.random()
        v = self.rng.choice(self.vars)
        if r < 0.3:
            return v
        if r < 0.5:
            return StrLit(self.literal())
        if r < 0.75 or depth == 0:
            return CharAt(v, self.rng.randint(0, 3))
        return Concat(self.term(depth - 1), self.term(depth - 1))

    def atom(self):
        r = self.rng.random()
        if r < 0.15:
            return Cmp(self.rng.choice(COMPARISONS), Length(self.rng.choice(self.vars)),
                       IntLit(self.rng.randint(0, 3)))
        if r < 0.25:
            return EqConst(self.rng.choice(self.vars), self.literal())
        return Cmp(self.rng.choice(COMPARISONS), self.term(), self.term())

    def formula(self, depth: int = 3):
        r = self.rng.random()
        if depth == 0 or r < 0.35:
            return self.atom()
        if r < 0.55:
            return Not(self.formula(depth - 1))
        kids = tuple(self.formula(depth - 1) for _ in range(self.rng.randint(0, 3)))
        return And(kids) if r < 0.8 else Or(kids)


def random_domain(rng: random.Random) -> Domain:
    return Domain("abcd"[: rng.randint(2, 4)], rng.randint(1, 3), rng.choice([EXACT, UP_TO]))


@pytest.fixture
def upper2():
    return Domain("ABCDEFGHIJKLMNOPQRSTUVWXYZ", 2)


@pytest.fixture
def digits4():
    return Domain("0123456789", 4)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
