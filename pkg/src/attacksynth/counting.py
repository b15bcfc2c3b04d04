"""Exact model counting by accepting-path counting, with a DFA cache."""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Iterable

from . import automata
from .automata import Dfa
from .constraints import (
    EXACT,
    Constraint,
    ConstraintError,
    Domain,
    EqConst,
    Var,
    canonical_key,
    conj,
    free_names,
)


class CacheMissError(RuntimeError):
    """The incremental counter was asked for a knowledge automaton it never built."""


@dataclass(frozen=True)
class CountResult:
    count: int
    bound: int
    mode: str

    def __int__(self):
        return self.count


def count_paths(a: Dfa, k: int | None = None, mode: str | None = None) -> CountResult:
    """Number of accepted tuple-strings of length ``k`` (exact) or ``<= k``.

    Iterates ``v <- v M`` from the start indicator over the weighted
    adjacency ``M`` in Python integers.  ``k`` and ``mode`` default to the
    automaton's domain, where length ``k`` means the longest track.
    """
    if k is None:
        k = a.max_length
    if mode is None:
        mode = a.domain.length_mode
    if k < 0:
        raise ValueError("k must be >= 0")
    n = a.n_states
    vec = [0] * n
    vec[a.start] = 1
    acc = [q for q in range(n) if a.accepting[q]]
    total = sum(vec[q] for q in acc) if mode != EXACT or k == 0 else 0
    edges = a.edges
    for step in range(1, k + 1):
        nxt = [0] * n
        for q, w in enumerate(vec):
            if w:
                for s, c in edges[q]:
                    nxt[s] += w * c
        vec = nxt
        if mode != EXACT or step == k:
            total += sum(vec[q] for q in acc)
    return CountResult(total, k, mode)


def _count(a: Dfa) -> int:
    # exact-mode automata already reject every shorter tuple-string, so
    # summing over all lengths is the same number and avoids mode bookkeeping
    return count_paths(a, mode="up_to").count


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    constructed: int = 0
    states_built: int = 0

    def as_dict(self) -> dict:
        return {"hits": self.hits, "misses": self.misses,
                "constructed": self.constructed, "states_built": self.states_built}


class DfaCache:
    """Map from (canonical key, tracks, domain) to a constructed automaton.

    Lookups are lock-free reads of a dict; insertions take a lock.  Two
    threads may build the same entry; the later write wins, which is safe
    because both automata have the same language.
    """

    def __init__(self):
        self._store: dict[tuple, Dfa] = {}
        self._lock = threading.Lock()
        self.stats = CacheStats()

    def __len__(self):
        return len(self._store)

    @staticmethod
    def key(c: Constraint | str, domain: Domain, tracks: Iterable[str] = ()) -> tuple:
        ck = c if isinstance(c, str) else canonical_key(c)
        return (ck, tuple(sorted(tracks)), domain)

    def get(self, key: tuple) -> Dfa | None:
        a = self._store.get(key)
        with self._lock:
            if a is None:
                self.stats.misses += 1
            else:
                self.stats.hits += 1
        return a

    def contains(self, key: tuple) -> bool:
        return key in self._store

    def put(self, key: tuple, a: Dfa) -> None:
        with self._lock:
            self._store[key] = a

    def note_built(self, a: Dfa) -> None:
        with self._lock:
            self.stats.constructed += 1
            self.stats.states_built += a.n_states

    def dfa(self, c: Constraint, domain: Domain, tracks: Iterable[str] = ()) -> Dfa:
        """Cached automaton for ``c`` over its free variables plus ``tracks``."""
        key = self.key(c, domain, tracks)
        a = self.get(key)
        if a is None:
            a = automata.from_constraint(c, domain, tracks)
            self.note_built(a)
            self.put(key, a)
        return a

    def reset(self) -> None:
        with self._lock:
            self._store.clear()
            self.stats = CacheStats()


def model_count(c: Constraint, domain: Domain, cache: DfaCache | None = None,
                tracks: Iterable[str] = ()) -> CountResult:
    """Exact number of assignments to the free variables of ``c`` (plus
    ``tracks``) within ``domain`` that satisfy ``c``."""
    if cache is None:
        a = automata.from_constraint(c, domain, tracks)
    else:
        a = cache.dfa(c, domain, tracks)
    return CountResult(_count(a), a.max_length, domain.length_mode)


def model_count_incremental(c_h: Constraint, psi: Constraint, l_val: str, domain: Domain,
                            cache: DfaCache, high: str = "h", low: str = "l") -> CountResult:
    """Count ``c_h & psi & l = l_val`` reusing cached automata.

    The knowledge automaton for ``c_h`` must already be cached; the
    automaton for ``psi`` is built at most once; the single-word automaton
    for ``l_val`` is built on every call.  ``psi`` is instantiated with the
    word by a product that drops the ``low`` track, and the result is
    intersected with the knowledge automaton.
    """
    key_h = cache.key(c_h, domain, (high,))
    a_h = cache.get(key_h)
    if a_h is None:
        raise CacheMissError(f"knowledge automaton not cached: {key_h[0][:80]}")
    a_psi = cache.dfa(psi, domain, (high, low))
    a_l = automata.literal(domain, low, l_val)
    cache.note_built(a_l)
    a_inst = automata.instantiate(a_psi, a_l)
    cache.note_built(a_inst)
    a = automata.intersect(a_h, a_inst)
    cache.note_built(a)
    return CountResult(_count(a), a.max_length, domain.length_mode)


@dataclass
class ModelCounter:
    """Counting front end used by the attack engine.

    In incremental mode every query ``#(c_h & psi[l -> l_val])`` goes
    through :func:`model_count_incremental`; otherwise the conjunction
    ``c_h & psi & eqConst(l, l_val)`` is compiled from scratch with no
    cache.  ``cross_check`` recounts every incremental query from scratch
    and raises on any difference.
    """

    domain: Domain
    high: Var
    low: Var
    incremental: bool = True
    cache: DfaCache = field(default_factory=DfaCache)
    cross_check: bool = False
    queries: int = 0
    seconds: float = 0.0
    checked: int = 0

    def knowledge_dfa(self, c_h: Constraint) -> Dfa:
        """Automaton for ``c_h`` over the high track, cached."""
        t0 = time.perf_counter()
        try:
            return self.cache.dfa(c_h, self.domain, (self.high.name,))
        finally:
            self.seconds += time.perf_counter() - t0

    def register(self, c_h: Constraint, a: Dfa) -> None:
        """Install an automaton already known to recognize ``c_h``."""
        if free_names(c_h) and set(free_names(c_h)) != {self.high.name}:
            raise ConstraintError("knowledge constraint must mention only the high variable")
        self.cache.put(self.cache.key(c_h, self.domain, (self.high.name,)), a)

    def count_high(self, c_h: Constraint) -> int:
        return _count(self.knowledge_dfa(c_h))

    def count_query(self, c_h: Constraint, psi: Constraint, l_val: str) -> int:
        self.queries += 1
        t0 = time.perf_counter()
        try:
            if self.incremental:
                n = model_count_incremental(c_h, psi, l_val, self.domain, self.cache,
                                            self.high.name, self.low.name).count
            else:
                n = self.scratch(c_h, psi, l_val)
        finally:
            self.seconds += time.perf_counter() - t0
        if self.cross_check:
            ref = self.scratch(c_h, psi, l_val)
            if ref != n:
                raise AssertionError(
                    f"incremental count {n} != from-scratch count {ref} for l={l_val!r}")
            self.checked += 1
        return n

    def scratch(self, c_h: Constraint, psi: Constraint, l_val: str) -> int:
        c = conj(c_h, psi, EqConst(self.low, l_val))
        return model_count(c, self.domain, None, (self.high.name, self.low.name)).count

    def reset(self) -> None:
        self.cache.reset()
