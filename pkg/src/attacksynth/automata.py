"""Multi-track DFAs for bounded string constraints.

A multi-track automaton reads one column per step: a tuple holding one
symbol per track (variable).  Tracks shorter than the longest one are
filled with a PAD symbol; once a track pads it pads forever, and a column
in which every track pads is never read.  Every automaton built here
accepts only well-formed columns sequences for its domain, so its language
is exactly a set of assignments and counting accepting paths counts models.

Encoding.  With ``m = |alphabet| + 1`` and PAD encoded as ``m - 1``, the
column ``(s_0, ..., s_{n-1})`` over tracks ``t_0 < ... < t_{n-1}`` has index
``sum(s_i * m**i)``.  Transition tables are dense ``(states, m**n)`` integer
arrays; state 0 is the absorbing dead state.
"""
from __future__ import annotations

import random
from collections import deque
from functools import cached_property, lru_cache
from itertools import product as cartesian
from typing import Callable, Hashable, Iterable, Mapping

import numpy as np

from .constraints import (
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
    free_names,
    term_sort,
    INT,
    STRING,
)


class AutomatonError(ConstraintError):
    pass


class UnsupportedConstraintError(AutomatonError):
    pass


class EmptyLanguageError(AutomatonError):
    pass


class Dfa:
    """Deterministic, total multi-track automaton (immutable by convention)."""

    def __init__(self, domain: Domain, tracks: tuple[str, ...], delta: np.ndarray,
                 accepting: np.ndarray, start: int):
        self.domain = domain
        self.tracks = tracks
        self.delta = delta
        self.accepting = accepting
        self.start = start
        delta.flags.writeable = False
        accepting.flags.writeable = False

    @property
    def n_states(self) -> int:
        return self.delta.shape[0]

    @property
    def n_columns(self) -> int:
        return self.delta.shape[1]

    @property
    def max_length(self) -> int:
        """Longest tuple-string any accepted assignment can produce."""
        return max((self.domain.bound_for(t) for t in self.tracks), default=0)

    def __repr__(self):
        return f"Dfa(tracks={self.tracks}, states={self.n_states})"

    @cached_property
    def groups(self) -> list[list[tuple[int, np.ndarray]]]:
        """Per state, live successors with the columns leading to each."""
        out = []
        for q in range(self.n_states):
            row = self.delta[q]
            order = np.argsort(row, kind="stable")
            succ, starts = np.unique(row[order], return_index=True)
            bounds = list(starts[1:]) + [len(row)]
            out.append([
                (int(s), order[b0:b1])
                for s, b0, b1 in zip(succ, starts, bounds)
                if s != 0
            ])
        return out

    @cached_property
    def edges(self) -> list[list[tuple[int, int]]]:
        """Weighted adjacency: per state, (successor, number of columns)."""
        return [[(s, len(cols)) for s, cols in g] for g in self.groups]

    @cached_property
    def suffix_counts(self) -> list[list[int]]:
        """``table[r][q]``: accepted column strings of length exactly r from q."""
        acc = [int(x) for x in self.accepting]
        table = [acc]
        for _ in range(self.max_length):
            prev = table[-1]
            table.append([sum(w * prev[s] for s, w in e) for e in self.edges])
        return table

    def check_structure(self) -> None:
        """Raise AssertionError unless the table is a total DFA with an
        absorbing dead state and unreadable all-PAD column."""
        n, c = self.delta.shape
        m = len(self.domain.alphabet) + 1
        assert c == m ** len(self.tracks), "column count does not match tracks"
        assert self.delta.min() >= 0 and self.delta.max() < n, "transition out of range"
        assert not self.delta[0].any(), "dead state must absorb"
        assert not self.accepting[0], "dead state must reject"
        assert not self.delta[:, c - 1].any(), "all-PAD column must be dead"
        assert len(set(self.tracks)) == len(self.tracks)
        assert list(self.tracks) == sorted(self.tracks)


# -- column codecs -----------------------------------------------------------


@lru_cache(maxsize=None)
def _digits(m: int, n: int) -> np.ndarray:
    """Symbol index of every track in every column, shape (m**n, n)."""
    cols = np.arange(m**n, dtype=np.int64)
    out = np.empty((m**n, n), dtype=np.int64)
    for i in range(n):
        out[:, i] = (cols // m**i) % m
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def _subcolumns(m: int, tracks: tuple[str, ...], sub: tuple[str, ...]):
    """Map each column over ``tracks`` to its restriction to ``sub``.

    Returns (index into sub's columns, whether the restriction is all PAD).
    """
    dig = _digits(m, len(tracks))
    idx = np.zeros(m ** len(tracks), dtype=np.int64)
    pad = np.ones(m ** len(tracks), dtype=bool)
    for i, t in enumerate(sub):
        d = dig[:, tracks.index(t)]
        idx += d * m**i
        pad &= d == m - 1
    idx.flags.writeable = False
    pad.flags.writeable = False
    return idx, pad


def _encode(domain: Domain, tracks: tuple[str, ...], values: Mapping[str, str]) -> list[int]:
    order = domain.order
    m = len(domain.alphabet) + 1
    width = max((len(values[t]) for t in tracks), default=0)
    cols = []
    for j in range(width):
        c = 0
        for i, t in enumerate(tracks):
            s = values[t]
            c += (order[s[j]] if j < len(s) else m - 1) * m**i
        cols.append(c)
    return cols


def _decode(domain: Domain, tracks: tuple[str, ...], cols: Iterable[int]) -> dict[str, str]:
    m = len(domain.alphabet) + 1
    out = {t: [] for t in tracks}
    for c in cols:
        for i, t in enumerate(tracks):
            s = (c // m**i) % m
            if s != m - 1:
                out[t].append(domain.alphabet[s])
    return {t: "".join(v) for t, v in out.items()}


# -- construction ------------------------------------------------------------


def _finalize(domain: Domain, tracks: tuple[str, ...], delta: np.ndarray,
              accepting: np.ndarray, start: int) -> Dfa:
    """Redirect states that cannot reach acceptance to the dead state and
    renumber reachable states in breadth-first order (start = 1)."""
    n = delta.shape[0]
    succ = [np.unique(delta[q]) for q in range(n)]
    pred: list[list[int]] = [[] for _ in range(n)]
    for q in range(1, n):
        for s in succ[q].tolist():
            pred[s].append(q)
    good = accepting.copy()
    good[0] = False
    stack = np.nonzero(good)[0].tolist()
    while stack:
        s = stack.pop()
        for p in pred[s]:
            if not good[p]:
                good[p] = True
                stack.append(p)
    if not good[start]:
        return empty(domain, tracks)
    remap = np.zeros(n, dtype=np.int64)
    order = [start]
    remap[start] = 1
    i = 0
    while i < len(order):
        for s in succ[order[i]].tolist():
            if good[s] and remap[s] == 0:
                order.append(s)
                remap[s] = len(order)
        i += 1
    new_delta = np.zeros((len(order) + 1, delta.shape[1]), dtype=np.int64)
    new_delta[1:] = remap[delta[order]]
    new_acc = np.zeros(len(order) + 1, dtype=bool)
    new_acc[1:] = accepting[order]
    return Dfa(domain, tracks, new_delta, new_acc, 1)


def empty(domain: Domain, tracks: Iterable[str] = ()) -> Dfa:
    tracks = tuple(sorted(tracks))
    m = len(domain.alphabet) + 1
    return Dfa(domain, tracks, np.zeros((1, m ** len(tracks)), dtype=np.int64),
               np.zeros(1, dtype=bool), 0)


def _explore(domain: Domain, tracks: tuple[str, ...], start: Hashable,
             step: Callable[[Hashable], Iterable[tuple[int | np.ndarray, Hashable]]],
             accept: Callable[[Hashable], bool]) -> Dfa:
    """Breadth-first construction from a successor function over keys.

    ``step`` yields (column or array of columns, successor key) pairs;
    columns it does not mention go to the dead state.
    """
    m = len(domain.alphabet) + 1
    ncols = m ** len(tracks)
    ids = {start: 1}
    keys = [None, start]
    rows = [np.zeros(ncols, dtype=np.int64)]
    i = 1
    while i < len(keys):
        row = np.zeros(ncols, dtype=np.int64)
        for col, nxt in step(keys[i]):
            q = ids.get(nxt)
            if q is None:
                q = ids[nxt] = len(keys)
                keys.append(nxt)
            row[col] = q
        rows.append(row)
        i += 1
    accepting = np.array([False] + [bool(accept(k)) for k in keys[1:]])
    return _finalize(domain, tracks, np.vstack(rows), accepting, 1)


@lru_cache(maxsize=256)
def universe(domain: Domain, tracks: tuple[str, ...] = ()) -> Dfa:
    """All well-formed assignments of ``tracks`` within the domain."""
    tracks = tuple(sorted(tracks))
    m = len(domain.alphabet) + 1
    pad = m - 1
    dig = _digits(m, len(tracks))
    bounds = [domain.bound_for(t) for t in tracks]
    exact = domain.length_mode == "exact"
    width = max(bounds, default=0)

    def step(key):
        j, ended = key
        if j >= width:
            return
        ok = np.ones(len(dig), dtype=bool)
        ok[-1] = False
        new_ended = np.zeros(len(dig), dtype=np.int64)
        for i, b in enumerate(bounds):
            is_pad = dig[:, i] == pad
            if exact:
                ok &= is_pad == (j >= b)
            else:
                if ended >> i & 1 or j >= b:
                    ok &= is_pad
                new_ended |= is_pad.astype(np.int64) << i
        for col in np.nonzero(ok)[0].tolist():
            yield col, (j + 1, int(new_ended[col]) if not exact else 0)

    def accept(key):
        return key[0] == width if exact else True

    return _explore(domain, tracks, (0, 0), step, accept)


def literal(domain: Domain, var: str, value: str) -> Dfa:
    """Single-track automaton accepting exactly ``value``."""
    domain.check_string(value, var)
    order = domain.order
    n = len(value)
    m = len(domain.alphabet) + 1
    delta = np.zeros((n + 2, m), dtype=np.int64)
    for j, ch in enumerate(value):
        delta[j + 1, order[ch]] = j + 2
    accepting = np.zeros(n + 2, dtype=bool)
    accepting[n + 1] = True
    return Dfa(domain, (var,), delta, accepting, 1)


# -- atoms -------------------------------------------------------------------

_LT, _EQ, _GT = -1, 0, 1
_TRUTH = {
    "=": lambda s: s == _EQ,
    "!=": lambda s: s != _EQ,
    "<": lambda s: s == _LT,
    "<=": lambda s: s != _GT,
    ">": lambda s: s == _GT,
    ">=": lambda s: s != _LT,
}


def _sources(t, lens: Mapping[str, int], order: Mapping[str, int]) -> list[tuple]:
    """Flatten a string term into per-character sources for fixed lengths.

    A source is ``("#", symbol_index)`` for a constant or ``(track, pos)``.
    """
    if isinstance(t, Var):
        if t.sort != STRING:
            raise UnsupportedConstraintError(f"integer variable {t.name} in string position")
        return [(t.name, p) for p in range(lens[t.name])]
    if isinstance(t, StrLit):
        try:
            return [("#", order[ch]) for ch in t.value]
        except KeyError as e:
            raise DomainError(f"literal {t.value!r} uses a symbol outside the alphabet") from e
    if isinstance(t, CharAt):
        return [(t.var.name, t.index)] if t.index < lens[t.var.name] else []
    if isinstance(t, Concat):
        return _sources(t.left, lens, order) + _sources(t.right, lens, order)
    raise UnsupportedConstraintError(f"unsupported string term {t!r}")


def _int_value(t, lens: Mapping[str, int]) -> int:
    if isinstance(t, IntLit):
        return t.value
    if isinstance(t, Length):
        return lens[t.var.name]
    raise UnsupportedConstraintError(f"unsupported integer term {t!r}")


class _Plan:
    """Comparison of two flattened terms under one fixed length assignment."""

    def __init__(self, lens: dict[str, int], op: str, steps=(), tail=_EQ, fixed=None):
        self.lens = lens
        self.width = max(lens.values(), default=0)
        self.truth = _TRUTH[op]
        self.steps = list(steps)
        self.tail = tail
        self.fixed = fixed
        # sources referenced at or after step m, by m
        refs = [frozenset()] * (len(self.steps) + 1)
        acc: set = set()
        for k in range(len(self.steps) - 1, -1, -1):
            acc |= {s for s in self.steps[k] if s[0] != "#"}
            refs[k] = frozenset(acc)
        self.refs = refs

    def settle(self, m: int, mem: dict, read: int):
        """Evaluate steps from ``m`` while both sides are known.

        Returns ("open", m) or ("done", truth).
        """
        if self.fixed is not None:
            return "done", self.fixed
        steps = self.steps
        while m < len(steps):
            a, b = steps[m]
            va = a[1] if a[0] == "#" else (mem[a] if a[1] < read else None)
            vb = b[1] if b[0] == "#" else (mem[b] if b[1] < read else None)
            if va is None or vb is None:
                return "open", m
            if va != vb:
                return "done", self.truth(_LT if va < vb else _GT)
            m += 1
        return "done", self.truth(self.tail)


    def settle_many(self, m: int, mem: dict, read: int, vals: dict, n: int):
        """Vectorized :meth:`settle` for ``n`` columns at once.

        ``vals`` maps freshly read sources to per-column symbol arrays.
        Returns (truth array, open mask, step where open columns wait).
        Open columns all wait at the same step because they agree on
        every step before it.
        """
        truth = np.zeros(n, dtype=bool)
        live = np.ones(n, dtype=bool)
        if self.fixed is not None:
            truth[:] = self.fixed
            live[:] = False
            return truth, live, m
        steps = self.steps
        while m < len(steps):
            va = self._value(steps[m][0], mem, read, vals)
            vb = self._value(steps[m][1], mem, read, vals)
            if va is None or vb is None:
                return truth, live, m
            lt = live & (va < vb)
            gt = live & (va > vb)
            truth[lt] = self.truth(_LT)
            truth[gt] = self.truth(_GT)
            live &= ~(lt | gt)
            if not live.any():
                return truth, live, m
            m += 1
        truth[live] = self.truth(self.tail)
        live[:] = False
        return truth, live, m

    @staticmethod
    def _value(src, mem, read, vals):
        if src[0] == "#":
            return src[1]
        if src in vals:
            return vals[src]
        if src[1] < read:
            return mem[src]
        return None


def _plans(atom: Cmp, domain: Domain, tracks: tuple[str, ...]) -> list[_Plan]:
    order = domain.order
    plans = []
    for combo in cartesian(*(domain.lengths_for(t) for t in tracks)):
        lens = dict(zip(tracks, combo))
        if term_sort(atom.left) == INT:
            a, b = _int_value(atom.left, lens), _int_value(atom.right, lens)
            ok = {"=": a == b, "!=": a != b, "<": a < b, "<=": a <= b,
                  ">": a > b, ">=": a >= b}[atom.op]
            plans.append(_Plan(lens, atom.op, fixed=ok))
            continue
        left = _sources(atom.left, lens, order)
        right = _sources(atom.right, lens, order)
        k = min(len(left), len(right))
        tail = _EQ if len(left) == len(right) else (_LT if len(left) < len(right) else _GT)
        plans.append(_Plan(lens, atom.op, zip(left[:k], right[:k]), tail))
    return plans


def _atom(atom: Cmp, domain: Domain) -> Dfa:
    tracks = free_names(atom)
    m = len(domain.alphabet) + 1
    pad = m - 1
    dig = _digits(m, len(tracks))
    plans = _plans(atom, domain, tracks)

    valid: dict[tuple[int, int], np.ndarray] = {}

    def columns(pi: int, j: int) -> np.ndarray:
        got = valid.get((pi, j))
        if got is None:
            lens = plans[pi].lens
            ok = np.ones(len(dig), dtype=bool)
            for i, t in enumerate(tracks):
                ok &= (dig[:, i] != pad) == (j < lens[t])
            ok[-1] = False
            got = valid[(pi, j)] = np.nonzero(ok)[0]
        return got

    # member key: (plan, columns read, None, True) once decided true, else
    # (plan, columns read, next step, remembered symbols)
    def member_step(key) -> list[tuple[np.ndarray, tuple]]:
        pi, j, m_, mem = key
        plan = plans[pi]
        if j >= plan.width:
            return []
        cols = columns(pi, j)
        if m_ is None:
            return [(cols, (pi, j + 1, None, True))]
        want = [(t, j) for t in tracks if (t, j) in plan.refs[m_]]
        if not want:
            return [(cols, (pi, j + 1, m_, mem))]
        vals = {w: dig[cols, tracks.index(w[0])] for w in want}
        base = dict(mem)
        truth, live, m_open = plan.settle_many(m_, base, j + 1, vals, len(cols))
        out = []
        if truth.any():
            out.append((cols[truth], (pi, j + 1, None, True)))
        if live.any():
            keep = plan.refs[m_open]
            kept_mem = [(s, v) for s, v in base.items() if s in keep]
            kept = [w for w in want if w in keep]
            open_cols = cols[live]
            if not kept:
                out.append((open_cols, (pi, j + 1, m_open, tuple(sorted(kept_mem)))))
            else:
                sub = np.stack([vals[w][live] for w in kept], axis=1)
                codes = sub @ (m ** np.arange(len(kept)))
                order = np.argsort(codes, kind="stable")
                _, first, counts = np.unique(codes[order], return_index=True, return_counts=True)
                for f, n in zip(first.tolist(), counts.tolist()):
                    remembered = kept_mem + list(zip(kept, sub[order[f]].tolist()))
                    out.append((open_cols[order[f:f + n]],
                                (pi, j + 1, m_open, tuple(sorted(remembered)))))
        return out

    starts = set()
    for pi, plan in enumerate(plans):
        status, val = plan.settle(0, {}, 0)
        if status == "done":
            if val:
                starts.add((pi, 0, None, True))
        else:
            starts.add((pi, 0, val, ()))
    if not starts:
        return empty(domain, tracks)

    def step(key):
        groups = [g for member in key for g in member_step(member)]
        if len(key) == 1:
            merged: dict[tuple, list[np.ndarray]] = {}
            for cols, nxt in groups:
                merged.setdefault(nxt, []).append(cols)
            return ((np.concatenate(cs), frozenset((nxt,))) for nxt, cs in merged.items())
        per_col: dict[int, set] = {}
        for cols, nxt in groups:
            for c in cols.tolist():
                per_col.setdefault(c, set()).add(nxt)
        by_set: dict[frozenset, list[int]] = {}
        for c, ms in per_col.items():
            by_set.setdefault(frozenset(ms), []).append(c)
        return ((np.array(cs), ms) for ms, cs in by_set.items())

    def accept(key):
        return any(j == plans[pi].width and m_ is None for pi, j, m_, _ in key)

    return _explore(domain, tracks, frozenset(starts), step, accept)


# -- boolean closure ---------------------------------------------------------


def _check_same_domain(a: Dfa, b: Dfa) -> None:
    if a.domain != b.domain:
        raise AutomatonError("automata are over different domains")


def _advance(a: Dfa, q: int, finished: int, idx: np.ndarray, pad: np.ndarray, extended: bool):
    """Successors of ``a`` on every merged column.

    When ``a`` is cylindrified onto extra tracks, a column whose restriction
    to ``a``'s tracks is all PAD leaves ``a`` in place (allowed only after
    ``a`` accepted), and no real symbol may follow such a column.
    """
    if q == 0:
        z = np.zeros(len(idx), dtype=np.int64)
        return z, z
    nxt = a.delta[q][idx]
    if not extended:
        return nxt, np.zeros(len(idx), dtype=np.int64)
    stay = q if a.accepting[q] else 0
    if finished:
        return np.where(pad, stay, 0), np.ones(len(idx), dtype=np.int64)
    return np.where(pad, stay, nxt), pad.astype(np.int64)


def _product(a: Dfa, b: Dfa, conjunctive: bool) -> Dfa:
    _check_same_domain(a, b)
    domain = a.domain
    tracks = tuple(sorted(set(a.tracks) | set(b.tracks)))
    m = len(domain.alphabet) + 1
    ncols = m ** len(tracks)
    ia, pa = _subcolumns(m, tracks, a.tracks)
    ib, pb = _subcolumns(m, tracks, b.tracks)
    ext_a, ext_b = a.tracks != tracks, b.tracks != tracks
    nb2 = 2 * b.n_states

    start = (a.start, 0, b.start, 0)
    ids = {(a.start * 2) * nb2 + b.start * 2: 1}
    states = [None, start]
    rows = [np.zeros(ncols, dtype=np.int64)]
    acc = [False]
    i = 1
    while i < len(states):
        qa, fa, qb, fb = states[i]
        na, nfa = _advance(a, qa, fa, ia, pa, ext_a)
        nb, nfb = _advance(b, qb, fb, ib, pb, ext_b)
        live = (na != 0) & (nb != 0) if conjunctive else (na != 0) | (nb != 0)
        live[-1] = False
        keys = (na * 2 + nfa) * nb2 + nb * 2 + nfb
        row = np.zeros(ncols, dtype=np.int64)
        if live.any():
            uniq, inv = np.unique(keys[live], return_inverse=True)
            targets = np.empty(len(uniq), dtype=np.int64)
            for u, k in enumerate(uniq.tolist()):
                q = ids.get(k)
                if q is None:
                    q = ids[k] = len(states)
                    sab, sb = divmod(k, nb2)
                    states.append((sab // 2, sab % 2, sb // 2, sb % 2))
                targets[u] = q
            row[live] = targets[inv]
        rows.append(row)
        x, y = bool(a.accepting[qa]), bool(b.accepting[qb])
        acc.append(x and y if conjunctive else x or y)
        i += 1
    return _finalize(domain, tracks, np.vstack(rows), np.array(acc), 1)


def intersect(a: Dfa, b: Dfa) -> Dfa:
    """Language intersection; tracks missing from an operand are unconstrained."""
    return _product(a, b, True)


def union(a: Dfa, b: Dfa) -> Dfa:
    out = _product(a, b, False)
    if a.tracks != b.tracks:
        # a dead operand no longer polices its own tracks
        out = intersect(out, universe(a.domain, out.tracks))
    return out


def complement(a: Dfa) -> Dfa:
    """Assignments of ``a``'s tracks within the domain that ``a`` rejects."""
    u = universe(a.domain, a.tracks)
    nu = u.n_states
    ids = {a.start * nu + u.start: 1}
    states = [None, (a.start, u.start)]
    rows = [np.zeros(a.n_columns, dtype=np.int64)]
    acc = [False]
    i = 1
    while i < len(states):
        qa, qu = states[i]
        na, nxu = a.delta[qa], u.delta[qu]
        live = nxu != 0
        row = np.zeros(a.n_columns, dtype=np.int64)
        if live.any():
            keys = na[live] * nu + nxu[live]
            uniq, inv = np.unique(keys, return_inverse=True)
            targets = np.empty(len(uniq), dtype=np.int64)
            for k_, k in enumerate(uniq.tolist()):
                q = ids.get(k)
                if q is None:
                    q = ids[k] = len(states)
                    states.append(divmod(k, nu))
                targets[k_] = q
            row[live] = targets[inv]
        rows.append(row)
        acc.append(not a.accepting[qa] and bool(u.accepting[qu]))
        i += 1
    return _finalize(a.domain, a.tracks, np.vstack(rows), np.array(acc), 1)


def extend(a: Dfa, tracks: Iterable[str]) -> Dfa:
    """Cylindrify ``a`` so that it also ranges over ``tracks``."""
    want = tuple(sorted(set(tracks) | set(a.tracks)))
    if want == a.tracks:
        return a
    return intersect(a, universe(a.domain, want))


# -- projection and instantiation ----------------------------------------------


def project(a: Dfa, keep: str | Iterable[str]) -> Dfa:
    """Existentially eliminate every track except ``keep``.

    Columns whose ``keep`` part is all PAD become epsilon moves; the result
    is determinized by subset construction.
    """
    keep = (keep,) if isinstance(keep, str) else tuple(sorted(keep))
    unknown = set(keep) - set(a.tracks)
    if unknown:
        raise AutomatonError(f"unknown track(s) {sorted(unknown)} for {a.tracks}")
    if keep == a.tracks:
        return a
    domain = a.domain
    m = len(domain.alphabet) + 1
    idx, pad = _subcolumns(m, a.tracks, keep)
    ncols = m ** len(keep)
    moves: dict[int, tuple[set[int], dict[int, set[int]]]] = {}

    def moves_of(q: int):
        got = moves.get(q)
        if got is None:
            row = a.delta[q]
            eps = set(row[pad].tolist()) - {0}
            lab: dict[int, set[int]] = {}
            live = (~pad) & (row != 0)
            for s, t in zip(idx[live].tolist(), row[live].tolist()):
                lab.setdefault(s, set()).add(t)
            got = moves[q] = (eps, lab)
        return got

    def closure(qs: Iterable[int]) -> frozenset[int]:
        seen = set(qs)
        stack = list(seen)
        while stack:
            for t in moves_of(stack.pop())[0]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)

    start = closure([a.start]) if a.start else frozenset()
    if not start:
        return empty(domain, keep)

    def step(subset):
        merged: dict[int, set[int]] = {}
        for q in subset:
            for s, ts in moves_of(q)[1].items():
                merged.setdefault(s, set()).update(ts)
        for s in sorted(merged):
            if s != ncols - 1:
                yield s, closure(merged[s])

    def accept(subset):
        return any(a.accepting[q] for q in subset)

    return _explore(domain, keep, start, step, accept)


def instantiate(a: Dfa, fixed: Dfa) -> Dfa:
    """Intersect ``a`` with a single-word automaton on one of its tracks and
    drop that track.

    ``fixed`` must be a one-track automaton with exactly one accepted word
    (as built by :func:`literal`).  Because the dropped track is determined,
    the result stays deterministic without subset construction and counts
    exactly like ``a & fixed``.
    """
    _check_same_domain(a, fixed)
    if len(fixed.tracks) != 1 or fixed.tracks[0] not in a.tracks:
        raise AutomatonError("instantiate needs a one-track automaton on a track of a")
    word = _single_word(fixed)
    var = fixed.tracks[0]
    domain = a.domain
    order = domain.order
    m = len(domain.alphabet) + 1
    rest = tuple(t for t in a.tracks if t != var)
    nrest = m ** len(rest)
    # merged column for (symbol on var, rest column)
    rest_idx, _ = _subcolumns(m, a.tracks, rest)
    var_idx, _ = _subcolumns(m, a.tracks, (var,))
    compose = np.zeros((m, nrest), dtype=np.int64)
    compose[var_idx, rest_idx] = np.arange(a.n_columns)
    syms = [order[ch] for ch in word]
    w = len(syms)

    def finish(q: int, p: int) -> bool:
        # rest tracks exhausted: feed the remainder of the word alone
        for s in syms[p:]:
            q = int(a.delta[q, compose[s, nrest - 1]])
            if q == 0:
                return False
        return bool(a.accepting[q])

    ids = {(a.start, 0): 1}
    states = [None, (a.start, 0)]
    rows = [np.zeros(nrest, dtype=np.int64)]
    acc = [False]
    i = 1
    while i < len(states):
        q, p = states[i]
        sym = syms[p] if p < w else m - 1
        nxt = a.delta[q][compose[sym]]
        live = nxt != 0
        live[-1] = False
        row = np.zeros(nrest, dtype=np.int64)
        p2 = min(p + 1, w)
        for col in np.nonzero(live)[0].tolist():
            key = (int(nxt[col]), p2)
            t = ids.get(key)
            if t is None:
                t = ids[key] = len(states)
                states.append(key)
            row[col] = t
        rows.append(row)
        acc.append(finish(q, p))
        i += 1
    return _finalize(domain, rest, np.vstack(rows), np.array(acc), 1)


def _single_word(a: Dfa) -> str:
    words = []
    q, cols = a.start, []
    while q:
        if a.accepting[q]:
            words.append(list(cols))
        live = a.groups[q]
        if len(live) > 1 or (live and len(live[0][1]) > 1):
            raise AutomatonError("automaton accepts more than one word")
        if not live:
            break
        q = live[0][0]
        cols.append(int(live[0][1][0]))
    if len(words) != 1:
        raise AutomatonError("automaton does not accept exactly one word")
    return _decode(a.domain, a.tracks, words[0])[a.tracks[0]]


# -- queries -----------------------------------------------------------------


def accepts(a: Dfa, assignment: Mapping[str, str]) -> bool:
    missing = [t for t in a.tracks if t not in assignment]
    if missing:
        raise AutomatonError(f"assignment does not cover track(s) {missing}")
    for t in a.tracks:
        a.domain.check_string(assignment[t], t)
    q = a.start
    for c in _encode(a.domain, a.tracks, assignment):
        q = a.delta[q, c]
        if q == 0:
            return False
    return bool(a.accepting[q])


def is_empty(a: Dfa) -> bool:
    """True iff no accepting state is reachable within the length bound."""
    if a.start == 0:
        return True
    frontier, seen = {a.start}, {a.start}
    for depth in range(a.max_length + 1):
        if any(a.accepting[q] for q in frontier):
            return False
        if depth == a.max_length:
            break
        nxt = set()
        for q in frontier:
            for s, _ in a.edges[q]:
                if s not in seen:
                    seen.add(s)
                    nxt.add(s)
        frontier = nxt
    return True


def sample_model(a: Dfa, rng: random.Random) -> dict[str, str]:
    """Uniformly random accepted assignment.

    Picks a length with probability proportional to its number of accepted
    column strings, then walks forward choosing each successor with weight
    equal to its number of accepted completions.
    """
    table = a.suffix_counts
    per_length = [table[n][a.start] for n in range(len(table))]
    total = sum(per_length)
    if total == 0:
        raise EmptyLanguageError("cannot sample from an empty language")
    x = rng.randrange(total)
    n = 0
    while x >= per_length[n]:
        x -= per_length[n]
        n += 1
    q, cols = a.start, []
    for r in range(n, 0, -1):
        below = table[r - 1]
        x = rng.randrange(table[r][q])
        for s, cs in a.groups[q]:
            w = len(cs) * below[s]
            if x < w:
                cols.append(int(cs[x // below[s]]))
                q = s
                break
            x -= w
    return _decode(a.domain, a.tracks, cols)


def to_dot(a: Dfa, name: str = "A") -> str:
    """Graphviz rendering; edge labels list up to four columns."""
    m = len(a.domain.alphabet) + 1
    def label(c: int) -> str:
        parts = []
        for i in range(len(a.tracks)):
            s = (c // m**i) % m
            parts.append("#" if s == m - 1 else a.domain.alphabet[s])
        return ",".join(parts)

    lines = [f"digraph {name} {{", "  rankdir=LR;", '  start [shape=point];']
    for q in range(1, a.n_states):
        shape = "doublecircle" if a.accepting[q] else "circle"
        lines.append(f"  q{q} [shape={shape}];")
    if a.start:
        lines.append(f"  start -> q{a.start};")
    for q in range(1, a.n_states):
        for s, cols in a.groups[q]:
            shown = " ".join(label(int(c)) for c in cols[:4])
            more = f" +{len(cols) - 4}" if len(cols) > 4 else ""
            lines.append(f'  q{q} -> q{s} [label="{shown}{more}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- constraints to automata ---------------------------------------------------


def from_constraint(c: Constraint, domain: Domain, tracks: Iterable[str] = ()) -> Dfa:
    """Automaton whose language is the solution set of ``c`` in ``domain``.

    The result ranges over the free variables of ``c`` plus ``tracks``.
    """
    a = _compile(c, domain)
    return extend(a, tracks) if tracks else a


def _compile(c: Constraint, domain: Domain) -> Dfa:
    if isinstance(c, Cmp):
        return _atom(c, domain)
    if isinstance(c, EqConst):
        name = c.var.name
        # a well-formed literal of inadmissible length is simply unsatisfiable
        if all(ch in domain.order for ch in c.value) and len(c.value) not in domain.lengths_for(name):
            return empty(domain, (name,))
        return literal(domain, name, c.value)
    if isinstance(c, Not):
        return complement(_compile(c.child, domain))
    if isinstance(c, And):
        if not c.children:
            return universe(domain, ())
        out = _compile(c.children[0], domain)
        for ch in c.children[1:]:
            if out.start == 0:
                break
            out = intersect(out, _compile(ch, domain))
        if out.start == 0:
            return empty(domain, free_names(c))
        return out
    if isinstance(c, Or):
        if not c.children:
            return empty(domain, ())
        out = _compile(c.children[0], domain)
        for ch in c.children[1:]:
            out = union(out, _compile(ch, domain))
        return out
    raise UnsupportedConstraintError(f"unsupported constraint node {c!r}")
