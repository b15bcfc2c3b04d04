"""Adaptive attack synthesis: observation classes, the attack loop and
input-selection strategies (model sampling and simulated annealing)."""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import automata
from .automata import Dfa
from .constraints import (
    TRUE,
    Constraint,
    Domain,
    H,
    L,
    Var,
    conj,
    disj,
    free_names,
    substitute,
)
from .counting import ModelCounter
from .infotheory import entropy_of_count, mutual_info_of_counts

MODEL = "model"
SA = "sa"
SA_INC = "sa-inc"
STRATEGIES = (MODEL, SA, SA_INC)

COMPLETE = "complete"
INCOMPLETE = "incomplete"

STOP_COMPLETE = "complete"
STOP_STAGNATION = "stagnation"
STOP_MAX_STEPS = "max_steps"
STOP_TIME = "time_budget"

STAGNATION_BITS = 1e-6
STAGNATION_STEPS = 3
NEIGHBOR_RETRIES = 16


class AttackError(RuntimeError):
    pass


class ObservationError(AttackError):
    """Zero or several observation classes match a concrete run."""


@dataclass(frozen=True)
class PathConstraint:
    constraint: Constraint
    cost: int

    def __post_init__(self):
        if self.cost < 0:
            raise ValueError("path cost must be nonnegative")


@dataclass(frozen=True)
class ObservationConstraint:
    id: int
    representative_cost: int
    cost_range: tuple[int, int]
    members: tuple[PathConstraint, ...]

    @property
    def constraint(self) -> Constraint:
        return disj(*(p.constraint for p in self.members))


def generate_constraints(paths: Sequence[PathConstraint], delta: int) -> list[ObservationConstraint]:
    """Merge paths whose costs are closer than ``delta`` into observation classes.

    Distinct costs are sorted and a new class starts whenever the gap to
    the previous cost is at least ``delta``.  A class is represented by its
    smallest cost.
    """
    if not paths:
        raise ValueError("no path constraints")
    if delta < 1:
        raise ValueError("delta must be >= 1")
    costs = sorted({p.cost for p in paths})
    groups: list[list[int]] = [[costs[0]]]
    for c in costs[1:]:
        if c - groups[-1][-1] >= delta:
            groups.append([c])
        else:
            groups[-1].append(c)
    out = []
    for i, g in enumerate(groups):
        members = tuple(p for p in paths if g[0] <= p.cost <= g[-1])
        out.append(ObservationConstraint(i, g[0], (g[0], g[-1]), members))
    return out


@dataclass(frozen=True)
class SAParams:
    t0: float = 10.0
    t_min: float = 0.001
    k: float = 0.1

    def __post_init__(self):
        if not (0 < self.t_min < self.t0):
            raise ValueError("need 0 < t_min < t0")
        if not (0 < self.k < 1):
            raise ValueError("cooling rate k must be in (0, 1)")


@dataclass
class KnowledgeState:
    """What the attacker knows: ``c_h`` and its automaton over the high track."""

    c_h: Constraint
    dfa: Dfa
    count: int
    step: int = 0

    @property
    def entropy(self) -> float:
        return entropy_of_count(self.count)


@dataclass
class TraceRow:
    step: int
    entropy_before: float
    entropy_after: float
    l_star: str
    observation_id: int
    cost: int
    expected_gain: float


@dataclass
class AttackTrace:
    strategy: str
    seed: int | None
    secret: str
    rows: list[TraceRow] = field(default_factory=list)
    h_init: float = 0.0
    h_final: float = 0.0
    outcome: str = INCOMPLETE
    stop_reason: str = ""
    queries: int = 0
    counting_seconds: float = 0.0
    wall_seconds: float = 0.0
    cache: dict = field(default_factory=dict)
    n_classes: int = 0
    recovered: str | None = None
    final_state: KnowledgeState | None = field(default=None, repr=False)

    @property
    def steps(self) -> int:
        return len(self.rows)

    def report(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "secret": self.secret,
            "steps": self.steps,
            "H_init": self.h_init,
            "H_final": self.h_final,
            "outcome": self.outcome,
            "stop_reason": self.stop_reason,
            "observation_classes": self.n_classes,
            "recovered": self.recovered,
            "model_count_queries": self.queries,
            "model_count_seconds": self.counting_seconds,
            "wall_seconds": self.wall_seconds,
            "cache": self.cache,
            "rows": [vars(r) for r in self.rows],
        }


class Attack:
    """Knowledge state plus the automata and counters one attack run needs."""

    def __init__(self, classes: Sequence[ObservationConstraint], domain: Domain,
                 counter: ModelCounter, high: Var = H, low: Var = L,
                 concrete_cost: Callable[[str, str], int] | None = None):
        if not classes:
            raise ValueError("no observation classes")
        self.classes = list(classes)
        self.psis = [c.constraint for c in self.classes]
        for psi in self.psis:
            extra = set(free_names(psi)) - {high.name, low.name}
            if extra:
                raise AttackError(f"observation constraint mentions {sorted(extra)}")
        self.domain = domain
        self.counter = counter
        self.high = high
        self.low = low
        self.concrete_cost = concrete_cost
        tracks = (high.name, low.name)
        self.psi_dfas = [automata.from_constraint(p, domain, tracks) for p in self.psis]
        a_h = automata.universe(domain, (high.name,))
        self.state = KnowledgeState(TRUE, a_h, self._count(a_h))
        self._memo: dict[tuple[int, str], tuple[float, list[int]]] = {}
        self._low_cache: dict[int, tuple[Dfa, Dfa]] = {}

    @staticmethod
    def _count(a: Dfa) -> int:
        t = a.suffix_counts
        return sum(row[a.start] for row in t)

    # -- observations ---------------------------------------------------------

    def observe(self, h_star: str, l_star: str) -> int:
        """Id of the unique class satisfied by ``(h_star, l_star)``."""
        asg = {self.high.name: h_star, self.low.name: l_star}
        hits = [i for i, a in enumerate(self.psi_dfas) if automata.accepts(a, asg)]
        if len(hits) != 1:
            raise ObservationError(
                f"{len(hits)} observation classes match h={h_star!r}, l={l_star!r}")
        o = hits[0]
        if self.concrete_cost is not None:
            cost = self.concrete_cost(h_star, l_star)
            lo, hi = self.classes[o].cost_range
            if not lo <= cost <= hi:
                raise ObservationError(
                    f"concrete cost {cost} disagrees with class {o} range {lo}..{hi}")
        return o

    def cost_of(self, o: int, h_star: str, l_star: str) -> int:
        if self.concrete_cost is not None:
            return self.concrete_cost(h_star, l_star)
        return self.classes[o].representative_cost

    def update(self, o: int, l_star: str) -> None:
        """Conjoin ``psi_o[l -> l_star]`` to the knowledge state."""
        inst = substitute(self.psis[o], self.low, l_star, self.domain)
        a_l = automata.literal(self.domain, self.low.name, l_star)
        a = automata.intersect(self.state.dfa, automata.instantiate(self.psi_dfas[o], a_l))
        a = automata.extend(a, (self.high.name,))
        c_h = conj(self.state.c_h, inst)
        self.state = KnowledgeState(c_h, a, self._count(a), self.state.step + 1)
        self._memo.clear()

    # -- objective ------------------------------------------------------------

    def class_counts(self, l_val: str) -> list[int]:
        c_h = self.state.c_h
        self.counter.register(c_h, self.state.dfa)
        return [self.counter.count_query(c_h, psi, l_val) for psi in self.psis]

    def mutual_info(self, l_val: str) -> float:
        key = (self.state.step, l_val)
        got = self._memo.get(key)
        if got is None:
            counts = self.class_counts(l_val)
            got = self._memo[key] = (mutual_info_of_counts(counts, self.state.count), counts)
        return got[0]

    # -- low-input sets -------------------------------------------------------

    def _per_class_low(self) -> list[Dfa]:
        ext = automata.extend(self.state.dfa, (self.high.name, self.low.name))
        return [automata.project(automata.intersect(ext, a), self.low.name)
                for a in self.psi_dfas]

    def low_sets(self) -> tuple[Dfa, Dfa]:
        """(consistent inputs, informative inputs) for the current knowledge.

        Consistent inputs are ``exists h. C_h & (psi_1 | ... | psi_n)``.
        Informative inputs are those for which at least two classes remain
        possible, i.e. the only inputs whose observation can shrink ``C_h``.
        """
        got = self._low_cache.get(self.state.step)
        if got is None:
            seen = multi = None
            for p in self._per_class_low():
                if seen is None:
                    seen, multi = p, automata.empty(self.domain, (self.low.name,))
                else:
                    multi = automata.union(multi, automata.intersect(seen, p))
                    seen = automata.union(seen, p)
            self._low_cache.clear()
            got = self._low_cache[self.state.step] = (seen, multi)
        return got

    def project_low(self) -> Dfa:
        return self.low_sets()[0]

    def candidate_inputs(self) -> Dfa:
        """Search space for the strategies: informative inputs when any
        exist, otherwise every consistent input."""
        consistent, informative = self.low_sets()
        if automata.is_empty(consistent):
            raise AttackError("no consistent low input; knowledge or classes are broken")
        return consistent if automata.is_empty(informative) else informative

    def feasible(self, h_star: str) -> bool:
        return automata.accepts(self.state.dfa, {self.high.name: h_star})


# -- input selection -------------------------------------------------------------


def get_input(space: Dfa, low: str, rng: random.Random) -> str:
    return automata.sample_model(space, rng)[low]


def get_neighbor_input(l_val: str, space: Dfa, low: str, domain: Domain,
                       rng: random.Random, retries: int = NEIGHBOR_RETRIES) -> str:
    """Change one uniformly chosen position of ``l_val`` to a different
    symbol; retry until the mutant lies in ``space``, else resample."""
    alphabet = domain.alphabet
    if l_val and len(alphabet) > 1:
        for _ in range(retries):
            i = rng.randrange(len(l_val))
            sym = rng.choice([s for s in alphabet if s != l_val[i]])
            cand = l_val[:i] + sym + l_val[i + 1:]
            if automata.accepts(space, {low: cand}):
                return cand
    return get_input(space, low, rng)


def attack_input_model(attack: Attack, rng: random.Random, first: bool = False) -> str:
    """One uniformly random candidate input (the full domain on the first step)."""
    if first:
        return attack.domain.random_string(rng, attack.low.name)
    return get_input(attack.candidate_inputs(), attack.low.name, rng)


def attack_input_sa(attack: Attack, params: SAParams, rng: random.Random) -> str:
    """Simulated annealing over candidate inputs, maximizing mutual information.

    The walk always mutates the most recent candidate; a candidate is
    accepted when it improves on the accepted objective or with probability
    ``exp((I_new - I) / t)``.  The best candidate seen is returned.
    """
    space = attack.candidate_inputs()
    low = attack.low.name
    t = params.t0
    l_val = get_input(space, low, rng)
    cur = attack.mutual_info(l_val)
    best, best_i = l_val, cur
    while t >= params.t_min:
        l_val = get_neighbor_input(l_val, space, low, attack.domain, rng)
        new = attack.mutual_info(l_val)
        if new > cur or math.exp((new - cur) / t) > rng.random():
            cur = new
            if new > best_i:
                best, best_i = l_val, new
        t -= t * params.k
    return best


# -- attack loop ---------------------------------------------------------------


def check_partition(attack: Attack, rng: random.Random, samples: int) -> None:
    """Raise ObservationError unless each sampled (h, l) lands in exactly one class."""
    for _ in range(samples):
        h = attack.domain.random_string(rng, attack.high.name)
        l = attack.domain.random_string(rng, attack.low.name)
        attack.observe(h, l)


def run_attack(classes: Sequence[ObservationConstraint], domain: Domain, h_star: str,
               strategy: str = SA, *, seed: int | None = None,
               rng: random.Random | None = None, params: SAParams = SAParams(),
               max_steps: int = 200, time_budget: float | None = None,
               high: Var = H, low: Var = L,
               concrete_cost: Callable[[str, str], int] | None = None,
               counter: ModelCounter | None = None, cross_check: bool = False,
               partition_samples: int = 200,
               on_step: Callable[[Attack, TraceRow], None] | None = None) -> AttackTrace:
    """Run the adaptive attack against the secret ``h_star``.

    Stops when the secret is determined, when the best expected gain stays
    below ``STAGNATION_BITS`` for ``STAGNATION_STEPS`` consecutive steps, or
    on the step or time budget.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    domain.check_string(h_star, high.name)
    if rng is None:
        rng = random.Random(seed)
    if counter is None:
        counter = ModelCounter(domain, high, low, incremental=strategy != SA,
                               cross_check=cross_check)
    attack = Attack(classes, domain, counter, high, low, concrete_cost)
    if partition_samples:
        audit_seed = rng.getrandbits(64) if seed is None else seed
        check_partition(attack, random.Random(f"partition:{audit_seed}"), partition_samples)

    trace = AttackTrace(strategy, seed, h_star, n_classes=len(classes))
    t_start = time.perf_counter()
    trace.h_init = attack.state.entropy
    flat = 0
    stop = ""
    while attack.state.count > 1:
        if len(trace.rows) >= max_steps:
            stop = STOP_MAX_STEPS
            break
        if time_budget is not None and time.perf_counter() - t_start > time_budget:
            stop = STOP_TIME
            break
        if strategy == MODEL:
            l_star = attack_input_model(attack, rng, first=not trace.rows)
        else:
            l_star = attack_input_sa(attack, params, rng)
        gain = attack.mutual_info(l_star)
        before = attack.state.entropy
        o = attack.observe(h_star, l_star)
        cost = attack.cost_of(o, h_star, l_star)
        attack.update(o, l_star)
        if not attack.feasible(h_star):
            raise AttackError("true secret excluded from knowledge; classes are inconsistent")
        row = TraceRow(attack.state.step, before, attack.state.entropy, l_star, o, cost, gain)
        trace.rows.append(row)
        if on_step is not None:
            on_step(attack, row)
        flat = flat + 1 if gain < STAGNATION_BITS else 0
        if flat >= STAGNATION_STEPS:
            stop = STOP_STAGNATION
            break
    if attack.state.count == 1:
        stop = STOP_COMPLETE
        trace.outcome = COMPLETE
        trace.recovered = automata.sample_model(attack.state.dfa, random.Random(0))[high.name]
    trace.stop_reason = stop
    trace.h_final = attack.state.entropy
    trace.queries = counter.queries
    trace.counting_seconds = counter.seconds
    trace.cache = counter.cache.stats.as_dict()
    trace.wall_seconds = time.perf_counter() - t_start
    trace.final_state = attack.state
    return trace

