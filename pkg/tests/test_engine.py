import random
from collections import Counter

import pytest

from attacksynth import automata
from attacksynth.constraints import TRUE, CharAt, Cmp, Domain, DomainError, H, L, Or, StrLit, Var
from attacksynth.counting import ModelCounter
from attacksynth.engine import (
    COMPLETE,
    MODEL,
    SA,
    SA_INC,
    STOP_STAGNATION,
    Attack,
    AttackError,
    ObservationConstraint,
    ObservationError,
    PathConstraint,
    SAParams,
    attack_input_model,
    attack_input_sa,
    generate_constraints,
    get_input,
    get_neighbor_input,
    run_attack,
)
from attacksynth.targets import builtin

FIRST_1_OR_2 = Or((Cmp("=", CharAt(L, 0), StrLit("1")), Cmp("=", CharAt(L, 0), StrLit("2"))))


def make_attack(name):
    t = builtin(name)
    return t, Attack(t.classes(), t.domain, ModelCounter(t.domain, H, L), H, L, t.concrete_cost)


def paths(*costs):
    return [PathConstraint(Cmp("=", CharAt(H, 0), StrLit(str(i))), c) for i, c in enumerate(costs)]


class TestGenerateConstraints:
    def test_pin_costs_stay_apart(self):
        got = generate_constraints(paths(63, 78, 93, 108, 123), 10)
        assert [c.representative_cost for c in got] == [63, 78, 93, 108, 123]
        assert [c.id for c in got] == [0, 1, 2, 3, 4]

    def test_wide_delta_merges_everything(self):
        got = generate_constraints(paths(63, 78, 93, 108, 123), 20)
        assert len(got) == 1 and got[0].cost_range == (63, 123)
        assert len(got[0].members) == 5

    def test_gap_clustering(self):
        got = generate_constraints(paths(30, 10, 12, 31), 5)
        assert [(c.cost_range, len(c.members)) for c in got] == [((10, 12), 2), ((30, 31), 2)]

    def test_equal_costs_share_a_class(self):
        got = generate_constraints(paths(42, 42, 67), 10)
        assert [len(c.members) for c in got] == [2, 1]

    def test_bad_input(self):
        with pytest.raises(ValueError):
            generate_constraints([], 10)
        with pytest.raises(ValueError):
            generate_constraints(paths(1), 0)
        with pytest.raises(ValueError):
            PathConstraint(TRUE, -1)


class TestObserve:
    def test_pin_second_digit_mismatch(self):
        t, a = make_attack("pci")
        o = a.observe("1337", "1058")
        assert a.classes[o].representative_cost == 78
        assert a.cost_of(o, "1337", "1058") == 78

    def test_inequality(self):
        t, a = make_attack("si")
        o = a.observe("LL", "MZ")
        assert a.classes[o].representative_cost == 42
        assert a.classes[a.observe("NA", "MZ")].representative_cost == 67

    def test_overlapping_classes_rejected(self, upper2):
        classes = [ObservationConstraint(0, 1, (1, 1), (PathConstraint(TRUE, 1),)),
                   ObservationConstraint(1, 50, (50, 50), (PathConstraint(Cmp("<=", H, L), 50),))]
        a = Attack(classes, upper2, ModelCounter(upper2, H, L))
        with pytest.raises(ObservationError):
            a.observe("AA", "AB")

    def test_cost_disagreement_detected(self):
        t = builtin("si")
        a = Attack(t.classes(), t.domain, ModelCounter(t.domain, H, L), H, L, lambda h, l: 1000)
        with pytest.raises(ObservationError):
            a.observe("LL", "MZ")

    def test_foreign_variable(self, upper2):
        cls = ObservationConstraint(0, 1, (1, 1), (PathConstraint(Cmp("=", H, StrLit("AA")), 1),))
        bad = ObservationConstraint(
            1, 9, (9, 9), (PathConstraint(Cmp("=", H, Var("z")), 9),))
        with pytest.raises(AttackError):
            Attack([cls, bad], upper2, ModelCounter(upper2, H, L))


class TestLowSets:
    def test_initial_pin(self):
        _, a = make_attack("pci")
        consistent, informative = a.low_sets()
        assert consistent.tracks == ("l",)
        assert a._count(consistent) == 10_000 and a._count(informative) == 10_000

    def test_after_partial_knowledge(self):
        t, a = make_attack("si")
        a.update(a.observe("LL", "MZ"), "MZ")
        consistent, informative = a.low_sets()
        assert a._count(consistent) == 676
        # l >= "MZ" puts every remaining h on the <= side
        assert a._count(informative) == 338 - 1
        assert a.candidate_inputs() is informative

    def test_update_matches_substitution(self):
        t, a = make_attack("si")
        a.update(a.observe("LL", "MZ"), "MZ")
        assert a.state.count == 338
        assert a.feasible("LL") and not a.feasible("NA")


class TestInputs:
    def test_samples_follow_space(self, digits4):
        space = automata.from_constraint(Cmp("=", CharAt(L, 0), StrLit("1")), digits4)
        rng = random.Random(6)
        assert all(get_input(space, "l", rng).startswith("1") for _ in range(200))

    def test_coverage_of_small_space(self):
        d = Domain("0123456789", 2)
        space = automata.from_constraint(FIRST_1_OR_2, d)
        assert a_count(space) == 20
        rng = random.Random(17)
        seen = {get_input(space, "l", rng) for _ in range(200)}
        assert len(seen) >= 18

    def test_neighbor_changes_one_position(self, upper2):
        space = automata.universe(upper2, ("l",))
        rng = random.Random(3)
        pos = Counter()
        for _ in range(4000):
            n = get_neighbor_input("MZ", space, "l", upper2, rng)
            diff = [i for i in range(2) if n[i] != "MZ"[i]]
            assert len(diff) == 1
            pos[diff[0]] += 1
        assert abs(pos[0] / 4000 - 0.5) < 0.05

    def test_neighbor_stays_in_space(self, upper2):
        space = automata.from_constraint(Cmp("<=", L, StrLit("BZ")), upper2)
        rng = random.Random(4)
        for _ in range(300):
            assert get_neighbor_input("AZ", space, "l", upper2, rng) <= "BZ"

    def test_model_first_step_uses_whole_domain(self):
        _, a = make_attack("pci")
        l_val = attack_input_model(a, random.Random(1), first=True)
        assert len(l_val) == 4 and l_val.isdigit()


def a_count(dfa):
    return Attack._count(dfa)


class TestSimulatedAnnealing:
    def test_near_optimal_on_inequality(self):
        for seed in range(5):
            _, a = make_attack("si")
            l_val = attack_input_sa(a, SAParams(), random.Random(seed))
            assert a.mutual_info(l_val) >= 1.0 - 0.05

    def test_params_validated(self):
        with pytest.raises(ValueError):
            SAParams(t0=1.0, t_min=2.0)
        with pytest.raises(ValueError):
            SAParams(k=1.0)

    def test_pin_objective_is_flat(self):
        _, a = make_attack("pci")
        rng = random.Random(0)
        values = {a.mutual_info(a.domain.random_string(rng, "l")) for _ in range(50)}
        assert max(values) - min(values) <= 1e-9
        assert min(values) == pytest.approx(0.5210541044776917, abs=1e-9)


class TestRunAttack:
    def test_sa_and_incremental_identical(self):
        t = builtin("si")
        runs = [run_attack(t.classes(), t.domain, "LL", s, seed=5, concrete_cost=t.concrete_cost)
                for s in (SA, SA_INC)]
        assert [r.l_star for r in runs[0].rows] == [r.l_star for r in runs[1].rows]
        assert [r.entropy_after for r in runs[0].rows] == [r.entropy_after for r in runs[1].rows]
        assert runs[0].outcome == runs[1].outcome == COMPLETE
        assert runs[0].recovered == "LL"

    def test_knowledge_shrinks_and_keeps_secret(self):
        t = builtin("pci")
        counts = []

        def check(attack, row):
            assert attack.feasible("1337")
            counts.append(attack.state.count)

        trace = run_attack(t.classes(), t.domain, "1337", MODEL, seed=2,
                           concrete_cost=t.concrete_cost, on_step=check)
        assert trace.outcome == COMPLETE and trace.recovered == "1337"
        assert counts == sorted(counts, reverse=True) and counts[-1] == 1
        assert trace.rows[-1].l_star == "1337"

    def test_same_seed_same_trace(self):
        t = builtin("si")
        a = run_attack(t.classes(), t.domain, "QB", MODEL, seed=11)
        b = run_attack(t.classes(), t.domain, "QB", MODEL, seed=11)
        assert [(r.l_star, r.observation_id) for r in a.rows] == \
            [(r.l_star, r.observation_id) for r in b.rows]

    def test_constant_time_stagnates(self):
        t = builtin("pcs")
        trace = run_attack(t.classes(), t.domain, "QXRT", MODEL, seed=0)
        assert trace.stop_reason == STOP_STAGNATION
        assert trace.h_final == trace.h_init

    def test_step_budget(self):
        t = builtin("pci")
        trace = run_attack(t.classes(), t.domain, "1337", MODEL, seed=0, max_steps=2)
        assert trace.steps == 2 and trace.stop_reason == "max_steps"

    def test_bad_strategy_and_secret(self):
        t = builtin("si")
        with pytest.raises(ValueError):
            run_attack(t.classes(), t.domain, "LL", "greedy")
        with pytest.raises(DomainError):
            run_attack(t.classes(), t.domain, "L", SA)
