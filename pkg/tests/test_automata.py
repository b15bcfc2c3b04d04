import random
from collections import Counter

import pytest

from attacksynth import automata
from attacksynth.automata import (
    AutomatonError,
    EmptyLanguageError,
    UnsupportedConstraintError,
    accepts,
    complement,
    from_constraint,
    instantiate,
    intersect,
    is_empty,
    literal,
    project,
    sample_model,
    union,
    universe,
)
from attacksynth.constraints import (
    TRUE,
    UP_TO,
    And,
    CharAt,
    Cmp,
    DomainError,
    Domain,
    H,
    IntLit,
    L,
    Not,
    Or,
    StrLit,
    Var,
    conj,
    evaluate,
    substitute,
)
from attacksynth.counting import count_paths
from attacksynth.dsl import parse_constraint
from conftest import FormulaGen, X, Y, assignments, brute_count, brute_models, random_domain

PSI = [
    parse_constraint("(!= (charAt h 0) (charAt l 0))"),
    parse_constraint("(and (= (charAt h 0) (charAt l 0)) (!= (charAt h 1) (charAt l 1)))"),
]
# chi-square 0.99 quantile for 337 degrees of freedom (scipy.stats.chi2.ppf(0.99, 337))
CHI2_337_P01 = 400.3194100663302


def language(a, domain, tracks):
    return {tuple(asg[t] for t in tracks) for asg in assignments(domain, tracks) if accepts(a, asg)}


def count(a):
    return count_paths(a).count


class TestFromConstraint:
    def test_true_digits(self, digits4):
        a = from_constraint(TRUE, digits4, ("h",))
        a.check_structure()
        assert a.tracks == ("h",)
        assert count(a) == 10_000

    def test_le_mz(self, upper2):
        c = Cmp("<=", H, StrLit("MZ"))
        a = from_constraint(c, upper2)
        a.check_structure()
        assert count(a) == brute_count(c, upper2, ("h",)) == 338

    def test_full_match_instantiated(self, digits4):
        all_match = conj(*(Cmp("=", CharAt(H, i), CharAt(L, i)) for i in range(4)))
        a = from_constraint(substitute(all_match, L, "1337", digits4), digits4)
        assert language(a, Domain("0123456789", 4), ("h",)) == {("1337",)}

    def test_int_variable_unsupported(self, upper2):
        n = Var("n", "int")
        with pytest.raises(UnsupportedConstraintError):
            from_constraint(Cmp("=", n, IntLit(3)), upper2)

    def test_literal_outside_alphabet(self, upper2):
        with pytest.raises(DomainError):
            from_constraint(Cmp("=", H, StrLit("a1")), upper2)

    def test_exhaustive_membership(self):
        # membership agrees with direct evaluation on every assignment
        rng = random.Random(7)
        for _ in range(120):
            d = random_domain(rng)
            c = FormulaGen(rng, "".join(d.alphabet)).formula(3)
            a = from_constraint(c, d, ("x", "y"))
            a.check_structure()
            for asg in assignments(d, ("x", "y")):
                assert accepts(a, asg) == evaluate(c, asg, d), (c, asg)


class TestBoolean:
    d = Domain("abc", 2)
    a = Cmp("<", CharAt(X, 0), CharAt(Y, 1))
    b = Cmp("=", X, Y)

    def test_a_and_not_a_empty(self):
        A = from_constraint(self.a, self.d)
        assert is_empty(intersect(A, complement(A)))
        assert count(intersect(A, complement(A))) == 0

    def test_inclusion_exclusion(self):
        A, B = from_constraint(self.a, self.d), from_constraint(self.b, self.d)
        tracks = ("x", "y")
        expect = brute_count(Or((self.a, self.b)), self.d, tracks)
        assert count(union(A, B)) == expect
        assert count(A) + count(B) - count(intersect(A, B)) == expect

    def test_true_is_identity(self):
        B = from_constraint(self.b, self.d)
        both = intersect(universe(self.d, ("x", "y")), B)
        assert language(both, self.d, ("x", "y")) == language(B, self.d, ("x", "y"))

    def test_merge_tracks(self):
        # a track absent from one operand is unconstrained there
        A = from_constraint(Cmp("=", X, StrLit("ab")), self.d)
        B = from_constraint(Cmp("=", Y, StrLit("ca")), self.d)
        assert A.tracks == ("x",) and B.tracks == ("y",)
        assert count(union(A, B)) == 9 + 9 - 1
        assert count(intersect(A, B)) == 1

    def test_domain_mismatch(self):
        A = from_constraint(self.a, self.d)
        B = from_constraint(self.a, Domain("abc", 3))
        with pytest.raises(AutomatonError):
            intersect(A, B)

    def test_de_morgan(self):
        rng = random.Random(3)
        for _ in range(40):
            d = random_domain(rng)
            g = FormulaGen(rng, "".join(d.alphabet))
            p, q = g.formula(2), g.formula(2)
            tracks = ("x", "y")
            lhs = from_constraint(Not(And((p, q))), d, tracks)
            rhs = from_constraint(Or((Not(p), Not(q))), d, tracks)
            assert language(lhs, d, tracks) == language(rhs, d, tracks)
            assert language(lhs, d, tracks) == brute_models(Not(And((p, q))), d, tracks)

    def test_complement_of_true(self, upper2):
        assert is_empty(complement(universe(upper2, ("h",))))

    def test_up_to_union_pads(self):
        d = Domain("ab", 2, UP_TO)
        A = from_constraint(Cmp("=", X, StrLit("a")), d)
        B = from_constraint(Cmp("=", Y, StrLit("")), d)
        got = union(A, B)
        got.check_structure()
        assert count(got) == brute_count(Or((Cmp("=", X, StrLit("a")), Cmp("=", Y, StrLit("")))),
                                         d, ("x", "y"))


class TestProject:
    def test_initial_pin_projection_is_everything(self, digits4):
        c = Or(tuple(PSI) + (Cmp("=", CharAt(H, 0), CharAt(L, 0)),))
        assert count(project(from_constraint(c, digits4), "l")) == 10_000

    def test_tautology_over_l(self, upper2):
        c = And((Cmp("=", H, StrLit("LL")), Or((Cmp("<=", H, L), Cmp(">", H, L)))))
        assert count(project(from_constraint(c, upper2), "l")) == 676

    def test_psi1_8299(self):
        # enumerate at length 2, then the closed form 9 * 10^(k-1) at length 4
        for k, want in ((2, 90), (4, 9000)):
            d = Domain("0123456789", k)
            lval = "8299"[:k]
            A = intersect(from_constraint(PSI[0], d), literal(d, "l", lval))
            P = project(A, "h")
            assert count(P) == want
            if k == 2:
                oracle = {(h,) for (h, l) in brute_models(PSI[0], d, ("h", "l")) if l == lval}
                assert language(P, d, ("h",)) == oracle

    def test_monotone_and_exact(self):
        rng = random.Random(19)
        for _ in range(40):
            d = random_domain(rng)
            g = FormulaGen(rng, "".join(d.alphabet))
            a, b = g.formula(2), g.formula(2)
            A = from_constraint(a, d, ("x", "y"))
            AB = intersect(A, from_constraint(b, d, ("x", "y")))
            pa, pab = project(A, "x"), project(AB, "x")
            pab.check_structure()
            la, lab = language(pa, d, ("x",)), language(pab, d, ("x",))
            assert lab <= la
            assert la == {(x,) for x, _ in brute_models(a, d, ("x", "y"))}

    def test_unknown_track(self, upper2):
        with pytest.raises(AutomatonError):
            project(from_constraint(Cmp("<=", H, StrLit("MZ")), upper2), "l")


class TestInstantiate:
    def test_matches_product(self):
        rng = random.Random(23)
        for _ in range(60):
            d = random_domain(rng)
            c = FormulaGen(rng, "".join(d.alphabet)).formula(2)
            A = from_constraint(c, d, ("x", "y"))
            val = d.random_string(rng, "y")
            got = instantiate(A, literal(d, "y", val))
            got.check_structure()
            assert got.tracks == ("x",)
            want = {(x,) for x, y in brute_models(c, d, ("x", "y")) if y == val}
            assert language(got, d, ("x",)) == want

    def test_needs_single_word(self, upper2):
        A = from_constraint(Cmp("<=", H, L), upper2)
        with pytest.raises(AutomatonError):
            instantiate(A, from_constraint(Cmp("<=", L, StrLit("AB")), upper2))


class TestAccepts:
    def test_second_digit_mismatch(self, digits4):
        asg = {"h": "1337", "l": "1058"}
        assert accepts(from_constraint(PSI[1], digits4), asg)
        assert not accepts(from_constraint(PSI[0], digits4), asg)

    def test_true_accepts_everything(self):
        d = Domain("ab", 2, UP_TO)
        U = universe(d, ("h",))
        assert all(accepts(U, {"h": s}) for s in d.strings())

    def test_rejects_out_of_domain(self, digits4):
        A = from_constraint(PSI[0], digits4)
        with pytest.raises(DomainError):
            accepts(A, {"h": "133", "l": "1234"})
        with pytest.raises(AutomatonError):
            accepts(A, {"h": "1337"})


class TestEmptiness:
    def test_le_aa_nonempty(self, upper2):
        A = from_constraint(Cmp("<=", H, StrLit("AA")), upper2)
        assert not is_empty(A)
        assert count(A) == 1


class TestSampling:
    def test_true_samples_in_domain(self, digits4):
        rng = random.Random(0)
        U = universe(digits4, ("h",))
        for _ in range(300):
            s = sample_model(U, rng)["h"]
            assert len(s) == 4 and s.isdigit()

    def test_unique_model(self, upper2):
        A = from_constraint(Cmp("<=", H, StrLit("AA")), upper2)
        rng = random.Random(1)
        assert {sample_model(A, rng)["h"] for _ in range(50)} == {"AA"}

    def test_empty_raises(self, upper2):
        with pytest.raises(EmptyLanguageError):
            sample_model(complement(universe(upper2, ("h",))), random.Random(0))

    def test_chi_square_uniform(self, upper2):
        A = from_constraint(Cmp("<=", H, StrLit("MZ")), upper2)
        rng = random.Random(2718)
        n = 33_800
        freq = Counter(sample_model(A, rng)["h"] for _ in range(n))
        models = {s for s in upper2.strings() if s <= "MZ"}
        assert set(freq) <= models and len(models) == 338
        expected = n / 338
        chi2 = sum((freq.get(s, 0) - expected) ** 2 / expected for s in models)
        assert chi2 < CHI2_337_P01

    def test_up_to_lengths_weighted(self):
        d = Domain("ab", 2, UP_TO)
        U = universe(d, ("h",))
        rng = random.Random(5)
        freq = Counter(sample_model(U, rng)["h"] for _ in range(7000))
        assert set(freq) == set(d.strings())
        assert all(abs(v - 1000) < 150 for v in freq.values())


def test_dot_export(upper2):
    text = automata.to_dot(from_constraint(Cmp("<=", H, StrLit("MZ")), upper2))
    assert text.startswith("digraph") and "doublecircle" in text and "->" in text
