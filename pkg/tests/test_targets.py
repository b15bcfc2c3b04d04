import random

import pytest

from attacksynth.constraints import TRUE, Domain, H, L, UPPERCASE, disj
from attacksynth.counting import ModelCounter, model_count
from attacksynth.engine import Attack, check_partition
from attacksynth.infotheory import entropy
from attacksynth.targets import (
    BUILTINS,
    UnknownTargetError,
    builtin,
    data_file,
    gen_pin_check,
    gen_string_inequality,
    load_target,
)

# (paths, observation classes) at each target's default delta
SHAPES = {
    "pci": (5, 5),
    "pcs": (16, 1),
    "se": (9, 9),
    "si": (2, 2),
    "si4": (2, 2),
    "scoi": (2, 2),
    "io": (9, 9),
}


def test_registry_is_complete():
    assert set(BUILTINS) == set(SHAPES)


@pytest.mark.parametrize("name", sorted(SHAPES))
def test_shape(name):
    t = builtin(name)
    assert (len(t.paths), len(t.classes())) == SHAPES[name]


@pytest.mark.parametrize("name", sorted(SHAPES))
def test_data_file_matches_generator(name):
    t = builtin(name)
    assert data_file(name) == t.to_dsl()
    loaded = load_target(name, t.domain)
    assert loaded.domain == t.domain
    assert [p.cost for p in loaded.paths] == [p.cost for p in t.paths]
    assert [p.constraint for p in loaded.paths] == [p.constraint for p in t.paths]


@pytest.mark.parametrize("name", sorted(SHAPES))
def test_paths_cover_every_pair_exactly_once(name):
    t = builtin(name)
    tracks = ("h", "l")
    total = t.domain.size("h") * t.domain.size("l")
    covered = model_count(disj(*(p.constraint for p in t.paths)), t.domain, tracks=tracks).count
    assert covered == total
    assert sum(model_count(p.constraint, t.domain, tracks=tracks).count for p in t.paths) == total


@pytest.mark.parametrize("name", sorted(SHAPES))
def test_concrete_costs_agree_on_sampled_pairs(name):
    t = builtin(name)
    attack = Attack(t.classes(), t.domain, ModelCounter(t.domain, H, L), H, L, t.concrete_cost)
    check_partition(attack, random.Random(name), 1000)


def test_pin_costs_grow_with_matching_prefix():
    t = gen_pin_check()
    assert [t.concrete_cost("1337", l) for l in ("9999", "1999", "1399", "1339", "1337")] == \
        [63, 78, 93, 108, 123]


def test_constant_time_cost_is_constant():
    t = builtin("pcs")
    rng = random.Random(0)
    costs = {t.concrete_cost(t.domain.random_string(rng), t.domain.random_string(rng))
             for _ in range(200)}
    assert len(costs) == 1


def test_inequality_costs():
    t = builtin("si")
    assert t.concrete_cost("LL", "MZ") == 42
    assert t.concrete_cost("NA", "MZ") == 67
    assert t.concrete_cost("MZ", "MZ") == 42


def test_index_of_initial_entropy():
    t = builtin("io")
    counter = ModelCounter(t.domain, H, L)
    assert entropy(TRUE, counter) == pytest.approx(37.603517745128734, abs=1e-9)
    assert t.concrete_cost("ABCDEFGH", "C") == 60
    assert t.concrete_cost("ABCDEFGH", "Z") == 150


def test_custom_domain():
    t = gen_string_inequality("direct", Domain("ABC", 3))
    assert t.domain.size("h") == 27
    with pytest.raises(ValueError):
        gen_string_inequality("equals", Domain(UPPERCASE, 3, "up_to"))
    with pytest.raises(ValueError):
        gen_string_inequality("reverse")


def test_unknown_target():
    with pytest.raises(UnknownTargetError):
        load_target("no-such-target")
