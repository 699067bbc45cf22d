import itertools
import math
import random

import pytest

from soficlab import (
    Alphabet,
    GroupElement,
    GroupModel,
    Pattern,
    ShiftSystem,
    bernoulli_measure,
    full_shift,
    lattice_offsets,
    markov_measure,
    marginal,
    mollify,
    nearest_neighbor_sft,
    parry_measure,
    pattern_probability,
    relabel_measure,
    relabel_system,
    tv_distance,
    weighted_set,
)
from soficlab.groups import ball
from soficlab.shifts import transition_matrix

PHI = (1 + math.sqrt(5)) / 2


def test_alphabet_validation():
    with pytest.raises(ValueError):
        Alphabet(())
    with pytest.raises(ValueError):
        Alphabet(("a", "a"))
    assert len(Alphabet(("a",))) == 1


def test_bernoulli_pattern_probabilities(z_group, binary):
    mu = bernoulli_measure(binary, (0.5, 0.5))
    pat = Pattern(lattice_offsets(z_group, (0,)), (0,))
    assert pattern_probability(mu, pat) == pytest.approx(0.5)

    mu = bernoulli_measure(binary, (0.25, 0.75))
    pat = Pattern(lattice_offsets(z_group, (0, 1)), (0, 0))
    assert pattern_probability(mu, pat) == pytest.approx(0.0625)


def test_parry_forbidden_cylinder_has_probability_zero(golden_mean, z_group):
    mu = parry_measure(golden_mean)
    pat = Pattern(lattice_offsets(z_group, (0, 1)), (1, 1))
    assert pattern_probability(mu, pat) == pytest.approx(0.0)


def test_parry_eigendata(golden_mean):
    mu = parry_measure(golden_mean)
    assert mu.transitions[0][1] == pytest.approx(1 / PHI ** 2, abs=1e-12)
    assert mu.transitions[1][0] == pytest.approx(1.0)
    assert mu.stationary[0] == pytest.approx(PHI ** 2 / (1 + PHI ** 2), abs=1e-12)


def test_admissible_cylinders_have_positive_parry_probability(golden_mean, z_group):
    mu = parry_measure(golden_mean)
    t = transition_matrix(golden_mean)
    window = lattice_offsets(z_group, (0, 1, 2))
    for syms in itertools.product(range(2), repeat=3):
        admissible = all(t[a][b] for a, b in zip(syms, syms[1:]))
        p = pattern_probability(mu, Pattern(window, syms))
        if admissible:
            assert p > 0
        else:
            assert p == pytest.approx(0.0)


def test_markov_rejects_non_interval_window(golden_mean, z_group):
    mu = parry_measure(golden_mean)
    with pytest.raises(ValueError):
        pattern_probability(mu, Pattern(lattice_offsets(z_group, (0, 2)), (0, 0)))


def test_markov_rejects_forbidden_support(golden_mean, binary):
    with pytest.raises(ValueError):
        markov_measure(binary, [[0.5, 0.5], [0.5, 0.5]], system=golden_mean)


def test_marginal_shift_invariance(z_group, binary, golden_mean):
    """Interval-window marginals agree with their translates, exactly."""
    specs = [
        bernoulli_measure(binary, (0.3, 0.7)),
        parry_measure(golden_mean),
    ]
    for mu in specs:
        for lo in (-2, 0, 3):
            w1 = lattice_offsets(z_group, (lo, lo + 1))
            w2 = lattice_offsets(z_group, (lo + 5, lo + 6))
            m1 = marginal(mu, w1)
            m2 = marginal(mu, w2)
            assert m1 == m2


def test_mollified_metric_examples(z_group):
    b1 = ball(z_group, 1)
    f = weighted_set(list(b1), z_group)
    f = type(f)(f.elements, (1 / 3, 1 / 3, 1 / 3))
    rho_f = mollify(f)
    window = rho_f.probe_window()
    x = Pattern(window, (0, 0, 0))
    # locate the identity coordinate explicitly
    idx = [i for i, g in enumerate(window) if g.word[0] == 0][0]
    syms = [0, 0, 0]
    syms[idx] = 1
    y = Pattern(window, tuple(syms))
    assert rho_f.distance(x, y) == pytest.approx(1 / 3)
    assert rho_f.distance(x, x) == 0.0
    z = Pattern(window, (1, 1, 1))
    assert rho_f.distance(x, z) == pytest.approx(1.0)


def test_mollified_metric_axioms_randomized(z_group):
    rng = random.Random(42)
    b1 = ball(z_group, 1)
    f = type(b1)(b1.elements, (0.5, 0.25, 0.25))
    rho_f = mollify(f)
    window = rho_f.probe_window()
    for _ in range(300):
        pats = [Pattern(window, tuple(rng.randrange(3) for _ in window))
                for _ in range(3)]
        x, y, z = pats
        assert rho_f.distance(x, y) == pytest.approx(rho_f.distance(y, x))
        assert rho_f.distance(x, z) <= rho_f.distance(x, y) + rho_f.distance(y, z) + 1e-12
        if x.symbols != y.symbols:
            assert rho_f.distance(x, y) > 0
        assert 0.0 <= rho_f.distance(x, y) <= 1.0


def test_mollify_rejects_unnormalized(z_group):
    b1 = ball(z_group, 1)
    with pytest.raises(ValueError):
        mollify(b1)  # counting weights sum to 3, not 1


def test_tv_distance_examples():
    assert tv_distance({("a",): 1.0}, {("a",): 1.0}) == 0.0
    assert tv_distance({("a",): 1.0}, {("b",): 1.0}) == 1.0
    assert tv_distance({("a",): 0.5, ("b",): 0.5},
                       {("a",): 0.75, ("b",): 0.25}) == pytest.approx(0.25)


def test_tv_distance_rejects_mismatched_universes():
    with pytest.raises(ValueError):
        tv_distance({("a",): 1.0}, {("a", "b"): 1.0})


def test_empty_system_rejected(z_group, binary):
    with pytest.raises(ValueError):
        # forbidding both self-transitions and both switches kills everything
        nearest_neighbor_sft(z_group, binary, [(0, 0), (1, 1), (0, 1), (1, 0)])


def test_single_symbol_full_shift_is_valid(z_group):
    system = full_shift(z_group, Alphabet(("tick",)))
    assert system.is_full_shift()


def test_relabel_roundtrip(golden_mean, binary):
    perm = [1, 0]
    swapped = relabel_system(golden_mean, perm)
    assert swapped.forbidden[0].symbols == (0, 0)
    back = relabel_system(swapped, perm)
    assert back.forbidden[0].symbols == (1, 1)
    mu = bernoulli_measure(binary, (0.25, 0.75))
    nu = relabel_measure(mu, perm)
    assert nu.probs == (0.75, 0.25)
    assert relabel_measure(nu, perm).probs == mu.probs
