import itertools
import math
import random

import pytest

from soficlab import (
    FiniteMetricFamily,
    MapSpaceSpec,
    MeasureConstraint,
    Microstate,
    SizeLimitError,
    ball,
    count_microstates,
    cov_exact,
    cyclic_quotient,
    enumerate_microstates,
    greedy_cov_upper,
    greedy_sep_lower,
    identity,
    rho_M_distance,
    schreier_space,
    sep_exact,
    span_exact,
    transfer_matrix_count,
)
from soficlab.packing import traversal_order


def hamming_family(words):
    n = len(words[0])
    return FiniteMetricFamily(
        tuple(words), lambda a, b: sum(x != y for x, y in zip(a, b)) / n
    )


def random_plane_family(rng, n):
    pts = tuple((rng.random(), rng.random()) for _ in range(n))
    return FiniteMetricFamily(pts, lambda a, b: math.dist(a, b))


def sep_bruteforce(family, eps):
    best = 0
    n = len(family)
    for mask in range(1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        if all(family.d(i, j) > eps for i, j in itertools.combinations(idx, 2)):
            best = max(best, len(idx))
    return best


def test_sep_examples():
    single = FiniteMetricFamily(("x",), lambda a, b: 0.0)
    assert sep_exact(single, 0.5) == 1
    fam = hamming_family(["00", "01", "11"])
    assert sep_exact(fam, 0.6) == 2
    # below the minimum positive distance every distinct pair separates
    assert sep_exact(fam, 0.25) == 3


def test_span_cov_examples():
    single = FiniteMetricFamily(("x",), lambda a, b: 0.0)
    assert span_exact(single, 0.5) == 1
    assert cov_exact(single, 0.5) == 1
    two = FiniteMetricFamily((0, 1), lambda a, b: float(a != b))
    assert span_exact(two, 0.5) == 2
    assert cov_exact(two, 0.5) == 2


def test_sep_matches_bruteforce_oracle():
    rng = random.Random(100)
    for _ in range(40):
        n = rng.randint(2, 9)
        fam = random_plane_family(rng, n)
        eps = rng.uniform(0.05, 0.9)
        assert sep_exact(fam, eps) == sep_bruteforce(fam, eps)


def test_chain_inequality_randomized():
    rng = random.Random(321)
    for _ in range(60):
        n = rng.randint(2, 12)
        fam = random_plane_family(rng, n)
        eps = rng.uniform(0.05, 0.7)
        c2 = cov_exact(fam, 2 * eps)
        sp = span_exact(fam, eps)
        se = sep_exact(fam, eps)
        c1 = cov_exact(fam, eps)
        assert c2 <= sp <= se <= c1


def test_greedy_bounds_bracket_exact():
    rng = random.Random(654)
    for _ in range(200):
        n = rng.randint(2, 10)
        fam = random_plane_family(rng, n)
        eps = rng.uniform(0.05, 0.8)
        assert greedy_sep_lower(fam, eps) <= sep_exact(fam, eps)
        assert greedy_cov_upper(fam, eps) >= cov_exact(fam, eps)


def test_greedy_on_identical_elements():
    fam = FiniteMetricFamily(("a", "b", "c"), lambda a, b: 0.0)
    assert greedy_sep_lower(fam, 0.1) == 1
    assert greedy_cov_upper(fam, 0.1) == 1


def test_exact_engines_size_guard():
    fam = FiniteMetricFamily(tuple(range(4097)), lambda a, b: abs(a - b))
    with pytest.raises(SizeLimitError):
        sep_exact(fam, 1.0)
    mid = FiniteMetricFamily(tuple(range(17)), lambda a, b: abs(a - b))
    with pytest.raises(SizeLimitError):
        cov_exact(mid, 1.0)


def test_count_full_shift(z_group, binary_full_shift):
    spec = MapSpaceSpec(ball(z_group, 1), 0.01)
    res = count_microstates(cyclic_quotient(4), spec, binary_full_shift)
    assert res.count == 16


def test_count_golden_strict(z_group, golden_mean):
    spec = MapSpaceSpec(ball(z_group, 1), 0.0)
    res = count_microstates(cyclic_quotient(5), spec, golden_mean)
    assert res.count == 11
    checks = res.meta["crosschecks"]
    assert checks[0]["oracle"] == "transfer_matrix"
    assert checks[0]["match"]


def test_count_binomial_constraint(z_group, binary_full_shift):
    cons = MeasureConstraint.from_mapping(
        (identity(z_group),), {(0,): 0.5, (1,): 0.5}, 0.0)
    spec = MapSpaceSpec(ball(z_group, 1), 0.01, constraint=cons)
    res = count_microstates(cyclic_quotient(4), spec, binary_full_shift)
    assert res.count == math.comb(4, 2)


def test_pascal_path_matches_dfs_on_small_instances(z_group, binary_full_shift):
    """The exchangeable fast path and plain DFS agree exactly."""
    for n in (4, 6, 8):
        for k in range(n + 1):
            cons = MeasureConstraint.from_mapping(
                (identity(z_group),), {(0,): k / n, (1,): (n - k) / n}, 0.0)
            spec = MapSpaceSpec(ball(z_group, 1), 0.01,
                                mode="measure_preserving", constraint=cons)
            fast = count_microstates(cyclic_quotient(n), spec, binary_full_shift)
            assert fast.engine == "pascal"
            slow = enumerate_microstates(cyclic_quotient(n), spec, binary_full_shift)
            assert fast.count == len(slow) == math.comb(n, k)


def test_transfer_matrix_examples(golden_mean, binary_full_shift):
    assert transfer_matrix_count(golden_mean, 5) == 11
    assert transfer_matrix_count(binary_full_shift, 4) == 16
    assert transfer_matrix_count(golden_mean, 1) == 1


def test_transfer_matrix_rejects_long_range(z_group, binary):
    from soficlab import Pattern, ShiftSystem, lattice_offsets

    sys_long = ShiftSystem(z_group, binary,
                           (Pattern(lattice_offsets(z_group, (0, 2)), (1, 1)),))
    with pytest.raises(ValueError):
        transfer_matrix_count(sys_long, 4)


def test_count_matches_transfer_matrix_all_n(z_group, golden_mean):
    spec = MapSpaceSpec(ball(z_group, 1), 0.0)
    for n in range(3, 21):
        res = count_microstates(cyclic_quotient(n), spec, golden_mean)
        assert res.count == transfer_matrix_count(golden_mean, n)


def test_count_monotonicity(z_group, golden_mean):
    space = cyclic_quotient(10)
    u1, u2 = ball(z_group, 1), ball(z_group, 2)
    counts_delta = [
        count_microstates(space, MapSpaceSpec(u1, d, sft_mode="soft"), golden_mean).count
        for d in (0.3, 0.2, 0.1, 0.0)
    ]
    assert all(b <= a for a, b in zip(counts_delta, counts_delta[1:]))

    c_small_u = count_microstates(space, MapSpaceSpec(u1, 0.2, sft_mode="soft"),
                                  golden_mean).count
    c_big_u = count_microstates(space, MapSpaceSpec(u2, 0.2, sft_mode="soft"),
                                golden_mean).count
    assert c_big_u <= c_small_u

    target = {(0,): 0.6, (1,): 0.4}
    counts_eta = []
    for eta in (0.5, 0.25, 0.1, 0.0):
        cons = MeasureConstraint.from_mapping((identity(z_group),), target, eta)
        spec = MapSpaceSpec(u1, 0.2, sft_mode="soft", constraint=cons)
        counts_eta.append(count_microstates(space, spec, golden_mean).count)
    assert all(b <= a for a, b in zip(counts_eta, counts_eta[1:]))


def test_soft_budget_allows_violations(z_group, golden_mean):
    space = cyclic_quotient(10)
    strict = count_microstates(space, MapSpaceSpec(ball(z_group, 1), 0.05), golden_mean)
    soft = count_microstates(space, MapSpaceSpec(ball(z_group, 1), 0.1, sft_mode="soft"),
                             golden_mean)
    # budget of one defective point admits strictly more labelings
    assert soft.count > strict.count


def test_sep_equals_count_below_resolution(z_group, golden_mean):
    space = cyclic_quotient(8)
    spec = MapSpaceSpec(ball(z_group, 1), 0.0)
    states = enumerate_microstates(space, spec, golden_mean)
    fam = FiniteMetricFamily(tuple(states), rho_M_distance)
    count = count_microstates(space, spec, golden_mean).count
    assert sep_exact(fam, 1 / 16) == count == len(states)


def test_traversal_order_schreier_is_bfs():
    space = schreier_space([1, 2, 3, 0], [0, 1, 2, 3])
    order = traversal_order(space)
    assert sorted(order) == list(range(4))
    assert order[0] == 0


def test_union_boxes_counted_once(z_group, binary_full_shift):
    """Overlapping marginal boxes must not double-count labelings."""
    n = 8
    space = cyclic_quotient(n)
    w = (identity(z_group),)
    box1 = MeasureConstraint.from_mapping(w, {(0,): 0.5, (1,): 0.5}, 0.13)
    box2 = MeasureConstraint.from_mapping(w, {(0,): 0.625, (1,): 0.375}, 0.13)
    spec = MapSpaceSpec(ball(z_group, 1), 0.01)
    got = count_microstates(space, spec, binary_full_shift, boxes=(box1, box2)).count
    # oracle: direct filter over all labelings
    expected = 0
    for labels in itertools.product(range(2), repeat=n):
        zeros = labels.count(0) / n
        if abs(zeros - 0.5) <= 0.13 + 1e-12 or abs(zeros - 0.625) <= 0.13 + 1e-12:
            expected += 1
    assert got == expected
