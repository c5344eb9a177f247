import math
from collections import Counter

import pytest

from coalint import CapacityError, Coalition, IndexSpec, PreconditionError
from coalint.sampling import SamplerConfig, coalition_probability, sample


def test_leverage_probabilities_hand_values():
    cfg = SamplerConfig(scheme="leverage", budget=2)
    assert coalition_probability(cfg, 3, 0b000) == pytest.approx(1 / 4, rel=1e-12)
    assert coalition_probability(cfg, 3, 0b010) == pytest.approx(1 / 12, rel=1e-12)


def test_uniform_probabilities():
    cfg = SamplerConfig(scheme="uniform", budget=2)
    for mask in range(4):
        assert coalition_probability(cfg, 2, mask) == pytest.approx(1 / 4, rel=1e-12)


def test_probabilities_sum_to_one():
    for scheme in ("leverage", "uniform"):
        cfg = SamplerConfig(scheme=scheme, budget=2)
        total = math.fsum(coalition_probability(cfg, 6, m) for m in range(64))
        assert total == pytest.approx(1.0, rel=1e-12)
    prop = SamplerConfig(
        scheme="proportional",
        budget=2,
        proportional_index=IndexSpec("SII"),
        proportional_target=Coalition.of([0, 1], 6),
    )
    total = math.fsum(coalition_probability(prop, 6, m) for m in range(64))
    assert total == pytest.approx(1.0, rel=1e-12)


def test_full_budget_returns_power_set():
    cfg = SamplerConfig(scheme="leverage", budget=16, seed=0)
    drawn = sample(cfg, 4)
    masks = sorted(c.mask for c, _ in drawn)
    assert masks == list(range(16))


def test_budget_above_power_set_rejected():
    with pytest.raises(CapacityError):
        sample(SamplerConfig(scheme="leverage", budget=17), 4)


def test_with_replacement_allows_duplicates_and_large_budgets():
    cfg = SamplerConfig(
        scheme="uniform", budget=40, without_replacement=False, seed=1
    )
    drawn = sample(cfg, 2)
    assert len(drawn) == 40  # > 2^2, fine with replacement


def test_without_replacement_distinct():
    cfg = SamplerConfig(scheme="leverage", budget=200, seed=3)
    drawn = sample(cfg, 10)
    masks = [c.mask for c, _ in drawn]
    assert len(set(masks)) == 200


def test_borders_included_first():
    for scheme in ("leverage", "uniform"):
        cfg = SamplerConfig(scheme=scheme, budget=5, seed=2)
        drawn = sample(cfg, 6)
        assert drawn[0][0] == Coalition.empty(6)
        assert drawn[1][0] == Coalition.full(6)


def test_determinism_same_seed():
    cfg = SamplerConfig(scheme="leverage", budget=64, seed=9)
    a = sample(cfg, 8)
    b = sample(cfg, 8)
    assert a == b
    c = sample(SamplerConfig(scheme="leverage", budget=64, seed=10), 8)
    assert a != c


def test_probabilities_are_scheme_probabilities():
    cfg = SamplerConfig(scheme="leverage", budget=32, seed=4)
    for coalition, prob in sample(cfg, 7):
        assert prob == pytest.approx(
            coalition_probability(cfg, 7, coalition.mask), rel=1e-12
        )


def test_leverage_size_frequency_within_3_sigma():
    # Sizes are uniform over {0..n}: multinomial with p = 1/(n+1) per size.
    n, draws = 8, 100_000
    cfg = SamplerConfig(
        scheme="leverage",
        budget=draws,
        without_replacement=False,
        include_borders=False,
        seed=7,
    )
    sizes = Counter(len(c) for c, _ in sample(cfg, n))
    p = 1.0 / (n + 1)
    sigma = math.sqrt(draws * p * (1 - p))
    for size in range(n + 1):
        assert abs(sizes[size] - draws * p) <= 3 * sigma


def test_proportional_size_frequency():
    # Outside-size mass is C(n-s, q) p_q^s(n); inside uniform over subsets.
    n, s, draws = 6, 2, 40_000
    target = Coalition.of([0, 1], n)
    cfg = SamplerConfig(
        scheme="proportional",
        budget=draws,
        without_replacement=False,
        include_borders=False,
        seed=8,
        proportional_index=IndexSpec("SII"),
        proportional_target=target,
    )
    drawn = sample(cfg, n)
    outside_sizes = Counter(len(c - target) for c, _ in drawn)
    from coalint.indices import p_weight

    for q in range(n - s + 1):
        p = math.comb(n - s, q) * p_weight(IndexSpec("SII"), n, s, q)
        sigma = math.sqrt(draws * p * (1 - p))
        assert abs(outside_sizes[q] - draws * p) <= 4 * sigma


def test_config_validation():
    with pytest.raises(PreconditionError):
        SamplerConfig(scheme="bogus", budget=4)
    with pytest.raises(PreconditionError):
        SamplerConfig(scheme="leverage", budget=1)  # include_borders needs 2
    with pytest.raises(PreconditionError):
        SamplerConfig(scheme="proportional", budget=4)  # missing index/target
    with pytest.raises(PreconditionError):
        SamplerConfig(
            scheme="proportional",
            budget=4,
            proportional_index=IndexSpec("CHII"),
            proportional_target=Coalition.of([0], 4),
        )


def test_budget_one_without_borders():
    cfg = SamplerConfig(
        scheme="uniform", budget=1, include_borders=False, seed=0
    )
    assert len(sample(cfg, 5)) == 1


def test_large_n_sampling():
    cfg = SamplerConfig(scheme="leverage", budget=50, seed=12)
    drawn = sample(cfg, 200)
    assert len(drawn) == 50
    for coalition, prob in drawn:
        assert coalition.n == 200
        assert prob > 0.0
