import math

import pytest

from coalint import (
    CapacityError,
    Coalition,
    ConstantGame,
    CountingGame,
    GbtConfig,
    IndexSpec,
    InteractionVector,
    MoebiusGame,
    PipelineConfig,
    PreconditionError,
    ProxySpec,
    TreeGame,
    benchmark_sweep,
    ensemble_from_sparse_coefficients,
    exact_interactions,
    extract_tree_interactions,
    ground_truth,
    relative_mse,
    estimate_interactions,
    summarize_sweep,
)
from coalint.bitset import all_subsets_up_to_order
from coalint.sampling import SamplerConfig
from conftest import coalition, random_sparse_game


def tree_config(budget, seed=0, adjust="auto", order=2, index=None, gbt=None):
    return PipelineConfig(
        index=index or IndexSpec("SII"),
        sampler=SamplerConfig(scheme="leverage", budget=budget, seed=seed),
        proxy=ProxySpec(kind="tree", gbt=gbt or GbtConfig(seed=0)),
        adjust=adjust,
        target_order=order,
    )


def test_constant_game_all_orders_vanish():
    game = ConstantGame(8, 4.2)
    est = estimate_interactions(game, tree_config(budget=64, seed=1))
    assert all(abs(v) < 1e-8 for v in est.entries.values())


def test_linear_proxy_exact_when_game_in_span():
    game = random_sparse_game(seed=70, n=8, n_terms=8, max_order=2)
    config = PipelineConfig(
        index=IndexSpec("SII"),
        sampler=SamplerConfig(scheme="leverage", budget=256, seed=3),
        proxy=ProxySpec(kind="linear", basis_order=2),
        adjust="off",
        target_order=2,
    )
    est = estimate_interactions(game, config)
    truth = exact_interactions(game, IndexSpec("SII"), list(est.entries))
    for t in est.entries:
        assert est[t] == pytest.approx(truth[t], rel=1e-8, abs=1e-8)
    assert all(tag == "proxy" for tag in est.provenance.values())


def test_tree_proxy_full_budget_matches_oracle_when_fit_exact():
    # Game on few active features: the trainer reaches ~zero training error
    # on the full table, so extraction matches the oracle.
    game = random_sparse_game(seed=71, n=8, n_terms=6, max_order=3)
    config = tree_config(
        budget=256,
        seed=4,
        adjust="off",
        gbt=GbtConfig(n_estimators=80, max_depth=8, learning_rate=1.0, reg_lambda=0.0, seed=1),
    )
    est = estimate_interactions(game, config)
    truth = exact_interactions(game, IndexSpec("SII"), list(est.entries))
    for t in est.entries:
        assert est[t] == pytest.approx(truth[t], rel=1e-6, abs=1e-6)


def test_query_budget_honored_exactly():
    game = CountingGame(random_sparse_game(seed=72, n=8, n_terms=8))
    estimate_interactions(game, tree_config(budget=100, seed=5, adjust="on"))
    assert game.calls == 100


def test_decomposition_identity():
    game = random_sparse_game(seed=73, n=8, n_terms=10)
    proxy_only = estimate_interactions(game, tree_config(budget=128, seed=6, adjust="off"))
    combined = estimate_interactions(game, tree_config(budget=128, seed=6, adjust="on"))
    # Recompute the correction separately: combined must equal proxy + msr
    # entrywise by construction.
    correction = {
        t: combined[t] - proxy_only[t] for t in combined.entries
    }
    again = estimate_interactions(game, tree_config(budget=128, seed=6, adjust="on"))
    for t in combined.entries:
        assert again[t] == pytest.approx(proxy_only[t] + correction[t], abs=1e-12)
    assert all(tag == "proxy+msr" for tag in combined.provenance.values())


def test_adjust_auto_matches_rule():
    game = random_sparse_game(seed=74, n=8, n_terms=8)
    est = estimate_interactions(game, tree_config(budget=64, seed=7, adjust="auto"))
    # n = 8 < 30: the rule says adjust.
    assert all(tag == "proxy+msr" for tag in est.provenance.values())


def test_adjust_auto_resolves_off_for_chaining():
    game = random_sparse_game(seed=75, n=8, n_terms=8)
    config = tree_config(budget=64, seed=8, adjust="auto", index=IndexSpec("CHII"))
    est = estimate_interactions(game, config)
    assert all(tag == "proxy" for tag in est.provenance.values())
    with pytest.raises(PreconditionError):
        estimate_interactions(game, tree_config(budget=64, adjust="on", index=IndexSpec("CHII")))


def test_deterministic_under_seed():
    game = random_sparse_game(seed=76, n=9, n_terms=10)
    a = estimate_interactions(game, tree_config(budget=200, seed=11))
    b = estimate_interactions(game, tree_config(budget=200, seed=11))
    assert a.entries == b.entries


def test_relative_mse_values():
    spec = IndexSpec("SII")
    a = Coalition.of([0], 3)
    b = Coalition.of([1], 3)

    def vec(vals):
        out = InteractionVector(spec, 3)
        for key, v in vals.items():
            out.set(key, v, "exact")
        return out

    truth = vec({a: 1.0, b: 1.0})
    assert relative_mse(vec({a: 1.0, b: 1.0}), truth) == 0.0
    assert relative_mse(vec({a: 0.0, b: 0.0}), truth) == pytest.approx(1.0)
    assert relative_mse(vec({a: 1.0, b: 0.0}), truth) == pytest.approx(0.5)
    zeros = vec({a: 0.0, b: 0.0})
    assert relative_mse(zeros, zeros) == 0.0
    assert relative_mse(vec({a: 0.1, b: 0.0}), zeros) == math.inf
    with pytest.raises(PreconditionError):
        relative_mse(vec({a: 1.0}), truth)


def test_ground_truth_hierarchy():
    # Brute below the cap; extraction for tree-backed games above it;
    # error otherwise.
    game = random_sparse_game(seed=77, n=8, n_terms=8)
    targets = all_subsets_up_to_order(8, 2)[:5]
    spec = IndexSpec("SII")
    brute = ground_truth(game, spec, targets)
    want = exact_interactions(game, spec, targets)
    for t in targets:
        assert brute[t] == pytest.approx(want[t], rel=1e-12)

    big = ensemble_from_sparse_coefficients({(1 << 30) | 1: 1.0, 0b11: -2.0}, 40)
    big_game = TreeGame(big)
    big_targets = [Coalition.of([0, 1], 40)]
    via_extraction = ground_truth(big_game, spec, big_targets)
    assert via_extraction[big_targets[0]] != 0.0

    class Opaque(ConstantGame):
        pass

    with pytest.raises(CapacityError):
        ground_truth(Opaque(40, 1.0), spec, big_targets)


def test_truth_bridging_extraction_equals_brute_for_small_tree_games():
    # Licenses extraction-as-truth above the cap: both routes agree below it.
    game = random_sparse_game(seed=78, n=10, n_terms=10, max_order=4)
    ens = ensemble_from_sparse_coefficients(game.coefficients, 10)
    tree_game = TreeGame(ens)
    targets = all_subsets_up_to_order(10, 2)[::5]
    spec = IndexSpec("SII")
    brute = exact_interactions(tree_game, spec, targets)
    ext = extract_tree_interactions(ens, spec, targets)
    for t in targets:
        assert ext[t] == pytest.approx(brute[t], rel=1e-8, abs=1e-10)


def test_linear_basis_guard():
    game = random_sparse_game(seed=79, n=12, n_terms=5)
    config = PipelineConfig(
        index=IndexSpec("SII"),
        sampler=SamplerConfig(scheme="leverage", budget=64, seed=1),
        proxy=ProxySpec(kind="linear", basis_order=5, basis_guard=100),
        adjust="off",
        target_order=2,
    )
    with pytest.raises(CapacityError):
        estimate_interactions(game, config)


def test_budget_overflow_rejected():
    game = random_sparse_game(seed=80, n=6, n_terms=5)
    with pytest.raises(CapacityError):
        estimate_interactions(game, tree_config(budget=65, seed=0))


def test_benchmark_sweep_determinism_and_order():
    game = random_sparse_game(seed=81, n=8, n_terms=8, max_order=3)
    config = tree_config(budget=64, adjust="off", gbt=GbtConfig(n_estimators=20, seed=0))
    rows_a = benchmark_sweep(game, [("tree", config)], [32, 64], 2, base_seed=5)
    rows_b = benchmark_sweep(game, [("tree", config)], [32, 64], 2, base_seed=5)
    assert rows_a == rows_b
    assert [(r.budget, r.repetition) for r in rows_a] == [
        (32, 0),
        (32, 1),
        (64, 0),
        (64, 1),
    ]


def test_benchmark_sweep_threaded_matches_sequential():
    game = random_sparse_game(seed=82, n=8, n_terms=8, max_order=3)
    config = tree_config(budget=64, adjust="off", gbt=GbtConfig(n_estimators=10, seed=0))
    rows_1 = benchmark_sweep(game, [("tree", config)], [32, 64], 2, base_seed=7, threads=1)
    rows_2 = benchmark_sweep(game, [("tree", config)], [32, 64], 2, base_seed=7, threads=3)
    assert rows_1 == rows_2


def test_benchmark_full_budget_near_zero_error():
    game = random_sparse_game(seed=83, n=8, n_terms=5, max_order=2)
    config = PipelineConfig(
        index=IndexSpec("SII"),
        sampler=SamplerConfig(scheme="leverage", budget=256, seed=1),
        proxy=ProxySpec(kind="linear", basis_order=2),
        adjust="off",
        target_order=2,
    )
    rows = benchmark_sweep(game, [("linear", config)], [256], 1, base_seed=9)
    assert rows[0].relative_mse < 1e-12
    summary = summarize_sweep(rows)
    assert summary["linear@256"]["mean_relative_mse"] < 1e-12


def test_pipeline_config_validation():
    sampler = SamplerConfig(scheme="leverage", budget=16)
    with pytest.raises(PreconditionError):
        PipelineConfig(index=IndexSpec("SII"), sampler=sampler, adjust="maybe", target_order=2)
    with pytest.raises(PreconditionError):
        PipelineConfig(index=IndexSpec("SII"), sampler=sampler, target_order=None, targets=None)
    with pytest.raises(PreconditionError):
        PipelineConfig(
            index=IndexSpec("SII"),
            sampler=sampler,
            target_order=2,
            targets=(coalition("110000"),),
        )


def test_explicit_sparse_targets():
    game = random_sparse_game(seed=84, n=10, n_terms=8, max_order=3)
    explicit = (Coalition.of([0, 1], 10), Coalition.of([2], 10))
    config = PipelineConfig(
        index=IndexSpec("SII"),
        sampler=SamplerConfig(scheme="leverage", budget=128, seed=2),
        proxy=ProxySpec(kind="tree", gbt=GbtConfig(n_estimators=30, seed=0)),
        adjust="off",
        targets=explicit,
    )
    est = estimate_interactions(game, config)
    assert set(est.entries) == set(explicit)


def test_interventional_game_large_n_end_to_end():
    # A masking game over a 30-feature model: beyond the enumeration cap,
    # so truth comes from leaf-sum extraction of the rewritten ensemble.
    import numpy as np
    from coalint import InterventionalGame, ensemble_from_sparse_coefficients

    rng = np.random.default_rng(42)
    n = 30
    coeffs = {}
    for _ in range(12):
        size = int(rng.integers(1, 4))
        members = rng.choice(n, size=size, replace=False)
        coeffs[int(sum(1 << int(i) for i in members))] = float(rng.normal())
    model = ensemble_from_sparse_coefficients(coeffs, n)
    explained = [int(b) for b in rng.integers(0, 2, n)]
    dataset = [[int(b) for b in rng.integers(0, 2, n)] for _ in range(80)]
    game = InterventionalGame.from_dataset(model, explained, dataset, size=20, seed=1)

    # Target pairs within the model's active features; the masking game
    # zeroes interactions wherever explained and background bits agree, so
    # keep only pairs with nonzero exact value.
    active = sorted({i for mask in coeffs for i in range(n) if mask >> i & 1})
    candidates = [
        Coalition.of([a, b], n)
        for i, a in enumerate(active)
        for b in active[i + 1 :]
    ]
    full_truth = ground_truth(game, IndexSpec("SII"), candidates)
    targets = tuple(
        t for t in candidates if abs(full_truth[t]) > 1e-9
    )[:8]
    assert targets, "expected at least one nonzero pair interaction"
    truth = ground_truth(game, IndexSpec("SII"), list(targets))
    config = PipelineConfig(
        index=IndexSpec("SII"),
        sampler=SamplerConfig(scheme="leverage", budget=800, seed=3),
        proxy=ProxySpec(kind="tree", gbt=GbtConfig(n_estimators=60, max_depth=4, seed=0)),
        adjust="auto",
        targets=targets,
    )
    est = estimate_interactions(game, config)
    err = relative_mse(est, truth)
    assert math.isfinite(err)
    assert err < 0.5  # a coarse budget still explains most structure


def test_variance_bound_under_proportional_sampling():
    # Per-sample variance under matched proportional sampling is at most
    # 4^s times the squared sup-norm of the game.
    from coalint import variance_exact

    game = random_sparse_game(seed=85, n=8, n_terms=9, max_order=3)
    sup = float(max(abs(game.evaluate_many(range(1 << 8)))))
    for s in (1, 2):
        target = Coalition.of(list(range(s)), 8)
        v = variance_exact(game, IndexSpec("SII"), target, "proportional")
        assert v <= 4.0**s * sup**2 + 1e-9


def test_single_player_game_end_to_end():
    game = MoebiusGame(1, {0b1: 2.0})
    spec = IndexSpec("SV")
    targets = [Coalition.of([0], 1)]
    truth = exact_interactions(game, spec, targets)
    assert truth[targets[0]] == pytest.approx(2.0)
    config = PipelineConfig(
        index=spec,
        sampler=SamplerConfig(scheme="leverage", budget=2, seed=0),
        proxy=ProxySpec(kind="linear", basis_order=1),
        adjust="off",
        targets=tuple(targets),
    )
    est = estimate_interactions(game, config)
    assert est[targets[0]] == pytest.approx(2.0, abs=1e-8)
