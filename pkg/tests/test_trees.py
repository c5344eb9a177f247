import json

import numpy as np
import pytest

from coalint import (
    Coalition,
    Leaf,
    PreconditionError,
    Tree,
    TreeEnsemble,
    ensemble_from_sparse_coefficients,
    interventional_ensemble,
    load_ensemble,
    save_ensemble,
)
from coalint.trees import ModelFormatError, ensemble_from_interchange, verify_partition
from conftest import coalition, random_sparse_game


def _write_model(tmp_path, doc):
    path = tmp_path / "model.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def test_leaf_reachability_semantics():
    # Requires player 0 present and player 1 absent.
    leaf = Leaf(left=Coalition.of([1], 2), right=Coalition.of([0], 2), value=5.0)
    assert leaf.reached_by(coalition("10"))
    assert not leaf.reached_by(coalition("11"))
    assert not leaf.reached_by(coalition("00"))


def test_leaf_overlapping_sets_rejected():
    with pytest.raises(PreconditionError):
        Leaf(left=Coalition.of([0], 2), right=Coalition.of([0], 2), value=0.0)


def test_single_root_leaf_model(tmp_path):
    path = _write_model(tmp_path, {"n": 3, "base_score": 0.5, "trees": [{"nodes": [{"leaf": 2.0}]}]})
    ens = load_ensemble(path)
    assert ens.n_leaves == 1
    for mask in range(8):
        assert ens.predict(Coalition(mask, 3)) == 2.5


def test_depth_one_split(tmp_path):
    doc = {
        "n": 2,
        "base_score": 0.0,
        "trees": [
            {"nodes": [{"feature": 0, "left": 1, "right": 2}, {"leaf": -1.0}, {"leaf": 1.0}]}
        ],
    }
    ens = load_ensemble(_write_model(tmp_path, doc))
    leaves = ens.trees[0].leaves
    assert {(lf.left.mask, lf.right.mask, lf.value) for lf in leaves} == {
        (0b01, 0b00, -1.0),
        (0b00, 0b01, 1.0),
    }
    assert ens.predict(coalition("10")) == 1.0
    assert ens.predict(coalition("00")) == -1.0


def test_repeated_same_side_split_collapses(tmp_path):
    # Splitting right on feature 1 twice: single membership constraint.
    doc = {
        "n": 2,
        "base_score": 0.0,
        "trees": [
            {
                "nodes": [
                    {"feature": 1, "left": 1, "right": 2},
                    {"leaf": 0.0},
                    {"feature": 1, "left": 3, "right": 4},
                    {"leaf": -7.0},
                    {"leaf": 7.0},
                ]
            }
        ],
    }
    ens = load_ensemble(_write_model(tmp_path, doc))
    # The contradictory inner-left path (1 present then absent) is dropped.
    assert ens.fit_info["dropped_unreachable_leaves"] == 1
    reach = [lf for tree in ens.trees for lf in tree.leaves if lf.value == 7.0]
    assert len(reach) == 1
    assert reach[0].right == Coalition.of([1], 2)
    assert ens.predict(coalition("01")) == 7.0


def test_bad_models_rejected(tmp_path):
    with pytest.raises(ModelFormatError):
        load_ensemble(str(tmp_path / "nope.json"))
    bad_feature = {"n": 2, "trees": [{"nodes": [{"feature": 5, "left": 1, "right": 2}, {"leaf": 0}, {"leaf": 0}]}]}
    with pytest.raises(ModelFormatError):
        ensemble_from_interchange(bad_feature)
    cyclic = {"n": 2, "trees": [{"nodes": [{"feature": 0, "left": 0, "right": 0}]}]}
    with pytest.raises(ModelFormatError):
        ensemble_from_interchange(cyclic)
    not_json = tmp_path / "text.json"
    not_json.write_text("not json", encoding="utf-8")
    with pytest.raises(ModelFormatError):
        load_ensemble(str(not_json))


def test_additivity_of_identical_trees(tmp_path):
    doc = {
        "n": 2,
        "base_score": 0.0,
        "trees": [{"nodes": [{"leaf": 1.0}]}, {"nodes": [{"leaf": 1.0}]}],
    }
    ens = load_ensemble(_write_model(tmp_path, doc))
    for mask in range(4):
        assert ens.predict(Coalition(mask, 2)) == 2.0


def test_predict_masks_matches_scalar_predict():
    game = random_sparse_game(seed=21, n=9, n_terms=12)
    ens = ensemble_from_sparse_coefficients(game.coefficients, 9)
    batch = ens.predict_masks(list(range(1 << 9)))
    for mask in range(0, 1 << 9, 41):
        assert batch[mask] == pytest.approx(ens.predict(Coalition(mask, 9)), rel=1e-13)


def test_sparse_coefficient_ensemble_reproduces_game():
    game = random_sparse_game(seed=22, n=10, n_terms=14)
    ens = ensemble_from_sparse_coefficients(game.coefficients, 10)
    values = game.evaluate_many(range(1 << 10))
    preds = ens.predict_masks(list(range(1 << 10)))
    assert float(np.max(np.abs(values - preds))) < 1e-10


def test_leaves_partition_coalition_space():
    game = random_sparse_game(seed=23, n=8, n_terms=10)
    ens = ensemble_from_sparse_coefficients(game.coefficients, 8)
    for tree in ens.trees:
        assert verify_partition(tree, 8)


def test_partition_check_random_for_large_n():
    coeffs = {(1 << 40) | 1: 2.0, (1 << 13) | (1 << 64): -1.0}
    ens = ensemble_from_sparse_coefficients(coeffs, 70)
    rng = np.random.default_rng(0)
    for tree in ens.trees:
        assert verify_partition(tree, 70, rng=rng, samples=2000)


def test_save_and_reload_roundtrip(tmp_path):
    game = random_sparse_game(seed=24, n=6, n_terms=6)
    ens = ensemble_from_sparse_coefficients(game.coefficients, 6)
    path = str(tmp_path / "model.json")
    save_ensemble(ens, path)
    again = load_ensemble(path)
    assert again.n == ens.n
    assert again.base_score == ens.base_score
    for mask in range(1 << 6):
        c = Coalition(mask, 6)
        assert again.predict(c) == pytest.approx(ens.predict(c), rel=1e-14)


def test_save_without_interchange_rejected(tmp_path):
    ens = TreeEnsemble(trees=(Tree((Leaf(Coalition.empty(2), Coalition.empty(2), 1.0),)),), base_score=0.0, n=2)
    with pytest.raises(ModelFormatError):
        save_ensemble(ens, str(tmp_path / "x.json"))


def test_interventional_rewrite_keeps_partition_and_values():
    rng = np.random.default_rng(7)
    n = 6
    coeffs = {int(rng.integers(1, 1 << n)): float(rng.normal()) for _ in range(8)}
    model = ensemble_from_sparse_coefficients(coeffs, n)
    x_e = [1, 0, 1, 0, 1, 1]
    background = [[0, 1, 0, 1, 0, 0], [1, 1, 0, 0, 1, 0]]
    rewritten = interventional_ensemble(model, x_e, background)
    assert rewritten.base_score == model.base_score
    # Each (tree, background) pair still partitions the coalition space
    # after dropping unreachable leaves.
    for tree in rewritten.trees:
        assert verify_partition(tree, n)


def test_interventional_validation():
    model = ensemble_from_sparse_coefficients({0b1: 1.0}, 2)
    with pytest.raises(PreconditionError):
        interventional_ensemble(model, [1], [[0, 0]])
    with pytest.raises(PreconditionError):
        interventional_ensemble(model, [1, 0], [])
    with pytest.raises(PreconditionError):
        interventional_ensemble(model, [1, 2], [[0, 0]])


def _walk_nodes(nodes, coalition):
    idx = 0
    while True:
        node = nodes[idx]
        if "leaf" in node:
            return float(node["leaf"])
        idx = node["right"] if node["feature"] in coalition else node["left"]


def test_flattened_leaves_match_node_walking():
    # The leaf-path form must predict identically to walking the original
    # node structure, checked on ten thousand random coalitions.
    from coalint import GbtConfig, fit_gbt

    rng = np.random.default_rng(17)
    n = 20
    masks = [int(m) for m in rng.integers(0, 1 << n, size=600)]
    data = [(Coalition(m, n), float(v)) for m, v in zip(masks, rng.normal(size=600))]
    ens = fit_gbt(data, GbtConfig(n_estimators=25, max_depth=5, seed=2))
    probe = [int(m) for m in rng.integers(0, 1 << n, size=10_000)]
    flat = ens.predict_masks(probe)
    for i in range(0, 10_000, 97):
        c = Coalition(probe[i], n)
        node_sum = ens.base_score + sum(
            _walk_nodes(tree["nodes"], c) for tree in ens.interchange["trees"]
        )
        assert flat[i] == pytest.approx(node_sum, rel=1e-12, abs=1e-12)
