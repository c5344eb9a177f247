"""Gradient-boosted regression trees over binary membership features.

This is the proxy-fitting step: squared-error boosting with an L2 leaf
penalty, greedy split search, and deterministic tie-breaking (lowest
feature index wins). Splits are on bit set/unset, so there is no threshold
search; a feature can appear at most once along any path because
re-splitting it would empty a child.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .bitset import Coalition, PreconditionError
from .trees import TreeEnsemble, ensemble_from_interchange

_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class GbtConfig:
    n_estimators: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    reg_lambda: float = 1.0
    min_child_weight: int = 1
    subsample: float = 1.0
    colsample: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_estimators < 1:
            raise PreconditionError("n_estimators must be >= 1")
        if self.max_depth < 1:
            raise PreconditionError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise PreconditionError("learning_rate must lie in (0, 1]")
        if self.reg_lambda < 0.0:
            raise PreconditionError("reg_lambda must be >= 0")
        if self.min_child_weight < 1:
            raise PreconditionError("min_child_weight must be >= 1")
        if not 0.0 < self.subsample <= 1.0 or not 0.0 < self.colsample <= 1.0:
            raise PreconditionError("subsample/colsample must lie in (0, 1]")


# The hpo-informed preset pins only the four tuned values; the remaining
# knobs keep trainer defaults.
PRESETS = {
    "default": GbtConfig(n_estimators=100, max_depth=6, learning_rate=0.3, reg_lambda=1.0),
    "hpo-informed": GbtConfig(
        n_estimators=2000, max_depth=3, learning_rate=0.05, reg_lambda=5.0
    ),
}


def preset(name: str, **overrides) -> GbtConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise PreconditionError(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}"
        ) from None
    return replace(base, **overrides) if overrides else base


def _grow_tree(
    x_bits: np.ndarray,
    x_float: np.ndarray,
    g: np.ndarray,
    rows: np.ndarray,
    feats: np.ndarray,
    config: GbtConfig,
) -> list[dict]:
    """Greedy depth-first tree growth; returns interchange-format nodes."""
    lam = config.reg_lambda
    lr = config.learning_rate
    nodes: list[dict] = []

    def leaf_value(idx: np.ndarray) -> float:
        return lr * float(g[idx].sum()) / (len(idx) + lam)

    def grow(idx: np.ndarray, depth: int) -> int:
        my_id = len(nodes)
        nodes.append({})  # placeholder, patched below
        g_sum = float(g[idx].sum())
        cnt = len(idx)
        parent_score = g_sum * g_sum / (cnt + lam)
        split_feature = -1
        if depth < config.max_depth and cnt >= 2 * config.min_child_weight:
            s1 = g[idx] @ x_float[np.ix_(idx, feats)]
            c1 = x_bits[np.ix_(idx, feats)].sum(axis=0, dtype=np.int64)
            c0 = cnt - c1
            valid = (c1 >= config.min_child_weight) & (c0 >= config.min_child_weight)
            s0 = g_sum - s1
            with np.errstate(divide="ignore", invalid="ignore"):
                gains = s1 * s1 / (c1 + lam) + s0 * s0 / (c0 + lam) - parent_score
            gains[~valid] = -np.inf
            best = int(np.argmax(gains))  # first max: lowest feature index
            if gains[best] > _MIN_GAIN * max(1.0, parent_score):
                split_feature = int(feats[best])
        if split_feature < 0:
            nodes[my_id] = {"leaf": leaf_value(idx)}
            return my_id
        bit = x_bits[idx, split_feature].astype(bool)
        left_id = grow(idx[~bit], depth + 1)
        right_id = grow(idx[bit], depth + 1)
        nodes[my_id] = {"feature": split_feature, "left": left_id, "right": right_id}
        return my_id

    grow(rows, 0)
    return nodes


def _route_predictions(nodes: list[dict], x_bits: np.ndarray) -> np.ndarray:
    """Tree output for every row, by vectorized node routing."""
    out = np.empty(len(x_bits), dtype=np.float64)
    stack = [(0, np.arange(len(x_bits)))]
    while stack:
        node_id, idx = stack.pop()
        node = nodes[node_id]
        if "leaf" in node:
            out[idx] = node["leaf"]
            continue
        bit = x_bits[idx, node["feature"]].astype(bool)
        stack.append((node["left"], idx[~bit]))
        stack.append((node["right"], idx[bit]))
    return out


def fit_gbt(
    data: Sequence[tuple[Coalition, float]], config: GbtConfig
) -> TreeEnsemble:
    """Fit the boosted ensemble on (coalition, value) pairs.

    The base score is the target mean; each round fits one tree to the
    current residuals. Identical inputs and seed reproduce the ensemble
    bit for bit.
    """
    if not data:
        raise PreconditionError("training data must be nonempty")
    n = data[0][0].n
    m = len(data)
    x_bits = np.zeros((m, n), dtype=np.uint8)
    y = np.empty(m, dtype=np.float64)
    for i, (coalition, value) in enumerate(data):
        if coalition.n != n:
            raise PreconditionError("training coalition widths differ")
        for player in coalition:
            x_bits[i, player] = 1
        y[i] = value
    x_float = x_bits.astype(np.float64)

    rng = np.random.default_rng(config.seed)
    base = float(y.mean())
    pred = np.full(m, base, dtype=np.float64)
    tree_docs = []
    loss_curve = []
    all_rows = np.arange(m)
    all_feats = np.arange(n)
    for _ in range(config.n_estimators):
        if config.subsample < 1.0:
            k = max(1, int(round(config.subsample * m)))
            rows = np.sort(rng.choice(m, size=k, replace=False))
        else:
            rows = all_rows
        if config.colsample < 1.0:
            kf = max(1, int(round(config.colsample * n)))
            feats = np.sort(rng.choice(n, size=kf, replace=False))
        else:
            feats = all_feats
        g = y - pred
        nodes = _grow_tree(x_bits, x_float, g, rows, feats, config)
        tree_docs.append({"nodes": nodes})
        pred += _route_predictions(nodes, x_bits)
        loss_curve.append(float(np.mean((y - pred) ** 2)))

    doc = {"n": n, "base_score": base, "trees": tree_docs}
    ensemble = ensemble_from_interchange(doc)
    return replace(
        ensemble,
        fit_info={
            "train_mse": loss_curve[-1],
            "loss_curve": loss_curve,
            "rows": m,
        },
    )
