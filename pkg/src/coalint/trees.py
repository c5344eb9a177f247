"""Additive ensembles of decision trees over binary (membership) features.

A tree is stored in flattened leaf-path form: each leaf keeps the set of
features required absent (``left``) and required present (``right``) along
its root-to-leaf path, plus its value. A coalition T reaches a leaf iff
right ⊆ T and T ∩ left = ∅; within one tree the leaves partition the
coalition space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import kernels
from .bitset import Coalition, CoalintError, PreconditionError, masks_to_words


class ModelFormatError(CoalintError):
    """The model file does not conform to the interchange schema."""


@dataclass(frozen=True)
class Leaf:
    left: Coalition
    right: Coalition
    value: float

    def __post_init__(self) -> None:
        if not self.left.isdisjoint(self.right):
            raise PreconditionError("leaf left/right sets must be disjoint")

    def reached_by(self, coalition: Coalition) -> bool:
        return self.right.issubset(coalition) and coalition.isdisjoint(self.left)


@dataclass(frozen=True)
class Tree:
    leaves: tuple[Leaf, ...]


@dataclass(frozen=True)
class TreeEnsemble:
    trees: tuple[Tree, ...]
    base_score: float
    n: int
    interchange: dict | None = field(default=None, compare=False, repr=False)
    fit_info: dict | None = field(default=None, compare=False, repr=False)

    @property
    def n_leaves(self) -> int:
        return sum(len(t.leaves) for t in self.trees)

    def packed_leaves(self) -> tuple[np.ndarray, ...]:
        """Bit-packed leaf arrays for the numeric kernels, cached."""
        cached = _PACK_CACHE.get(id(self))
        if cached is not None and cached[0] is self:
            return cached[1]
        leaves = [leaf for tree in self.trees for leaf in tree.leaves]
        l_words = masks_to_words((lf.left.mask for lf in leaves), self.n)
        r_words = masks_to_words((lf.right.mask for lf in leaves), self.n)
        values = np.array([lf.value for lf in leaves], dtype=np.float64)
        l_sizes = np.array([len(lf.left) for lf in leaves], dtype=np.int64)
        r_sizes = np.array([len(lf.right) for lf in leaves], dtype=np.int64)
        packed = (l_words, r_words, values, l_sizes, r_sizes)
        if len(_PACK_CACHE) >= 64:
            _PACK_CACHE.clear()
        _PACK_CACHE[id(self)] = (self, packed)
        return packed

    def max_leaf_path(self) -> int:
        """Largest |left| + |right| over all leaves (bounds the lambda table)."""
        sizes = [
            (len(lf.left), len(lf.right)) for t in self.trees for lf in t.leaves
        ]
        if not sizes:
            return 0
        return max(l + r for l, r in sizes)

    def predict(self, coalition: Coalition) -> float:
        if coalition.n != self.n:
            raise PreconditionError(
                f"coalition width {coalition.n} != ensemble width {self.n}"
            )
        total = self.base_score
        for tree in self.trees:
            for leaf in tree.leaves:
                if leaf.reached_by(coalition):
                    total += leaf.value
                    break
        return total

    def predict_masks(self, masks: Sequence[int]) -> np.ndarray:
        """Vectorized prediction for many coalitions given as bitmasks."""
        if len(masks) == 0:
            return np.empty(0, dtype=np.float64)
        l_words, r_words, values, _, _ = self.packed_leaves()
        coal_words = masks_to_words(masks, self.n)
        return kernels.predict_coalitions(
            l_words, r_words, values, coal_words, self.base_score
        )


# Weak-ish cache of packed arrays keyed by object id; the ensemble is
# immutable, so entries only go stale when the object is collected.
_PACK_CACHE: dict[int, tuple[TreeEnsemble, tuple[np.ndarray, ...]]] = {}


def _flatten_nodes(
    nodes: list[dict], n: int
) -> tuple[list[Leaf], int]:
    """Depth-first root-to-leaf walk producing leaf-path form.

    Repeated same-side splits on one feature collapse; a feature required
    both present and absent marks the path unreachable, and the leaf is
    dropped (the count is reported to the caller).
    """
    if not nodes:
        raise ModelFormatError("tree has no nodes")
    leaves: list[Leaf] = []
    dropped = 0
    # Iterative DFS; right branch pushed last so it is visited first only
    # by stack order — order does not matter for the leaf set.
    stack: list[tuple[int, int, int, int]] = [(0, 0, 0, 0)]
    while stack:
        idx, l_mask, r_mask, depth = stack.pop()
        if depth > len(nodes):
            raise ModelFormatError("tree structure is cyclic")
        if not 0 <= idx < len(nodes):
            raise ModelFormatError(f"node index {idx} out of range")
        node = nodes[idx]
        if "leaf" in node:
            if l_mask & r_mask:
                dropped += 1
                continue
            leaves.append(
                Leaf(Coalition(l_mask, n), Coalition(r_mask, n), float(node["leaf"]))
            )
            continue
        try:
            feature = int(node["feature"])
            left_idx = int(node["left"])
            right_idx = int(node["right"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed node {idx}: {node!r}") from exc
        if not 0 <= feature < n:
            raise ModelFormatError(
                f"node {idx} splits on feature {feature}, outside width {n}"
            )
        bit = 1 << feature
        stack.append((left_idx, l_mask | bit, r_mask, depth + 1))
        stack.append((right_idx, l_mask, r_mask | bit, depth + 1))
    return leaves, dropped


def ensemble_from_interchange(doc: dict) -> TreeEnsemble:
    try:
        n = int(doc["n"])
        base_score = float(doc.get("base_score", 0.0))
        tree_docs = doc["trees"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    if n < 1:
        raise ModelFormatError(f"feature count must be >= 1, got {n}")
    trees = []
    total_dropped = 0
    for tree_doc in tree_docs:
        if "nodes" not in tree_doc:
            raise ModelFormatError("tree entry missing 'nodes'")
        leaves, dropped = _flatten_nodes(tree_doc["nodes"], n)
        total_dropped += dropped
        trees.append(Tree(tuple(leaves)))
    return TreeEnsemble(
        trees=tuple(trees),
        base_score=base_score,
        n=n,
        interchange=doc,
        fit_info={"dropped_unreachable_leaves": total_dropped},
    )


def load_ensemble(path: str) -> TreeEnsemble:
    """Load a model from the JSON interchange format."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    return ensemble_from_interchange(doc)


def save_ensemble(ensemble: TreeEnsemble, path: str) -> None:
    if ensemble.interchange is None:
        raise ModelFormatError(
            "ensemble has no node-based interchange representation to save"
        )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ensemble.interchange, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _chain_nodes(players: Sequence[int], value: float) -> list[dict]:
    """Node tree realizing value * 1[players ⊆ T]: split on each player in turn."""
    nodes: list[dict] = []
    for depth, feature in enumerate(players):
        is_last = depth == len(players) - 1
        nodes.append(
            {
                "feature": feature,
                "left": len(players) + 1 + depth,  # zero leaf
                "right": depth + 1 if not is_last else len(players),
            }
        )
    nodes.append({"leaf": value})
    for _ in players:
        nodes.append({"leaf": 0.0})
    return nodes


def ensemble_from_sparse_coefficients(
    coefficients: dict[int, float], n: int
) -> TreeEnsemble:
    """Exact tree representation of T ↦ Σ_R coeff[R]·1[R ⊆ T].

    One chain tree per nonempty term; the empty-set term becomes the base
    score. The result reproduces the sparse game on every coalition up to
    float addition, which makes it the exact-fit ensemble used by oracle
    equivalence checks.
    """
    base = 0.0
    tree_docs = []
    for mask in sorted(coefficients):
        coeff = float(coefficients[mask])
        if mask == 0:
            base += coeff
            continue
        if mask >> n:
            raise PreconditionError(f"coefficient key {mask:#x} outside width {n}")
        players = [i for i in range(n) if mask >> i & 1]
        tree_docs.append({"nodes": _chain_nodes(players, coeff)})
    doc = {"n": n, "base_score": base, "trees": tree_docs}
    return ensemble_from_interchange(doc)


def interventional_ensemble(
    model: TreeEnsemble,
    explained: Sequence[int],
    background: Sequence[Sequence[int]],
) -> TreeEnsemble:
    """Rewrite a model over raw binary inputs into a coalition-space ensemble.

    For the masking game ν(S) = mean_i f(z_i) with z_i[j] = explained[j] if
    j ∈ S else background_i[j], every (leaf, background row) pair induces a
    leaf whose constraints are on S directly: a split outcome already fixed
    by agreeing explained/background bits disappears, a violated one drops
    the leaf, and the rest become membership constraints on S.
    """
    n = model.n
    x = [int(v) for v in explained]
    if len(x) != n or any(v not in (0, 1) for v in x):
        raise PreconditionError("explained point must be a 0/1 vector of width n")
    rows = [[int(v) for v in b] for b in background]
    if not rows:
        raise PreconditionError("background set must be nonempty")
    for b in rows:
        if len(b) != n or any(v not in (0, 1) for v in b):
            raise PreconditionError("background rows must be 0/1 vectors of width n")
    scale = 1.0 / len(rows)
    out_trees: list[Tree] = []
    for b in rows:
        for tree in model.trees:
            new_leaves: list[Leaf] = []
            for leaf in tree.leaves:
                l_mask = 0
                r_mask = 0
                reachable = True
                for j in leaf.right:  # feature must be present in z
                    if x[j] and b[j]:
                        continue
                    if x[j]:
                        r_mask |= 1 << j
                    elif b[j]:
                        l_mask |= 1 << j
                    else:
                        reachable = False
                        break
                if reachable:
                    for j in leaf.left:  # feature must be absent in z
                        if not x[j] and not b[j]:
                            continue
                        if not x[j]:
                            r_mask |= 1 << j
                        elif not b[j]:
                            l_mask |= 1 << j
                        else:
                            reachable = False
                            break
                if not reachable:
                    continue
                new_leaves.append(
                    Leaf(
                        Coalition(l_mask, n),
                        Coalition(r_mask, n),
                        leaf.value * scale,
                    )
                )
            out_trees.append(Tree(tuple(new_leaves)))
    return TreeEnsemble(trees=tuple(out_trees), base_score=model.base_score, n=n)


def verify_partition(
    tree: Tree, n: int, rng: np.random.Generator | None = None, samples: int = 10_000
) -> bool:
    """Check that every coalition reaches exactly one leaf.

    Exhaustive for n <= 12; otherwise checks ``samples`` random coalitions.
    """
    if n <= 12:
        masks = range(1 << n)
    else:
        rng = rng or np.random.default_rng(0)
        masks = [
            int.from_bytes(rng.bytes((n + 7) // 8), "little") & ((1 << n) - 1)
            for _ in range(samples)
        ]
    for mask in masks:
        coalition = Coalition(mask, n)
        hits = sum(leaf.reached_by(coalition) for leaf in tree.leaves)
        if hits != 1:
            return False
    return True
