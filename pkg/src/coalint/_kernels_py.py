"""Pure-numpy implementations of the hot kernels.

Selected by ``coalint._backend`` when the compiled extension is not
available (or is disabled via COALINT_BACKEND=python). Function signatures
and semantics match ``_kernels.pyx``; all coalition inputs are bit-packed
uint64 word arrays of shape (rows, n_words).
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


def _popcount_u64(arr: np.ndarray) -> np.ndarray:
    """Per-element popcount of a uint64 array."""
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(arr)
    x = arr.copy()
    x -= (x >> np.uint64(1)) & _M1
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return (x * _H01) >> np.uint64(56)


def extract_interactions(
    l_words: np.ndarray,
    r_words: np.ndarray,
    leaf_values: np.ndarray,
    l_sizes: np.ndarray,
    r_sizes: np.ndarray,
    target_words: np.ndarray,
    target_sizes: np.ndarray,
    lam_table: np.ndarray,
) -> np.ndarray:
    """Leaf-sum extraction: out[j] = sum over covering leaves of c * lam[l,r,u,s].

    A leaf covers target S iff S is contained in the union of its left and
    right sets; u is the overlap of S with the left set.
    """
    cover_words = l_words | r_words
    out = np.empty(len(target_words), dtype=np.float64)
    for j in range(len(target_words)):
        tw = target_words[j]
        covered = ~np.any(tw & ~cover_words, axis=1)
        if not covered.any():
            out[j] = 0.0
            continue
        u = _popcount_u64(tw & l_words[covered]).sum(axis=1).astype(np.intp)
        lam = lam_table[
            l_sizes[covered], r_sizes[covered], u, int(target_sizes[j])
        ]
        out[j] = math.fsum(leaf_values[covered] * lam)
    return out


def predict_coalitions(
    l_words: np.ndarray,
    r_words: np.ndarray,
    leaf_values: np.ndarray,
    coal_words: np.ndarray,
    base_score: float,
) -> np.ndarray:
    """Batched ensemble prediction: base + sum of reached-leaf values per row."""
    out = np.full(len(coal_words), base_score, dtype=np.float64)
    for j in range(len(leaf_values)):
        reached = ~np.any(
            ((coal_words & r_words[j]) != r_words[j]) | ((coal_words & l_words[j]) != 0),
            axis=1,
        )
        out[reached] += leaf_values[j]
    return out


def weighted_index_terms(
    coal_words: np.ndarray,
    values: np.ndarray,
    inv_probs: np.ndarray,
    p_col: np.ndarray,
    s: int,
    target_words: np.ndarray,
) -> np.ndarray:
    """Per-sample reweighting terms for one target S of size s.

    term_i = values[i] * (-1)^(s - |S ∩ T_i|) * p_col[|T_i \\ S|] * inv_probs[i]

    ``p_col[t]`` holds the coalition weight for outside size t.
    """
    inside = _popcount_u64(coal_words & target_words).sum(axis=1).astype(np.intp)
    outside = _popcount_u64(coal_words & ~target_words).sum(axis=1).astype(np.intp)
    sign = np.where((s - inside) % 2 == 0, 1.0, -1.0)
    return values * sign * p_col[outside] * inv_probs
