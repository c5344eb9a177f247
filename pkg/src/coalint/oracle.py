"""Brute-force exact computations: discrete derivatives, sparse-basis
transform, and full-enumeration interaction indices.

These are the ground truth every approximate path is checked against. All
enumeration is capped (default 20 players) and uses exactly-rounded
summation, so results are independent of evaluation order.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from ._backend import kernels
from .bitset import CapacityError, Coalition, PreconditionError, masks_to_words
from .games import BRUTE_FORCE_CAP, Game, MoebiusGame
from .indices import IndexSpec, p_weight, q_weight
from .results import InteractionVector


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise CapacityError(
            f"enumeration over 2^{n} coalitions exceeds the cap of {cap} players"
        )


def discrete_derivative(game: Game, s_set: Coalition, t_set: Coalition) -> float:
    """Δ_S ν(T): the alternating inclusion-exclusion sum over subsets of S.

    Costs 2^|S| evaluations; S and T must be disjoint.
    """
    if not s_set.isdisjoint(t_set):
        raise PreconditionError("S and T must be disjoint")
    s = len(s_set)
    terms = []
    sub = s_set.mask
    while True:
        sign = -1.0 if (s - sub.bit_count()) % 2 else 1.0
        terms.append(sign * game.evaluate(Coalition(t_set.mask | sub, game.n)))
        if sub == 0:
            break
        sub = (sub - 1) & s_set.mask
    return math.fsum(terms)


def moebius_transform(game: Game, cap: int = BRUTE_FORCE_CAP) -> MoebiusGame:
    """Full sparse-basis transform of the game, by fast subset inversion."""
    n = game.n
    _check_cap(n, cap)
    size = 1 << n
    values = game.evaluate_many(range(size)).astype(np.float64)
    idx = np.arange(size)
    for i in range(n):
        bit = 1 << i
        upper = (idx & bit) != 0
        values[upper] -= values[idx[upper] ^ bit]
    coefficients = {
        int(mask): float(values[mask]) for mask in range(size) if values[mask] != 0.0
    }
    return MoebiusGame(n, coefficients)


def _resolve_targets(
    index: IndexSpec, targets: Iterable[Coalition], n: int
) -> list[Coalition]:
    out = list(targets)
    if not out:
        raise PreconditionError("targets must be nonempty")
    for target in out:
        if target.n != n:
            raise PreconditionError(
                f"target width {target.n} != game width {n}"
            )
        index.validate_target_order(len(target))
    return out


def interactions_from_coefficients(
    coefficients: dict[int, float],
    index: IndexSpec,
    targets: Iterable[Coalition],
    n: int,
) -> InteractionVector:
    """Weighted sparse-basis route: φ_S = Σ_{T ⊇ S} q_t^s(n) · m_T."""
    targets = _resolve_targets(index, targets, n)
    out = InteractionVector(index, n)
    items = sorted(coefficients.items())
    for target in targets:
        s = len(target)
        terms = [
            q_weight(index, n, s, mask.bit_count()) * coeff
            for mask, coeff in items
            if target.mask & ~mask == 0
        ]
        out.set(target, math.fsum(terms), "exact")
    return out


def exact_interactions(
    game: Game,
    index: IndexSpec,
    targets: Iterable[Coalition],
    method: str = "auto",
    cap: int = BRUTE_FORCE_CAP,
) -> InteractionVector:
    """Exact interaction values by full enumeration.

    ``method='derivative'`` runs the weighted discrete-derivative sum and
    needs the family's coalition-weight row; ``'moebius'`` converts through
    the sparse basis. ``'auto'`` picks the derivative route where the row
    exists (the two must agree — this is a standing test invariant).
    """
    n = game.n
    _check_cap(n, cap)
    targets = _resolve_targets(index, targets, n)
    if method == "auto":
        method = "derivative" if index.has_p_weights else "moebius"
    if method == "moebius":
        if isinstance(game, MoebiusGame):
            coefficients = game.coefficients
        else:
            coefficients = moebius_transform(game, cap=cap).coefficients
        return interactions_from_coefficients(coefficients, index, targets, n)
    if method != "derivative":
        raise PreconditionError(f"unknown method {method!r}")
    if not index.has_p_weights:
        raise PreconditionError(
            f"{index.family} has no coalition-weight row; use the moebius route"
        )

    size = 1 << n
    masks = range(size)
    values = game.evaluate_many(masks)
    coal_words = masks_to_words(masks, n)
    ones = np.ones(size, dtype=np.float64)
    out = InteractionVector(index, n)
    for target in targets:
        s = len(target)
        p_col = np.array(
            [p_weight(index, n, s, t) for t in range(n - s + 1)], dtype=np.float64
        )
        terms = kernels.weighted_index_terms(
            coal_words, values, ones, p_col, s, target.to_words()
        )
        out.set(target, math.fsum(terms), "exact")
    return out
