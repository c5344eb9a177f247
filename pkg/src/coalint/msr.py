"""Sample-reuse estimation of interaction indices, exact variance
identities, and the situational-adjustment rule.

The estimator reweights every sampled coalition for every target: for a
target S of size s, a sample (T, prob, value) contributes

    value * (-1)^(s - |S∩T|) * p_{|T\\S|}^s(n) / prob,

averaged over the collection. Its first moment under the sampling
distribution is the exact index, and its per-sample second-moment identity
is computable in closed form for several scheme/family pairs.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels
from .bitset import CapacityError, Coalition, PreconditionError, masks_to_words
from .games import BRUTE_FORCE_CAP, Game, MissingCoalitionError
from .indices import IndexSpec, p_weight
from .oracle import exact_interactions
from .results import InteractionVector
from .sampling import SamplerConfig, coalition_probability


class ResidualGame(Game):
    """ν − ν̂ recorded on the sampled coalitions only.

    Evaluation outside the recorded collection is an error by design: the
    correction step never touches coalitions the pipeline did not pay for.
    """

    kind = "residual"

    def __init__(self, n: int, residuals: dict[int, float]):
        super().__init__(n)
        self.residuals = dict(residuals)

    @classmethod
    def from_samples(
        cls,
        game_values: Sequence[tuple[Coalition, float]],
        proxy_predictions: Sequence[float],
    ) -> "ResidualGame":
        if len(game_values) != len(proxy_predictions):
            raise PreconditionError("value/prediction lengths differ")
        n = game_values[0][0].n
        residuals = {
            coalition.mask: value - float(pred)
            for (coalition, value), pred in zip(game_values, proxy_predictions)
        }
        return cls(n, residuals)

    def _value(self, mask: int) -> float:
        try:
            return self.residuals[mask]
        except KeyError:
            raise MissingCoalitionError(
                f"residual game has no record for "
                f"{Coalition(mask, self.n).to_string()}"
            ) from None


def msr_estimate(
    samples: Sequence[tuple[Coalition, float, float]],
    index: IndexSpec,
    targets: Iterable[Coalition],
) -> InteractionVector:
    """The reweighted average over (coalition, probability, value) samples."""
    if not index.has_p_weights:
        raise PreconditionError(
            f"{index.family} has no coalition-weight row; "
            "sample-reuse estimation is not defined for it"
        )
    samples = list(samples)
    if not samples:
        raise PreconditionError("samples must be nonempty")
    targets = list(targets)
    if not targets:
        raise PreconditionError("targets must be nonempty")
    n = samples[0][0].n
    masks = []
    probs = np.empty(len(samples), dtype=np.float64)
    values = np.empty(len(samples), dtype=np.float64)
    for i, (coalition, prob, value) in enumerate(samples):
        if coalition.n != n:
            raise PreconditionError("sample widths differ")
        if prob <= 0.0:
            raise PreconditionError(
                f"sample probability must be positive, got {prob}"
            )
        masks.append(coalition.mask)
        probs[i] = prob
        values[i] = value
    coal_words = masks_to_words(masks, n)
    inv_probs = 1.0 / probs
    m = len(samples)
    out = InteractionVector(index, n)
    for target in targets:
        if target.n != n:
            raise PreconditionError("target width differs from sample width")
        index.validate_target_order(len(target))
        s = len(target)
        p_col = np.array(
            [p_weight(index, n, s, t) for t in range(n - s + 1)], dtype=np.float64
        )
        terms = kernels.weighted_index_terms(
            coal_words, values, inv_probs, p_col, s, target.to_words()
        )
        out.set(target, math.fsum(terms) / m, "msr-only")
    return out


def _scheme_config(scheme: str, index: IndexSpec, target: Coalition) -> SamplerConfig:
    if scheme == "proportional":
        return SamplerConfig(
            scheme="proportional",
            budget=2,
            proportional_index=index,
            proportional_target=target,
        )
    return SamplerConfig(scheme=scheme, budget=2)


def variance_exact(
    game: Game,
    index: IndexSpec,
    target: Coalition,
    scheme: str = "leverage",
    cap: int = BRUTE_FORCE_CAP,
) -> float:
    """Per-unit-sample estimator variance, by full enumeration.

    V * |collection| = Σ_T ν(T)^2 p^2 / P(T) − φ_S^2; callers divide by the
    collection size.
    """
    n = game.n
    if n > cap:
        raise CapacityError(f"variance enumeration capped at {cap} players")
    index.validate_target_order(len(target))
    config = _scheme_config(scheme, index, target)
    s = len(target)
    size = 1 << n
    masks = range(size)
    values = game.evaluate_many(masks)
    arr = np.asarray([int(m) for m in masks], dtype=np.uint64)
    outside = _popcounts(arr & np.uint64(~target.mask & ((1 << n) - 1)))
    p_col = np.array(
        [p_weight(index, n, s, t) for t in range(n - s + 1)], dtype=np.float64
    )
    probs = np.array(
        [coalition_probability(config, n, int(mask)) for mask in masks]
    )
    second_moment = math.fsum(values**2 * p_col[outside] ** 2 / probs)
    phi = exact_interactions(game, index, [target], cap=cap).entries[target]
    return second_moment - phi**2


def _popcounts(arr: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(arr).astype(np.intp)
    return np.array([int(v).bit_count() for v in arr], dtype=np.intp)


def gamma_brute(
    index: IndexSpec,
    n: int,
    s: int,
    scheme: str = "leverage",
    cap: int = BRUTE_FORCE_CAP,
) -> float:
    """Σ_T p^2 / P(T) by full enumeration, for the canonical size-s target."""
    if n > cap:
        raise CapacityError(f"gamma enumeration capped at {cap} players")
    index.validate_target_order(s)
    target = Coalition((1 << s) - 1, n)
    config = _scheme_config(scheme, index, target)
    p_col = np.array(
        [p_weight(index, n, s, t) for t in range(n - s + 1)], dtype=np.float64
    )
    arr = np.arange(1 << n, dtype=np.uint64)
    outside = _popcounts(arr & np.uint64(~target.mask & ((1 << n) - 1)))
    probs = np.array(
        [coalition_probability(config, n, int(mask)) for mask in range(1 << n)]
    )
    return math.fsum(p_col[outside] ** 2 / probs)


def _rising(a: int, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= a + i
    return out


def gamma_sii_leverage_exact(n: int, s: int) -> float:
    """Exact finite-n Shapley-family leverage factor via the grouped double
    sum over (overlap, outside) sizes; avoids 2^n enumeration."""
    front = (n + 1) * _rising(n - s + 1, s) / (n - s + 1) ** 2
    total = []
    for r in range(s + 1):
        for q in range(n - s + 1):
            total.append(
                math.comb(s, r) / (_rising(q + 1, r) * _rising(n - s - q + 1, s - r))
            )
    return front * math.fsum(total)


def gamma_closed(index: IndexSpec, n: int, s: int, scheme: str) -> float:
    """Closed forms where available.

    * Banzhaf family + leverage: (n+1) C(2n, n) / 4^(n-s).
    * Any distribution family + proportional: exactly 4^s.
    * Shapley family + leverage at s = 1: 2 (n+1) H_n / n.
    """
    index.validate_target_order(s)
    if scheme == "proportional":
        return 4.0**s
    if scheme == "leverage":
        if index.family in ("BV", "BII") and index.banzhaf_w == 0.5:
            return (n + 1) * math.comb(2 * n, n) / 4.0 ** (n - s)
        if index.family in ("SV", "SII"):
            if s == 1:
                harmonic = math.fsum(1.0 / j for j in range(1, n + 1))
                return 2.0 * (n + 1) * harmonic / n
            return gamma_sii_leverage_exact(n, s)
    raise PreconditionError(
        f"no closed form for {index.family} under {scheme} sampling"
    )


def gamma_factor(
    index: IndexSpec,
    n: int,
    s: int,
    scheme: str = "leverage",
    cap: int = BRUTE_FORCE_CAP,
) -> float:
    """The per-sample variance constant; brute below the cap, else closed."""
    if n <= cap:
        return gamma_brute(index, n, s, scheme, cap=cap)
    return gamma_closed(index, n, s, scheme)


def should_adjust(n: int, k: int, budget: int, c: float = 10.0) -> bool:
    """Residual-correction rule of thumb: always in low dimension (n < 30),
    otherwise only when the budget clearly dominates n^(k-1)."""
    if k < 1:
        raise PreconditionError("k must be >= 1")
    return n < 30 or budget >= c * n ** (k - 1)
