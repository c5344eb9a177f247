"""Coalition samplers with known per-coalition probabilities.

Each scheme reports the i.i.d. draw probability of every returned
coalition. Deduplicated (without-replacement) collections keep those same
i.i.d. probabilities: the downstream reweighting estimator treats the
collection as if i.i.d., a documented approximation that only tightens
variance in practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitset import CapacityError, Coalition, PreconditionError
from .indices import (
    DISTRIBUTION_FAMILIES,
    IndexSpec,
    log_binom,
    p_weight,
)

SCHEMES = ("leverage", "proportional", "uniform")


@dataclass(frozen=True)
class SamplerConfig:
    """Which coalition distribution to draw from, and how many draws.

    ``proportional`` draws sizes in proportion to the coalition-weight mass
    of a specific target (see the corollary normalizer 2^s); it therefore
    needs the index family and the target subset.
    """

    scheme: str = "leverage"
    budget: int = 0
    without_replacement: bool = True
    include_borders: bool = True
    seed: int = 0
    proportional_index: IndexSpec | None = None
    proportional_target: Coalition | None = None

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise PreconditionError(
                f"unknown sampling scheme {self.scheme!r}; choose from {SCHEMES}"
            )
        if self.budget < 1:
            raise PreconditionError("budget must be >= 1")
        if self.include_borders and self.budget < 2:
            raise PreconditionError("include_borders needs a budget of at least 2")
        if self.scheme == "proportional":
            if self.proportional_index is None or self.proportional_target is None:
                raise PreconditionError(
                    "proportional sampling needs proportional_index and "
                    "proportional_target"
                )
            if self.proportional_index.family not in DISTRIBUTION_FAMILIES:
                raise PreconditionError(
                    "proportional sampling needs a family whose coalition "
                    "weights form a distribution"
                )


def leverage_log_probability(n: int, size: int) -> float:
    """log P(T) = -log(n+1) - log C(n, |T|): uniform size, uniform within."""
    return -math.log(n + 1) - log_binom(n, size)


def coalition_probability(config: SamplerConfig, n: int, mask: int) -> float:
    """The i.i.d. draw probability of one coalition under the scheme."""
    size = mask.bit_count()
    if config.scheme == "leverage":
        return math.exp(leverage_log_probability(n, size))
    if config.scheme == "uniform":
        return math.exp(-n * math.log(2.0))
    index = config.proportional_index
    target = config.proportional_target
    if target.n != n:
        raise PreconditionError(
            f"proportional target width {target.n} != {n}"
        )
    s = len(target)
    outside = (mask & ~target.mask).bit_count()
    return p_weight(index, n, s, outside) / (2.0**s)


def _make_drawer(config: SamplerConfig, n: int, rng: np.random.Generator):
    if config.scheme == "uniform":

        def draw() -> int:
            bits = rng.random(n) < 0.5
            return int(sum(1 << i for i in np.flatnonzero(bits)))

        return draw
    if config.scheme == "leverage":

        def draw() -> int:
            size = int(rng.integers(0, n + 1))
            members = rng.permutation(n)[:size]
            return int(sum(1 << int(i) for i in members))

        return draw
    # proportional: inside part uniform over subsets of the target, outside
    # size from the weight-mass distribution, then uniform within size.
    target = config.proportional_target
    index = config.proportional_index
    if target.n != n:
        raise PreconditionError(f"proportional target width {target.n} != {n}")
    s = len(target)
    players = target.players()
    complement = [i for i in range(n) if i not in target]
    weights = np.array(
        [math.comb(n - s, q) * p_weight(index, n, s, q) for q in range(n - s + 1)]
    )
    weights /= weights.sum()

    def draw() -> int:
        inside_bits = rng.random(s) < 0.5
        inside = 0
        for keep, player in zip(inside_bits, players):
            if keep:
                inside |= 1 << player
        q = int(rng.choice(n - s + 1, p=weights))
        outside_members = rng.permutation(len(complement))[:q]
        outside = sum(1 << complement[int(i)] for i in outside_members)
        return inside | outside

    return draw


def sample(config: SamplerConfig, n: int) -> list[tuple[Coalition, float]]:
    """Draw the evaluation collection.

    Without replacement, draws are deduplicated until the budget is filled
    (a budget of exactly 2^n short-circuits to the full power set).
    ``include_borders`` seats the empty and grand coalitions first; they
    carry their scheme probability like every other element.
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    total = 1 << n if n <= 62 else None
    if config.without_replacement and total is not None and config.budget > total:
        raise CapacityError(
            f"budget {config.budget} exceeds the 2^{n} distinct coalitions"
        )
    rng = np.random.default_rng(config.seed)

    def with_prob(mask: int) -> tuple[Coalition, float]:
        return Coalition(mask, n), coalition_probability(config, n, mask)

    if config.without_replacement and total is not None and config.budget == total:
        return [with_prob(mask) for mask in range(total)]

    draw = _make_drawer(config, n, rng)
    out_masks: list[int] = []
    if config.include_borders:
        full = (1 << n) - 1
        out_masks.append(0)
        if config.budget >= 2:
            out_masks.append(full)
    if config.without_replacement:
        seen = set(out_masks)
        while len(out_masks) < config.budget:
            mask = draw()
            if mask in seen:
                continue
            seen.add(mask)
            out_masks.append(mask)
    else:
        while len(out_masks) < config.budget:
            out_masks.append(draw())
    return [with_prob(mask) for mask in out_masks]
