"""End-to-end proxy-plus-residual estimation, metrics, and sweeps.

One run: sample the evaluation collection, query the game exactly once per
sampled coalition, fit the proxy on those pairs, extract the proxy's
interactions in closed form, and — when the adjustment rule says it pays —
add the sample-reuse estimate of the residual game on the same collection.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .bitset import CapacityError, Coalition, PreconditionError, all_subsets_up_to_order
from .extraction import (
    extract_linear_interactions,
    extract_tree_interactions,
    fit_linear_proxy,
)
from .games import BRUTE_FORCE_CAP, Game, TreeGame
from .gbt import GbtConfig, fit_gbt
from .indices import IndexSpec
from .msr import ResidualGame, msr_estimate, should_adjust
from .oracle import exact_interactions
from .results import InteractionVector
from .sampling import SamplerConfig, sample

LINEAR_BASIS_GUARD = 200_000


@dataclass(frozen=True)
class ProxySpec:
    """Which surrogate to fit: a boosted tree ensemble or an indicator-basis
    linear model of a given order (basis includes the empty set)."""

    kind: str = "tree"
    gbt: GbtConfig = field(default_factory=GbtConfig)
    basis_order: int = 2
    basis_guard: int = LINEAR_BASIS_GUARD

    def __post_init__(self) -> None:
        if self.kind not in ("tree", "linear"):
            raise PreconditionError(f"unknown proxy kind {self.kind!r}")
        if self.kind == "linear" and self.basis_order < 0:
            raise PreconditionError("basis_order must be >= 0")


@dataclass(frozen=True)
class PipelineConfig:
    index: IndexSpec
    sampler: SamplerConfig
    proxy: ProxySpec = field(default_factory=ProxySpec)
    adjust: str = "auto"
    target_order: int | None = None
    targets: tuple[Coalition, ...] | None = None
    adjust_budget_factor: float = 10.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.adjust not in ("auto", "on", "off"):
            raise PreconditionError("adjust must be one of auto|on|off")
        if (self.target_order is None) == (self.targets is None):
            raise PreconditionError(
                "specify exactly one of target_order or an explicit target list"
            )

    def resolve_targets(self, n: int) -> list[Coalition]:
        if self.targets is not None:
            return list(self.targets)
        return all_subsets_up_to_order(n, self.target_order)

    def with_seed(self, seed: int) -> "PipelineConfig":
        return replace(self, seed=seed)


def _effective_sampler(config: PipelineConfig) -> SamplerConfig:
    if config.seed is None:
        return config.sampler
    return replace(config.sampler, seed=config.seed)


def _effective_gbt(config: PipelineConfig) -> GbtConfig:
    if config.seed is None:
        return config.proxy.gbt
    # Derive a distinct, stable trainer seed from the run seed.
    derived = int(np.random.SeedSequence(config.seed).spawn(1)[0].generate_state(1)[0])
    return replace(config.proxy.gbt, seed=derived)


def _linear_basis(n: int, order: int, guard: int) -> list[Coalition]:
    size = sum(math.comb(n, j) for j in range(order + 1))
    if size > guard:
        raise CapacityError(
            f"linear basis of order {order} has {size} terms, above the "
            f"guard of {guard}"
        )
    basis = [Coalition.empty(n)]
    basis.extend(all_subsets_up_to_order(n, order))
    return basis


def estimate_interactions(game: Game, config: PipelineConfig) -> InteractionVector:
    """Sample, fit, extract, and situationally correct.

    The game is queried exactly once per sampled coalition; the proxy fit
    and the residual correction reuse those recorded values.
    """
    n = game.n
    targets = config.resolve_targets(n)
    if not targets:
        raise PreconditionError("no targets to estimate")
    max_order = max(len(t) for t in targets)
    sampler = _effective_sampler(config)

    drawn = sample(sampler, n)
    masks = [coalition.mask for coalition, _ in drawn]
    values = game.evaluate_many(masks)
    pairs = [(coalition, float(v)) for (coalition, _), v in zip(drawn, values)]

    if config.proxy.kind == "tree":
        ensemble = fit_gbt(pairs, _effective_gbt(config))
        proxy_vec = extract_tree_interactions(
            ensemble, config.index, targets, provenance="proxy"
        )
        proxy_predictions = ensemble.predict_masks(masks)
    else:
        basis = _linear_basis(n, config.proxy.basis_order, config.proxy.basis_guard)
        proxy = fit_linear_proxy(pairs, basis)
        proxy_vec = extract_linear_interactions(
            proxy, config.index, targets, provenance="proxy"
        )
        proxy_predictions = proxy.predict_masks(masks)

    if config.adjust == "on":
        adjust = True
        if not config.index.has_p_weights:
            raise PreconditionError(
                f"adjustment requires a coalition-weight row; "
                f"{config.index.family} has none"
            )
    elif config.adjust == "off":
        adjust = False
    else:
        adjust = config.index.has_p_weights and should_adjust(
            n, max_order, sampler.budget, c=config.adjust_budget_factor
        )
    if not adjust:
        return proxy_vec

    residual = ResidualGame.from_samples(pairs, proxy_predictions)
    msr_samples = [
        (coalition, prob, residual.evaluate(coalition)) for coalition, prob in drawn
    ]
    correction = msr_estimate(msr_samples, config.index, targets)
    return proxy_vec.add(correction, "proxy+msr")


def relative_mse(estimate: InteractionVector, truth: InteractionVector) -> float:
    """Σ (φ̂ − φ)^2 / Σ φ^2 over a shared key set.

    All-zero truth: 0.0 when the estimate is also all-zero, +inf otherwise.
    """
    if set(estimate.entries) != set(truth.entries):
        raise PreconditionError("estimate and truth have different key sets")
    num = []
    den = []
    for key, phi in truth.entries.items():
        num.append((estimate.entries[key] - phi) ** 2)
        den.append(phi**2)
    denominator = math.fsum(den)
    numerator = math.fsum(num)
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else math.inf
    return numerator / denominator


def ground_truth(
    game: Game,
    index: IndexSpec,
    targets: Sequence[Coalition],
    cap: int = BRUTE_FORCE_CAP,
) -> InteractionVector:
    """Exact reference values: enumeration below the cap, leaf-sum
    extraction when the game is tree-backed, otherwise an error — never a
    silent approximation."""
    if game.n <= cap:
        return exact_interactions(game, index, targets, cap=cap)
    if isinstance(game, TreeGame):
        return extract_tree_interactions(game.ensemble, index, targets)
    raise CapacityError(
        f"no exact truth available: n={game.n} exceeds the cap and the game "
        "is not tree-backed"
    )


@dataclass(frozen=True)
class SweepRow:
    config_name: str
    budget: int
    repetition: int
    relative_mse: float


def _derived_seed(base_seed: int, config_idx: int, budget: int, rep: int) -> int:
    ss = np.random.SeedSequence([base_seed, config_idx, budget, rep])
    return int(ss.generate_state(1)[0])


def benchmark_sweep(
    game: Game,
    configs: Sequence[tuple[str, PipelineConfig]],
    budgets: Sequence[int],
    repetitions: int,
    base_seed: int = 0,
    threads: int = 1,
    cap: int = BRUTE_FORCE_CAP,
) -> list[SweepRow]:
    """Run every (config, budget, repetition) cell against exact truth.

    Each cell gets an independent seed derived from its coordinates, so
    results do not depend on scheduling; rows come back in cell order.
    """
    if repetitions < 1:
        raise PreconditionError("repetitions must be >= 1")
    cells = []
    for config_idx, (name, config) in enumerate(configs):
        truth = ground_truth(
            game, config.index, config.resolve_targets(game.n), cap=cap
        )
        for budget in budgets:
            for rep in range(repetitions):
                seed = _derived_seed(base_seed, config_idx, budget, rep)
                run_config = replace(
                    config,
                    sampler=replace(config.sampler, budget=budget),
                ).with_seed(seed)
                cells.append((name, budget, rep, run_config, truth))

    def run_cell(cell) -> SweepRow:
        name, budget, rep, run_config, truth = cell
        estimate = estimate_interactions(game, run_config)
        return SweepRow(name, budget, rep, relative_mse(estimate, truth))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(cell) for cell in cells]
    return rows


def summarize_sweep(rows: Sequence[SweepRow]) -> dict:
    """Per-(config, budget) mean and standard error of the mean."""
    groups: dict[tuple[str, int], list[float]] = {}
    for row in rows:
        groups.setdefault((row.config_name, row.budget), []).append(row.relative_mse)
    summary = {}
    for (name, budget), errs in sorted(groups.items()):
        arr = np.array(errs)
        mean = float(arr.mean())
        sem = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
        summary[f"{name}@{budget}"] = {
            "config": name,
            "budget": budget,
            "repetitions": len(errs),
            "mean_relative_mse": mean,
            "sem_relative_mse": sem,
        }
    return summary
