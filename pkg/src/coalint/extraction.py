"""Polynomial-time exact interaction extraction from tree ensembles.

Every leaf of a tree is an indicator game on the interval
[right, N \\ left]; its contribution to the interaction of a target S is
its value times a weight ``lambda(l, r, u, s)`` that depends only on the
path-set sizes, the overlap u = |S ∩ left|, and the target size s. The
general form is an alternating sum over the family's sparse-basis weights;
per-family closed forms avoid it and the two are pinned against each other
in tests.

The same sparse-basis conversion also powers the linear proxy: its fitted
coefficients are exactly the proxy's sparse-basis coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels
from .bitset import Coalition, PreconditionError, masks_to_words
from .indices import IndexSpec, q_weight, q_weight_exact
from .oracle import interactions_from_coefficients
from .results import InteractionVector
from .trees import TreeEnsemble


@dataclass(frozen=True)
class LambdaKey:
    """Sizes identifying a leaf/target weight: (|left|, |right|, |S∩left|, |S|)."""

    l: int
    r: int
    u: int
    s: int

    def __post_init__(self) -> None:
        if min(self.l, self.r, self.u, self.s) < 0:
            raise PreconditionError("lambda key entries must be non-negative")
        if self.u > min(self.l, self.s):
            raise PreconditionError(
                f"require u <= min(l, s): {self}"
            )
        # A leaf can only cover S when S ⊆ left ∪ right, which forces
        # s - u = |S ∩ right| <= r; outside that range the family's
        # sparse-basis weights q_t^s with t < s are not defined.
        if self.u + self.r < self.s:
            raise PreconditionError(
                f"require u + r >= s (leaf cannot cover the target): {self}"
            )


# Above this many alternating terms, float64 cancellation can cost more
# than ~1e-12 relative accuracy; closed-form sums switch to exact rationals.
_RATIONAL_DEPTH = 8


@lru_cache(maxsize=200_000)
def lambda_general(index: IndexSpec, n: int, key: LambdaKey) -> float:
    """The alternating-sum weight, valid for every supported family.

    Evaluated as an exact rational and rounded once: the alternating
    binomials cancel catastrophically in floats, the key space is bounded
    by tree depth, and results are memoized, so exactness is cheap here.
    """
    return float(lambda_general_exact(index, n, key))


def lambda_general_float(index: IndexSpec, n: int, key: LambdaKey) -> float:
    """Compensated float evaluation of the alternating sum.

    Kept as the reference implementation of the sum itself; tests bound its
    drift against the rational path.
    """
    l, r, u, s = key.l, key.r, key.u, key.s
    terms = []
    for i in range(l - u + 1):
        sign = -1.0 if (i + u) % 2 else 1.0
        terms.append(sign * math.comb(l - u, i) * q_weight(index, n, s, i + u + r))
    return math.fsum(terms)


def lambda_general_exact(index: IndexSpec, n: int, key: LambdaKey) -> Fraction:
    """Exact rational evaluation of the alternating sum (test reference)."""
    l, r, u, s = key.l, key.r, key.u, key.s
    total = Fraction(0)
    for i in range(l - u + 1):
        sign = -1 if (i + u) % 2 else 1
        total += sign * math.comb(l - u, i) * q_weight_exact(index, n, s, i + u + r)
    return total


def _log_beta(a: int, b: int) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


@lru_cache(maxsize=200_000)
def lambda_closed(index: IndexSpec, n: int, key: LambdaKey) -> float:
    """Per-family closed form of the leaf weight.

    For the Shapley family this is the corrected denominator
    (a + b + 1) * C(a + b, a) with a = u + r - s and b = l - u, which is the
    variant that matches the general sum and the brute-force oracle (see
    the closed-form gate test).
    """
    l, r, u, s = key.l, key.r, key.u, key.s
    u_sign = -1.0 if u % 2 else 1.0
    fam = index.family
    if fam in ("SV", "SII"):
        a = u + r - s
        b = l - u
        # Exact integer denominator, one correctly-rounded division: equal
        # bit for bit to the rational general path.
        return float(Fraction(-1 if u % 2 else 1, (a + b + 1) * math.comb(a + b, a)))
    if fam in ("BV", "BII"):
        w = index.banzhaf_w
        return u_sign * w ** (u + r - s) * (1.0 - w) ** (l - u)
    if fam == "CHII":
        return s * u_sign * math.exp(_log_beta(u + r, l - u + 1))
    if fam == "MOEBIUS":
        return u_sign if u + r == s else 0.0
    if fam in ("FBII", "FSII"):
        if l - u > _RATIONAL_DEPTH:
            return float(_lambda_faithful_closed_exact(index, key))
        k = index.max_order
        moebius_term = u_sign if u + r == s else 0.0
        terms = [moebius_term]
        ks_sign = -1.0 if (k - s) % 2 else 1.0
        for i in range(max(0, k - r - u + 1), l - u + 1):
            t = r + i + u
            sign = ks_sign * (-1.0 if (u + i) % 2 else 1.0)
            if fam == "FBII":
                mag = 0.5 ** (t - s) * math.comb(t - s - 1, k - s)
            else:
                mag = (
                    s / (k + s) * math.comb(k, s)
                    * math.comb(t - 1, k) / math.comb(t + k - 1, k + s)
                )
            terms.append(sign * math.comb(l - u, i) * mag)
        return math.fsum(terms)
    raise AssertionError(fam)


def _lambda_faithful_closed_exact(index: IndexSpec, key: LambdaKey) -> Fraction:
    """Exact rational form of the faithful-family tail sum."""
    l, r, u, s = key.l, key.r, key.u, key.s
    k = index.max_order
    u_sign = -1 if u % 2 else 1
    total = Fraction(u_sign if u + r == s else 0)
    ks_sign = -1 if (k - s) % 2 else 1
    for i in range(max(0, k - r - u + 1), l - u + 1):
        t = r + i + u
        sign = ks_sign * (-1 if (u + i) % 2 else 1)
        if index.family == "FBII":
            mag = Fraction(1, 2) ** (t - s) * math.comb(t - s - 1, k - s)
        else:
            mag = (
                Fraction(s, k + s)
                * math.comb(k, s)
                * Fraction(math.comb(t - 1, k), math.comb(t + k - 1, k + s))
            )
        total += sign * math.comb(l - u, i) * mag
    return total


def lambda_table(
    index: IndexSpec, n: int, max_l: int, max_r: int, max_s: int, mode: str = "closed"
) -> np.ndarray:
    """Dense (l, r, u, s) weight table for the extraction kernels.

    Invalid combinations are NaN; the kernels never read them because the
    covering guard restricts u to the valid band.
    """
    if mode not in ("closed", "general"):
        raise PreconditionError(f"unknown lambda mode {mode!r}")
    fn = lambda_closed if mode == "closed" else lambda_general
    max_u = min(max_l, max_s)
    table = np.full((max_l + 1, max_r + 1, max_u + 1, max_s + 1), np.nan)
    for s in range(1, max_s + 1):
        try:
            index.validate_target_order(s)
        except PreconditionError:
            continue
        for l in range(max_l + 1):
            for r in range(max_r + 1):
                if l + r > n:
                    continue
                for u in range(max(0, s - r), min(l, s) + 1):
                    table[l, r, u, s] = fn(index, n, LambdaKey(l, r, u, s))
    return table


def extract_tree_interactions(
    ensemble: TreeEnsemble,
    index: IndexSpec,
    targets: Iterable[Coalition],
    lambda_mode: str = "closed",
    provenance: str = "exact",
) -> InteractionVector:
    """Exact interactions of the ensemble's prediction game, by leaf sums.

    One pass over all leaves per target; the base score never enters
    because targets have size >= 1. Runtime is linear in the leaf count
    and in the number of targets.
    """
    targets = list(targets)
    if not targets:
        raise PreconditionError("targets must be nonempty")
    n = ensemble.n
    max_s = 0
    for target in targets:
        if target.n != n:
            raise PreconditionError(
                f"target width {target.n} != ensemble width {n}"
            )
        index.validate_target_order(len(target))
        max_s = max(max_s, len(target))

    l_words, r_words, values, l_sizes, r_sizes = ensemble.packed_leaves()
    out = InteractionVector(index, n)
    if len(values) == 0:
        for target in targets:
            out.set(target, 0.0, provenance)
        return out

    max_l = int(l_sizes.max(initial=0))
    max_r = int(r_sizes.max(initial=0))
    table = lambda_table(index, n, max_l, max_r, max_s, mode=lambda_mode)
    target_words = masks_to_words([t.mask for t in targets], n)
    target_sizes = np.array([len(t) for t in targets], dtype=np.int64)
    phi = kernels.extract_interactions(
        l_words, r_words, values, l_sizes, r_sizes, target_words, target_sizes, table
    )
    for target, value in zip(targets, phi):
        out.set(target, float(value), provenance)
    return out


@dataclass(frozen=True)
class LinearProxy:
    """Additive model over membership indicators of a fixed basis."""

    basis: tuple[Coalition, ...]
    beta: np.ndarray
    n: int

    def predict(self, coalition: Coalition) -> float:
        total = 0.0
        for subset, b in zip(self.basis, self.beta):
            if subset.issubset(coalition):
                total += b
        return float(total)

    def predict_masks(self, masks: Sequence[int]) -> np.ndarray:
        design = _design_matrix([int(m) for m in masks], self.basis)
        return design @ self.beta

    def coefficients(self) -> dict[int, float]:
        return {
            subset.mask: float(b)
            for subset, b in zip(self.basis, self.beta)
            if b != 0.0
        }


def _design_matrix(masks: Sequence[int], basis: Sequence[Coalition]) -> np.ndarray:
    design = np.empty((len(masks), len(basis)), dtype=np.float64)
    for j, subset in enumerate(basis):
        sub = subset.mask
        design[:, j] = [1.0 if sub & ~m == 0 else 0.0 for m in masks]
    return design


def fit_linear_proxy(
    data: Sequence[tuple[Coalition, float]], basis: Sequence[Coalition]
) -> LinearProxy:
    """Least-squares fit of the indicator design; minimum-norm under rank
    deficiency (pseudoinverse semantics)."""
    basis = tuple(basis)
    if not basis:
        raise PreconditionError("basis must be nonempty")
    if not data:
        raise PreconditionError("data must be nonempty")
    n = basis[0].n
    for subset in basis:
        if subset.n != n:
            raise PreconditionError("basis widths differ")
    masks = []
    y = np.empty(len(data), dtype=np.float64)
    for i, (coalition, value) in enumerate(data):
        if coalition.n != n:
            raise PreconditionError("data width differs from basis width")
        masks.append(coalition.mask)
        y[i] = value
    design = _design_matrix(masks, basis)
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    return LinearProxy(basis=basis, beta=beta, n=n)


def extract_linear_interactions(
    proxy: LinearProxy,
    index: IndexSpec,
    targets: Iterable[Coalition],
    provenance: str = "exact",
) -> InteractionVector:
    """Exact interactions of the linear proxy via its sparse-basis weights."""
    out = interactions_from_coefficients(
        {subset.mask: float(b) for subset, b in zip(proxy.basis, proxy.beta)},
        index,
        targets,
        proxy.n,
    )
    if provenance != "exact":
        for key in out.entries:
            out.provenance[key] = provenance
    return out
