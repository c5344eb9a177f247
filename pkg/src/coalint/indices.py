"""Weight registry for the supported interaction-index families.

Every family is defined by one or both of two weight rows:

* ``p_weight(n, s, t)`` — the coalition weight multiplying the discrete
  derivative of a size-s subset given a size-t outside coalition, and
* ``q_weight(n, s, t)`` — the weight multiplying the order-t interaction
  coefficient in the sparse (Moebius) representation.

Shapley, Banzhaf and Moebius families carry both rows. The chaining and
faithful families are only defined through their q row; asking for their
p row raises, and downstream sampling-based estimation refuses them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .bitset import PreconditionError

FAMILIES = ("SV", "SII", "BV", "BII", "CHII", "MOEBIUS", "FSII", "FBII")

# Families with a coalition-weight row usable in derivative-route
# enumeration and in reweighting-based sampled estimation.
P_WEIGHT_FAMILIES = frozenset({"SV", "SII", "BV", "BII", "MOEBIUS"})

# Families where p is a probability distribution over outside coalitions.
DISTRIBUTION_FAMILIES = frozenset({"SV", "SII", "BV", "BII"})

_VALUE_FAMILIES = frozenset({"SV", "BV"})  # singleton targets only
_FAITHFUL_FAMILIES = frozenset({"FSII", "FBII"})


@dataclass(frozen=True)
class IndexSpec:
    """Which interaction index to compute.

    ``banzhaf_w`` is the success probability of the Banzhaf-family weight
    row (1/2 recovers the classical index). ``max_order`` is the maximal
    interaction order k; it is required for the faithful families, whose
    definition depends on k, and otherwise only bounds valid targets.
    """

    family: str
    banzhaf_w: float = 0.5
    max_order: int | None = None

    def __post_init__(self) -> None:
        fam = self.family.upper()
        object.__setattr__(self, "family", fam)
        if fam not in FAMILIES:
            raise PreconditionError(f"unknown index family: {self.family!r}")
        if fam in ("BV", "BII") and not 0.0 < self.banzhaf_w < 1.0:
            raise PreconditionError(
                f"banzhaf_w must lie in (0,1), got {self.banzhaf_w}"
            )
        if fam in _FAITHFUL_FAMILIES:
            if self.max_order is None or self.max_order < 1:
                raise PreconditionError(
                    f"{fam} requires a positive max_order k"
                )
        if self.max_order is not None and self.max_order < 1:
            raise PreconditionError("max_order must be >= 1")

    @property
    def has_p_weights(self) -> bool:
        return self.family in P_WEIGHT_FAMILIES

    def validate_target_order(self, s: int) -> None:
        if s < 1:
            raise PreconditionError("targets must have size >= 1")
        if self.family in _VALUE_FAMILIES and s != 1:
            raise PreconditionError(
                f"{self.family} is a value index; targets must be singletons"
            )
        if self.family in _FAITHFUL_FAMILIES and s > self.max_order:
            raise PreconditionError(
                f"{self.family}(k={self.max_order}) supports orders 1..{self.max_order},"
                f" got {s}"
            )
        if self.max_order is not None and s > self.max_order:
            raise PreconditionError(
                f"target order {s} exceeds max_order {self.max_order}"
            )

    def label(self) -> str:
        parts = [self.family.lower()]
        if self.family in ("BV", "BII") and self.banzhaf_w != 0.5:
            parts.append(f"w={self.banzhaf_w:g}")
        if self.family in _FAITHFUL_FAMILIES:
            parts.append(f"k={self.max_order}")
        return "-".join(parts)


def log_binom(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _check_pt_range(n: int, s: int, t: int) -> None:
    if not 1 <= s <= n:
        raise PreconditionError(f"require 1 <= s <= n, got s={s}, n={n}")
    if not 0 <= t <= n - s:
        raise PreconditionError(f"require 0 <= t <= n-s, got t={t}, n-s={n - s}")


def p_weight(index: IndexSpec, n: int, s: int, t: int) -> float:
    """Coalition weight p_t^s(n) of the index family.

    Log-space evaluation keeps large-n binomials finite until the final
    exponentiation.
    """
    _check_pt_range(n, s, t)
    fam = index.family
    if fam in ("SV", "SII"):
        return math.exp(-math.log(n - s + 1) - log_binom(n - s, t))
    if fam in ("BV", "BII"):
        w = index.banzhaf_w
        return math.exp(t * math.log(w) + (n - s - t) * math.log1p(-w))
    if fam == "MOEBIUS":
        return 1.0 if t == 0 else 0.0
    raise PreconditionError(
        f"{fam} has no coalition-weight row (sparse-representation route only)"
    )


def p_weight_exact(index: IndexSpec, n: int, s: int, t: int) -> Fraction:
    """Exact rational p_t^s(n); used by tests to bound float error."""
    _check_pt_range(n, s, t)
    fam = index.family
    if fam in ("SV", "SII"):
        return Fraction(1, (n - s + 1) * math.comb(n - s, t))
    if fam in ("BV", "BII"):
        w = Fraction(index.banzhaf_w)
        return w**t * (1 - w) ** (n - s - t)
    if fam == "MOEBIUS":
        return Fraction(1 if t == 0 else 0)
    raise PreconditionError(f"{fam} has no coalition-weight row")


def _check_qt_range(index: IndexSpec, n: int, s: int, t: int) -> None:
    if not 1 <= s <= n:
        raise PreconditionError(f"require 1 <= s <= n, got s={s}, n={n}")
    if not s <= t <= n:
        raise PreconditionError(f"require s <= t <= n, got s={s}, t={t}, n={n}")
    if index.family in _FAITHFUL_FAMILIES and s > index.max_order:
        raise PreconditionError(
            f"{index.family} defined only for orders s <= k={index.max_order}"
        )


def q_weight(index: IndexSpec, n: int, s: int, t: int) -> float:
    """Sparse-representation weight q_t^s(n) of the index family."""
    _check_qt_range(index, n, s, t)
    fam = index.family
    if fam in ("SV", "SII"):
        return 1.0 / (t - s + 1)
    if fam in ("BV", "BII"):
        return index.banzhaf_w ** (t - s)
    if fam == "MOEBIUS":
        return 1.0 if t == s else 0.0
    if fam == "CHII":
        return s / t
    if fam == "FBII":
        k = index.max_order
        if t == s:
            return 1.0
        if t <= k:
            return 0.0
        sign = -1.0 if (k - s) % 2 else 1.0
        return sign * 0.5 ** (t - s) * math.comb(t - s - 1, k - s)
    if fam == "FSII":
        k = index.max_order
        if t == s:
            return 1.0
        if t <= k:
            return 0.0
        sign = -1.0 if (k - s) % 2 else 1.0
        log_mag = (
            math.log(s) - math.log(k + s) + log_binom(k, s)
            + log_binom(t - 1, k) - log_binom(t + k - 1, k + s)
        )
        return sign * math.exp(log_mag)
    raise AssertionError(fam)


def q_weight_exact(index: IndexSpec, n: int, s: int, t: int) -> Fraction:
    """Exact rational q_t^s(n); used by tests and the rational lambda path."""
    _check_qt_range(index, n, s, t)
    fam = index.family
    if fam in ("SV", "SII"):
        return Fraction(1, t - s + 1)
    if fam in ("BV", "BII"):
        return Fraction(index.banzhaf_w) ** (t - s)
    if fam == "MOEBIUS":
        return Fraction(1 if t == s else 0)
    if fam == "CHII":
        return Fraction(s, t)
    if fam == "FBII":
        k = index.max_order
        if t == s:
            return Fraction(1)
        if t <= k:
            return Fraction(0)
        sign = -1 if (k - s) % 2 else 1
        return sign * Fraction(1, 2) ** (t - s) * math.comb(t - s - 1, k - s)
    if fam == "FSII":
        k = index.max_order
        if t == s:
            return Fraction(1)
        if t <= k:
            return Fraction(0)
        sign = -1 if (k - s) % 2 else 1
        return (
            sign
            * Fraction(s, k + s)
            * math.comb(k, s)
            * Fraction(math.comb(t - 1, k), math.comb(t + k - 1, k + s))
        )
    raise AssertionError(fam)


def parse_family(text: str) -> str:
    fam = text.strip().upper()
    if fam not in FAMILIES:
        raise PreconditionError(
            f"unknown index family {text!r}; choose from "
            + "|".join(f.lower() for f in FAMILIES)
        )
    return fam
