"""Value functions over coalitions.

All games are immutable after construction and evaluate deterministically;
``evaluate_many`` is the vectorized path used by enumeration oracles and
the estimation pipeline.
"""

from __future__ import annotations

import csv
from typing import Sequence

import numpy as np

from .bitset import Coalition, CoalintError, PreconditionError
from .trees import TreeEnsemble, interventional_ensemble

BRUTE_FORCE_CAP = 20


class MissingCoalitionError(CoalintError):
    """A recorded-table game was queried on an unrecorded coalition."""


class GameFormatError(CoalintError):
    """A game file could not be read or parsed."""


class Game:
    """Base value function: subclasses implement ``_value(mask)``."""

    kind = "abstract"

    def __init__(self, n: int):
        if n < 1:
            raise PreconditionError(f"player count must be >= 1, got {n}")
        self.n = n

    def evaluate(self, coalition: Coalition) -> float:
        if coalition.n != self.n:
            raise PreconditionError(
                f"coalition width {coalition.n} != game width {self.n}"
            )
        return self._value(coalition.mask)

    def evaluate_many(self, masks: Sequence[int]) -> np.ndarray:
        return np.array([self._value(int(m)) for m in masks], dtype=np.float64)

    def _value(self, mask: int) -> float:
        raise NotImplementedError

    def grand_coalition(self) -> Coalition:
        return Coalition.full(self.n)


def evaluate(game: Game, coalition: Coalition) -> float:
    return game.evaluate(coalition)


class ConstantGame(Game):
    kind = "constant"

    def __init__(self, n: int, value: float):
        super().__init__(n)
        self.value = float(value)

    def _value(self, mask: int) -> float:
        return self.value

    def evaluate_many(self, masks: Sequence[int]) -> np.ndarray:
        return np.full(len(masks), self.value, dtype=np.float64)


class UnanimityGame(Game):
    """u_R(T) = 1 iff R ⊆ T."""

    kind = "unanimity"

    def __init__(self, carrier: Coalition):
        super().__init__(carrier.n)
        self.carrier = carrier

    def _value(self, mask: int) -> float:
        return 1.0 if self.carrier.mask & ~mask == 0 else 0.0


class MoebiusGame(Game):
    """Sparse game ν(T) = Σ_{R ⊆ T} coefficients[R].

    The coefficient map is exactly the game's sparse interaction-basis
    representation; an empty map is the zero game.
    """

    kind = "synthetic-moebius"

    def __init__(self, n: int, coefficients: dict[Coalition, float] | dict[int, float]):
        super().__init__(n)
        coeffs: dict[int, float] = {}
        for key, value in coefficients.items():
            mask = key.mask if isinstance(key, Coalition) else int(key)
            if mask >> n:
                raise PreconditionError(
                    f"coefficient key {mask:#x} outside width {n}"
                )
            coeffs[mask] = coeffs.get(mask, 0.0) + float(value)
        self.coefficients = coeffs

    def _value(self, mask: int) -> float:
        return float(
            sum(c for r, c in self.coefficients.items() if r & ~mask == 0)
        )

    def evaluate_many(self, masks: Sequence[int]) -> np.ndarray:
        out = np.zeros(len(masks), dtype=np.float64)
        if self.n <= 63:
            arr = np.asarray([int(m) for m in masks], dtype=np.uint64)
            for r, c in self.coefficients.items():
                rw = np.uint64(r)
                out[(arr & rw) == rw] += c
            return out
        return super().evaluate_many(masks)

    def coefficient_coalitions(self) -> dict[Coalition, float]:
        return {Coalition(m, self.n): c for m, c in self.coefficients.items()}


class TableGame(Game):
    """Game backed by a recorded (coalition, value) table.

    Evaluation outside the recorded set is an error, never a default: the
    pipeline guarantees it only queries recorded coalitions.
    """

    kind = "table"

    def __init__(self, n: int, table: dict[Coalition, float] | dict[int, float]):
        super().__init__(n)
        self.table: dict[int, float] = {}
        for key, value in table.items():
            mask = key.mask if isinstance(key, Coalition) else int(key)
            if mask >> n:
                raise PreconditionError(f"table key {mask:#x} outside width {n}")
            self.table[mask] = float(value)

    def _value(self, mask: int) -> float:
        try:
            return self.table[mask]
        except KeyError:
            raise MissingCoalitionError(
                f"coalition {Coalition(mask, self.n).to_string()} is not recorded"
            ) from None


class TreeGame(Game):
    """The game T ↦ ensemble prediction at T."""

    kind = "interventional-tree"

    def __init__(self, ensemble: TreeEnsemble):
        super().__init__(ensemble.n)
        self.ensemble = ensemble

    def _value(self, mask: int) -> float:
        return self.ensemble.predict(Coalition(mask, self.n))

    def evaluate_many(self, masks: Sequence[int]) -> np.ndarray:
        return self.ensemble.predict_masks(list(masks))


class InterventionalGame(TreeGame):
    """Masking game for a tree model: ν(S) averages model outputs over a
    background set with features in S taken from the explained point.

    The model is rewritten into an equivalent coalition-space ensemble at
    construction, so evaluation stays exact and the same ensemble feeds
    ground-truth extraction.
    """

    kind = "interventional-tree"

    def __init__(
        self,
        model: TreeEnsemble,
        explained: Sequence[int],
        background: Sequence[Sequence[int]],
    ):
        super().__init__(interventional_ensemble(model, explained, background))
        self.model = model
        self.explained = tuple(int(v) for v in explained)
        self.background = tuple(tuple(int(v) for v in row) for row in background)

    @classmethod
    def from_dataset(
        cls,
        model: TreeEnsemble,
        explained: Sequence[int],
        dataset: Sequence[Sequence[int]],
        size: int = 50,
        seed: int = 0,
    ) -> "InterventionalGame":
        """Draw the background set from a dataset (without replacement when
        it is large enough; the whole dataset otherwise)."""
        rows = list(dataset)
        if not rows:
            raise PreconditionError("dataset must be nonempty")
        if len(rows) > size:
            rng = np.random.default_rng(seed)
            picked = rng.choice(len(rows), size=size, replace=False)
            rows = [rows[int(i)] for i in sorted(picked)]
        return cls(model, explained, rows)


class CountingGame(Game):
    """Wrapper that counts evaluator calls, for budget-compliance checks."""

    def __init__(self, inner: Game):
        super().__init__(inner.n)
        self.inner = inner
        self.kind = inner.kind
        self.calls = 0

    def _value(self, mask: int) -> float:
        self.calls += 1
        return self.inner._value(mask)

    def evaluate_many(self, masks: Sequence[int]) -> np.ndarray:
        self.calls += len(masks)
        return self.inner.evaluate_many(masks)


def _read_coalition_csv(path: str, value_column: str) -> tuple[int, dict[int, float]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "coalition" not in reader.fieldnames:
                raise GameFormatError(
                    f"{path}: expected a CSV header with a 'coalition' column"
                )
            if value_column not in reader.fieldnames:
                raise GameFormatError(
                    f"{path}: expected a CSV header with a {value_column!r} column"
                )
            n = None
            entries: dict[int, float] = {}
            for row in reader:
                coalition = Coalition.from_string(row["coalition"].strip())
                if n is None:
                    n = coalition.n
                elif coalition.n != n:
                    raise GameFormatError(
                        f"{path}: inconsistent coalition widths "
                        f"({coalition.n} vs {n})"
                    )
                entries[coalition.mask] = float(row[value_column])
    except OSError as exc:
        raise GameFormatError(f"cannot read {path}: {exc}") from exc
    except (ValueError, PreconditionError) as exc:
        raise GameFormatError(f"{path}: {exc}") from exc
    if n is None:
        raise GameFormatError(f"{path} contains no rows")
    return n, entries


def load_table_game(path: str) -> TableGame:
    """Load a recorded game from UTF-8 CSV with header ``coalition,value``."""
    n, entries = _read_coalition_csv(path, "value")
    return TableGame(n, entries)


def load_moebius_game(path: str) -> MoebiusGame:
    """Load a sparse synthetic game; same CSV format, values are coefficients."""
    n, entries = _read_coalition_csv(path, "value")
    return MoebiusGame(n, entries)
