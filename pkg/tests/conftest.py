import numpy as np
import pytest

from coalint import Coalition, MoebiusGame


def random_sparse_game(
    seed: int, n: int, n_terms: int = 12, max_order: int | None = None
) -> MoebiusGame:
    """Seeded sparse game over the interaction basis; the standard test game.

    Terms are drawn by size first so bounded orders stay cheap at any n.
    """
    rng = np.random.default_rng(seed)
    top = min(max_order, n) if max_order is not None else n
    coeffs: dict[int, float] = {}
    while len(coeffs) < n_terms:
        size = int(rng.integers(1, top + 1))
        members = rng.choice(n, size=size, replace=False)
        mask = int(sum(1 << int(i) for i in members))
        coeffs[mask] = float(rng.normal())
    return MoebiusGame(n, coeffs)


@pytest.fixture
def small_game() -> MoebiusGame:
    return random_sparse_game(seed=42, n=8, n_terms=10, max_order=4)


def coalition(bits: str) -> Coalition:
    return Coalition.from_string(bits)


def rel_err(got: float, want: float) -> float:
    return abs(got - want) / max(1.0, abs(want))
