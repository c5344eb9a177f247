"""Result container for computed interaction values."""

from __future__ import annotations

from dataclasses import dataclass, field

from .bitset import Coalition, PreconditionError
from .indices import IndexSpec

PROVENANCES = ("exact", "proxy", "proxy+msr", "msr-only")


@dataclass
class InteractionVector:
    """Interaction values per target subset, with per-entry provenance."""

    index: IndexSpec
    n: int
    entries: dict[Coalition, float] = field(default_factory=dict)
    provenance: dict[Coalition, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for coalition in self.entries:
            self._check_key(coalition)
        for coalition, tag in self.provenance.items():
            if tag not in PROVENANCES:
                raise PreconditionError(f"unknown provenance tag {tag!r}")
            if coalition not in self.entries:
                raise PreconditionError("provenance key without an entry")

    def _check_key(self, coalition: Coalition) -> None:
        if coalition.n != self.n:
            raise PreconditionError(
                f"entry width {coalition.n} != vector width {self.n}"
            )
        self.index.validate_target_order(len(coalition))

    def set(self, coalition: Coalition, value: float, provenance: str) -> None:
        self._check_key(coalition)
        if provenance not in PROVENANCES:
            raise PreconditionError(f"unknown provenance tag {provenance!r}")
        self.entries[coalition] = float(value)
        self.provenance[coalition] = provenance

    def __getitem__(self, coalition: Coalition) -> float:
        return self.entries[coalition]

    def __len__(self) -> int:
        return len(self.entries)

    def sorted_items(self) -> list[tuple[Coalition, float]]:
        return sorted(self.entries.items(), key=lambda kv: (len(kv[0]), kv[0].mask))

    def add(self, other: "InteractionVector", provenance: str) -> "InteractionVector":
        """Entrywise sum over a shared key set (the decomposition combiner)."""
        if set(self.entries) != set(other.entries):
            raise PreconditionError("interaction vectors have different key sets")
        out = InteractionVector(self.index, self.n)
        for key, value in self.entries.items():
            out.set(key, value + other.entries[key], provenance)
        return out
