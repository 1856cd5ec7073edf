from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations


@dataclass(frozen=True, order=True)
class IndexSet:
    """A subset of {1, ..., n} naming the positivity intervals that carry a large bump."""

    members: tuple[int, ...] = ()

    def __post_init__(self):
        m = tuple(int(i) for i in self.members)
        if list(m) != sorted(set(m)) or any(i < 1 for i in m):
            raise ValueError(f"index set members must be sorted, unique and >= 1: {self.members}")
        object.__setattr__(self, "members", m)

    @classmethod
    def of(cls, *members: int) -> "IndexSet":
        return cls(tuple(sorted(members)))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, i):
        return i in self.members

    @property
    def cardinality(self) -> int:
        return len(self.members)

    def check_range(self, n: int):
        if self.members and self.members[-1] > n:
            raise ValueError(f"index set {self.members} exceeds n = {n}")
        return self

    def subsets(self):
        for k in range(len(self.members) + 1):
            for combo in combinations(self.members, k):
                yield IndexSet(combo)

    def label(self) -> str:
        return "{" + ",".join(str(i) for i in self.members) + "}"

    @classmethod
    def parse(cls, text: str) -> "IndexSet":
        body = text.strip().strip("{}").strip()
        if not body:
            return cls(())
        return cls.of(*(int(t) for t in body.split(",")))

    def sort_key(self):
        return (len(self.members), self.members)


def all_index_sets(n: int, include_empty: bool = True):
    """Every subset of {1..n}, ordered by cardinality and then lexicographically."""
    out = []
    for k in range(0 if include_empty else 1, n + 1):
        out.extend(IndexSet(c) for c in combinations(range(1, n + 1), k))
    return out
