from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .greens import GridProfile
from .indexset import IndexSet


@dataclass
class SolutionSet:
    """Distinct nontrivial non-negative solutions found at one value of lambda.

    ``indices`` holds the signed index of each solution (sign of S'(s*) for
    shooting, sign det J for Newton); ``slopes`` the initial slopes u'(0);
    ``boxes`` the classified index set, or None when classification was
    refused.
    """

    lam: float
    profiles: list[GridProfile] = field(default_factory=list)
    slopes: list[float] = field(default_factory=list)
    indices: list[int] = field(default_factory=list)
    boxes: list[IndexSet | None] = field(default_factory=list)
    trivial_index: int = 1
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.profiles)

    def add(self, profile, slope, index, box=None):
        self.profiles.append(profile)
        self.slopes.append(float(slope))
        self.indices.append(int(index))
        self.boxes.append(box)

    def occupied(self):
        return sorted({b for b in self.boxes if b is not None}, key=IndexSet.sort_key)

    def min_sup(self) -> float:
        return min((pr.sup for pr in self.profiles), default=float("inf"))

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "trivial_index": self.trivial_index,
            "solutions": [
                {
                    "index_set": None if b is None else list(b.members),
                    "slope": s,
                    "index": i,
                    "profile": pr.to_dict(),
                }
                for pr, s, i, b in zip(self.profiles, self.slopes, self.indices, self.boxes)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj) -> "SolutionSet":
        out = cls(float(obj["lambda"]), trivial_index=int(obj.get("trivial_index", 1)))
        for sol in obj["solutions"]:
            box = None if sol["index_set"] is None else IndexSet(tuple(sol["index_set"]))
            out.add(GridProfile.from_dict(sol["profile"]), sol["slope"], sol["index"], box)
        return out

    @classmethod
    def from_json(cls, text) -> "SolutionSet":
        return cls.from_dict(json.loads(text))


def is_duplicate(values, kept, tol) -> bool:
    return any(np.max(np.abs(values - k)) < tol for k in kept)


def match_profiles(a: SolutionSet, b: SolutionSet):
    """Greedy nearest matching of two solution sets on a common grid.

    Returns a list of (i, j, sup-distance), one per profile of ``a`` that
    found a partner in ``b``; each profile of ``b`` is used at most once.
    """
    pairs = []
    for i, pa in enumerate(a.profiles):
        for j, pb in enumerate(b.profiles):
            if pa.grid != pb.grid:
                raise ValueError("profiles live on different grids")
            pairs.append((float(np.max(np.abs(pa.values - pb.values))), i, j))
    pairs.sort()
    used_a, used_b, out = set(), set(), []
    for d, i, j in pairs:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        out.append((i, j, d))
    return sorted(out)
