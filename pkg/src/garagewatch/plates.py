"""License-plate candidate normalization, filtering and weighted-vote consensus."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import InputError

PLATE_LENGTH = 6
DEFAULT_K = 3


@dataclass(frozen=True)
class PlateCandidate:
    raw: str
    confidence: float
    tick: int = 0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 100.0:
            raise InputError(f"confidence must be within [0, 100], got {self.confidence}")

    @property
    def plate(self):
        return normalize_plate(self.raw)


@dataclass(frozen=True)
class ConsensusResult:
    ranked: list = field(default_factory=list)

    @property
    def winner(self):
        return self.ranked[0][0] if self.ranked else None

    @property
    def winner_score(self):
        return self.ranked[0][1] if self.ranked else None

    def as_dict(self):
        return {
            "winner": self.winner,
            "ranked": [{"plate": p, "score": s} for p, s in self.ranked],
        }


def normalize_plate(raw: str) -> str:
    return raw.upper().replace(" ", "").replace("-", "").strip()


def is_valid_plate(plate: str) -> bool:
    """Six characters, each an ASCII letter or digit."""
    return len(plate) == PLATE_LENGTH and plate.isascii() and plate.isalnum()


def filter_valid(candidates):
    return [c for c in candidates if is_valid_plate(c.plate)]


def consensus(candidates, k: int = DEFAULT_K) -> ConsensusResult:
    """Confidence-weighted vote over valid candidates.

    A plate's score is the sum of the confidences of its occurrences. The top
    `k` plates are ranked by score descending, then plate ascending. Sums use
    ``math.fsum`` so the scores do not depend on input order.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    votes = {}
    for c in filter_valid(candidates):
        votes.setdefault(c.plate, []).append(c.confidence)
    scored = sorted(((p, math.fsum(v)) for p, v in votes.items()), key=lambda ps: (-ps[1], ps[0]))
    return ConsensusResult(ranked=scored[:k])


def load_candidates(path) -> list:
    """Read a JSON-lines candidate log of ``{tick, raw, confidence}`` objects."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out.append(PlateCandidate(str(row["raw"]), float(row["confidence"]), int(row.get("tick", 0))))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    return out
