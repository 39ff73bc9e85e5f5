"""Entropy and anonymity degree of (entry, exit) combinations in a circuit log."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

DEGREE_SLACK = 1e-12


class EmptyLogError(ValueError):
    pass


@dataclass(frozen=True)
class CombinationCounts:
    table: Mapping[tuple[str, str], int]

    def __post_init__(self):
        table = {k: int(v) for k, v in self.table.items()}
        if any(v < 1 for v in table.values()):
            raise ValueError("combination counts must be positive")
        object.__setattr__(self, "table", table)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "CombinationCounts":
        return cls(Counter(pairs))

    @property
    def total(self) -> int:
        return sum(self.table.values())

    def __len__(self):
        return len(self.table)


@dataclass(frozen=True)
class PositionDiversity:
    distinct_first: int
    distinct_middle: int
    distinct_end: int
    start_end_combinations: int


@dataclass(frozen=True)
class AnonymityReport:
    diversity: PositionDiversity
    counts: CombinationCounts
    entropy_bits: float
    degree: float
    relay_population: int
    circuits: int


def entropy(counts: CombinationCounts) -> float:
    """Shannon entropy, in bits, of the empirical combination distribution."""
    total = counts.total
    if total < 1:
        raise EmptyLogError("no combinations counted")
    e = 0.0
    for c in sorted(counts.table.values()):
        p = c / total
        e -= p * math.log2(p)
    return max(e, 0.0)


def anonymity_degree(e: float, relay_population: int) -> float:
    """``e`` over the entropy of a uniform choice among population**2 (entry, exit) cells."""
    if relay_population < 2:
        raise ValueError("relay population must be at least 2")
    if e < 0:
        raise ValueError("entropy must be non-negative")
    d = e / math.log2(relay_population**2)
    if d > 1.0 + DEGREE_SLACK:
        raise ValueError(f"entropy {e} exceeds the maximum for {relay_population} relays")
    return min(d, 1.0)


def analyze_log(log, relay_population: int | None = None, used_only: bool = False) -> AnonymityReport:
    """Position diversity, entropy and degree over every circuit in ``log``.

    ``log`` rows need ``entry``, ``middle`` and ``exit`` attributes (and
    ``used`` when ``used_only``).  The population defaults to the number of
    distinct relays seen in the log.
    """
    rows = [r for r in log if r.used] if used_only else list(log)
    if not rows:
        raise EmptyLogError("circuit log is empty")
    first = {r.entry for r in rows}
    middle = {r.middle for r in rows}
    end = {r.exit for r in rows}
    counts = CombinationCounts.from_pairs((r.entry, r.exit) for r in rows)
    if relay_population is None:
        relay_population = max(len(first | middle | end), 2)
    e = entropy(counts)
    return AnonymityReport(
        diversity=PositionDiversity(len(first), len(middle), len(end), len(counts)),
        counts=counts,
        entropy_bits=e,
        degree=anonymity_degree(e, relay_population),
        relay_population=relay_population,
        circuits=len(rows),
    )


ANONYMITY_COLUMNS = (
    "strategy", "distinct_first", "distinct_middle", "distinct_end",
    "combinations", "entropy_bits", "degree",
)


def anonymity_row(strategy: str, report: AnonymityReport) -> list:
    d = report.diversity
    return [
        strategy, d.distinct_first, d.distinct_middle, d.distinct_end,
        d.start_end_combinations, repr(report.entropy_bits), repr(report.degree),
    ]


def write_anonymity(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ANONYMITY_COLUMNS)
        for strategy, report in rows:
            w.writerow(anonymity_row(strategy, report))
