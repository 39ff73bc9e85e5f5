"""Circuit path selection: relative distance, composite rank, weighted draws.

Every strategy picks the exit (R3) first, then the middle (R2), then the
entry (R1), excluding relays already chosen.  Each stage consumes exactly one
uniform draw from the supplied RandomStream, so one circuit costs three draws
regardless of strategy.  Entry-guard selection also costs one draw per guard.
"""

from __future__ import annotations

import enum
import math
import weakref
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geo import Directory, GeoPoint, Relay, VisitHistory, avg_geo, dist
from .rng import RandomStream


class Strategy(str, enum.Enum):
    RANDOM = "random"
    DEFAULT = "default"
    GEO = "geo"
    COMPOSITE = "composite"

    @classmethod
    def parse(cls, name) -> "Strategy":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown strategy {name!r} (expected one of: {valid})") from None

    def __str__(self):
        return self.value


class InsufficientRelaysError(ValueError):
    pass


class ZeroRankError(ValueError):
    """Every candidate has rank zero; the caller should pick uniformly."""


class RankDomainError(ValueError):
    pass


@dataclass(frozen=True)
class Circuit:
    entry: str
    middle: str
    exit: str
    strategy: Strategy

    def __post_init__(self):
        if len({self.entry, self.middle, self.exit}) != 3:
            raise ValueError(f"circuit relays must be distinct: {self.ids}")

    @property
    def ids(self) -> tuple[str, str, str]:
        return (self.entry, self.middle, self.exit)


@dataclass(frozen=True)
class RankedRelay:
    relay: Relay
    rd: float
    rank: float


@dataclass(frozen=True)
class StageTrace:
    """Ranks seen at one selection stage; recorded only when asked for."""

    position: str  # "exit", "middle" or "entry"
    target: GeoPoint | None
    candidates: tuple[RankedRelay, ...]
    chosen: str
    uniform: bool


@dataclass(frozen=True)
class GuardSelection:
    guards: tuple[str, str, str]
    degraded: tuple[bool, bool, bool]

    @property
    def degraded_mode(self) -> bool:
        return any(self.degraded)


def relative_distance(candidate: GeoPoint, source: GeoPoint, target: GeoPoint) -> float:
    return dist(candidate, source) + dist(candidate, target)


def _ratio(value, maximum, name):
    if maximum == 0:
        if value != 0:
            raise RankDomainError(f"{name} {value} exceeds maximum 0")
        return 0.0
    r = value / maximum
    if r > 1.0 or r < 0.0:
        raise RankDomainError(f"{name} ratio {r} outside [0, 1]")
    return r


def rank(relay: Relay, rd: float, max_bandwidth: float, max_rd: float, max_uptime: float) -> float:
    """perf * (1 - latency) * log2(1 + reliability), each term normalised by its maximum."""
    if not max_bandwidth > 0:
        raise RankDomainError("max_bandwidth must be positive")
    if max_rd < 0 or max_uptime < 0 or rd < 0:
        raise RankDomainError("distances and uptimes must be non-negative")
    perf = _ratio(relay.bandwidth, max_bandwidth, "bandwidth")
    latency = _ratio(rd, max_rd, "rd")
    reliability = _ratio(relay.uptime, max_uptime, "uptime")
    return perf * (1.0 - latency) * math.log2(1.0 + reliability)


def _weighted_index(weights, u: float) -> int | None:
    """Index picked by the cumulative-sum walk for draw ``u``; None if all weights are zero.

    Equivalent to subtracting ranks from ``u * sum`` in list order and stopping
    at the first rank larger than the remainder.
    """
    cum = np.cumsum(weights, dtype=float)
    total = cum[-1]
    if not total > 0:
        return None
    i = int(np.searchsorted(cum, u * total, side="right"))
    if i >= len(cum):
        # u * total rounded up to total; take the last positive weight
        i = int(np.flatnonzero(np.asarray(weights) > 0)[-1])
    return i


def select_by_rank(candidates: Sequence[RankedRelay], rng: RandomStream) -> Relay:
    """Draw one relay with probability rank / sum(rank).  Consumes one draw."""
    if not candidates:
        raise ValueError("no candidates")
    ranks = [c.rank for c in candidates]
    for r in ranks:
        if not (math.isfinite(r) and r >= 0):
            raise ValueError(f"invalid rank {r!r}")
    i = _weighted_index(ranks, rng.uniform())
    if i is None:
        raise ZeroRankError("all candidate ranks are zero")
    return candidates[i].relay


# -- vectorised stage machinery ---------------------------------------------


class _Arrays:
    __slots__ = ("x", "y", "bw", "up", "ids", "__weakref__")

    def __init__(self, directory: Directory):
        self.x = np.array([r.geo.x for r in directory])
        self.y = np.array([r.geo.y for r in directory])
        self.bw = np.array([r.bandwidth for r in directory])
        self.up = np.array([r.uptime for r in directory])
        self.ids = directory.ids


_array_cache: "weakref.WeakKeyDictionary[Directory, _Arrays]" = weakref.WeakKeyDictionary()


def _arrays(directory: Directory) -> _Arrays:
    arr = _array_cache.get(directory)
    if arr is None:
        arr = _array_cache[directory] = _Arrays(directory)
    return arr


def _normalised(values):
    m = values.max()
    if m > 0:
        return values / m
    return np.zeros_like(values)


def _stage_ranks(strategy: Strategy, arr: _Arrays, idx, source: GeoPoint, target: GeoPoint | None):
    """Return (rd, rank) arrays over the eligible positions ``idx``."""
    if strategy is Strategy.DEFAULT:
        rd = np.zeros(len(idx))
    else:
        rd = np.hypot(arr.x[idx] - source.x, arr.y[idx] - source.y) + np.hypot(
            arr.x[idx] - target.x, arr.y[idx] - target.y
        )
    if strategy is Strategy.GEO:
        return rd, 1.0 - _normalised(rd)
    perf = arr.bw[idx] / arr.bw[idx].max()
    reliability = np.log2(1.0 + _normalised(arr.up[idx]))
    if strategy is Strategy.DEFAULT:
        return rd, perf * reliability
    return rd, perf * (1.0 - _normalised(rd)) * reliability


def _run_stage(strategy, directory, arr, eligible, source, target, rng, position, trace):
    idx = np.flatnonzero(eligible)
    u = rng.uniform()
    if strategy is Strategy.RANDOM or target is None and strategy is not Strategy.DEFAULT:
        pick = idx[min(int(u * len(idx)), len(idx) - 1)]
        rd = ranks = None
        uniform = True
    else:
        rd, ranks = _stage_ranks(strategy, arr, idx, source, target)
        i = _weighted_index(ranks, u)
        uniform = i is None
        if uniform:
            i = min(int(u * len(idx)), len(idx) - 1)
        pick = idx[i]
    if trace is not None:
        if ranks is None:
            cands = tuple(RankedRelay(directory[j], math.nan, 1.0) for j in idx)
        else:
            cands = tuple(
                RankedRelay(directory[j], float(d), float(r)) for j, d, r in zip(idx, rd, ranks)
            )
        trace.append(StageTrace(position, target, cands, arr.ids[pick], uniform))
    return int(pick)


def _build(strategy, directory, rng, source=None, history=None, trace=None) -> Circuit:
    if len(directory) < 3:
        raise InsufficientRelaysError(f"need at least 3 relays, directory has {len(directory)}")
    arr = _arrays(directory)
    eligible = np.ones(len(directory), dtype=bool)
    if strategy in (Strategy.GEO, Strategy.COMPOSITE):
        if source is None:
            raise ValueError(f"{strategy} selection needs a source point")
        target = avg_geo(history) if history else None
    else:
        target = source
    picks = []
    for position in ("exit", "middle", "entry"):
        j = _run_stage(strategy, directory, arr, eligible, source, target, rng, position, trace)
        eligible[j] = False
        picks.append(j)
        if strategy is not Strategy.DEFAULT:
            target = directory[j].geo
    r3, r2, r1 = (arr.ids[j] for j in picks)
    return Circuit(entry=r1, middle=r2, exit=r3, strategy=strategy)


def select_path_random(directory: Directory, rng: RandomStream, trace=None) -> Circuit:
    return _build(Strategy.RANDOM, directory, rng, trace=trace)


def select_path_default(directory: Directory, rng: RandomStream, trace=None) -> Circuit:
    """Bandwidth times log-uptime weighting at every position, no geography."""
    return _build(Strategy.DEFAULT, directory, rng, trace=trace)


def select_path_geo(
    source: GeoPoint, history: VisitHistory, directory: Directory, rng: RandomStream, trace=None
) -> Circuit:
    return _build(Strategy.GEO, directory, rng, source=source, history=history, trace=trace)


def select_path_composite(
    source: GeoPoint, history: VisitHistory, directory: Directory, rng: RandomStream, trace=None
) -> Circuit:
    """Exit first, aimed at the client's average visited location, then middle and entry.

    With an empty history the exit is ``directory[floor(u * len(directory))]``.
    """
    return _build(Strategy.COMPOSITE, directory, rng, source=source, history=history, trace=trace)


def build_circuit(
    strategy,
    directory: Directory,
    rng: RandomStream,
    source: GeoPoint | None = None,
    history: VisitHistory | None = None,
    trace=None,
) -> Circuit:
    strategy = Strategy.parse(strategy)
    history = history if history is not None else VisitHistory()
    return _build(strategy, directory, rng, source=source, history=history, trace=trace)


# -- entry guards --------------------------------------------------------------


def bearing_sector(source: GeoPoint, point: GeoPoint) -> int:
    """Which 120-degree sector (0, 1, 2 counter-clockwise from +x) ``point`` lies in."""
    angle = math.degrees(math.atan2(point.y - source.y, point.x - source.x)) % 360.0
    return min(int(angle // 120.0), 2)


def _guard_ranks(relays: Sequence[Relay], source: GeoPoint) -> list[float]:
    max_bw = max(r.bandwidth for r in relays)
    max_up = max(r.uptime for r in relays)
    d = [dist(source, r.geo) for r in relays]
    max_d = max(d)
    out = []
    for r, di in zip(relays, d):
        rel = r.uptime / max_up if max_up > 0 else 0.0
        near = 1.0 - di / max_d if max_d > 0 else 1.0
        out.append(r.bandwidth / max_bw * math.log2(1.0 + rel) * near)
    return out


def _pick(relays: Sequence[Relay], ranks: Sequence[float], rng: RandomStream) -> Relay:
    u = rng.uniform()
    i = _weighted_index(ranks, u)
    if i is None:
        i = min(int(u * len(relays)), len(relays) - 1)
    return relays[i]


def select_entry_guards(source: GeoPoint, directory: Directory, rng: RandomStream) -> GuardSelection:
    """One guard per 120-degree sector around ``source``.

    Within a sector relays are weighted by bandwidth, log-uptime and
    closeness to the source.  An empty sector is filled afterwards from the
    whole directory minus the guards already chosen, and flagged degraded.
    """
    if len(directory) < 3:
        raise InsufficientRelaysError(f"need at least 3 relays, directory has {len(directory)}")
    sectors: list[list[Relay]] = [[], [], []]
    for relay in directory:
        sectors[bearing_sector(source, relay.geo)].append(relay)
    guards: list[str | None] = [None, None, None]
    for k, members in enumerate(sectors):
        if members:
            guards[k] = _pick(members, _guard_ranks(members, source), rng).id
    degraded = tuple(g is None for g in guards)
    for k in range(3):
        if guards[k] is None:
            rest = [r for r in directory if r.id not in guards]
            guards[k] = _pick(rest, _guard_ranks(rest, source), rng).id
    return GuardSelection(tuple(guards), degraded)
