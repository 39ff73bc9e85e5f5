"""Geometry, relay directory model, visit histories and their file formats.

Coordinates are abstract latency units: one unit of Euclidean distance is one
millisecond of one-way propagation delay.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence


class DirectoryError(ValueError):
    """A directory file or relay list violates the directory format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyHistoryError(ValueError):
    pass


@dataclass(frozen=True)
class GeoPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinate ({self.x}, {self.y})")


@dataclass(frozen=True)
class Relay:
    id: str
    geo: GeoPoint
    bandwidth: float  # KB/s
    uptime: float  # seconds

    def __post_init__(self):
        if not self.bandwidth > 0 or not math.isfinite(self.bandwidth):
            raise ValueError(f"relay {self.id!r}: bandwidth must be positive")
        if not self.uptime >= 0 or not math.isfinite(self.uptime):
            raise ValueError(f"relay {self.id!r}: uptime must be non-negative")


class Directory(Sequence[Relay]):
    """Immutable, ordered collection of relays with unique ids."""

    def __init__(self, relays: Iterable[Relay]):
        relays = tuple(relays)
        if not relays:
            raise DirectoryError("directory is empty")
        index = {}
        for i, relay in enumerate(relays):
            if relay.id in index:
                raise DirectoryError(f"duplicate relay id {relay.id!r}")
            index[relay.id] = i
        self._relays = relays
        self._index = index

    def __getitem__(self, i):
        return self._relays[i]

    def __len__(self):
        return len(self._relays)

    def __iter__(self) -> Iterator[Relay]:
        return iter(self._relays)

    def __contains__(self, relay_id) -> bool:
        return relay_id in self._index

    def __eq__(self, other):
        return isinstance(other, Directory) and self._relays == other._relays

    def __hash__(self):
        return hash(self._relays)

    def __repr__(self):
        return f"Directory({len(self)} relays)"

    def get(self, relay_id: str) -> Relay:
        return self._relays[self._index[relay_id]]

    def position(self, relay_id: str) -> int:
        return self._index[relay_id]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self._relays)


@dataclass(frozen=True)
class VisitHistory:
    """Multiset of visited destination points as (point, count) entries."""

    entries: tuple[tuple[GeoPoint, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for point, count in self.entries:
            if not isinstance(point, GeoPoint):
                raise TypeError("history entries must hold GeoPoint instances")
            if int(count) != count or count < 1:
                raise ValueError(f"visit count must be a positive integer, got {count!r}")

    def __len__(self):
        return len(self.entries)

    def __bool__(self):
        return bool(self.entries)

    def add(self, point: GeoPoint, count: int = 1) -> "VisitHistory":
        return VisitHistory(self.entries + ((point, count),))


def dist(a: GeoPoint, b: GeoPoint) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def avg_geo(history: VisitHistory) -> GeoPoint:
    """Visit-count weighted centroid of ``history``.

    Raises EmptyHistoryError for a fresh client; callers fall back to a
    uniformly random exit in that case.
    """
    if not history.entries:
        raise EmptyHistoryError("history is empty")
    sx = sy = total = 0.0
    for point, count in history.entries:
        sx += point.x * count
        sy += point.y * count
        total += count
    return GeoPoint(sx / total, sy / total)


# -- file formats -----------------------------------------------------------

_RELAY_KEYS = ("id", "x", "y", "bandwidth_kbps", "uptime_s")


def _iter_array_items(text: str):
    """Yield (line_number, value) for each element of a top-level JSON array."""
    decoder = json.JSONDecoder()

    def line_of(pos):
        return text.count("\n", 0, pos) + 1

    def skip_ws(pos):
        while pos < len(text) and text[pos] in " \t\r\n":
            pos += 1
        return pos

    pos = skip_ws(0)
    if pos >= len(text) or text[pos] != "[":
        raise DirectoryError("expected a JSON array", line_of(pos))
    pos = skip_ws(pos + 1)
    if pos < len(text) and text[pos] == "]":
        if skip_ws(pos + 1) != len(text):
            raise DirectoryError("trailing data after array", line_of(pos + 1))
        return
    while True:
        try:
            value, end = decoder.raw_decode(text, pos)
        except json.JSONDecodeError as exc:
            raise DirectoryError(exc.msg, exc.lineno) from None
        yield line_of(pos), value
        pos = skip_ws(end)
        if pos >= len(text):
            raise DirectoryError("unterminated array", line_of(pos))
        if text[pos] == ",":
            pos = skip_ws(pos + 1)
            continue
        if text[pos] == "]":
            if skip_ws(pos + 1) != len(text):
                raise DirectoryError("trailing data after array", line_of(pos + 1))
            return
        raise DirectoryError(f"unexpected character {text[pos]!r}", line_of(pos))


def _number(record, key, line):
    value = record[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DirectoryError(f"field {key!r} must be a number", line)
    if not math.isfinite(value):
        raise DirectoryError(f"field {key!r} must be finite", line)
    return float(value)


def parse_directory(text: str) -> Directory:
    relays = []
    seen: dict[str, int] = {}
    for line, record in _iter_array_items(text):
        if not isinstance(record, dict):
            raise DirectoryError("relay record must be an object", line)
        keys = set(record)
        unknown = keys - set(_RELAY_KEYS)
        if unknown:
            raise DirectoryError(f"unknown keys {sorted(unknown)}", line)
        missing = [k for k in _RELAY_KEYS if k not in keys]
        if missing:
            raise DirectoryError(f"missing keys {missing}", line)
        rid = record["id"]
        if not isinstance(rid, str) or not rid:
            raise DirectoryError("field 'id' must be a non-empty string", line)
        if rid in seen:
            raise DirectoryError(f"duplicate relay id {rid!r} (first on line {seen[rid]})", line)
        seen[rid] = line
        bw = _number(record, "bandwidth_kbps", line)
        up = _number(record, "uptime_s", line)
        if bw <= 0:
            raise DirectoryError(f"relay {rid!r}: bandwidth_kbps must be positive", line)
        if up < 0:
            raise DirectoryError(f"relay {rid!r}: uptime_s must be non-negative", line)
        geo = GeoPoint(_number(record, "x", line), _number(record, "y", line))
        relays.append(Relay(rid, geo, bw, up))
    return Directory(relays)


def load_directory(path) -> Directory:
    return parse_directory(Path(path).read_text())


def dump_directory(directory: Directory) -> str:
    records = [
        {"id": r.id, "x": r.geo.x, "y": r.geo.y, "bandwidth_kbps": r.bandwidth, "uptime_s": r.uptime}
        for r in directory
    ]
    return "[\n" + ",\n".join(json.dumps(rec) for rec in records) + "\n]\n"


def save_directory(directory: Directory, path) -> None:
    Path(path).write_text(dump_directory(directory))


def parse_history(text: str) -> VisitHistory:
    entries = []
    for line, record in _iter_array_items(text):
        if not isinstance(record, dict) or set(record) != {"x", "y", "count"}:
            raise DirectoryError("history entries must be objects with keys x, y, count", line)
        count = record["count"]
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise DirectoryError("count must be a positive integer", line)
        entries.append((GeoPoint(_number(record, "x", line), _number(record, "y", line)), count))
    return VisitHistory(tuple(entries))


def load_history(path) -> VisitHistory:
    return parse_history(Path(path).read_text())


def save_history(history: VisitHistory, path) -> None:
    records = [{"x": p.x, "y": p.y, "count": c} for p, c in history.entries]
    Path(path).write_text(json.dumps(records, indent=1) + "\n")
