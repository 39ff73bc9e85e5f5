"""Client population: access-link caps by country and the web / bulk split."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

WEB = "web"
BULK = "bulk"

WEB_PAGE_SIZES_KB = (3, 12, 82, 276, 911)
BULK_FILE_SIZES_KB = (1024, 5 * 1024, 10 * 1024, 20 * 1024, 50 * 1024)
THINK_TIME_S = (5.0, 15.0)
PAGES_BEFORE_BREAK = 150
BREAK_S = (15 * 60.0, 20 * 60.0)

# country, share of all users (percent), downlink Mbps, uplink Mbps
COUNTRIES = (
    ("US", 15, 12.67, 3.39),
    ("Germany", 10, 14.67, 2.14),
    ("Iran", 10, 1.5, 0.91),
    ("Italy", 10, 5.46, 1.09),
    ("France", 5, 12.02, 2.88),
)
REFERENCE_CLIENTS = 900
REFERENCE_BULK = 30


def mbps_to_kbps(mbps: float) -> float:
    """Megabits per second to kilobytes (1024 B) per second."""
    return mbps * 1e6 / 8.0 / 1024.0


@dataclass(frozen=True)
class ClientProfile:
    kind: str
    country: str
    down_kbps: float
    up_kbps: float

    def __post_init__(self):
        if self.kind not in (WEB, BULK):
            raise ValueError(f"client kind must be 'web' or 'bulk', got {self.kind!r}")
        if not (self.down_kbps > 0 and self.up_kbps > 0):
            raise ValueError("client caps must be positive")


def build_roster(total_clients: int) -> list[ClientProfile]:
    """Scale the five-country table to ``total_clients`` hosts.

    Countries get floor(total * share / total_share) hosts each; any
    remainder lands in an "other" bucket with the median caps of the table.
    ceil(total / 30) evenly spaced hosts are bulk downloaders.
    """
    if total_clients < 1:
        raise ValueError("total_clients must be at least 1")
    share_sum = sum(c[1] for c in COUNTRIES)
    caps = []
    for name, share, down, up in COUNTRIES:
        n = total_clients * share // share_sum
        caps.extend([(name, down, up)] * n)
    other = total_clients - len(caps)
    if other:
        down = statistics.median(c[2] for c in COUNTRIES)
        up = statistics.median(c[3] for c in COUNTRIES)
        caps.extend([("other", down, up)] * other)

    n_bulk = math.ceil(total_clients * REFERENCE_BULK / REFERENCE_CLIENTS)
    bulk = set()
    if n_bulk and total_clients > 1:
        bulk = {j * total_clients // n_bulk for j in range(n_bulk)}
    # a lone client browses
    return [
        ClientProfile(BULK if i in bulk else WEB, name, mbps_to_kbps(down), mbps_to_kbps(up))
        for i, (name, down, up) in enumerate(caps)
    ]
