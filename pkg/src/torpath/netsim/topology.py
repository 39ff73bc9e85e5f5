"""Synthetic full-mesh topology: relays, web servers and client hosts on a plane."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from ..geo import Directory, GeoPoint, Relay, dist
from ..rng import RandomStream

DEFAULT_REGION = 200.0  # side of the square, in ms of one-way delay
DEFAULT_SERVER_KBPS = 10240.0
DEFAULT_MAX_UPTIME_S = 30 * 86400.0


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class BandwidthProfile:
    """Empirical CDF of relay consensus bandwidth, sampled by linear inverse-CDF."""

    quantiles: tuple[float, ...]
    values: tuple[float, ...]
    name: str = "custom"

    def __post_init__(self):
        q, v = self.quantiles, self.values
        if len(q) < 2 or len(q) != len(v):
            raise ProfileError("profile needs at least two (quantile, value) knots")
        if q[0] != 0.0 or q[-1] != 1.0:
            raise ProfileError("profile quantiles must start at 0 and end at 1")
        if any(b <= a for a, b in zip(q, q[1:])):
            raise ProfileError("profile quantiles must be strictly increasing")
        if any(b < a for a, b in zip(v, v[1:])):
            raise ProfileError("profile values must be non-decreasing")
        if v[0] <= 0:
            raise ProfileError("profile values must be positive")

    def sample(self, u: float) -> float:
        return float(np.interp(u, self.quantiles, self.values))

    @classmethod
    def from_dict(cls, data) -> "BandwidthProfile":
        try:
            knots = data["cdf"]
            q = tuple(float(k[0]) for k in knots)
            v = tuple(float(k[1]) for k in knots)
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise ProfileError(f"malformed bandwidth profile: {exc}") from None
        return cls(q, v, str(data.get("name", "custom")))


def load_profile(path=None) -> BandwidthProfile:
    """Load a profile file, or the bundled consensus approximation when ``path`` is None."""
    if path is None:
        text = resources.files("torpath.data").joinpath("tor_consensus_2012.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"bandwidth profile is not valid JSON: {exc}") from None
    return BandwidthProfile.from_dict(data)


@dataclass(frozen=True)
class Node:
    id: str
    kind: str  # "relay", "server" or "client"
    geo: GeoPoint
    up_kbps: float
    down_kbps: float
    uptime_s: float = 0.0
    institutional: bool = False
    authority: bool = False

    @property
    def consensus_bandwidth(self) -> float:
        return min(self.up_kbps, self.down_kbps)


@dataclass
class Topology:
    relays: list[Node]
    servers: list[Node]
    clients: list[Node] = field(default_factory=list)
    region: float = DEFAULT_REGION

    def __post_init__(self):
        self.nodes = {n.id: n for n in self.relays + self.servers + self.clients}
        if len(self.nodes) != len(self.relays) + len(self.servers) + len(self.clients):
            raise ValueError("topology node ids must be unique")
        for n in self.nodes.values():
            if not (n.up_kbps > 0 and n.down_kbps > 0):
                raise ValueError(f"node {n.id} needs positive capacities")

    def delay(self, a: str, b: str) -> float:
        """One-way propagation delay in seconds."""
        return dist(self.nodes[a].geo, self.nodes[b].geo) / 1000.0

    def directory(self) -> Directory:
        return Directory(
            Relay(n.id, n.geo, n.consensus_bandwidth, n.uptime_s) for n in self.relays
        )


def generate_topology(
    relay_count: int,
    server_count: int,
    seed: int,
    bandwidth_profile: BandwidthProfile | None = None,
    clients: Sequence = (),
    *,
    region: float = DEFAULT_REGION,
    server_kbps: float = DEFAULT_SERVER_KBPS,
    max_uptime_s: float = DEFAULT_MAX_UPTIME_S,
    authority_count: int = 5,
) -> Topology:
    """Place nodes uniformly in a ``region`` x ``region`` square.

    Relay consensus bandwidths come from ``bandwidth_profile``.  Every tenth
    relay (index 0, 10, 20, ...) is institutional with equal up and down
    capacity; the rest are residential with downlink twice the uplink.
    ``clients`` is a sequence of ClientProfile whose caps become the access
    links of the client hosts.
    """
    if relay_count < 1 or server_count < 1:
        raise ValueError("relay_count and server_count must be at least 1")
    if bandwidth_profile is None:
        bandwidth_profile = load_profile()
    root = RandomStream(seed).split("topology")

    def place(stream):
        return GeoPoint(stream.uniform() * region, stream.uniform() * region)

    rs = root.split("relays")
    relays = []
    for i in range(relay_count):
        geo = place(rs)
        bw = bandwidth_profile.sample(rs.uniform())
        uptime = rs.uniform() * max_uptime_s
        institutional = i % 10 == 0
        relays.append(
            Node(
                f"relay{i:03d}",
                "relay",
                geo,
                up_kbps=bw,
                down_kbps=bw if institutional else 2.0 * bw,
                uptime_s=uptime,
                institutional=institutional,
                authority=i < authority_count,
            )
        )
    ss = root.split("servers")
    servers = [
        Node(f"server{i:03d}", "server", place(ss), server_kbps, server_kbps)
        for i in range(server_count)
    ]
    cs = root.split("clients")
    hosts = [
        Node(f"client{i:04d}", "client", place(cs), p.up_kbps, p.down_kbps)
        for i, p in enumerate(clients)
    ]
    return Topology(relays, servers, hosts, region)
