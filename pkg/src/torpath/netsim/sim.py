"""Deterministic fluid-flow simulation of clients fetching files over circuits.

Time is in seconds, sizes in KB (1024 bytes), rates in KB/s.  A request
reaches the server after one forward traversal of client -> entry -> middle
-> exit -> server; the first byte arrives one return traversal later, and
from then on the transfer shares node capacities max-min fairly with every
other active transfer.  Rates are recomputed whenever a transfer starts or
finishes.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..geo import Directory, VisitHistory
from ..rng import RandomStream
from ..selection import Circuit, Strategy, build_circuit
from . import workload
from .flow import max_min_rates
from .topology import (
    DEFAULT_REGION,
    DEFAULT_SERVER_KBPS,
    Topology,
    generate_topology,
    load_profile,
)
from .workload import BULK, ClientProfile, build_roster

HISTORY_MODES = ("none", "accumulate")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    seed: int
    strategy: Strategy
    relay_count: int = 50
    server_count: int = 50
    total_clients: int = 90
    duration_s: float = 7200.0
    circuit_lifetime_s: float = 600.0
    backup_circuits: int = 2
    bandwidth_profile: str | None = None
    region: float = DEFAULT_REGION
    server_kbps: float = DEFAULT_SERVER_KBPS
    history: str = "accumulate"
    web_sizes_kb: tuple[float, ...] = workload.WEB_PAGE_SIZES_KB
    bulk_sizes_kb: tuple[float, ...] = workload.BULK_FILE_SIZES_KB
    response_latency_s: float = 0.0
    roster: tuple[ClientProfile, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        for name in ("web_sizes_kb", "bulk_sizes_kb"):
            sizes = tuple(float(s) for s in getattr(self, name))
            if not sizes or any(not s > 0 for s in sizes):
                raise ConfigError(f"{name} must be a non-empty list of positive sizes")
            object.__setattr__(self, name, sizes)
        if self.roster is not None:
            object.__setattr__(self, "roster", tuple(self.roster))
        self.validate()

    def validate(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if self.relay_count < 3:
            raise ConfigError("relay_count must be at least 3")
        if self.server_count < 1 or self.total_clients < 1:
            raise ConfigError("server_count and total_clients must be at least 1")
        if self.circuit_lifetime_s <= 0:
            raise ConfigError("circuit_lifetime_s must be positive")
        # zero duration is the vacuous run; anything else must outlast one circuit
        if self.duration_s < 0 or 0 < self.duration_s <= self.circuit_lifetime_s:
            raise ConfigError("duration_s must be 0 or longer than circuit_lifetime_s")
        if self.backup_circuits < 0:
            raise ConfigError("backup_circuits must be non-negative")
        if self.history not in HISTORY_MODES:
            raise ConfigError(f"history must be one of {HISTORY_MODES}")
        if self.region <= 0 or self.server_kbps <= 0 or self.response_latency_s < 0:
            raise ConfigError("region and server_kbps must be positive")
        if self.roster is not None and len(self.roster) != self.total_clients:
            raise ConfigError("roster length must equal total_clients")

    def clients(self) -> list[ClientProfile]:
        return list(self.roster) if self.roster is not None else build_roster(self.total_clients)

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "SimConfig":
        known = {f.name for f in fields(cls)} - {"roster"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        if "seed" not in data or "strategy" not in data:
            raise ConfigError("scenario needs 'seed' and 'strategy'")
        kwargs = dict(data)
        profile = kwargs.get("bandwidth_profile")
        if profile is not None and base_dir is not None:
            kwargs["bandwidth_profile"] = str(Path(base_dir, profile))
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_scenario(path) -> SimConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: scenario must be a JSON object")
    return SimConfig.from_dict(data, base_dir=path.parent)


def build_scenario(config: SimConfig) -> tuple[Directory, Topology]:
    profile = load_profile(config.bandwidth_profile)
    topology = generate_topology(
        config.relay_count,
        config.server_count,
        config.seed,
        profile,
        config.clients(),
        region=config.region,
        server_kbps=config.server_kbps,
    )
    return topology.directory(), topology


@dataclass(frozen=True)
class TransferRecord:
    transfer_id: int
    client_id: str
    kind: str
    bytes: int
    requested_at_s: float
    ttfb_s: float
    duration_s: float
    circuit: Circuit
    server: str
    circuit_wait_s: float = 0.0

    @property
    def completed_at_s(self) -> float:
        return self.requested_at_s + self.duration_s

    @property
    def throughput_kbps(self) -> float:
        return self.bytes / 1024.0 / self.duration_s


@dataclass
class CircuitRecord:
    client_id: str
    entry: str
    middle: str
    exit: str
    built_at_s: float
    used: bool = False
    strategy: str = ""


@dataclass
class SimResult:
    transfers: list[TransferRecord]
    circuits: list[CircuitRecord]
    # (time, {transfer_id: rate}) after every reallocation, when requested
    rate_log: list | None = None


def path_delay(topology: Topology, client: str, circuit: Circuit, server: str) -> float:
    """One-way client -> entry -> middle -> exit -> server delay in seconds."""
    hops = (client, circuit.entry, circuit.middle, circuit.exit, server)
    return sum(topology.delay(a, b) for a, b in zip(hops, hops[1:]))


def circuit_build_time(topology: Topology, client: str, circuit: Circuit) -> float:
    """Telescoping build: one round trip to each successive hop, serialized."""
    d1 = topology.delay(client, circuit.entry)
    d2 = d1 + topology.delay(circuit.entry, circuit.middle)
    d3 = d2 + topology.delay(circuit.middle, circuit.exit)
    return 2.0 * (d1 + d2 + d3)


def flow_resources(client: str, circuit: Circuit, server: str) -> tuple:
    return (
        (server, "up"),
        (circuit.exit, "down"),
        (circuit.exit, "up"),
        (circuit.middle, "down"),
        (circuit.middle, "up"),
        (circuit.entry, "down"),
        (circuit.entry, "up"),
        (client, "down"),
    )


class _Client:
    __slots__ = (
        "index", "node", "profile", "work", "visits", "current", "pending",
        "pending_ready", "current_log", "pending_log", "pages",
    )

    def __init__(self, index, node, profile, work):
        self.index = index
        self.node = node
        self.profile = profile
        self.work = work
        self.visits: dict[int, int] = {}
        self.current = None
        self.pending = None
        self.pending_ready = 0.0
        self.current_log = None
        self.pending_log = None
        self.pages = 0

    def history(self, topology) -> VisitHistory:
        return VisitHistory(
            tuple((topology.servers[s].geo, c) for s, c in sorted(self.visits.items()))
        )


@dataclass
class _Flow:
    record: dict
    resources: tuple
    remaining: float
    rate: float = 0.0


_ROTATE, _REQUEST, _FIRST_BYTE = 0, 1, 2


class _Simulation:
    def __init__(self, config: SimConfig, directory: Directory, topology: Topology, record_rates):
        self.config = config
        self.directory = directory
        self.topology = topology
        missing = [r.id for r in directory if r.id not in topology.nodes]
        if missing:
            raise ConfigError(f"directory relays missing from topology: {missing[:3]}")
        profiles = config.clients()
        if len(topology.clients) != len(profiles):
            raise ConfigError("topology client hosts do not match the roster")
        self.root = RandomStream(config.seed).split("sim")
        self.clients = [
            _Client(i, node, p, self.root.split("workload", i))
            for i, (node, p) in enumerate(zip(topology.clients, profiles))
        ]
        self.capacity = {}
        for n in topology.nodes.values():
            self.capacity[(n.id, "up")] = n.up_kbps
            self.capacity[(n.id, "down")] = n.down_kbps
        self.heap: list = []
        self.seq = 0
        self.flows: dict[int, _Flow] = {}
        self.next_transfer = 0
        self.transfers: list[TransferRecord] = []
        self.circuits: list[CircuitRecord] = []
        self.rate_log = [] if record_rates else None

    def push(self, t, kind, payload):
        heapq.heappush(self.heap, (t, self.seq, kind, payload))
        self.seq += 1

    # -- circuits ------------------------------------------------------------

    def build_round(self, client: _Client, k: int, now: float, with_traffic=True):
        cfg = self.config
        rng = self.root.split("circuit", client.index, k)
        history = client.history(self.topology) if cfg.history == "accumulate" else VisitHistory()
        built = []
        for _ in range(1 + cfg.backup_circuits):
            c = build_circuit(cfg.strategy, self.directory, rng, client.node.geo, history)
            log = CircuitRecord(client.node.id, c.entry, c.middle, c.exit, now, False, cfg.strategy.value)
            self.circuits.append(log)
            built.append((c, log))
        if with_traffic:
            active, log = built[0]
            client.pending = active
            client.pending_log = log
            client.pending_ready = now + circuit_build_time(self.topology, client.node.id, active)

    def circuit_for(self, client: _Client, now: float):
        """Circuit a new stream attaches to, and when it can start using it."""
        if client.pending is not None and (client.current is None or client.pending_ready <= now):
            start = max(now, client.pending_ready)
            client.current, client.current_log = client.pending, client.pending_log
            client.pending = client.pending_log = None
            return client.current, client.current_log, start
        return client.current, client.current_log, now

    # -- workload ------------------------------------------------------------

    def request(self, client: _Client, now: float):
        cfg = self.config
        w = client.work
        server = w.index(len(self.topology.servers))
        sizes = cfg.bulk_sizes_kb if client.profile.kind == BULK else cfg.web_sizes_kb
        size_kb = sizes[w.index(len(sizes))]
        client.visits[server] = client.visits.get(server, 0) + 1
        circuit, log, start = self.circuit_for(client, now)
        log.used = True
        server_id = self.topology.servers[server].id
        one_way = path_delay(self.topology, client.node.id, circuit, server_id)
        first_byte = start + 2.0 * one_way + cfg.response_latency_s
        tid = self.next_transfer
        self.next_transfer += 1
        record = dict(
            transfer_id=tid,
            client=client,
            size_kb=size_kb,
            requested=now,
            first_byte=first_byte,
            circuit=circuit,
            server=server_id,
            wait=start - now,
        )
        self.push(first_byte, _FIRST_BYTE, record)

    def next_request(self, client: _Client, now: float):
        if client.profile.kind == BULK:
            self.push(now, _REQUEST, client)
            return
        client.pages += 1
        if client.pages >= workload.PAGES_BEFORE_BREAK:
            client.pages = 0
            pause = client.work.uniform_range(*workload.BREAK_S)
        else:
            pause = client.work.uniform_range(*workload.THINK_TIME_S)
        self.push(now + pause, _REQUEST, client)

    # -- fluid model ---------------------------------------------------------

    def reallocate(self, now):
        rates = max_min_rates({tid: f.resources for tid, f in self.flows.items()}, self.capacity)
        for tid, f in self.flows.items():
            f.rate = rates[tid]
        if self.rate_log is not None:
            self.rate_log.append((now, {tid: f.rate for tid, f in self.flows.items()}))

    def finish(self, tid, now):
        f = self.flows.pop(tid)
        rec = f.record
        client = rec["client"]
        self.transfers.append(
            TransferRecord(
                transfer_id=tid,
                client_id=client.node.id,
                kind=client.profile.kind,
                bytes=int(round(rec["size_kb"] * 1024)),
                requested_at_s=rec["requested"],
                ttfb_s=rec["first_byte"] - rec["requested"],
                duration_s=now - rec["requested"],
                circuit=rec["circuit"],
                server=rec["server"],
                circuit_wait_s=rec["wait"],
            )
        )
        self.next_request(client, now)

    def run(self) -> SimResult:
        cfg = self.config
        end = cfg.duration_s
        if end <= 0:
            return SimResult([], [], self.rate_log)
        k = 0
        while k * cfg.circuit_lifetime_s < end:
            self.push(k * cfg.circuit_lifetime_s, _ROTATE, k)
            k += 1
        for client in self.clients:
            self.push(client.work.uniform_range(0.0, workload.THINK_TIME_S[1]), _REQUEST, client)

        now = 0.0
        while True:
            t_event = self.heap[0][0] if self.heap else math.inf
            t_done, done_tid = math.inf, None
            for tid, f in self.flows.items():
                t = now + f.remaining / f.rate
                if t < t_done:
                    t_done, done_tid = t, tid
            t_next = min(t_event, t_done)
            if t_next > end:
                break
            dt = t_next - now
            if dt > 0:
                for f in self.flows.values():
                    f.remaining -= f.rate * dt
            now = t_next
            if done_tid is not None and t_done <= t_event:
                self.flows[done_tid].remaining = 0.0
                finished = [
                    tid for tid, f in self.flows.items()
                    if f.remaining <= 1e-9 * f.record["size_kb"]
                ]
                for tid in finished:
                    self.finish(tid, now)
                self.reallocate(now)
                continue
            _, _, kind, payload = heapq.heappop(self.heap)
            if kind == _ROTATE:
                for client in self.clients:
                    self.build_round(client, payload, now)
            elif kind == _REQUEST:
                self.request(payload, now)
            else:
                rec = payload
                res = flow_resources(rec["client"].node.id, rec["circuit"], rec["server"])
                self.flows[rec["transfer_id"]] = _Flow(rec, res, rec["size_kb"])
                self.reallocate(now)
        return SimResult(self.transfers, self.circuits, self.rate_log)


def run_simulation(
    config: SimConfig, directory: Directory, topology: Topology, record_rates: bool = False
) -> SimResult:
    """Run the workload; returns completed transfers and the full circuit log."""
    return _Simulation(config, directory, topology, record_rates).run()


def circuit_sweep(config: SimConfig, directory: Directory, topology: Topology, rounds: int) -> list[CircuitRecord]:
    """Build ``rounds`` rotations of circuits for every client without any traffic.

    Produces exactly the circuits a full run would build at the same rotation
    indices (only valid for history mode "none", where traffic cannot
    influence selection).
    """
    if config.history != "none":
        raise ConfigError("circuit_sweep needs history mode 'none'")
    sim = _Simulation(config, directory, topology, False)
    for k in range(rounds):
        for client in sim.clients:
            sim.build_round(client, k, k * config.circuit_lifetime_s, with_traffic=False)
    return sim.circuits


def with_strategy(config: SimConfig, strategy) -> SimConfig:
    return replace(config, strategy=Strategy.parse(strategy))
