from .flow import max_min_rates
from .sim import (
    CircuitRecord,
    ConfigError,
    SimConfig,
    SimResult,
    TransferRecord,
    build_scenario,
    circuit_sweep,
    load_scenario,
    run_simulation,
)
from .stats import Summary, summarize
from .topology import BandwidthProfile, Node, Topology, generate_topology, load_profile
from .workload import ClientProfile, build_roster

flow_rate = max_min_rates

__all__ = [
    "BandwidthProfile", "CircuitRecord", "ClientProfile", "ConfigError", "Node", "SimConfig",
    "SimResult", "Summary", "Topology", "TransferRecord", "build_roster", "build_scenario",
    "circuit_sweep", "flow_rate", "generate_topology", "load_profile", "load_scenario",
    "max_min_rates", "run_simulation", "summarize",
]
