"""Composite-metric circuit path selection for Tor-like networks."""

from .geo import Directory, GeoPoint, Relay, VisitHistory, avg_geo, dist, load_directory
from .rng import RandomStream
from .selection import Circuit, Strategy, build_circuit, rank, select_by_rank

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "Directory",
    "GeoPoint",
    "RandomStream",
    "Relay",
    "Strategy",
    "VisitHistory",
    "avg_geo",
    "build_circuit",
    "dist",
    "load_directory",
    "rank",
    "select_by_rank",
]
