"""End-to-end acceptance checks.  Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""

import math
import statistics
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sps

from torpath import cli
from torpath.anonymity import CombinationCounts, analyze_log, entropy
from torpath.geo import GeoPoint, Relay
from torpath.netsim.sim import SimConfig, build_scenario, circuit_sweep, run_simulation
from torpath.netsim.stats import summarize
from torpath.rng import RandomStream
from torpath.selection import RankedRelay, select_by_rank, select_path_random

ROOT = Path(__file__).resolve().parent.parent
STRATEGIES = ("random", "default", "geo", "composite")


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


def test_criterion_1_uniform_entropy(report):
    t0 = time.perf_counter()
    cells = {(f"r{i}", f"r{j}"): 1 for i in range(50) for j in range(50)}
    e = entropy(CombinationCounts(cells))
    elapsed = time.perf_counter() - t0
    ok = abs(e - 11.287712) <= 1e-6 and elapsed < 1.0
    report(1, ok, f"entropy={e:.7f} bits (target 11.287712 +/- 1e-6), {elapsed * 1000:.1f} ms")
    assert ok


def test_criterion_2_random_row(report):
    t0 = time.perf_counter()
    cfg = SimConfig(seed=2012, strategy="random", relay_count=50)
    directory, _ = build_scenario(cfg)
    root = RandomStream(2012).split("acceptance-random")
    log = [select_path_random(directory, root.split(i)) for i in range(135_000)]
    rep = analyze_log(log, relay_population=50)
    elapsed = time.perf_counter() - t0
    combos = rep.diversity.start_end_combinations
    ok = rep.degree >= 0.98 and combos >= 2400 and elapsed < 60
    report(2, ok, f"degree={rep.degree:.4f} (>= 0.98), combinations={combos} (>= 2400), {elapsed:.1f} s")
    assert ok


def test_criterion_3_anonymity_ordering(report):
    # anonymity runs build circuits without visit history
    cfg = SimConfig(seed=2012, strategy="random", history="none")
    directory, topology = build_scenario(cfg)
    rounds = math.ceil(50_000 / (cfg.total_clients * (1 + cfg.backup_circuits)))
    degree = {}
    for s in STRATEGIES:
        log = circuit_sweep(replace(cfg, strategy=s), directory, topology, rounds=rounds)
        assert len(log) >= 50_000
        degree[s] = analyze_log(log, relay_population=50).degree
    ok = degree["default"] < degree["composite"] < degree["geo"] and abs(degree["geo"] - degree["random"]) <= 0.02
    detail = ", ".join(f"{s}={degree[s]:.3f}" for s in STRATEGIES)
    report(3, ok, f"{detail}; need default < composite < geo and |geo-random| <= 0.02")
    assert ok


def _median_throughput(cfg):
    directory, topology = build_scenario(cfg)
    res = run_simulation(cfg, directory, topology)
    return cfg.strategy.value, summarize(res.transfers).median_client_throughput_kbps


def test_criterion_4_throughput(report):
    t0 = time.perf_counter()
    base = SimConfig(seed=2012, strategy="random", relay_count=50, total_clients=90, duration_s=7200)
    configs = [replace(base, strategy=s) for s in STRATEGIES]
    with ProcessPoolExecutor(max_workers=4) as pool:
        med = dict(pool.map(_median_throughput, configs))
    elapsed = time.perf_counter() - t0
    ratio = med["composite"] / med["default"]
    ok = med["composite"] > med["default"] > med["random"] and ratio >= 1.5 and elapsed < 600
    detail = ", ".join(f"{s}={med[s]:.1f}" for s in STRATEGIES)
    report(4, ok, f"median per-client KB/s {detail}; composite/default={ratio:.2f} (>= 1.5), {elapsed:.0f} s")
    assert ok


def test_criterion_5_light_load_latency(report):
    circuits = 200
    base = SimConfig(seed=2012, strategy="random", total_clients=1, backup_circuits=0,
                     duration_s=circuits * 600.0, web_sizes_kb=(1 / 1024,))
    directory, topology = build_scenario(base)
    med = {}
    for s in STRATEGIES:
        res = run_simulation(replace(base, strategy=s), directory, topology)
        assert len(res.circuits) == circuits
        med[s] = statistics.median(r.ttfb_s for r in res.transfers)
    ok = med["geo"] < med["default"] and med["geo"] < med["random"]
    detail = ", ".join(f"{s}={med[s] * 1000:.1f}ms" for s in STRATEGIES)
    report(5, ok, f"median ttfb {detail}; need geo lowest of geo/default/random")
    assert ok


def _relays(weights):
    return [RankedRelay(Relay(f"c{i}", GeoPoint(0, i), 1.0, 1.0), 0.0, w) for i, w in enumerate(weights)]


@pytest.mark.parametrize("size", [2, 3, 50])
def test_criterion_6_sampling(report, size):
    src = RandomStream(size).split("weights")
    weights = [0.05 + src.uniform() for _ in range(size)]
    cands = _relays(weights)
    rng = RandomStream(2012).split("draws", size)
    n = 100_000
    hits = {c.relay.id: 0 for c in cands}
    for _ in range(n):
        hits[select_by_rank(cands, rng).id] += 1
    p = np.array(weights) / sum(weights)
    observed = np.array([hits[c.relay.id] for c in cands])
    expected = n * p
    sigma = np.sqrt(n * p * (1 - p))
    # the per-candidate bound is a family of `size` 3-sigma checks; with 50
    # candidates a correct sampler exceeds at least one about 13% of the time
    worst = float(np.max(np.abs(observed - expected) / sigma))
    pval = sps.chisquare(observed, expected).pvalue
    ok = worst <= 3 and pval > 0.001
    report(6, ok, f"{size} candidates: max |z|={worst:.2f} (<= 3), chi-square p={pval:.3f} (> 0.001)")
    assert ok


def test_criterion_7_property_suites_and_determinism(report, tmp_path):
    suites = ["test_geo.py", "test_rng.py", "test_selection.py", "test_flow.py", "test_sim.py",
              "test_anonymity.py", "test_stats.py", "test_topology.py", "test_workload.py"]
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *[str(ROOT / "tests" / s) for s in suites]],
        capture_output=True, text=True, cwd=ROOT,
    )
    suites_ok = proc.returncode == 0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]

    scenario = ROOT / "scenarios" / "quick.json"
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert cli.main(["simulate", "--scenario", str(scenario), "--out", str(out)]) == 0
    files_a = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(outs[1]) for p in outs[1].rglob("*") if p.is_file())
    identical = files_a == files_b and all(
        (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files_a
    )
    ok = suites_ok and identical
    report(7, ok, f"property suites: {tail}; {len(files_a)} output files byte-identical across runs: {identical}")
    assert ok
