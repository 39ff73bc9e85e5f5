"""Command line entry point: ``torpath simulate | select | analyze``."""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import anonymity
from .geo import DirectoryError, GeoPoint, VisitHistory, load_directory, load_history
from .netsim import io as netsim_io
from .netsim.sim import ConfigError, SimConfig, build_scenario, load_scenario, run_simulation
from .netsim.stats import summarize
from .rng import RandomStream
from .selection import InsufficientRelaysError, Strategy, build_circuit

log = logging.getLogger("torpath")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunManifest:
    scenario: Path
    strategies: tuple[Strategy, ...]
    out_dir: Path
    seeds: tuple[int, ...]

    def __post_init__(self):
        if not self.strategies:
            raise UsageError("no strategies requested")
        if not self.seeds:
            raise UsageError("at least one seed is required")


def parse_strategies(text: str) -> tuple[Strategy, ...]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    try:
        out = tuple(Strategy.parse(n) for n in names)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(set(out)) != len(out):
        raise UsageError("strategies listed more than once")
    return out


def run_dir(out_dir: Path, strategy: Strategy, seed: int) -> Path:
    return out_dir / strategy.value / f"seed{seed}"


def _run_one(config: SimConfig):
    directory, topology = build_scenario(config)
    result = run_simulation(config, directory, topology)
    report = anonymity.analyze_log(result.circuits, relay_population=len(directory)) if result.circuits else None
    return result, report


def _fmt_num(x):
    return "n/a" if x is None else f"{x:.3f}"


def format_report(rows) -> str:
    """rows: (strategy, seed, Summary | None, AnonymityReport | None)."""
    lines = ["# per-strategy results", ""]
    lines.append(f"{'strategy':<10} {'seed':>6} {'transfers':>9} {'median_thr_kbps':>16} {'median_ttfb_s':>14}")
    for strategy, seed, summary, _ in rows:
        n = summary.transfers if summary else 0
        thr = summary.median_client_throughput_kbps if summary else None
        ttfb = summary.median_ttfb_s if summary else None
        lines.append(f"{strategy:<10} {seed:>6} {n:>9} {_fmt_num(thr):>16} {_fmt_num(ttfb):>14}")
    lines += ["", "# anonymity", ""]
    lines.append(
        f"{'strategy':<10} {'seed':>6} {'first':>6} {'middle':>6} {'end':>6} {'start-end':>9} {'E(x)':>8} {'d':>6}"
    )
    for strategy, seed, _, rep in rows:
        if rep is None:
            lines.append(f"{strategy:<10} {seed:>6} (no circuits)")
            continue
        d = rep.diversity
        lines.append(
            f"{strategy:<10} {seed:>6} {d.distinct_first:>6} {d.distinct_middle:>6} {d.distinct_end:>6}"
            f" {d.start_end_combinations:>9} {rep.entropy_bits:>8.3f} {rep.degree:>6.3f}"
        )
    return "\n".join(lines) + "\n"


def cmd_simulate(manifest: RunManifest, jobs: int = 1) -> list[Path]:
    base = load_scenario(manifest.scenario)
    configs = [
        replace(base, strategy=s, seed=seed) for s in manifest.strategies for seed in manifest.seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, configs))
    else:
        results = [_run_one(c) for c in configs]

    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=manifest.out_dir))
    written = []
    try:
        rows = []
        for config, (result, report) in zip(configs, results):
            rel = run_dir(Path("."), config.strategy, config.seed)
            d = staging / rel
            d.mkdir(parents=True)
            netsim_io.write_transfers(result.transfers, d / "transfers.csv")
            netsim_io.write_circuits(result.circuits, d / "circuits.csv")
            anonymity.write_anonymity(
                [(config.strategy.value, report)] if report else [], d / "anonymity.csv"
            )
            summary = summarize(result.transfers) if result.transfers else None
            rows.append((config.strategy.value, config.seed, summary, report))
            log.info("%s seed %d: %d transfers, %d circuits", config.strategy, config.seed,
                     len(result.transfers), len(result.circuits))
        (staging / "report.txt").write_text(format_report(rows))
        for src in sorted(staging.rglob("*")):
            if src.is_file():
                dst = manifest.out_dir / src.relative_to(staging)
                dst.parent.mkdir(parents=True, exist_ok=True)
                shutil.move(str(src), dst)
                written.append(dst)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return written


def cmd_select(directory_path, history_path, source: GeoPoint, strategy, seed: int, out=None):
    out = out or sys.stdout
    directory = load_directory(directory_path)
    history = load_history(history_path) if history_path else VisitHistory()
    trace = []
    circuit = build_circuit(strategy, directory, RandomStream(seed), source, history, trace=trace)
    print(f"strategy {circuit.strategy.value}", file=out)
    print(f"entry  {circuit.entry}", file=out)
    print(f"middle {circuit.middle}", file=out)
    print(f"exit   {circuit.exit}", file=out)
    for stage in trace:
        how = "uniform" if stage.uniform else "ranked"
        print(f"\n[{stage.position}] chosen={stage.chosen} ({how})", file=out)
        for c in stage.candidates:
            print(f"  {c.relay.id}\trd={c.rd!r}\trank={c.rank!r}", file=out)
    return circuit, trace


def cmd_analyze(circuits_path, relay_count=None, used_only=False, strategy="unknown", out_path=None, out=None):
    out = out or sys.stdout
    rows = netsim_io.read_circuits(circuits_path)
    report = anonymity.analyze_log(rows, relay_population=relay_count, used_only=used_only)
    if out_path:
        anonymity.write_anonymity([(strategy, report)], out_path)
    print(",".join(anonymity.ANONYMITY_COLUMNS), file=out)
    print(",".join(str(x) for x in anonymity.anonymity_row(strategy, report)), file=out)
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torpath", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run scenario simulations and anonymity analysis")
    sim.add_argument("--scenario", required=True, type=Path)
    sim.add_argument("--out", required=True, type=Path)
    sim.add_argument("--seed", type=int, action="append", help="repeatable; defaults to the scenario seed")
    sim.add_argument("--strategies", default="random,default,geo,composite")
    sim.add_argument("--jobs", type=int, default=1)

    sel = sub.add_parser("select", help="build one circuit and print per-stage ranks")
    sel.add_argument("--directory", required=True, type=Path)
    sel.add_argument("--history", type=Path)
    sel.add_argument("--source", required=True, type=float, nargs=2, metavar=("X", "Y"))
    sel.add_argument("--strategy", default="composite")
    sel.add_argument("--seed", type=int, default=0)

    an = sub.add_parser("analyze", help="anonymity analysis of an existing circuits.csv")
    an.add_argument("--circuits", required=True, type=Path)
    an.add_argument("--relays", type=int, help="relay population (default: distinct relays in the log)")
    an.add_argument("--used-only", action="store_true")
    an.add_argument("--strategy", default="unknown", help="label for the output row")
    an.add_argument("--out", type=Path, help="write anonymity.csv here")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            if args.jobs < 1:
                raise UsageError("--jobs must be at least 1")
            scenario_seed = None
            if not args.seed:
                scenario_seed = load_scenario(args.scenario).seed
            manifest = RunManifest(
                scenario=args.scenario,
                strategies=parse_strategies(args.strategies),
                out_dir=args.out,
                seeds=tuple(args.seed) if args.seed else (scenario_seed,),
            )
            cmd_simulate(manifest, jobs=args.jobs)
        elif args.command == "select":
            try:
                strategy = Strategy.parse(args.strategy)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            cmd_select(args.directory, args.history, GeoPoint(*args.source), strategy, args.seed)
        else:
            cmd_analyze(args.circuits, args.relays, args.used_only, args.strategy, args.out)
    except (UsageError, ConfigError) as exc:
        print(f"torpath: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, DirectoryError, InsufficientRelaysError, ValueError) as exc:
        print(f"torpath: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
