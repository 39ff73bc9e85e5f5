"""CSV encodings of transfer and circuit logs.  Column order is frozen."""

from __future__ import annotations

import csv
from pathlib import Path

from .sim import CircuitRecord, TransferRecord

TRANSFER_COLUMNS = ("client_id", "kind", "bytes", "ttfb_s", "duration_s", "throughput_kbps")
CIRCUIT_COLUMNS = ("client_id", "entry", "middle", "exit", "built_at_s", "used")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_transfers(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRANSFER_COLUMNS)
        for r in records:
            w.writerow(
                [r.client_id, r.kind, r.bytes, _fmt(r.ttfb_s), _fmt(r.duration_s), _fmt(r.throughput_kbps)]
            )


def write_circuits(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CIRCUIT_COLUMNS)
        for c in records:
            w.writerow([c.client_id, c.entry, c.middle, c.exit, _fmt(c.built_at_s), int(c.used)])


def read_circuits(path) -> list[CircuitRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CIRCUIT_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(CIRCUIT_COLUMNS)}")
        out = []
        for row in reader:
            out.append(
                CircuitRecord(
                    row["client_id"], row["entry"], row["middle"], row["exit"],
                    float(row["built_at_s"]), row["used"] in ("1", "true", "True"),
                )
            )
    return out


def read_transfers(path) -> list[dict]:
    """Rows of a transfers.csv with numeric columns converted."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRANSFER_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(TRANSFER_COLUMNS)}")
        rows = []
        for row in reader:
            row["bytes"] = int(row["bytes"])
            for k in ("ttfb_s", "duration_s", "throughput_kbps"):
                row[k] = float(row[k])
            rows.append(row)
    return rows
