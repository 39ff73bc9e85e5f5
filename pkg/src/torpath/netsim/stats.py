"""Throughput and time-to-first-byte summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CDF_STEPS = np.linspace(0.0, 1.0, 101)


@dataclass(frozen=True)
class Summary:
    per_client_mean_kbps: dict[str, float]
    median_client_throughput_kbps: float
    median_ttfb_s: float
    throughput_cdf: list[tuple[float, float]]
    ttfb_cdf: list[tuple[float, float]]
    transfers: int


def cdf_table(values) -> list[tuple[float, float]]:
    """(quantile, value) at 1% steps; the last row is the maximum."""
    v = np.sort(np.asarray(values, dtype=float))
    qs = np.quantile(v, CDF_STEPS, method="inverted_cdf")
    return [(float(q), float(x)) for q, x in zip(CDF_STEPS, qs)]


def summarize(records) -> Summary:
    records = list(records)
    if not records:
        raise ValueError("no transfer records to summarize")
    per_client: dict[str, list[float]] = {}
    for r in records:
        per_client.setdefault(r.client_id, []).append(r.throughput_kbps)
    means = {c: float(np.mean(v)) for c, v in sorted(per_client.items())}
    ttfb = [r.ttfb_s for r in records]
    return Summary(
        per_client_mean_kbps=means,
        median_client_throughput_kbps=float(np.median(list(means.values()))),
        median_ttfb_s=float(np.median(ttfb)),
        throughput_cdf=cdf_table(list(means.values())),
        ttfb_cdf=cdf_table(ttfb),
        transfers=len(records),
    )
