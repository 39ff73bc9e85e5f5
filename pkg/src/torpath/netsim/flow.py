"""Max-min fair rate allocation over shared node capacities (progressive filling)."""

from __future__ import annotations

from typing import Hashable, Mapping, Sequence


def max_min_rates(
    paths: Mapping[Hashable, Sequence[Hashable]],
    capacity: Mapping[Hashable, float],
) -> dict:
    """Return the max-min fair rate of every flow.

    ``paths`` maps a flow id to the resources it crosses (each resource at most
    once); ``capacity`` maps a resource to its rate limit.  All unfrozen flows
    grow together; when a resource saturates, the flows crossing it freeze at
    its fair share.  A flow crossing no resource is unconstrained (inf).
    """
    users: dict = {}
    for f, res in paths.items():
        for r in res:
            users.setdefault(r, []).append(f)
    remaining = {r: float(capacity[r]) for r in users}
    live = {r: len(fs) for r, fs in users.items()}
    rates = {}
    level = 0.0
    while live:
        # resource with the smallest fair share of what is left
        share, bottleneck = min(
            ((remaining[r] / n, r) for r, n in live.items()), key=lambda t: t[0]
        )
        share = max(share, 0.0)
        level += share
        # everyone still growing gains `share`
        for r, n in live.items():
            remaining[r] -= share * n
        frozen = [f for f in users[bottleneck] if f not in rates]
        for f in frozen:
            rates[f] = level
            for r in paths[f]:
                if r in live:
                    live[r] -= 1
                    if live[r] == 0:
                        del live[r]
    for f, res in paths.items():
        if not res:
            rates[f] = float("inf")
    return rates
