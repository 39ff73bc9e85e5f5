import json

import pytest

from torpath.netsim.topology import BandwidthProfile, ProfileError, generate_topology, load_profile
from torpath.netsim.workload import build_roster


def test_fifty_relays_five_institutional():
    t = generate_topology(50, 50, seed=3)
    assert len(t.relays) == 50 and len(t.servers) == 50
    assert sum(r.institutional for r in t.relays) == 5
    assert sum(r.authority for r in t.relays) == 5


def test_capacity_split():
    t = generate_topology(30, 2, seed=1)
    for r in t.relays:
        if r.institutional:
            assert r.down_kbps == r.up_kbps
        else:
            assert r.down_kbps == 2 * r.up_kbps
        assert r.consensus_bandwidth == r.up_kbps


def test_institutional_fraction_is_exact():
    t = generate_topology(10_000, 1, seed=0)
    assert sum(r.institutional for r in t.relays) == 1000


def test_deterministic():
    a = generate_topology(50, 50, seed=9, clients=build_roster(20))
    b = generate_topology(50, 50, seed=9, clients=build_roster(20))
    assert a.relays == b.relays and a.servers == b.servers and a.clients == b.clients
    c = generate_topology(50, 50, seed=10)
    assert c.relays != a.relays


def test_nodes_inside_region():
    t = generate_topology(40, 40, seed=2, clients=build_roster(10), region=123.0)
    for n in t.nodes.values():
        assert 0 <= n.geo.x <= 123.0 and 0 <= n.geo.y <= 123.0


def test_directory_mirrors_relays():
    t = generate_topology(12, 3, seed=5)
    d = t.directory()
    assert d.ids == tuple(r.id for r in t.relays)
    assert [r.bandwidth for r in d] == [n.up_kbps for n in t.relays]


def test_bundled_profile_sampling():
    p = load_profile()
    assert p.sample(0.0) == p.values[0]
    assert p.sample(1.0) == p.values[-1]
    assert p.sample(0.5) == 90.0
    # linear between knots
    assert p.sample(0.375) == pytest.approx((35 + 90) / 2)


@pytest.mark.parametrize(
    "cdf",
    [
        [[0, 1]],
        [[0.1, 1], [1, 2]],
        [[0, 1], [0.5, 2], [0.5, 3], [1, 4]],
        [[0, 5], [1, 4]],
        [[0, 0], [1, 4]],
        "junk",
    ],
)
def test_malformed_profiles(tmp_path, cdf):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"cdf": cdf}))
    with pytest.raises(ProfileError):
        load_profile(path)


def test_profile_not_json(tmp_path):
    (tmp_path / "p.json").write_text("{")
    with pytest.raises(ProfileError):
        load_profile(tmp_path / "p.json")


def test_counts_must_be_positive():
    with pytest.raises(ValueError):
        generate_topology(0, 1, seed=0)


def test_delay_in_seconds():
    t = generate_topology(3, 1, seed=0)
    a, b = t.relays[0], t.relays[1]
    expect = ((a.geo.x - b.geo.x) ** 2 + (a.geo.y - b.geo.y) ** 2) ** 0.5 / 1000
    assert t.delay(a.id, b.id) == pytest.approx(expect)
    assert isinstance(BandwidthProfile((0.0, 1.0), (1.0, 2.0)).sample(0.5), float)
