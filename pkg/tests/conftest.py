import pytest

from torpath.geo import Directory, GeoPoint, Relay


def make_relay(rid, x, y, bw=100.0, up=1000.0):
    return Relay(rid, GeoPoint(float(x), float(y)), float(bw), float(up))


@pytest.fixture
def five_relays():
    """Source at the origin, history centred on (10, 0).

    r_mid sits on the segment between them with the top bandwidth and uptime.
    """
    return Directory(
        [
            make_relay("r_far", -8, 9, bw=300, up=4000),
            make_relay("r_mid", 5, 0, bw=900, up=9000),
            make_relay("r_up", 4, 7, bw=500, up=2000),
            make_relay("r_down", 6, -5, bw=700, up=6000),
            make_relay("r_side", 12, 6, bw=200, up=100),
        ]
    )
