import json
import math

import pytest
from hypothesis import given, strategies as st

from torpath.geo import (
    Directory,
    DirectoryError,
    EmptyHistoryError,
    GeoPoint,
    VisitHistory,
    avg_geo,
    dist,
    dump_directory,
    load_directory,
    load_history,
    parse_directory,
    save_history,
)

from conftest import make_relay

coords = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
points = st.builds(GeoPoint, coords, coords)


@pytest.mark.parametrize(
    "a, b, expected",
    [((0, 0), (3, 4), 5.0), ((7, -2), (7, -2), 0.0), ((1, 1), (4, 5), 5.0)],
)
def test_dist_examples(a, b, expected):
    assert dist(GeoPoint(*a), GeoPoint(*b)) == pytest.approx(expected, abs=1e-12)


@given(points, points)
def test_dist_symmetric(a, b):
    assert dist(a, b) == dist(b, a)


@given(points, points, points)
def test_triangle_inequality(a, b, c):
    assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-9 * (1 + dist(a, b) + dist(b, c))


@given(points, points)
def test_dist_zero_iff_equal(a, b):
    assert (dist(a, b) == 0) == (a == b)


def test_non_finite_point_rejected():
    with pytest.raises(ValueError):
        GeoPoint(math.nan, 0)


def test_avg_geo_weighted_link_fraction():
    # 2 visits at one end, 3 at the other: the centroid sits 2/5 of the way from the 3-count end
    h = VisitHistory(((GeoPoint(0, 0), 2), (GeoPoint(5, 0), 3)))
    c = avg_geo(h)
    assert (c.x, c.y) == pytest.approx((3.0, 0.0))
    assert dist(c, GeoPoint(5, 0)) / 5.0 == pytest.approx(2 / 5)


def test_avg_geo_single_point():
    assert avg_geo(VisitHistory(((GeoPoint(4, 9), 7),))) == GeoPoint(4, 9)


def test_avg_geo_rectangle_corners():
    h = VisitHistory(tuple((GeoPoint(x, y), 1) for x, y in [(0, 0), (2, 0), (0, 3), (2, 3)]))
    c = avg_geo(h)
    assert (c.x, c.y) == pytest.approx((1.0, 1.5))


def test_avg_geo_empty():
    with pytest.raises(EmptyHistoryError):
        avg_geo(VisitHistory())


histories = st.lists(st.tuples(points, st.integers(1, 50)), min_size=1, max_size=12)


@given(histories)
def test_avg_geo_in_bounding_box(entries):
    c = avg_geo(VisitHistory(tuple(entries)))
    xs = [p.x for p, _ in entries]
    ys = [p.y for p, _ in entries]
    slack = 1e-9 * (1 + max(map(abs, xs + ys)))
    assert min(xs) - slack <= c.x <= max(xs) + slack
    assert min(ys) - slack <= c.y <= max(ys) + slack


@given(histories, st.randoms())
def test_avg_geo_order_invariant(entries, rnd):
    shuffled = list(entries)
    rnd.shuffle(shuffled)
    a = avg_geo(VisitHistory(tuple(entries)))
    b = avg_geo(VisitHistory(tuple(shuffled)))
    scale = 1 + max(abs(p.x) + abs(p.y) for p, _ in entries)
    assert a.x == pytest.approx(b.x, abs=1e-9 * scale)
    assert a.y == pytest.approx(b.y, abs=1e-9 * scale)


@given(points, st.integers(1, 10**6))
def test_avg_geo_one_entry_any_count(p, n):
    c = avg_geo(VisitHistory(((p, n),)))
    assert c.x == pytest.approx(p.x, rel=1e-12, abs=1e-12)
    assert c.y == pytest.approx(p.y, rel=1e-12, abs=1e-12)


def test_history_rejects_zero_count():
    with pytest.raises(ValueError):
        VisitHistory(((GeoPoint(0, 0), 0),))


def _records(*rows):
    return [dict(id=r, x=float(i), y=0.0, bandwidth_kbps=bw, uptime_s=10.0) for i, (r, bw) in enumerate(rows)]


def test_load_directory_round_trip(tmp_path):
    path = tmp_path / "dir.json"
    path.write_text(json.dumps(_records(("a", 5), ("b", 7), ("c", 9)), indent=2))
    d = load_directory(path)
    assert d.ids == ("a", "b", "c")
    assert [r.bandwidth for r in d] == [5, 7, 9]
    assert parse_directory(dump_directory(d)) == d


def test_duplicate_id_reports_line():
    text = '[\n  {"id": "r1", "x": 0, "y": 0, "bandwidth_kbps": 1, "uptime_s": 0},\n' \
           '  {"id": "r1", "x": 1, "y": 0, "bandwidth_kbps": 1, "uptime_s": 0}\n]'
    with pytest.raises(DirectoryError, match="duplicate") as exc:
        parse_directory(text)
    assert exc.value.line == 3


def test_zero_bandwidth_rejected():
    with pytest.raises(DirectoryError, match="bandwidth"):
        parse_directory(json.dumps(_records(("a", 0))))


def test_negative_uptime_rejected():
    rec = _records(("a", 1))
    rec[0]["uptime_s"] = -1
    with pytest.raises(DirectoryError, match="uptime"):
        parse_directory(json.dumps(rec))


def test_unknown_key_rejected():
    rec = _records(("a", 1))
    rec[0]["flags"] = "Guard"
    with pytest.raises(DirectoryError, match="unknown"):
        parse_directory(json.dumps(rec))


def test_syntax_error_has_line_number():
    text = '[\n{"id": "a", "x": 0, "y": 0, "bandwidth_kbps": 1, "uptime_s": 0},\n{"id": "b", "x": oops}\n]'
    with pytest.raises(DirectoryError) as exc:
        parse_directory(text)
    assert exc.value.line == 3


def test_empty_directory_rejected():
    with pytest.raises(DirectoryError):
        parse_directory("[]")


def test_directory_constructor_checks_ids():
    with pytest.raises(DirectoryError):
        Directory([make_relay("a", 0, 0), make_relay("a", 1, 1)])


def test_history_file_round_trip(tmp_path):
    h = VisitHistory(((GeoPoint(1, 2), 3), (GeoPoint(-4, 0.5), 1)))
    save_history(h, tmp_path / "h.json")
    assert load_history(tmp_path / "h.json") == h
    (tmp_path / "e.json").write_text("[]")
    assert not load_history(tmp_path / "e.json")
