import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtdcorr import dataset
from rtdcorr.errors import NotFoundError, ValidationError
from rtdcorr.geodesy import Coordinate, geodesic_distance, haversine_km


def host(hid, role="landmark", lat=30.0, lon=110.0, city="c1", isp="A"):
    return dataset.HostRecord(hid, Coordinate(lat, lon), city, isp, role)


def obs(p, l, rtt, ts="2017-01-01T00:00:00Z"):
    return dataset.RttObservation(p, l, ts, rtt)


def test_empty_registry():
    reg = dataset.validate_registry([])
    assert len(reg) == 0


def test_duplicate_id_rejected():
    with pytest.raises(ValidationError, match="dup1"):
        dataset.validate_registry([host("dup1"), host("dup1")])


def test_large_synthetic_registry_counts():
    records = [host(f"p{i}", role="probe") for i in range(90)] + [
        host(f"l{i}") for i in range(450)
    ]
    reg = dataset.validate_registry(records)
    assert len(reg.probes()) == 90
    assert len(reg.landmarks()) == 450
    assert reg.isps == ("A",)


def test_invalid_rtt_rejected():
    with pytest.raises(ValidationError):
        obs("p", "l", 0.0)
    with pytest.raises(ValidationError):
        obs("p", "l", float("inf"))


def test_min_rtt_selection():
    got = dataset.ingest_rtt([obs("p", "l", 12.1), obs("p", "l", 11.8), obs("p", "l", 30.5)])
    assert got == {("p", "l"): 11.8}


def test_single_sample_is_itself():
    assert dataset.ingest_rtt([obs("p", "l", 5.5)]) == {("p", "l"): 5.5}


def test_unmeasured_pair_absent():
    got = dataset.ingest_rtt([obs("p", "l1", 5.5)])
    assert ("p", "l2") not in got


def test_unknown_host_rejected():
    reg = dataset.validate_registry([host("p", role="probe"), host("l")])
    with pytest.raises(NotFoundError):
        dataset.ingest_rtt([obs("p", "nope", 5.0)], reg)


def test_role_mismatch_rejected():
    reg = dataset.validate_registry([host("p", role="probe"), host("l")])
    with pytest.raises(ValidationError):
        dataset.ingest_rtt([obs("l", "p", 5.0)], reg)


@given(
    st.lists(
        st.tuples(
            st.sampled_from(["p1", "p2"]),
            st.sampled_from(["l1", "l2", "l3"]),
            st.floats(min_value=0.1, max_value=1000),
        ),
        min_size=1,
        max_size=40,
    ),
    st.randoms(),
)
def test_ingest_order_independent(rows, rnd):
    observations = [obs(p, l, r) for p, l, r in rows]
    shuffled = observations[:]
    rnd.shuffle(shuffled)
    assert dataset.ingest_rtt(observations) == dataset.ingest_rtt(shuffled)


@given(
    st.lists(
        st.floats(min_value=0.1, max_value=1000), min_size=1, max_size=20
    )
)
def test_min_never_exceeds_any_observation(rtts):
    got = dataset.ingest_rtt([obs("p", "l", r) for r in rtts])
    assert got[("p", "l")] == min(rtts)


def test_join_zero_distance():
    reg = dataset.validate_registry([host("p", role="probe"), host("l")])
    samples = dataset.join_distances({("p", "l"): 7.25}, reg)
    assert len(samples) == 1
    assert samples[0].distance_km == 0.0
    assert samples[0].delay_ms == 7.25  # bit-exact passthrough


def test_join_distance_matches_oracle():
    reg = dataset.validate_registry(
        [host("p", role="probe", lat=39.9042, lon=116.4074), host("l", lat=31.2304, lon=121.4737)]
    )
    s = dataset.join_distances({("p", "l"): 30.0}, reg)[0]
    oracle = haversine_km(Coordinate(39.9042, 116.4074), Coordinate(31.2304, 121.4737))
    assert abs(s.distance_km - oracle) / oracle < 0.005
    assert s.probe_isp == "A" and s.landmark_city == "c1"


def test_join_cardinality():
    reg = dataset.validate_registry(
        [host("p1", role="probe"), host("p2", role="probe", lat=31.0), host("l1"), host("l2", lat=32.0)]
    )
    min_rtts = {("p1", "l1"): 1.0, ("p2", "l2"): 2.0, ("p1", "l2"): 3.0}
    assert len(dataset.join_distances(min_rtts, reg)) == len(min_rtts)


def test_join_missing_host():
    reg = dataset.validate_registry([host("p", role="probe")])
    with pytest.raises(NotFoundError):
        dataset.join_distances({("p", "ghost"): 1.0}, reg)


def test_hosts_csv_roundtrip(tmp_path):
    reg = dataset.validate_registry(
        [
            host("p1", role="probe", lat=39.123456, lon=116.5),
            dataset.HostRecord("l1", Coordinate(31.0, 121.0), "c2", "B", "landmark", True),
        ]
    )
    path = tmp_path / "hosts.csv"
    dataset.write_hosts_csv(reg, path)
    back = dataset.read_hosts_csv(path)
    assert back["p1"].coordinate == Coordinate(39.123456, 116.5)
    assert back["l1"].is_regional_center is True
    assert back["l1"].isp == "B"


def test_hosts_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,role\np,probe\n")
    with pytest.raises(ValidationError):
        dataset.read_hosts_csv(path)


def test_hosts_csv_bad_row_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "id,role,city,isp,lat,lon,is_regional_center\n"
        "p1,probe,c,A,99.0,0.0,false\n"
    )
    with pytest.raises(ValidationError, match=":2"):
        dataset.read_hosts_csv(path)


def test_rtt_csv_roundtrip(tmp_path):
    path = tmp_path / "rtt.csv"
    orig = [obs("p", "l", 12.125), obs("p", "l", 11.875, ts="2017-01-01T00:01:00Z")]
    dataset.write_rtt_csv(orig, path)
    back = dataset.read_rtt_csv(path)
    assert [o.rtt_ms for o in back] == [12.125, 11.875]
    assert back[1].timestamp == "2017-01-01T00:01:00Z"


def test_samples_csv_roundtrip(tmp_path):
    reg = dataset.validate_registry(
        [host("p", role="probe", lat=39.9, lon=116.4), host("l", lat=31.2, lon=121.5)]
    )
    samples = dataset.join_distances({("p", "l"): 17.0625}, reg)
    path = tmp_path / "samples.csv"
    dataset.write_samples_csv(samples, path)
    back = dataset.read_samples_csv(path)
    assert back[0].delay_ms == 17.0625  # repr round-trip keeps delays bit-exact
    assert back[0].probe_id == "p" and back[0].landmark_isp == "A"
