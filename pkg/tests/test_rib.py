import io
import ipaddress

import pytest

from topofunnel.records import RawRibRecord, RoaRecord, as_set, sequence
from topofunnel.rib import (
    EmptySnapshotError,
    OriginInfo,
    PrefixOriginTable,
    Validity,
    build_prefix_origin_table,
    drop_invalid,
    extract_peer_ips,
    normalize,
    read_snapshot,
    roa_index,
    validate_origin,
    validate_origins,
    write_snapshot,
)

T = 1685577600
net = ipaddress.ip_network


def rec(path, prefix="192.0.2.0/24", collector="rrc00", peer="203.0.113.1", peer_as=65001, recorded=T):
    segs = path if isinstance(path, tuple) else (sequence(*path),)
    return RawRibRecord(collector, ipaddress.ip_address(peer), peer_as, net(prefix), segs, recorded, recorded)


def test_normalize_duplicates_and_staleness():
    a = rec([65001, 65002])
    b = rec([65001, 65002], collector="route-views2")
    stale = rec([65001, 65003], recorded=T - 6 * 3600)
    snap = normalize([a, a, b, stale], T, 4 * 3600)
    assert snap.records == tuple(sorted([a, b], key=lambda r: r.collector))
    assert snap.duplicates == 1
    assert snap.dropped_out_of_window == 1
    assert snap.per_collector == {"route-views2": 1, "rrc00": 1}


def test_normalize_order_independent():
    recs = [rec([65001, 65000 + i], prefix=f"10.{i}.0.0/16") for i in range(20)]
    assert normalize(recs, T, 60) == normalize(list(reversed(recs)), T, 60)


def test_normalize_empty():
    with pytest.raises(EmptySnapshotError):
        normalize([rec([1], recorded=0)], T, 60)


def test_origin_table():
    snap = normalize([
        rec([65001, 65002]),
        rec((sequence(65001), as_set(65003, 65004)), prefix="198.51.100.0/24"),
        rec([65005, 65009], peer="203.0.113.5", peer_as=65005),
    ], T, 60)
    table = build_prefix_origin_table(snap)
    assert table.entries[net("192.0.2.0/24")] == {65002: OriginInfo(), 65009: OriginInfo()}
    assert table.entries[net("198.51.100.0/24")] == {65003: OriginInfo(ambiguous=True), 65004: OriginInfo(ambiguous=True)}
    assert table.origins() <= {a for r in snap.records for a in r.flat_path()}


ROA_24 = RoaRecord(65002, net("192.0.2.0/24"), 24)


@pytest.mark.parametrize("roas, prefix, origin, expected", [
    ([ROA_24], "192.0.2.0/24", 65002, Validity.VALID),
    ([ROA_24], "192.0.2.0/24", 65009, Validity.INVALID),
    ([ROA_24], "198.51.100.0/24", 65002, Validity.NOT_FOUND),
    ([], "192.0.2.0/24", 65002, Validity.NOT_FOUND),
    # more specific than max_length
    ([ROA_24], "192.0.2.0/25", 65002, Validity.INVALID),
    ([RoaRecord(65002, net("192.0.2.0/23"), 25)], "192.0.2.0/25", 65002, Validity.VALID),
    ([RoaRecord(65002, net("192.0.2.0/23"), 24)], "192.0.2.0/25", 65002, Validity.INVALID),
    # less specific than the ROA prefix: not covered
    ([ROA_24], "192.0.0.0/16", 65002, Validity.NOT_FOUND),
    # any matching ROA suffices
    ([RoaRecord(65009, net("192.0.2.0/24"), 24), ROA_24], "192.0.2.0/24", 65002, Validity.VALID),
    ([RoaRecord(65009, net("192.0.0.0/16"), 24), ROA_24], "192.0.2.0/24", 65002, Validity.VALID),
    ([RoaRecord(65009, net("192.0.0.0/16"), 24)], "192.0.2.0/24", 65002, Validity.INVALID),
    # AS0 ROAs make everything they cover invalid
    ([RoaRecord(0, net("192.0.2.0/24"), 24)], "192.0.2.0/24", 0, Validity.INVALID),
    ([RoaRecord(0, net("192.0.2.0/24"), 24)], "192.0.2.0/24", 65002, Validity.INVALID),
    ([RoaRecord(65002, net("2001:db8::/32"), 48)], "2001:db8:1::/48", 65002, Validity.VALID),
    ([RoaRecord(65002, net("2001:db8::/32"), 48)], "192.0.2.0/24", 65002, Validity.NOT_FOUND),
])
def test_origin_validation_truth_table(roas, prefix, origin, expected):
    assert validate_origin(net(prefix), origin, roa_index(roas)) is expected


def rov_oracle(prefix, origin, roas):
    covering = [r for r in roas if r.prefix.version == prefix.version and prefix.subnet_of(r.prefix)]
    if not covering:
        return Validity.NOT_FOUND
    ok = any(r.asn == origin and r.asn != 0 and prefix.prefixlen <= r.max_length for r in covering)
    return Validity.VALID if ok else Validity.INVALID


def test_origin_validation_exhaustive_small_space():
    # every prefix of 10.0.0.0/22 down to /24, every origin in {0,1,2}, against a fixed ROA set
    roas = [RoaRecord(1, net("10.0.0.0/22"), 23), RoaRecord(2, net("10.0.2.0/23"), 24),
            RoaRecord(0, net("10.0.1.0/24"), 24)]
    index = roa_index(roas)
    prefixes = [p for length in range(20, 25) for p in net("10.0.0.0/20").subnets(new_prefix=length)]
    for p in prefixes:
        for origin in (0, 1, 2):
            assert validate_origin(p, origin, index) is rov_oracle(p, origin, roas), (p, origin)


def test_drop_invalid_keeps_records_with_a_surviving_origin():
    snap = normalize([rec([65001, 65002]), rec([65001, 65009], peer="203.0.113.2")], T, 60)
    table = validate_origins(build_prefix_origin_table(snap), [ROA_24])
    kept = drop_invalid(snap, table)
    assert [r.flat_path() for r in kept.records] == [(65001, 65002)]
    assert table.entries[net("192.0.2.0/24")][65009].state is Validity.INVALID


def test_peer_observations():
    snap = normalize([
        rec([65001, 1], prefix="10.1.0.0/16"), rec([65001, 2], prefix="10.2.0.0/16"),
        rec([65001, 3], prefix="10.3.0.0/16"),
        rec([65001, 3], collector="rv", peer="198.51.100.7"),
        rec([65002, 3], collector="rv", peer="198.51.100.8", peer_as=65002),
    ], T, 60)
    obs, invalid = extract_peer_ips(snap)
    assert invalid == 0
    assert [(o.asn, o.addresses) for o in obs] == [
        (65001, ("198.51.100.7", "203.0.113.1")), (65002, ("198.51.100.8",))]


def test_snapshot_round_trip():
    snap = normalize([rec([65001, 65002]), rec((sequence(1, 2), as_set(3)), prefix="2001:db8::/32")], T, 60)
    buf = io.StringIO()
    write_snapshot(snap, buf)
    buf.seek(0)
    assert read_snapshot(buf) == snap


def test_prefix_origin_table_lookup():
    table = PrefixOriginTable({net("10.0.0.0/8"): {1: OriginInfo()}, net("10.1.0.0/16"): {2: OriginInfo()}})
    assert table.lookup("10.1.2.3")[1] == {2: OriginInfo()}
    assert table.lookup("11.0.0.1") is None
