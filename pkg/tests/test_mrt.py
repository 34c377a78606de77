import io
import ipaddress

import pytest

import mrtwriter as w
from topofunnel.parsers import RecordError, TruncatedError, parse_mrt
from topofunnel.records import ParseStats, RawRibRecord, as_set, sequence

T = 1685577600


def _v2_file(entries_by_prefix, peers, addpath=False):
    out = w.record(T, w.TABLE_DUMP_V2, w.PEER_INDEX_TABLE, w.peer_index_table(peers))
    for seq, (prefix, entries) in enumerate(entries_by_prefix):
        subtype, body = w.rib_entry_record(seq, prefix, entries, addpath)
        out += w.record(T, w.TABLE_DUMP_V2, subtype, body)
    return out


def one_peer_two_prefixes():
    attrs = w.path_attributes([(w.AS_SEQUENCE, [65001, 65002])])
    return _v2_file([("192.0.2.0/24", [(0, T - 60, attrs)]), ("198.51.100.0/24", [(0, T - 30, attrs)])],
                    [("203.0.113.1", 65001)])


def parse(data, **kw):
    return list(parse_mrt(io.BytesIO(data), "rrc00", **kw))


def test_one_peer_two_prefixes():
    recs = parse(one_peer_two_prefixes())
    peer = ipaddress.ip_address("203.0.113.1")
    assert recs == [
        RawRibRecord("rrc00", peer, 65001, ipaddress.ip_network("192.0.2.0/24"), (sequence(65001, 65002),), T - 60, T),
        RawRibRecord("rrc00", peer, 65001, ipaddress.ip_network("198.51.100.0/24"), (sequence(65001, 65002),), T - 30, T),
    ]


def test_empty_file():
    stats = ParseStats()
    assert parse(b"", stats=stats) == []
    assert stats.errored == 0


def test_four_byte_asns_and_ipv6_peer():
    attrs = w.path_attributes([(w.AS_SEQUENCE, [4200000001, 3356, 4200000002])])
    data = _v2_file([("2001:db8::/32", [(0, T, attrs)])], [("2001:db8::1", 4200000001)])
    (rec,) = parse(data)
    assert rec.peer_as == 4200000001
    assert rec.peer_ip == ipaddress.ip_address("2001:db8::1")
    assert rec.flat_path() == (4200000001, 3356, 4200000002)
    assert rec.prefix == ipaddress.ip_network("2001:db8::/32")


def test_set_segment_preserved():
    attrs = w.path_attributes([(w.AS_SEQUENCE, [65001, 65002]), (w.AS_SET, [65003, 65004])])
    (rec,) = parse(_v2_file([("192.0.2.0/24", [(0, T, attrs)])], [("203.0.113.1", 65001)]))
    assert rec.path_segments == (sequence(65001, 65002), as_set(65003, 65004))


def test_extended_length_attribute():
    attrs = w.path_attributes([(w.AS_SEQUENCE, list(range(65000, 65100)))], extended=True)
    (rec,) = parse(_v2_file([("192.0.2.0/24", [(0, T, attrs)])], [("203.0.113.1", 65000)]))
    assert rec.flat_path() == tuple(range(65000, 65100))


def test_addpath_subtypes():
    attrs = w.path_attributes([(w.AS_SEQUENCE, [65001, 65009])])
    data = _v2_file([("192.0.2.0/24", [(0, T, attrs), (1, T, attrs)]), ("2001:db8::/48", [(1, T, attrs)])],
                    [("203.0.113.1", 65001), ("203.0.113.2", 65002)], addpath=True)
    recs = parse(data)
    assert [(str(r.prefix), r.peer_as) for r in recs] == [
        ("192.0.2.0/24", 65001), ("192.0.2.0/24", 65002), ("2001:db8::/48", 65002)]


def test_legacy_table_dump_with_as4_path():
    attrs = w.path_attributes([(w.AS_SEQUENCE, [65001, 23456, 23456])], width=2,
                              as4=[(w.AS_SEQUENCE, [4200000001, 4200000002])])
    subtype, body = w.legacy_entry("192.0.2.0/24", "203.0.113.9", 65001, T - 5, attrs)
    (rec,) = parse(w.record(T, w.TABLE_DUMP, subtype, body))
    assert rec.peer_as == 65001
    assert rec.flat_path() == (65001, 4200000001, 4200000002)
    assert rec.originated == T - 5 and rec.recorded == T


def test_truncated_tail_reports_last_complete_offset():
    data = one_peer_two_prefixes()
    attrs = w.path_attributes([(w.AS_SEQUENCE, [65001, 65003])])
    subtype, body = w.rib_entry_record(9, "203.0.113.0/24", [(0, T, attrs)])
    tail = w.record(T, w.TABLE_DUMP_V2, subtype, body)
    cut = data + tail[: len(tail) // 2]
    got = []
    with pytest.raises(TruncatedError) as info:
        for rec in parse_mrt(io.BytesIO(cut)):
            got.append(rec)
    assert info.value.offset == len(data)
    assert len(got) == 2


def test_truncated_header():
    data = one_peer_two_prefixes()
    with pytest.raises(TruncatedError) as info:
        parse(data + b"\x00\x01\x02")
    assert info.value.offset == len(data)


def test_absent_peer_index():
    attrs = w.path_attributes([(w.AS_SEQUENCE, [65001])])
    data = _v2_file([("192.0.2.0/24", [(5, T, attrs), (0, T, attrs)])], [("203.0.113.1", 65001)])
    with pytest.raises(RecordError):
        parse(data)
    stats = ParseStats()
    recs = parse(data, strict=False, stats=stats)
    assert len(recs) == 1 and stats.errored == 1


def test_unknown_subtype_skipped():
    data = w.record(T, 16, 4, b"\x00" * 12) + one_peer_two_prefixes()
    stats = ParseStats()
    assert len(parse(data, stats=stats)) == 2
    assert stats.skipped == 1


def test_as4_merge_rules():
    from topofunnel.parsers.mrt import merge_as4_path

    # AS_PATH longer: keep its leading surplus, then the AS4_PATH
    assert merge_as4_path((sequence(1, 2, 23456),), (sequence(70000, 80000),)) == (sequence(1, 70000, 80000),)
    # a set counts as one hop
    assert merge_as4_path((as_set(5, 6), sequence(23456)), (sequence(70000),)) == (as_set(5, 6), sequence(70000))
    # AS4_PATH longer than AS_PATH is ignored
    assert merge_as4_path((sequence(1),), (sequence(70000, 80000),)) == (sequence(1),)
