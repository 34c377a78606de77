import io
from datetime import date

import pytest

from topofunnel.enrichment import (
    AsRecord,
    ConflictCounter,
    PrefixGeoStats,
    detect_bogons,
    enrich,
    flag_state_owned,
    geolocate_pops,
    geolocate_prefixes,
    normalize_org_name,
    registry_index,
    resolve_registration,
    write_enrichment_csv,
)
from topofunnel.parsers import parse_geolite_blocks
from topofunnel.records import RegistryEntry
from topofunnel.rib import OriginInfo, PeerObservation, PrefixOriginTable
import ipaddress


def entry(asn, cc="GB", status="allocated"):
    return RegistryEntry(asn, "ripencc", cc, status, date(2020, 1, 1))


GEO = parse_geolite_blocks(
    io.StringIO("network,geoname_id\n10.0.0.0/24,gb\n10.0.1.0/24,fr\n10.1.0.0/16,de\n"),
    io.StringIO("geoname_id,country_iso_code,city_name\ngb,GB,\nfr,FR,\nde,DE,\n"),
)


def test_registration():
    reg = registry_index([entry(1)])
    r = resolve_registration(1, reg, {1: ("ORG-X", "OrgX")})
    assert (r.country, r.org_name) == ("GB", "OrgX")
    counter = ConflictCounter()
    r = resolve_registration(1, reg, {1: ("ORG-A", "A Limited")}, {1: "A Ltd"}, counter)
    assert r.org_name == "A Ltd" and counter.org_conflicts == 1
    assert resolve_registration(2, reg, {}).country == "ZZ"


def test_registry_index_prefers_active_rows():
    idx = registry_index([entry(1, "GB"), entry(1, "ZZ", "available")])
    assert idx[1].country == "GB"
    idx = registry_index([entry(1, "ZZ", "reserved"), entry(1, "FR")])
    assert idx[1].country == "FR"


def test_bogons():
    reg = registry_index([entry(a) for a in range(10)])
    assert detect_bogons(range(12), reg) == {10, 11}
    assert detect_bogons([64512], reg) == {64512}
    assert detect_bogons([3], reg) == set()


def test_pops():
    obs = [PeerObservation(1, ("10.0.0.1", "10.1.0.1"), {}), PeerObservation(2, ("192.0.2.1",), {}),
           PeerObservation(3, ("10.0.0.1", "10.0.0.2"), {})]
    pops, unresolved = geolocate_pops(obs, GEO)
    assert pops == {1: frozenset({"GB", "DE"}), 2: frozenset(), 3: frozenset({"GB"})}
    assert unresolved == 1


def test_prefix_geolocation():
    net = ipaddress.ip_network
    table = PrefixOriginTable({
        net("10.0.0.0/24"): {1: OriginInfo()},
        net("10.0.0.0/23"): {2: OriginInfo()},
        net("192.0.2.0/24"): {3: OriginInfo()},
    })
    stats = PrefixGeoStats()
    w = geolocate_prefixes(table, GEO, stats=stats)
    assert w[1] == {"GB": 1.0}
    assert w[2] == {"FR": 0.5, "GB": 0.5}
    assert 3 not in w
    assert stats.unlocated == 1


def test_state_owned_flag():
    data = {6057: (True, "ANTEL"), 7: (True, "Old Name")}
    assert flag_state_owned(6057, data, "ANTEL") is True
    assert flag_state_owned(7, data, "New Name") is None
    assert flag_state_owned(8, data, "Anything") is False
    assert normalize_org_name("Télécom Example S.A.") == normalize_org_name("telecom example")


def test_enrich_and_bogon_invariant():
    reg = registry_index([entry(1), entry(2, "FR")])
    out = enrich([1, 2, 99], reg, {1: ("O1", "One")}, state_owned={1: (True, "One")})
    assert out[1].state_owned is True and out[1].org_id == "O1"
    assert out[99].bogon and out[99].registration_country == "ZZ"
    with pytest.raises(ValueError):
        AsRecord(5, "GB", bogon=True)
    buf = io.StringIO()
    write_enrichment_csv(out, buf)
    assert buf.getvalue().count("\n") == 4
