"""A small synthetic Internet with planted funnelling, written as real input files.

Five user-assigned country codes, 40 registered ASes each (38 of them
routed). Countries differ only in how many gateway ASes carry their foreign
connectivity:

    XA  2 gateways    (strong funnel)
    XC  4 gateways
    XD  8 gateways
    XE  16 gateways
    XB  every AS has foreign links and domestic ASes form a dense mesh

Non-gateway ASes hang below the gateways in two customer tiers. A planted
censorship indicator decreases with funnel strength, so its correlation with
hop-1 downstream burden is negative by construction.

The RIB dumps also carry prepending, an AS_SET origin, a looped path, an
RPKI-invalid announcement with a fake adjacency, a stale record and
duplicates. A handful of domestic peerings is visible to traceroutes only,
and two unregistered ASes show up as bogons.
"""

from __future__ import annotations

import csv
import json
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .acquisition import format_utc, parse_utc

TARGET_TIME = "2023-06-01T00:00:00Z"
COUNTRIES = ("XA", "XB", "XC", "XD", "XE")
GATEWAYS = {"XA": 2, "XC": 4, "XD": 8, "XE": 16}  # XB: all routed ASes
PER_COUNTRY = 40
ROUTED = 38
# lower = more censorship effort; ordered against funnel strength
INDICATOR = {"XA": -2.1, "XC": -0.9, "XD": 0.3, "XE": 1.2, "XB": 2.0}
PLANTED_SIGN = -1  # sign of corr(indicator, hop-1 burden)
POLYARCHY = {"XA": 0.18, "XC": 0.35, "XD": 0.52, "XE": 0.66, "XB": 0.81}
REGISTRY_OF = {"XA": "ripencc", "XB": "ripencc", "XC": "apnic", "XD": "arin", "XE": "lacnic"}
NAMES = {c: f"Synthetica {c[1]}" for c in COUNTRIES}
BOGONS = (99001, 99002)
COLLECTORS = ("rrc00", "route-views2")


def asn_of(country: str, i: int) -> int:
    return (COUNTRIES.index(country) + 1) * 1000 + i + 1


def prefix_of(asn: int) -> str:
    if asn in BOGONS:
        return f"46.{asn - 99000}.0.0/16"
    k, i = divmod(asn, 1000)
    return f"{40 + k}.{i}.0.0/16"


def address_in(asn: int, host: int) -> str:
    net = prefix_of(asn).split("/")[0].split(".")
    return f"{net[0]}.{net[1]}.{host // 250}.{host % 250 + 1}"


@dataclass
class Scenario:
    directory: Path
    config: Path
    edges: set[tuple[int, int]]  # every true adjacency
    traceroute_only: set[tuple[int, int]]
    fake_edge: tuple[int, int]
    gateways: dict[str, list[int]]
    indicator: dict[str, float] = field(default_factory=lambda: dict(INDICATOR))


def _e(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a <= b else (b, a)


def build_graph(rng: random.Random) -> tuple[set[tuple[int, int]], dict[str, list[int]], set[tuple[int, int]]]:
    """True adjacencies, gateways per country and the traceroute-only subset."""
    edges: set[tuple[int, int]] = set()
    gateways: dict[str, list[int]] = {}
    hidden: set[tuple[int, int]] = set()
    for c in COUNTRIES:
        routed = [asn_of(c, i) for i in range(ROUTED)]
        if c == "XB":
            gateways[c] = routed
            for a in routed:
                for b in rng.sample(routed, 8):
                    if a != b:
                        edges.add(_e(a, b))
            continue
        g = GATEWAYS[c]
        gw, rest = routed[:g], routed[g:]
        gateways[c] = gw
        for a, b in zip(gw, gw[1:]):
            edges.add(_e(a, b))
        tier2, tier3 = rest[:12], rest[12:]
        for j, a in enumerate(tier2):
            edges.add(_e(a, gw[j % g]))
            if j % 3 == 0:
                edges.add(_e(a, gw[(j + 1) % g]))  # multihomed
        for j, a in enumerate(tier3):
            edges.add(_e(a, tier2[j % len(tier2)]))
        # same-tier peerings, seen only by traceroutes
        for j in range(0, 6, 2):
            pair = _e(tier3[j], tier3[j + 1])
            if pair not in edges:
                edges.add(pair)
                hidden.add(pair)
    # international links between gateway sets; every gateway gets at least one
    for c in COUNTRIES:
        others = [d for d in COUNTRIES if d != c]
        for a in gateways[c]:
            edges.add(_e(a, rng.choice(gateways[rng.choice(others)])))
    for i, c in enumerate(COUNTRIES):
        for d in COUNTRIES[i + 1:]:
            for _ in range(6):
                edges.add(_e(rng.choice(gateways[c]), rng.choice(gateways[d])))
    # bogons: customers of XD and XE gateways
    edges.add(_e(BOGONS[0], gateways["XD"][0]))
    edges.add(_e(BOGONS[1], gateways["XE"][1]))
    return edges, gateways, hidden


def _bfs_paths(adj: dict[int, list[int]], src: int) -> dict[int, list[int]]:
    parent = {src: src}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in parent:
                parent[v] = u
                queue.append(v)
    paths = {}
    for t in parent:
        path = [t]
        while path[-1] != src:
            path.append(parent[path[-1]])
        paths[t] = path[::-1]
    return paths


def _rib_line(ts: int, peer_ip: str, peer_as: int, prefix: str, path: str) -> str:
    return f"TABLE_DUMP2|{ts}|B|{peer_ip}|{peer_as}|{prefix}|{path}|IGP|{peer_ip}|0|0||NAG||"


def generate(directory: str | Path, seed: int = 7) -> Scenario:
    """Write the scenario's input files and config.ini into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    target = int(parse_utc(TARGET_TIME).timestamp())
    edges, gateways, hidden = build_graph(rng)

    visible = edges - hidden
    adj: dict[int, list[int]] = {}
    for a, b in sorted(visible):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for v in adj:
        adj[v].sort()

    # collector peers: the first two gateways of every country
    peers = [gw for c in COUNTRIES for gw in gateways[c][:2]]
    lines: dict[str, list[str]] = {c: [] for c in COLLECTORS}
    covered: set[tuple[int, int]] = set()

    def announce(collector: str, peer: int, path: list[int], prefix: str | None = None, text: str | None = None):
        path_text = text if text is not None else " ".join(map(str, path))
        lines[collector].append(_rib_line(target, address_in(peer, 200), peer, prefix or prefix_of(path[-1]), path_text))
        covered.update(_e(a, b) for a, b in zip(path, path[1:]) if a != b)

    for n, peer in enumerate(peers):
        collector = COLLECTORS[n % 2]
        for origin, path in sorted(_bfs_paths(adj, peer).items()):
            announce(collector, peer, path)
    # cover every visible edge at least once
    for a, b in sorted(visible - covered):
        for peer in peers:
            paths = _bfs_paths(adj, peer)
            if b not in paths[a]:
                announce(COLLECTORS[0], peer, paths[a] + [b])
                break
            if a not in paths[b]:
                announce(COLLECTORS[0], peer, paths[b] + [a])
                break

    p0 = peers[0]
    paths0 = _bfs_paths(adj, p0)
    some = sorted(paths0)[len(paths0) // 2]
    longer = max(sorted(paths0), key=lambda t: len(paths0[t]))
    # prepending
    path = paths0[longer]
    announce(COLLECTORS[0], p0, path, text=" ".join(map(str, path[:-1] + [path[-1]] * 3)))
    # aggregate ending in an AS_SET
    lines[COLLECTORS[1]].append(_rib_line(target, address_in(p0, 200), p0, "47.200.0.0/16",
                                          " ".join(map(str, paths0[some])) + f" {{{asn_of('XC', 30)},{asn_of('XC', 31)}}}"))
    # a looped path: rejected whole
    loop = paths0[longer]
    if len(loop) >= 3:
        announce(COLLECTORS[1], p0, [], prefix_of(loop[-1]),
                 text=" ".join(map(str, loop + [loop[1], loop[-1]])))
    # RPKI-invalid hijack: the victim's prefix announced by an unrelated AS over a fake link
    victim, hijacker = asn_of("XA", 20), asn_of("XE", 30)
    via = gateways["XD"][3]
    assert _e(via, hijacker) not in edges
    fake = _e(via, hijacker)
    hijack_path = _bfs_paths(adj, p0)[via] + [hijacker]
    lines[COLLECTORS[0]].append(_rib_line(target, address_in(p0, 200), p0, prefix_of(victim),
                                          " ".join(map(str, hijack_path))))
    # out-of-window and duplicate records
    stale = paths0[some]
    lines[COLLECTORS[0]].append(_rib_line(target - 3 * 86400, address_in(p0, 200), p0, prefix_of(stale[-1]),
                                          " ".join(map(str, stale))))
    lines[COLLECTORS[0]].extend(lines[COLLECTORS[0]][:5])

    files: dict[str, list[str]] = {}
    rib_files = []
    for collector in COLLECTORS:
        name = f"{collector}.rib.txt"
        (out / name).write_text("\n".join(lines[collector]) + "\n")
        rib_files.append(name)

    # traceroutes: the hidden peerings plus a few ordinary paths and noise
    results = []
    probe = 1000
    for a, b in sorted(hidden):
        probe += 1
        results.append({
            "type": "traceroute", "prb_id": probe, "timestamp": target + 600, "dst_addr": address_in(b, 7),
            "result": [
                {"hop": 1, "result": [{"from": address_in(a, 1), "rtt": 0.8}] * 3},
                {"hop": 2, "result": [{"from": address_in(b, 1), "rtt": 4.1}, {"from": address_in(b, 2), "rtt": 4.3}]},
                {"hop": 3, "result": [{"x": "*"}] * 3},
                {"hop": 4, "result": [{"from": address_in(b, 7), "rtt": 4.9}]},
            ],
        })
    for t in sorted(paths0)[:10]:
        probe += 1
        hops = [{"hop": h + 1, "result": [{"from": address_in(asn, 3), "rtt": 1.0 + h}]} for h, asn in enumerate(paths0[t])]
        hops.insert(1, {"hop": 1.5, "result": [{"from": "192.0.2.1", "rtt": 1.2}]})  # unrouted responder
        for k, h in enumerate(hops):
            h["hop"] = k + 1
        results.append({"type": "traceroute", "prb_id": probe, "timestamp": target + 900,
                        "dst_addr": address_in(t, 9), "result": hops})
    results.append({"type": "ping", "prb_id": 1, "timestamp": target, "result": []})
    (out / "atlas.json").write_text("\n".join(json.dumps(r, sort_keys=True) for r in results) + "\n")

    # registries
    by_rir: dict[str, list[str]] = {}
    for c in COUNTRIES:
        rir = REGISTRY_OF[c]
        for i in range(PER_COUNTRY):
            by_rir.setdefault(rir, []).append(f"{rir}|{c}|asn|{asn_of(c, i)}|1|20100101|allocated|org-{c}-{i}|e-stats")
    delegated = []
    for rir in sorted(by_rir):
        rows = by_rir[rir]
        name = f"delegated-{rir}-extended-20230601"
        (out / name).write_text("\n".join(
            [f"2.3|{rir}|20230601|{len(rows)}|19700101|20230601|+0000", f"{rir}|*|asn|*|{len(rows)}|summary"] + rows
        ) + "\n")
        delegated.append(name)

    org_rows, as_rows = [], []
    for c in COUNTRIES:
        incumbent = f"ORG-{c}-INC"
        org_rows.append(f"{incumbent}|20100101|Synthetica {c[1]} Telecom|{c}|RIPE")
        for i in range(PER_COUNTRY):
            asn = asn_of(c, i)
            if i < 2:  # the first two ASes (gateways) belong to the incumbent
                org = incumbent
            elif i % 5 == 4:
                org = f"ORG-{c}-{i - 1}"  # sibling of the previous AS
            else:
                org = f"ORG-{c}-{i}"
                org_rows.append(f"{org}|20100101|Net {c} {i} Ltd|{c}|RIPE")
            as_rows.append(f"{asn}|20100101|AS-{c}-{i}|0|{org}|RIPE")
    (out / "as2org.txt").write_text("\n".join(
        ["# format:org_id|changed|org_name|country|source"] + org_rows
        + ["# format:aut|changed|aut_name|opaque_id|org_id|source"] + as_rows
    ) + "\n")

    with (out / "state_owned.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asn", "owner"])
        for c in ("XA", "XC"):
            for asn in gateways[c][:2]:
                w.writerow([asn, f"Synthetica {c[1]} Telecom JSC"])
        w.writerow([asn_of("XD", 5), "Former Owner Holding"])  # stale: org renamed since

    with (out / "roas.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ASN", "IP Prefix", "Max Length", "Trust Anchor"])
        for c in ("XA", "XB"):
            for i in range(0, ROUTED, 2):
                asn = asn_of(c, i)
                w.writerow([f"AS{asn}", prefix_of(asn), 16, "ripe"])  # covers the hijacked XA prefix too

    # geolocation: each AS's /16 in its own country; some XE networks straddle XD
    with (out / "geo_locations.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["geoname_id", "locale_code", "continent_code", "continent_name", "country_iso_code",
                    "country_name", "city_name"])
        for k, c in enumerate(COUNTRIES):
            w.writerow([900 + k, "en", "XX", "Synthetic", c, NAMES[c], f"{NAMES[c]} City"])
    with (out / "geo_blocks.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["network", "geoname_id", "registered_country_geoname_id"])
        for k, c in enumerate(COUNTRIES):
            for i in range(PER_COUNTRY):
                net = prefix_of(asn_of(c, i))
                if c == "XE" and i % 10 == 3:
                    lo = net.replace(".0.0/16", ".0.0/17")
                    hi = net.replace(".0.0/16", ".128.0/17")
                    w.writerow([lo, 900 + k, 900 + k])
                    w.writerow([hi, 900 + COUNTRIES.index("XD"), 900 + k])
                else:
                    w.writerow([net, 900 + k, 900 + k])

    with (out / "vdem.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["country_name", "year", "v2mecenefi", "v2x_polyarchy"])
        for c in COUNTRIES:
            w.writerow([NAMES[c], 2022, INDICATOR[c] + 0.1, POLYARCHY[c]])
            w.writerow([NAMES[c], 2023, INDICATOR[c], POLYARCHY[c]])
        w.writerow(["Norway", 2023, 3.1, 0.91])
    with (out / "vdem_names.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["country_name", "alpha2"])
        for c in COUNTRIES:
            w.writerow([NAMES[c], c])

    config = out / "config.ini"
    config.write_text(CONFIG_TEMPLATE.format(
        target=TARGET_TIME, rib=", ".join(rib_files), delegated=", ".join(delegated),
    ))
    return Scenario(out, config, edges, hidden, fake, gateways)


CONFIG_TEMPLATE = """\
[capture]
target_time = {target}
sources = ris, routeviews
rib_window_hours = 4

[paths]
out_dir = out
cache_dir = cache

[inputs]
rib = {rib}
traceroutes = atlas.json
delegated = {delegated}
as2org = as2org.txt
roas = roas.csv
geolite_blocks = geo_blocks.csv
geolite_locations = geo_locations.csv
vdem = vdem.csv
vdem_names = vdem_names.csv
state_owned = state_owned.csv

[analysis]
min_observed = 10

[layout]
max_iterations = 600
seed = 1

[run]
strict = false
error_budget = 0
"""


def describe(s: Scenario) -> str:
    return (f"{len(s.edges)} true edges ({len(s.traceroute_only)} traceroute-only), "
            f"captured {format_utc(int(parse_utc(TARGET_TIME).timestamp()))}")
