"""TopologySnapshot export/import as GraphML, GEXF or JSON lines.

Every export embeds SCHEMA_VERSION; importing a file written under another
schema raises SchemaMismatch instead of guessing.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Any

from .adjacency import AdjacencySet, EdgeInfo
from .enrichment import AsRecord, state_owned_text
from .graph import TopologySnapshot

SCHEMA_VERSION = "topofunnel.topology/1"
FORMATS = ("graphml", "gexf", "jsonl")

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"
GEXF_NS = "http://gexf.net/1.3"

NODE_ATTRS = ("country", "org_id", "org_name", "state_owned", "pop_countries", "prefix_countries", "bogon")
EDGE_ATTRS = ("provenance", "observations", "observers")


class SchemaMismatch(ValueError):
    pass


def _node_attrs(r: AsRecord) -> dict[str, str]:
    attrs = {
        "country": r.registration_country,
        "state_owned": state_owned_text(r.state_owned),
        "pop_countries": json.dumps(sorted(r.pop_countries)),
        "prefix_countries": json.dumps(dict(sorted(r.prefix_countries.items()))),
        "bogon": "true" if r.bogon else "false",
    }
    if r.org_id is not None:
        attrs["org_id"] = r.org_id
    if r.org_name is not None:
        attrs["org_name"] = r.org_name
    return attrs


def _node_from_attrs(asn: int, a: dict[str, str]) -> AsRecord:
    owned = a.get("state_owned", "false")
    return AsRecord(
        asn=asn,
        registration_country=a["country"],
        org_id=a.get("org_id"),
        org_name=a.get("org_name"),
        state_owned=None if owned == "unknown" else owned == "true",
        pop_countries=frozenset(json.loads(a.get("pop_countries", "[]"))),
        prefix_countries=json.loads(a.get("prefix_countries", "{}")),
        bogon=a.get("bogon") == "true",
    )


def _edge_attrs(info: EdgeInfo) -> dict[str, str]:
    return {
        "provenance": "|".join(sorted(info.provenance)),
        "observations": str(info.observations),
        "observers": json.dumps(sorted(info.observers)),
    }


def _edge_from_attrs(a: dict[str, str]) -> EdgeInfo:
    return EdgeInfo(
        frozenset(a["provenance"].split("|")),
        int(a["observations"]),
        frozenset(json.loads(a.get("observers", "[]"))),
    )


def _meta(snapshot: TopologySnapshot) -> dict[str, Any]:
    return {"schema": SCHEMA_VERSION, "captured_at": snapshot.captured_at, "provenance": snapshot.provenance}


def _check_schema(found: Any) -> None:
    if found != SCHEMA_VERSION:
        raise SchemaMismatch(f"file schema {found!r} is incompatible with {SCHEMA_VERSION!r}")


def _assemble(meta: dict[str, Any], nodes: dict[int, AsRecord], edges: dict) -> TopologySnapshot:
    _check_schema(meta.get("schema"))
    return TopologySnapshot(meta["captured_at"], dict(sorted(nodes.items())),
                            AdjacencySet(dict(sorted(edges.items()))), meta.get("provenance", {}))


# GraphML

def _graphml(snapshot: TopologySnapshot) -> ET.Element:
    root = ET.Element("graphml", xmlns=GRAPHML_NS)
    ET.SubElement(root, "key", {"id": "g_meta", "for": "graph", "attr.name": "topofunnel_meta", "attr.type": "string"})
    for name in NODE_ATTRS:
        ET.SubElement(root, "key", {"id": f"n_{name}", "for": "node", "attr.name": name, "attr.type": "string"})
    for name in EDGE_ATTRS:
        ET.SubElement(root, "key", {"id": f"e_{name}", "for": "edge", "attr.name": name, "attr.type": "string"})
    g = ET.SubElement(root, "graph", id="G", edgedefault="undirected")
    ET.SubElement(g, "data", key="g_meta").text = json.dumps(_meta(snapshot), sort_keys=True)
    for asn, record in snapshot.nodes.items():
        node = ET.SubElement(g, "node", id=str(asn))
        for name, value in _node_attrs(record).items():
            ET.SubElement(node, "data", key=f"n_{name}").text = value
    for (a, b), info in snapshot.edges.edges.items():
        e = ET.SubElement(g, "edge", source=str(a), target=str(b))
        for name, value in _edge_attrs(info).items():
            ET.SubElement(e, "data", key=f"e_{name}").text = value
    return root


def _read_graphml(root: ET.Element) -> TopologySnapshot:
    ns = {"g": GRAPHML_NS}
    keys = {k.get("id"): k.get("attr.name") for k in root.findall("g:key", ns)}
    graph = root.find("g:graph", ns)
    if graph is None:
        raise SchemaMismatch("GraphML file has no graph element")
    meta_el = next((d for d in graph.findall("g:data", ns) if keys.get(d.get("key")) == "topofunnel_meta"), None)
    if meta_el is None:
        raise SchemaMismatch("GraphML file carries no topofunnel schema metadata")
    meta = json.loads(meta_el.text or "{}")
    _check_schema(meta.get("schema"))

    def attrs(el: ET.Element) -> dict[str, str]:
        return {keys[d.get("key")]: d.text or "" for d in el.findall("g:data", ns)}

    nodes = {int(n.get("id")): _node_from_attrs(int(n.get("id")), attrs(n)) for n in graph.findall("g:node", ns)}
    edges = {(int(e.get("source")), int(e.get("target"))): _edge_from_attrs(attrs(e)) for e in graph.findall("g:edge", ns)}
    return _assemble(meta, nodes, edges)


# GEXF

def _gexf(snapshot: TopologySnapshot) -> ET.Element:
    root = ET.Element("gexf", xmlns=GEXF_NS, version="1.3")
    meta = ET.SubElement(root, "meta")
    ET.SubElement(meta, "description").text = json.dumps(_meta(snapshot), sort_keys=True)
    g = ET.SubElement(root, "graph", defaultedgetype="undirected", mode="static")
    for cls, names in (("node", NODE_ATTRS), ("edge", EDGE_ATTRS)):
        block = ET.SubElement(g, "attributes", {"class": cls})
        for i, name in enumerate(names):
            ET.SubElement(block, "attribute", id=str(i), title=name, type="string")
    nodes_el = ET.SubElement(g, "nodes")
    node_ids = {name: str(i) for i, name in enumerate(NODE_ATTRS)}
    for asn, record in snapshot.nodes.items():
        node = ET.SubElement(nodes_el, "node", id=str(asn), label=f"AS{asn}")
        vals = ET.SubElement(node, "attvalues")
        for name, value in _node_attrs(record).items():
            ET.SubElement(vals, "attvalue", {"for": node_ids[name], "value": value})
    edges_el = ET.SubElement(g, "edges")
    edge_ids = {name: str(i) for i, name in enumerate(EDGE_ATTRS)}
    for i, ((a, b), info) in enumerate(snapshot.edges.edges.items()):
        e = ET.SubElement(edges_el, "edge", id=str(i), source=str(a), target=str(b), weight=str(info.observations))
        vals = ET.SubElement(e, "attvalues")
        for name, value in _edge_attrs(info).items():
            ET.SubElement(vals, "attvalue", {"for": edge_ids[name], "value": value})
    return root


def _read_gexf(root: ET.Element) -> TopologySnapshot:
    ns = {"x": GEXF_NS}
    desc = root.find("x:meta/x:description", ns)
    if desc is None or not desc.text:
        raise SchemaMismatch("GEXF file carries no topofunnel schema metadata")
    meta = json.loads(desc.text)
    _check_schema(meta.get("schema"))
    graph = root.find("x:graph", ns)
    titles: dict[str, dict[str, str]] = {}
    for block in graph.findall("x:attributes", ns):
        titles[block.get("class")] = {a.get("id"): a.get("title") for a in block.findall("x:attribute", ns)}

    def attrs(el: ET.Element, cls: str) -> dict[str, str]:
        return {titles[cls][v.get("for")]: v.get("value") for v in el.findall("x:attvalues/x:attvalue", ns)}

    nodes = {int(n.get("id")): _node_from_attrs(int(n.get("id")), attrs(n, "node"))
             for n in graph.findall("x:nodes/x:node", ns)}
    edges = {(int(e.get("source")), int(e.get("target"))): _edge_from_attrs(attrs(e, "edge"))
             for e in graph.findall("x:edges/x:edge", ns)}
    return _assemble(meta, nodes, edges)


# JSON lines

def _jsonl_lines(snapshot: TopologySnapshot) -> list[str]:
    lines = [json.dumps({"type": "header", **_meta(snapshot)}, sort_keys=True)]
    for asn, record in snapshot.nodes.items():
        lines.append(json.dumps({"type": "node", "asn": asn, **_node_attrs(record)}, sort_keys=True))
    for (a, b), info in snapshot.edges.edges.items():
        lines.append(json.dumps({"type": "edge", "source": a, "target": b, **_edge_attrs(info)}, sort_keys=True))
    return lines


def _read_jsonl(text: str) -> TopologySnapshot:
    lines = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].get("type") != "header":
        raise SchemaMismatch("JSONL topology must start with a header row")
    meta = lines[0]
    _check_schema(meta.get("schema"))
    nodes, edges = {}, {}
    for row in lines[1:]:
        kind = row.pop("type")
        if kind == "node":
            asn = row.pop("asn")
            nodes[asn] = _node_from_attrs(asn, row)
        elif kind == "edge":
            edges[(row.pop("source"), row.pop("target"))] = _edge_from_attrs(row)
    return _assemble(meta, nodes, edges)


def dumps(snapshot: TopologySnapshot, fmt: str) -> str:
    if fmt == "jsonl":
        return "\n".join(_jsonl_lines(snapshot)) + "\n"
    if fmt == "graphml":
        root = _graphml(snapshot)
    elif fmt == "gexf":
        root = _gexf(snapshot)
    else:
        raise ValueError(f"unknown graph format {fmt!r}; expected one of {', '.join(FORMATS)}")
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def loads(text: str, fmt: str | None = None) -> TopologySnapshot:
    if fmt is None:
        stripped = text.lstrip()
        fmt = "jsonl" if stripped.startswith("{") else "gexf" if "<gexf" in stripped[:500] else "graphml"
    if fmt == "jsonl":
        return _read_jsonl(text)
    if fmt not in FORMATS:
        raise ValueError(f"unknown graph format {fmt!r}")
    root = ET.fromstring(text)
    return _read_graphml(root) if fmt == "graphml" else _read_gexf(root)


def format_for(path: str | Path) -> str:
    suffix = Path(path).suffix.lstrip(".").lower()
    if suffix not in FORMATS:
        raise ValueError(f"cannot infer graph format from {path!r}; use one of .{', .'.join(FORMATS)}")
    return suffix


def export_graph(snapshot: TopologySnapshot, path: str | Path, fmt: str | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps(snapshot, fmt or format_for(path)), encoding="utf-8")
    return path


def import_graph(path: str | Path, fmt: str | None = None) -> TopologySnapshot:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), fmt or format_for(path))
