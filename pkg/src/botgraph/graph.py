"""Knowledge graph of observed communications and intel annotations.

Nodes are typed (IP, Domain, Cluster, Artifact) and keyed by text; a key
belongs to exactly one kind. Edges are undirected, one per node pair and
relation, weighted by observation count. Connected components are tracked
incrementally with a disjoint-set forest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, NamedTuple, Optional

IP = "ip"
DOMAIN = "domain"
CLUSTER = "cluster"
ARTIFACT = "artifact"
KINDS = (IP, DOMAIN, CLUSTER, ARTIFACT)

RESOLVED_TO = "resolvedTo"
CONTACTED = "contacted"
MEMBER_OF_CLUSTER = "memberOfCluster"
DROPPED_BY = "droppedBy"
RELATIONS = (RESOLVED_TO, CONTACTED, MEMBER_OF_CLUSTER, DROPPED_BY)

EXPORT_FORMAT = "botgraph"
EXPORT_VERSION = 1

# higher wins when reputation annotations merge
REPUTATION_RANK = {"unknown": 0, "clean": 1, "suspicious": 2, "malicious": 3}


class GraphError(ValueError):
    pass


class NodeId(NamedTuple):
    kind: str
    key: str

    def __str__(self) -> str:
        return f"{self.kind}:{self.key}"

    @classmethod
    def parse(cls, text: str) -> "NodeId":
        kind, sep, key = text.partition(":")
        if not sep or kind not in KINDS or not key:
            raise GraphError(f"node must be KIND:KEY with KIND in {KINDS}, got {text!r}")
        return cls(kind, key)


def merge_annotation(name: str, old, new):
    if isinstance(old, bool) or isinstance(new, bool):
        return bool(old) or bool(new)
    if isinstance(old, (int, float)) and isinstance(new, (int, float)):
        return max(old, new)
    if name == "reputation":
        return max(old, new, key=lambda v: REPUTATION_RANK.get(v, 0))
    return new


class DisjointSet:
    """Union-find with path halving and union by size over hashable items."""

    def __init__(self):
        self._parent: dict = {}
        self._size: dict = {}

    def add(self, x) -> None:
        if x not in self._parent:
            self._parent[x] = x
            self._size[x] = 1

    def find(self, x):
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]

    def groups(self) -> list[list]:
        out: dict = {}
        for x in self._parent:
            out.setdefault(self.find(x), []).append(x)
        return list(out.values())


@dataclass
class Node:
    id: NodeId
    annotations: dict = field(default_factory=dict)


@dataclass
class Edge:
    a: NodeId
    b: NodeId
    relation: str
    weight: int = 1


def _edge_key(a: NodeId, b: NodeId, relation: str) -> tuple[NodeId, NodeId, str]:
    lo, hi = sorted((a, b))
    return lo, hi, relation


class KnowledgeGraph:
    """Single writer, many readers between mutation batches."""

    def __init__(self):
        self.nodes: dict[NodeId, Node] = {}
        self.edges: dict[tuple[NodeId, NodeId, str], Edge] = {}
        self._kind_of_key: dict[str, str] = {}
        self._components = DisjointSet()
        self._adjacency: dict[NodeId, set[NodeId]] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def upsert_node(self, node_id: NodeId, annotations: Optional[Mapping] = None) -> Node:
        node_id = NodeId(*node_id)
        if node_id.kind not in KINDS:
            raise GraphError(f"unknown node kind {node_id.kind!r}")
        existing_kind = self._kind_of_key.get(node_id.key)
        if existing_kind is not None and existing_kind != node_id.kind:
            raise GraphError(f"{node_id.key!r} already exists as {existing_kind}")
        node = self.nodes.get(node_id)
        if node is None:
            node = Node(node_id, dict(annotations or {}))
            self.nodes[node_id] = node
            self._kind_of_key[node_id.key] = node_id.kind
            self._components.add(node_id)
            self._adjacency[node_id] = set()
            return node
        for name, value in (annotations or {}).items():
            if name in node.annotations:
                node.annotations[name] = merge_annotation(name, node.annotations[name], value)
            else:
                node.annotations[name] = value
        return node

    def upsert_edge(self, a: NodeId, b: NodeId, relation: str) -> Edge:
        a, b = NodeId(*a), NodeId(*b)
        if relation not in RELATIONS:
            raise GraphError(f"unknown relation {relation!r}")
        if a == b:
            raise GraphError("self-loop")
        for end in (a, b):
            if end not in self.nodes:
                raise GraphError(f"missing endpoint {end}")
        key = _edge_key(a, b, relation)
        edge = self.edges.get(key)
        if edge is None:
            edge = self.edges[key] = Edge(key[0], key[1], relation)
            self._components.union(a, b)
            self._adjacency[a].add(b)
            self._adjacency[b].add(a)
        else:
            edge.weight += 1
        return edge

    def neighbours(self, node_id: NodeId) -> list[NodeId]:
        return sorted(self._adjacency.get(NodeId(*node_id), ()))

    def connected_components(self, exclude_relations: Iterable[str] = ()) -> list[list[NodeId]]:
        """Components sorted by their smallest member; members sorted.

        ``exclude_relations`` computes connectivity as if those edges were
        absent (every node still lands in exactly one component).
        """
        excluded = set(exclude_relations)
        if excluded:
            ds = DisjointSet()
            for node_id in self.nodes:
                ds.add(node_id)
            for edge in self.edges.values():
                if edge.relation not in excluded:
                    ds.union(edge.a, edge.b)
            groups = ds.groups()
        else:
            groups = self._components.groups()
        return sorted((sorted(g) for g in groups), key=lambda g: g[0])

    def component_of(self, node_id: NodeId, exclude_relations: Iterable[str] = ()) -> list[NodeId]:
        node_id = NodeId(*node_id)
        if node_id not in self.nodes:
            raise GraphError(f"unknown node {node_id}")
        for comp in self.connected_components(exclude_relations):
            if node_id in comp:
                return comp
        raise AssertionError("node missing from every component")


@dataclass(frozen=True)
class SuspicionRule:
    """A component is suspicious iff any enabled clause fires."""

    min_sinkhole_hits: int = 1
    min_dga_domains: int = 2
    min_ips_with_dga: int = 1
    min_flux_domains: int = 1
    min_dga_with_flux: int = 1
    dga_score_threshold: float = 0.0

    def fires(self, s: "ComponentSummary") -> list[str]:
        clauses = []
        if s.sinkhole_hits >= self.min_sinkhole_hits:
            clauses.append("sinkhole")
        if s.dga_domain_count >= self.min_dga_domains and s.node_counts.get(IP, 0) >= self.min_ips_with_dga:
            clauses.append("dga-cluster")
        if s.flux_domains >= self.min_flux_domains and s.dga_domain_count >= self.min_dga_with_flux:
            clauses.append("flux-dga")
        return clauses


@dataclass(frozen=True)
class ComponentSummary:
    component_id: int
    members: tuple[NodeId, ...]
    node_counts: dict[str, int]
    dga_domain_count: int
    sinkhole_hits: int
    flux_domains: int
    clusters: tuple[str, ...] = ()
    reasons: tuple[str, ...] = ()

    @property
    def suspicious(self) -> bool:
        return bool(self.reasons)

    def as_dict(self) -> dict:
        return {
            "componentId": self.component_id,
            "suspicious": self.suspicious,
            "reasons": list(self.reasons),
            "nodeCounts": {kind: self.node_counts.get(kind, 0) for kind in KINDS},
            "dgaDomainCount": self.dga_domain_count,
            "sinkholeHits": self.sinkhole_hits,
            "fluxDomains": self.flux_domains,
            "clusters": list(self.clusters),
            "members": [str(m) for m in self.members],
        }


def summarize_members(
    g: KnowledgeGraph, component_id: int, members: list[NodeId], rule: SuspicionRule = SuspicionRule()
) -> ComponentSummary:
    counts = {kind: 0 for kind in KINDS}
    dga = sinks = flux = 0
    clusters = set()
    member_set = set(members)
    for node_id in members:
        ann = g.nodes[node_id].annotations
        counts[node_id.kind] += 1
        if node_id.kind == DOMAIN:
            score = ann.get("dgaScore")
            if score is not None and score > rule.dga_score_threshold:
                dga += 1
            if ann.get("fluxFlagged"):
                flux += 1
        if ann.get("sinkholed"):
            sinks += 1
        for other in g.neighbours(node_id):
            if other.kind == CLUSTER and other not in member_set:
                clusters.add(other.key)
    summary = ComponentSummary(component_id, tuple(members), counts, dga, sinks, flux, tuple(sorted(clusters)))
    return replace(summary, reasons=tuple(rule.fires(summary)))


def component_summary(
    g: KnowledgeGraph,
    component_id: int,
    rule: SuspicionRule = SuspicionRule(),
    exclude_relations: Iterable[str] = (),
) -> ComponentSummary:
    comps = g.connected_components(exclude_relations)
    if not 0 <= component_id < len(comps):
        raise GraphError(f"unknown component {component_id}")
    return summarize_members(g, component_id, comps[component_id], rule)


def export_structured(g: KnowledgeGraph) -> str:
    lines = [json.dumps({"format": EXPORT_FORMAT, "version": EXPORT_VERSION}, sort_keys=True)]
    for node_id in sorted(g.nodes):
        lines.append(json.dumps(
            {"node": list(node_id), "annotations": g.nodes[node_id].annotations}, sort_keys=True))
    for key in sorted(g.edges):
        edge = g.edges[key]
        lines.append(json.dumps(
            {"edge": [list(edge.a), list(edge.b)], "relation": edge.relation, "weight": edge.weight},
            sort_keys=True))
    return "\n".join(lines) + "\n"


def import_structured(text: str) -> KnowledgeGraph:
    g = KnowledgeGraph()
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise GraphError("empty graph document")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise GraphError("line 1: malformed header") from None
    if header.get("format") != EXPORT_FORMAT or header.get("version") != EXPORT_VERSION:
        raise GraphError("unsupported graph document")
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
            if "node" in obj:
                g.upsert_node(NodeId(*obj["node"]), obj.get("annotations", {}))
            elif "edge" in obj:
                a, b = (NodeId(*end) for end in obj["edge"])
                weight = int(obj.get("weight", 1))
                if weight < 1:
                    raise GraphError("edge weight must be >= 1")
                edge = g.upsert_edge(a, b, obj["relation"])
                edge.weight = weight
            else:
                raise GraphError("neither node nor edge")
        except (json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
            raise GraphError(f"line {line_no}: {exc}") from None
    return g


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


_DOT_SHAPES = {IP: "box", DOMAIN: "ellipse", CLUSTER: "hexagon", ARTIFACT: "note"}


def export_dot(g: KnowledgeGraph) -> str:
    lines = ["graph botgraph {"]
    for node_id in sorted(g.nodes):
        lines.append(f"  {_dot_quote(str(node_id))} [shape={_DOT_SHAPES[node_id.kind]}];")
    for key in sorted(g.edges):
        edge = g.edges[key]
        lines.append(
            f"  {_dot_quote(str(edge.a))} -- {_dot_quote(str(edge.b))} "
            f"[label={_dot_quote(edge.relation)}, weight={edge.weight}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_graph(g: KnowledgeGraph, fmt: str = "structured") -> str:
    if fmt == "structured":
        return export_structured(g)
    if fmt == "dot":
        return export_dot(g)
    raise GraphError(f"unknown export format {fmt!r}")
