"""End-to-end run: records -> features -> DGA scores -> SOM clusters ->
intel and flux annotations -> knowledge graph -> component report.
"""

from __future__ import annotations

import ipaddress
import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import corpus
from .config import PipelineConfig, load_config
from .dga import LinearModel, decision_score, load_model, train_linear_svm
from .dnshistory import DnsHistory, flux_verdict, load_history, recent_churn_stats
from .features import VECTOR_DIM, extract_domain_features, fit_scaler, record_features
from .graph import (
    ARTIFACT, CLUSTER, CONTACTED, DOMAIN, DROPPED_BY, IP, MEMBER_OF_CLUSTER, RESOLVED_TO,
    KnowledgeGraph, NodeId, export_structured, summarize_members,
)
from .intel import IntelStore, load_intel_store
from .records import RecordError, TrafficRecord, read_records
from .som import SomGrid, assign_clusters, init_grid, load_grid, train_som
from .validation import ClusterPartition, ValidationError, validate_partition

log = logging.getLogger(__name__)

# cluster membership links similar traffic across botnets; it is not used
# when carving out per-botnet components
CHARACTERIZATION_EXCLUDES = (MEMBER_OF_CLUSTER,)


class InputError(Exception):
    """An input file that could not be read or parsed."""

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"{path}: {reason}")


def _read(loader, path, what):
    try:
        return loader(path)
    except OSError as exc:
        raise InputError(path, f"cannot read {what}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InputError(path, f"invalid {what}: {exc}") from None


def normalize_domain(domain: str) -> str:
    return domain.strip().lower().rstrip(".")


def canonical_ip(text: str) -> str:
    return str(ipaddress.ip_address(text))


def _is_ip(text: str) -> bool:
    try:
        ipaddress.ip_address(text)
    except ValueError:
        return False
    return True


def cluster_key(unit: tuple[int, int]) -> str:
    return f"{unit[0]},{unit[1]}"


def train_default_model(cfg: PipelineConfig) -> LinearModel:
    """DGA model from the bundled generated corpora."""
    benign = corpus.generate_benign_domains(cfg.corpus_size, seed=cfg.seed)
    dga = corpus.generate_dga_domains(cfg.corpus_size, seed=cfg.seed + 1)
    samples = [extract_domain_features(d) for d in benign + dga]
    labels = [-1] * len(benign) + [1] * len(dga)
    order = list(range(len(samples)))
    random.Random(cfg.seed).shuffle(order)
    return train_linear_svm([samples[i] for i in order], [labels[i] for i in order], cfg.dga)


def train_traffic_grid(vectors: np.ndarray, cfg: PipelineConfig) -> SomGrid:
    scaler = fit_scaler(vectors)
    grid = init_grid(cfg.som, vectors.shape[1])
    grid.scaler = scaler
    return train_som(grid, scaler.apply(vectors))


@dataclass
class PipelineResult:
    graph: KnowledgeGraph
    report: dict
    parse_errors: list[RecordError] = field(default_factory=list)


def build_graph(
    records: list[TrafficRecord],
    model: LinearModel,
    grid: Optional[SomGrid],
    intel: Optional[IntelStore],
    history: Optional[DnsHistory],
    cfg: PipelineConfig,
) -> tuple[KnowledgeGraph, dict]:
    g = KnowledgeGraph()
    stats: dict = {"skippedDomains": 0}

    features = [record_features(r) for r in records]
    vectors = np.array([vec for _, vec in features]).reshape(len(records), VECTOR_DIM)

    assignments = []
    if grid is not None and len(records):
        scaled = grid.scaler.apply(vectors) if grid.scaler is not None else vectors
        assignments = assign_clusters(grid, scaled)
        stats["clusterValidation"] = _validate(scaled, [a.unit for a in assignments])
    stats["clusterSizes"] = {
        cluster_key(unit): n for unit, n in sorted(Counter(a.unit for a in assignments).items())
    }

    nx_counts: Counter = Counter()
    for i, (r, (domain_features, _)) in enumerate(zip(records, features)):
        domain_node = None
        if r.domain is not None:
            # no usable name left after suffix stripping, or an address literal
            if domain_features is None or _is_ip(normalize_domain(r.domain)):
                stats["skippedDomains"] += 1
            else:
                domain_node = NodeId(DOMAIN, normalize_domain(r.domain))
                g.upsert_node(domain_node, {"dgaScore": decision_score(model, domain_features)})
                if r.nxdomain:
                    nx_counts[domain_node] += 1
                    g.upsert_node(domain_node, {"nxdomainCount": nx_counts[domain_node]})

        dst_node = None
        if r.dst_ip is not None:
            src_node = NodeId(IP, canonical_ip(r.src_ip))
            dst_node = NodeId(IP, canonical_ip(r.dst_ip))
            g.upsert_node(src_node)
            g.upsert_node(dst_node)
            if src_node != dst_node:
                g.upsert_edge(src_node, dst_node, CONTACTED)
            if domain_node is not None:
                g.upsert_edge(domain_node, dst_node, RESOLVED_TO)

        member = domain_node or dst_node
        if assignments and member is not None:
            cluster_node = NodeId(CLUSTER, cluster_key(assignments[i].unit))
            g.upsert_node(cluster_node)
            g.upsert_edge(member, cluster_node, MEMBER_OF_CLUSTER)

    if intel is not None:
        _annotate_intel(g, intel)
    if history is not None:
        _annotate_flux(g, history, cfg)
    return g, stats


def _validate(points: np.ndarray, units: list) -> Optional[dict]:
    try:
        return validate_partition(ClusterPartition.from_labels(points, units)).as_dict()
    except ValidationError as exc:
        log.info("cluster validation skipped: %s", exc)
        return None


def _annotate_intel(g: KnowledgeGraph, intel: IntelStore) -> None:
    for node_id in sorted(g.nodes):
        if node_id.kind == IP:
            verdict, sinkholed = intel.lookup_ip(node_id.key)
            ann = {"sinkholed": sinkholed}
            if verdict != "unknown":
                ann["reputation"] = verdict
            g.upsert_node(node_id, ann)
        elif node_id.kind == DOMAIN:
            g.upsert_node(node_id, {"sinkholed": intel.lookup_domain(node_id.key)})
    for sample in intel.samples():
        present = [
            node for target in intel.lookup_artifact(sample)
            for node in (NodeId(IP, target), NodeId(DOMAIN, target))
            if node in g.nodes
        ]
        if not present:
            continue
        artifact = NodeId(ARTIFACT, sample)
        g.upsert_node(artifact)
        for node in present:
            g.upsert_edge(artifact, node, DROPPED_BY)


def _annotate_flux(g: KnowledgeGraph, history: DnsHistory, cfg: PipelineConfig) -> None:
    for node_id in sorted(g.nodes):
        if node_id.kind != DOMAIN or node_id.key not in history:
            continue
        stats = recent_churn_stats(history, node_id.key, cfg.flux.window)
        verdict = flux_verdict(stats, cfg.flux, node_id.key)
        g.upsert_node(node_id, {"fluxFlagged": verdict.flagged, "doubleFlux": verdict.double_flux})


def component_report(g: KnowledgeGraph, cfg: PipelineConfig) -> list[dict]:
    """Summaries of every component holding an IP, domain or artifact, suspicious first."""
    summaries = []
    comps = g.connected_components(CHARACTERIZATION_EXCLUDES)
    for cid, members in enumerate(comps):
        if all(m.kind == CLUSTER for m in members):
            continue
        summaries.append(summarize_members(g, cid, members, cfg.rule))
    summaries.sort(key=lambda s: (not s.suspicious, s.component_id))
    return [s.as_dict() for s in summaries]


def run_pipeline(
    records_path,
    model_path=None,
    grid_path=None,
    intel_path=None,
    history_path=None,
    config_path=None,
    seed: Optional[int] = None,
) -> PipelineResult:
    """Run every stage; missing model/grid are trained on the fly.

    Unreadable inputs raise InputError. Bad record lines are counted in the
    report and skipped.
    """
    cfg = _read(load_config, config_path, "config") if config_path else PipelineConfig()
    if seed is not None:
        cfg = cfg.with_seed(seed)
    records, errors = _read(read_records, records_path, "records")
    model = _read(load_model, model_path, "model") if model_path else train_default_model(cfg)
    intel = _read(load_intel_store, intel_path, "intel") if intel_path else None
    history = _read(load_history, history_path, "DNS history") if history_path else None

    grid = None
    if grid_path:
        grid = _read(load_grid, grid_path, "grid")
    elif records:
        vectors = np.array([record_features(r)[1] for r in records])
        grid = train_traffic_grid(vectors, cfg)

    g, stats = build_graph(records, model, grid, intel, history, cfg)
    components = component_report(g, cfg)
    edge_counts = Counter(e.relation for e in g.edges.values())
    report = {
        "records": len(records),
        "parseErrors": [{"line": e.line_no, "reason": e.reason} for e in errors],
        "skippedDomains": stats["skippedDomains"],
        "nodes": {kind: sum(1 for n in g.nodes if n.kind == kind) for kind in (IP, DOMAIN, CLUSTER, ARTIFACT)},
        "edges": dict(sorted(edge_counts.items())),
        "clusterSizes": stats["clusterSizes"],
        "clusterValidation": stats.get("clusterValidation"),
        "suspiciousComponents": sum(1 for c in components if c["suspicious"]),
        "components": components,
    }
    return PipelineResult(g, report, errors)


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def report_text(report: dict) -> str:
    lines = [
        f"records: {report['records']}  parse errors: {len(report['parseErrors'])}",
        "nodes: " + ", ".join(f"{k}={v}" for k, v in report["nodes"].items()),
        f"suspicious components: {report['suspiciousComponents']} of {len(report['components'])}",
    ]
    validation = report.get("clusterValidation")
    if validation:
        lines.append(
            f"clusters: k={validation['k']} Davies-Bouldin={validation['daviesBouldin']:.4f} "
            f"Silhouette={validation['silhouette']:.4f}")
    for err in report["parseErrors"]:
        lines.append(f"  parse error line {err['line']}: {err['reason']}")
    lines.append("")
    for comp in report["components"]:
        flag = "SUSPICIOUS" if comp["suspicious"] else "ok"
        counts = comp["nodeCounts"]
        lines.append(
            f"[{flag}] component {comp['componentId']}: {counts['ip']} IPs, {counts['domain']} domains, "
            f"{counts['artifact']} artifacts; dga={comp['dgaDomainCount']} sinkhole={comp['sinkholeHits']} "
            f"flux={comp['fluxDomains']}"
            + (f" ({', '.join(comp['reasons'])})" if comp["reasons"] else ""))
        if comp["suspicious"]:
            for member in comp["members"]:
                lines.append(f"    {member}")
    return "\n".join(lines) + "\n"


def graph_export(result: PipelineResult) -> str:
    return export_structured(result.graph)
