"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 input error, 3 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import corpus
from .config import PipelineConfig, load_config
from .dga import classify_domain, evaluate, load_model, save_model, train_linear_svm
from .dnshistory import flux_verdict, load_history, recent_churn_stats
from .features import FeatureError, extract_domain_features, record_features
from .graph import GraphError, NodeId, export_graph, import_structured
from .pipeline import (
    CHARACTERIZATION_EXCLUDES, InputError, _read, cluster_key, component_report,
    graph_export, report_json, report_text, run_pipeline, train_traffic_grid,
)
from .records import read_records
from .som import assign_clusters, save_grid
from .validation import ClusterPartition, ValidationError, validate_partition

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("botgraph")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config(args) -> PipelineConfig:
    cfg = _read(load_config, args.config, "config") if getattr(args, "config", None) else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_corpus(args) -> int:
    if args.kind == "benign":
        names = corpus.generate_benign_domains(args.count, seed=args.seed)
    else:
        names = corpus.generate_dga_domains(args.count, seed=args.seed)
    _write(args.out, "".join(n + "\n" for n in names))
    return EXIT_OK


def _domain_features(names, path):
    out = []
    for name in names:
        try:
            out.append(extract_domain_features(name))
        except FeatureError as exc:
            raise InputError(path, f"{name!r}: {exc}") from None
    return out


def cmd_train_dga(args) -> int:
    cfg = _config(args).dga
    overrides = {k: v for k, v in (("epochs", args.epochs), ("regularization", args.regularization),
                                   ("learning_rate", args.learning_rate)) if v is not None}
    try:
        cfg = replace(cfg, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    benign = _domain_features(_read(corpus.load_domain_list, args.benign, "domain list"), args.benign)
    dga = _domain_features(_read(corpus.load_domain_list, args.dga, "domain list"), args.dga)
    samples = benign + dga
    labels = [-1] * len(benign) + [1] * len(dga)
    order = np.random.default_rng(cfg.seed).permutation(len(samples))
    samples = [samples[i] for i in order]
    labels = [labels[i] for i in order]
    try:
        model = train_linear_svm(samples, labels, cfg)
    except ValueError as exc:
        raise InputError(f"{args.benign}, {args.dga}", str(exc)) from None
    save_model(model, args.out)
    rep = evaluate(model, samples, labels)
    print(f"trained on {len(benign)} benign / {len(dga)} DGA; training accuracy {rep.accuracy:.4f}, "
          f"precision {rep.precision if rep.precision is not None else float('nan'):.4f}")
    return EXIT_OK


def cmd_classify(args) -> int:
    model = _read(load_model, args.model, "model")
    names = _read(corpus.load_domain_list, args.domains, "domain list")
    lines = []
    for name in names:
        try:
            label, score = classify_domain(model, name)
        except FeatureError as exc:
            lines.append(f"{name}\terror\t{exc}\n")
            continue
        lines.append(f"{name}\t{label}\t{score:.6f}\n")
    _write(args.out, "".join(lines))
    return EXIT_OK


def cmd_cluster(args) -> int:
    cfg = _config(args)
    som_overrides = {k: v for k, v in (("rows", args.rows), ("cols", args.cols), ("epochs", args.epochs))
                     if v is not None}
    try:
        cfg = replace(cfg, som=replace(cfg.som, **som_overrides))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    records, errors = _read(read_records, args.records, "records")
    for err in errors:
        log.warning("%s: %s", args.records, err)
    if not records:
        raise InputError(args.records, "no valid records to cluster")
    vectors = np.array([record_features(r)[1] for r in records])
    grid = train_traffic_grid(vectors, cfg)
    scaled = grid.scaler.apply(vectors)
    assignments = assign_clusters(grid, scaled)
    save_grid(grid, args.grid_out)
    with open(args.assignments_out, "w", encoding="utf-8") as fh:
        for a, vec in zip(assignments, scaled):
            fh.write(json.dumps({"record": a.record_id, "unit": list(a.unit), "distance": a.distance,
                                 "vector": vec.tolist()}) + "\n")
    print(f"{len(records)} records -> {len({a.unit for a in assignments})} clusters "
          f"on a {cfg.som.rows}x{cfg.som.cols} map ({len(errors)} bad lines skipped)")
    return EXIT_OK


def _load_assignments(path):
    points, units = [], []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                points.append([float(x) for x in obj["vector"]])
                units.append(tuple(obj["unit"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise ValueError(f"line {line_no}: malformed assignment") from None
    return points, units


def cmd_validate_clusters(args) -> int:
    points, units = _read(_load_assignments, args.assignments, "assignments")
    try:
        report = validate_partition(ClusterPartition.from_labels(points, [cluster_key(u) for u in units]))
    except ValidationError as exc:
        raise InputError(args.assignments, str(exc)) from None
    _write(args.report, json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    if args.report not in (None, "-"):
        print(f"k={report.k} n={report.n} Davies-Bouldin={report.davies_bouldin:.6f} "
              f"Silhouette={report.silhouette:.6f}")
    return EXIT_OK


def cmd_dns_stats(args) -> int:
    cfg = _config(args)
    history = _read(load_history, args.history, "DNS history")
    window = args.window if args.window is not None else cfg.flux.window
    if args.domain not in history:
        raise InputError(args.history, f"no history for {args.domain}")
    stats = recent_churn_stats(history, args.domain, window)
    verdict = flux_verdict(stats, cfg.flux, args.domain)
    print(json.dumps({
        "domain": args.domain,
        "windowStart": stats.window_start,
        "windowEnd": stats.window_end,
        "distinctValues": stats.distinct_values,
        "observationCount": stats.observation_count,
        "meanTtl": stats.mean_ttl,
        "nsChanges": stats.ns_changes,
        "flagged": verdict.flagged,
        "doubleFlux": verdict.double_flux,
        "reason": verdict.reason,
    }, indent=2))
    return EXIT_OK


def _load_graph(path):
    return _read(lambda p: import_structured(Path(p).read_text(encoding="utf-8")), path, "graph")


def cmd_graph(args) -> int:
    g = _load_graph(args.graph)
    if args.graph_cmd == "query":
        try:
            node = NodeId.parse(args.component_of)
            members = g.component_of(node, CHARACTERIZATION_EXCLUDES)
        except GraphError as exc:
            raise UsageError(str(exc)) from None
        for m in members:
            print(m)
    elif args.graph_cmd == "report":
        cfg = _config(args)
        components = component_report(g, cfg)
        report = {"components": components, "suspiciousComponents": sum(c["suspicious"] for c in components)}
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        _write(args.out, export_graph(g, args.format))
    return EXIT_OK


def cmd_run(args) -> int:
    result = run_pipeline(
        args.records, args.model, args.grid, args.intel, args.history, args.config, seed=args.seed)
    if args.report_out:
        _write(args.report_out, report_json(result.report))
    if args.graph_out:
        _write(args.graph_out, graph_export(result))
    sys.stdout.write(report_text(result.report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="botgraph", description="Botnet detection from traffic and DNS logs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("corpus", help="generate a benign or DGA domain list")
    p.add_argument("--kind", choices=("benign", "dga"), required=True)
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("train-dga", help="train the DGA classifier")
    p.add_argument("--benign", required=True)
    p.add_argument("--dga", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--regularization", type=float)
    p.add_argument("--learning-rate", type=float)
    p.set_defaults(func=cmd_train_dga)

    p = sub.add_parser("classify", help="score domains with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--domains", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("cluster", help="train a SOM on records and assign clusters")
    p.add_argument("--records", required=True)
    p.add_argument("--grid-out", required=True)
    p.add_argument("--assignments-out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("validate-clusters", help="Davies-Bouldin and Silhouette of an assignment file")
    p.add_argument("--assignments", required=True)
    p.add_argument("--report", default="-")
    p.set_defaults(func=cmd_validate_clusters)

    p = sub.add_parser("dns-stats", help="churn statistics and flux verdict for one domain")
    p.add_argument("--history", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_dns_stats)

    p = sub.add_parser("graph", help="query a stored graph")
    gsub = p.add_subparsers(dest="graph_cmd", required=True, parser_class=_Parser)
    q = gsub.add_parser("query")
    q.add_argument("--graph", required=True)
    q.add_argument("--component-of", required=True, metavar="KIND:KEY")
    r = gsub.add_parser("report")
    r.add_argument("--graph", required=True)
    r.add_argument("--config")
    e = gsub.add_parser("export")
    e.add_argument("--graph", required=True)
    e.add_argument("--format", choices=("dot", "structured"), default="dot")
    e.add_argument("--out", default="-")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("run", help="full pipeline")
    p.add_argument("--records", required=True)
    p.add_argument("--model")
    p.add_argument("--grid")
    p.add_argument("--intel")
    p.add_argument("--history")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--report-out")
    p.add_argument("--graph-out")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"botgraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"botgraph: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"botgraph: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # anything not classified above is our bug
        log.debug("unhandled error", exc_info=True)
        print(f"botgraph: internal invariant violated: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
