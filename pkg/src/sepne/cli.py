"""Command-line entry point: ``sepne embed | eval-reconstruct | classify``.

Options may also come from a config file (``key = value`` lines, or a JSON
run manifest written by ``embed``); explicit flags win over the file.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, NumericalError
from .evaluation import classify, full_proximity, nystrom_baseline, r_scores, read_labels, svd_oracle
from .graph import GraphStore, iter_data_lines, load_edge_list
from .io import read_embeddings, write_binary, write_text
from .landmark import read_landmarks, resolve_strategy, select_landmarks
from .partition import load_partition, partition_interested, partition_louvain, partition_random
from .proximity import ProximityConfig
from .smf import SmfConfig, run_pipeline

_logger = logging.getLogger("sepne")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
PARTITION_MODES = {"louvain": "louvain", "lp": "louvain", "random": "random", "rp": "random",
                   "io": "interested_only", "interested_only": "interested_only",
                   "external": "external"}
CSV_COLUMNS = ("dataset", "method", "k", "d", "metric", "value")


class UsageError(Exception):
    pass


@dataclasses.dataclass
class RunConfig:
    input: str | None = None
    directed: bool = True
    order: str = "second"
    d: int = 128
    k: int = 200
    lam: float = 0.4
    eta: float = 0.1
    iters: int = 100
    tol: float | None = None
    partition: str = "louvain"
    s: int = 4
    max_set_size: int | None = None
    partition_file: str | None = None
    requested: str | None = None
    landmarks: str = "DD"
    landmark_file: str | None = None
    workers: int = 1
    seed: int = 0
    output: str = "embeddings.txt"
    format: str = "text"
    emit_context: bool = False
    manifest: str | None = None
    best_effort: bool = False

    def validate(self) -> None:
        if not self.input:
            raise UsageError("--input is required")
        mode = PARTITION_MODES.get(self.partition.lower())
        if mode is None:
            raise UsageError(f"unknown partition mode {self.partition!r}")
        self.partition = mode
        if (mode == "interested_only") != bool(self.requested):
            raise UsageError("--requested is required with --partition io and only valid there")
        if mode == "external" and not self.partition_file:
            raise UsageError("--partition external needs --partition-file")
        if self.order not in ("first", "second"):
            raise UsageError("--order must be 'first' or 'second'")
        if self.format not in ("text", "binary"):
            raise UsageError("--format must be 'text' or 'binary'")
        if self.d > self.k:
            raise UsageError(f"d={self.d} must not exceed k={self.k}")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")

    @property
    def set_size(self) -> int:
        return self.max_set_size if self.max_set_size else 10 * self.k

    def smf(self) -> SmfConfig:
        return SmfConfig(d=self.d, k=self.k, lam=self.lam, eta=self.eta, iters=self.iters,
                         proximity=ProximityConfig(self.order), tol=self.tol)


def _coerce(name: str, raw):
    field = {f.name: f for f in dataclasses.fields(RunConfig)}.get(name)
    if field is None:
        return raw
    default = field.default
    if isinstance(raw, str):
        low = raw.strip().lower()
        if isinstance(default, bool):
            return low in ("1", "true", "yes", "on")
        if low in ("none", "null", ""):
            return None
        if isinstance(default, int) or name == "max_set_size":
            return int(raw)
        if isinstance(default, float) or name == "tol":
            return float(raw)
        return raw.strip()
    return raw


def read_config_file(path: str) -> dict:
    """``key = value`` text, or a manifest JSON whose ``config`` entry is used."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        data = data.get("config", data)
    else:
        data = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            data[key.replace("-", "_")] = value
    return {key: _coerce(key, value) for key, value in data.items()}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _run_options(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="key = value file or run manifest")
    p.add_argument("--input", default=S, help="edge list path")
    p.add_argument("--directed", action="store_true", default=S, help="read edges as arcs (default)")
    p.add_argument("--undirected", "--symmetrize", dest="directed", action="store_false", default=S,
                   help="treat every edge as undirected")
    p.add_argument("--order", choices=["first", "second"], default=S,
                   help="first: M = I + A; second: M = A + A^2")
    p.add_argument("--d", type=int, default=S)
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--lambda", dest="lam", type=float, default=S)
    p.add_argument("--eta", type=float, default=S)
    p.add_argument("--iters", type=int, default=S)
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--partition", default=S, help="louvain | random | io | external")
    p.add_argument("--s", type=int, default=S, help="number of sets for random partitions")
    p.add_argument("--max-set-size", dest="max_set_size", type=int, default=S)
    p.add_argument("--partition-file", dest="partition_file", default=S)
    p.add_argument("--requested", default=S, help="file of requested node labels (io mode)")
    p.add_argument("--landmarks", default=S, help="DD | DP | UF | GDS")
    p.add_argument("--landmark-file", dest="landmark_file", default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sepne", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    emb = sub.add_parser("embed", help="embed a graph")
    _run_options(emb)
    S = argparse.SUPPRESS
    emb.add_argument("--output", default=S)
    emb.add_argument("--format", choices=["text", "binary"], default=S)
    emb.add_argument("--emit-context", dest="emit_context", action="store_true", default=S)
    emb.add_argument("--manifest", default=S)
    emb.add_argument("--best-effort", dest="best_effort", action="store_true", default=S)

    rec = sub.add_parser("eval-reconstruct", help="r_all / r_nz of SepNE, Nystrom and SVD over a k sweep")
    _run_options(rec)
    rec.add_argument("--k-sweep", dest="k_sweep", required=True, help="comma-separated k values")
    rec.add_argument("--metric", default="r_all", help="comma-separated subset of r_all,r_nz")
    rec.add_argument("--dataset", default=None)
    rec.add_argument("--report", default="-")

    cls = sub.add_parser("classify", help="micro-F1 of logistic regression on embeddings")
    cls.add_argument("--embeddings", required=True)
    cls.add_argument("--labels", required=True)
    cls.add_argument("--fractions", default="0.1,0.9")
    cls.add_argument("--runs", type=int, default=10)
    cls.add_argument("--seed", type=int, default=0)
    cls.add_argument("--dataset", default=None)
    cls.add_argument("--k", type=int, default=None, help="recorded in the report only")
    cls.add_argument("--report", default="-")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    names = {f.name for f in dataclasses.fields(RunConfig)}
    values.update({key: val for key, val in vars(args).items() if key in names})
    unknown = set(values) - names
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _read_node_list(path: str, g: GraphStore) -> np.ndarray:
    return g.ids(tok[0] for _, tok in iter_data_lines(path))


def prepare(cfg: RunConfig, g: GraphStore | None = None):
    """Load the graph, choose landmarks and partition; returns timings too."""
    timings = {}
    t = time.perf_counter()
    if g is None:
        g = load_edge_list(cfg.input, directed=cfg.directed)
    timings["load"] = time.perf_counter() - t

    t = time.perf_counter()
    if cfg.landmark_file:
        lms = read_landmarks(cfg.landmark_file, g)
    else:
        strategy = resolve_strategy(cfg.landmarks, cfg.order, cfg.k, cfg.d)
        lms = select_landmarks(g, cfg.k, strategy, cfg.seed)
    timings["landmarks"] = time.perf_counter() - t

    t = time.perf_counter()
    if cfg.partition == "random":
        plan = partition_random(g, lms.nodes, cfg.s, cfg.seed)
    elif cfg.partition == "interested_only":
        plan = partition_interested(g, lms.nodes, _read_node_list(cfg.requested, g), cfg.set_size)
    elif cfg.partition == "external":
        plan = load_partition(cfg.partition_file, g, lms.nodes)
    else:
        plan = partition_louvain(g, lms.nodes, cfg.seed, cfg.set_size)
    timings["partition"] = time.perf_counter() - t
    return g, lms, plan, timings


def _embed_config(cfg: RunConfig, g: GraphStore, lms):
    smf = cfg.smf()
    if lms.k != smf.k:
        _logger.warning("only %d landmarks available; using k=%d", lms.k, lms.k)
        smf = dataclasses.replace(smf, k=lms.k, d=min(smf.d, lms.k))
    return smf


def cmd_embed(cfg: RunConfig) -> dict:
    g, lms, plan, timings = prepare(cfg)
    result = run_pipeline(g, plan, lms, _embed_config(cfg, g, lms), cfg.workers, cfg.best_effort)
    writer = write_binary if cfg.format == "binary" else write_text
    writer(cfg.output, result.labels, result.vectors)
    if cfg.emit_context:
        writer(cfg.output + ".context", result.labels, result.context)

    timings = dict(timings)
    timings["preparation"] = (timings["load"] + timings["landmarks"] + timings["partition"]
                              + result.timings["landmark_svd"])
    timings["optimization"] = result.timings["optimization"]
    manifest = {
        "command": "embed",
        "version": __version__,
        "config": dataclasses.asdict(cfg),
        "graph": {"n": g.node_count, "edges": g.edge_count, "directed": g.directed,
                  "self_loops_dropped": g.self_loops_dropped},
        "landmarks": {"strategy": lms.strategy, "k": lms.k},
        "partition": {"mode": plan.mode, "sets": plan.s, "dropped": plan.dropped},
        "rows": len(result),
        "timings": timings,
        "sections": [dataclasses.asdict(rep) for rep in result.sections],
    }
    path = cfg.manifest or cfg.output + ".manifest.json"
    Path(path).write_text(json.dumps(manifest, indent=2, default=float), encoding="utf-8")
    _logger.info("wrote %d embeddings to %s (manifest %s)", len(result), cfg.output, path)
    return manifest


def _open_report(path: str):
    return sys.stdout if path == "-" else open(path, "w", newline="", encoding="utf-8")


def cmd_eval_reconstruct(cfg: RunConfig, k_sweep: list[int], metrics: list[str], dataset: str) -> list[dict]:
    if not k_sweep:
        raise UsageError("empty k sweep")
    if cfg.partition == "interested_only":
        raise UsageError("reconstruction needs full coverage; use louvain, random or external partitions")
    g = load_edge_list(cfg.input, directed=cfg.directed)
    m = full_proximity(g, ProximityConfig(cfg.order))
    svd_cache = np.linalg.svd(m.toarray())
    oracle = svd_oracle(m, cfg.d, svd_cache)
    rows = []
    for k in k_sweep:
        kcfg = dataclasses.replace(cfg, k=k)
        kcfg.validate()
        _, lms, plan, _ = prepare(kcfg, g)
        res = run_pipeline(g, plan, lms, _embed_config(kcfg, g, lms), kcfg.workers)
        order = np.argsort(res.nodes)
        if len(order) != g.node_count:
            raise DataError("SepNE run did not cover every node")
        w, c = res.factors()
        reports = {
            "sepne": r_scores(m, w[:, order], c[:, order]),
            "nystrom": nystrom_baseline(m, lms, cfg.d),
            "svd": oracle,
        }
        for method, rep in reports.items():
            for metric in metrics:
                rows.append({"dataset": dataset, "method": method, "k": k, "d": cfg.d,
                             "metric": metric, "value": f"{getattr(rep, metric):.6f}"})
    return rows


def cmd_classify(embeddings: str, labels: str, fractions: list[float], runs: int, seed: int,
                 dataset: str, k: int | None) -> list[dict]:
    emb = read_embeddings(embeddings)
    lab = read_labels(labels)
    d = len(next(iter(emb.values()))) if emb else 0
    rows = []
    for frac in fractions:
        score = classify(emb, lab, frac, seed=seed, runs=runs)
        rows.append({"dataset": dataset, "method": "sepne", "k": "" if k is None else k, "d": d,
                     "metric": f"micro_f1@{frac:g}", "value": f"{score:.6f}"})
    return rows


def _write_csv(path: str, rows: list[dict]) -> None:
    fh = _open_report(path)
    try:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "embed":
            cmd_embed(resolve_config(args))
        elif args.command == "eval-reconstruct":
            cfg = resolve_config(args)
            metrics = [m.strip() for m in args.metric.split(",") if m.strip()]
            if not metrics or set(metrics) - {"r_all", "r_nz"}:
                raise UsageError("--metric must list r_all and/or r_nz")
            sweep = [int(x) for x in _floats(args.k_sweep)]
            dataset = args.dataset or Path(cfg.input).stem
            _write_csv(args.report, cmd_eval_reconstruct(cfg, sweep, metrics, dataset))
        else:
            fractions = _floats(args.fractions)
            if not fractions:
                raise UsageError("--fractions is empty")
            dataset = args.dataset or Path(args.labels).stem
            _write_csv(args.report, cmd_classify(args.embeddings, args.labels, fractions,
                                                 args.runs, args.seed, dataset, args.k))
    except UsageError as exc:
        print(f"sepne: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"sepne: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"sepne: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"sepne: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
