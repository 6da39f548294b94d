"""Experiment harness: metrics, synthetic planted trusses, batch runs and reports."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .graph import Graph, compute_supports, connected_components, induced_subgraph, read_edge_list
from .truss import (build_tcp_index, key_members_exact, key_members_from_trussness, tcp_query,
                    truss_decompose)
from .walk import WalkParams, canonical_variant, cks_random_walk

CSV_COLUMNS = ("query_id", "algo", "variant", "m", "r", "alpha", "n", "precision", "recall",
               "f1", "diameter", "density", "runtime_ms", "flags")
DENSITY_FORMULA = "|E|/|V|"
EXACT_METHODS = ("bottomup", "topdown", "tcp")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def precision_recall_f1(result: Iterable, truth: Iterable) -> tuple[float, float, float]:
    result, truth = set(result), set(truth)
    if not truth:
        raise ConfigError("ground truth is empty")
    hit = len(result & truth)
    p = hit / len(result) if result else 0.0
    r = hit / len(truth)
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f1


def _largest_component(g: Graph) -> list[int]:
    comps = connected_components(g)
    return max(comps, key=lambda c: (len(c), -min(c)))


def diameter(sub: Graph) -> int:
    """Longest shortest path inside the largest connected component."""
    if sub.n_nodes == 0:
        raise ConfigError("diameter of an empty node set")
    comp = _largest_component(sub)
    if len(comp) == 1:
        return 0
    h = induced_subgraph(sub, comp)
    dist = shortest_path(h.adjacency_matrix, directed=False, unweighted=True)
    return int(dist.max())


def is_connected(sub: Graph) -> bool:
    return len(connected_components(sub)) <= 1


def density(sub: Graph) -> float:
    """Edges per node."""
    if sub.n_nodes == 0:
        raise ConfigError("density of an empty node set")
    return sub.n_edges / sub.n_nodes


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

def generate_planted_truss(n_background: int, p_background: float, clique_size: int,
                           attach_edges: int, seed: int, max_attempts: int = 100
                           ) -> tuple[Graph, frozenset]:
    """Sparse G(n, p) background with a planted clique wired in by random edges.

    Node ids are shuffled so the clique is not a contiguous block. Draws where
    the background reaches the clique's trussness are rejected and redrawn.
    """
    if clique_size < 4:
        raise ConfigError("clique_size must be >= 4")
    if not 0 <= p_background <= 1:
        raise ConfigError("p_background must lie in [0, 1]")
    if n_background < 0 or attach_edges < 0:
        raise ConfigError("sizes must be non-negative")
    if attach_edges > n_background * clique_size:
        raise ConfigError("more attach edges than clique-background pairs")
    rng = np.random.default_rng(seed)
    n = n_background + clique_size
    for _ in range(max_attempts):
        perm = rng.permutation(n)
        bg = perm[:n_background]
        planted = perm[n_background:]
        edges = []
        iu, ju = np.triu_indices(n_background, k=1)
        keep = rng.random(len(iu)) < p_background
        edges.extend(zip(bg[iu[keep]].tolist(), bg[ju[keep]].tolist()))
        for a in range(clique_size):
            for b in range(a + 1, clique_size):
                edges.append((int(planted[a]), int(planted[b])))
        if attach_edges:
            slots = rng.choice(n_background * clique_size, size=attach_edges, replace=False)
            for s in slots.tolist():
                edges.append((int(bg[s // clique_size]), int(planted[s % clique_size])))
        g = Graph(n, edges)
        phi = truss_decompose(g)
        top = phi.edges_at_least(clique_size)
        planted_set = frozenset(planted.tolist())
        if phi.max_trussness == clique_size and set(np.unique(top).tolist()) == planted_set:
            return g, planted_set
    raise ConfigError("could not draw a background below the planted trussness")


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    graph: str | None = None
    planted: dict | None = None
    query_ids: list | None = None
    query_count: int | None = None
    query_seed: int = 0
    algorithms: list = field(default_factory=lambda: ["rw-tb"])
    m: float = 2
    r: int = 150
    alpha: float = 1.0
    refine: int = 0
    seed: int = 0
    fraction: float = 100.0
    timing: bool = True
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if (self.graph is None) == (self.planted is None):
            raise ConfigError("give exactly one of 'graph' or 'planted'")
        if (self.query_ids is None) == (self.query_count is None):
            raise ConfigError("give exactly one of 'queries.ids' or 'queries.random'")
        if not 0 < self.fraction <= 100:
            raise ConfigError("fraction must lie in (0, 100]")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        self.algorithms = [parse_algorithm(a) for a in self.algorithms]
        try:
            self.walk_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def walk_params(self, variant: str = "tb", n: int | None = None) -> WalkParams:
        return WalkParams(m=self.m, r=self.r, alpha=self.alpha, n=n, variant=variant,
                          refine_iters=self.refine, seed=self.seed)

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        d = dict(d)
        queries = d.pop("queries", {}) or {}
        if not isinstance(queries, dict):
            raise ConfigError("'queries' must be an object")
        params = d.pop("params", {}) or {}
        unknown = set(d) - {"graph", "planted", "algorithms", "fraction", "timing", "out", "format"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        graph = d.get("graph")
        if graph is not None and base_dir is not None and not Path(graph).is_absolute():
            graph = str(base_dir / graph)
        known_params = {"m", "r", "alpha", "refine", "seed"}
        if set(params) - known_params:
            raise ConfigError(f"unknown params: {sorted(set(params) - known_params)}")
        return cls(graph=graph, planted=d.get("planted"),
                   query_ids=queries.get("ids"), query_count=queries.get("random"),
                   query_seed=queries.get("seed", 0),
                   algorithms=d.get("algorithms", ["rw-tb"]),
                   fraction=d.get("fraction", 100.0), timing=d.get("timing", True),
                   out=d.get("out"), format=d.get("format", "csv"), **params)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data, path.parent)


def parse_algorithm(name: str) -> tuple[str, str]:
    """'exact-tcp' -> ('exact', 'tcp'); 'rw-tb' or 'tb' -> ('rw', 'tb')."""
    if isinstance(name, (tuple, list)):
        return tuple(name)
    key = name.lower()
    if key.startswith("exact"):
        method = key.partition("-")[2] or "bottomup"
        if method not in EXACT_METHODS:
            raise ConfigError(f"unknown exact method {method!r}")
        return ("exact", method)
    if key.startswith("rw-"):
        key = key[3:]
    try:
        return ("rw", canonical_variant(key))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


@dataclass
class MetricsReport:
    rows: list[dict]
    summary: dict

    @property
    def failed(self) -> int:
        return sum(1 for row in self.rows if "error" in row["flags"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: _fmt(row[k]) for k in CSV_COLUMNS})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"summary": self.summary, "rows": self.rows}, indent=2, default=_fmt)


def _fmt(x):
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return f"{x:.12g}"
    return x


def _load_graph(cfg: ExperimentConfig) -> tuple[Graph, frozenset | None]:
    if cfg.graph is not None:
        g, _ = read_edge_list(cfg.graph)
        return g, None
    planted = cfg.planted
    try:
        return generate_planted_truss(planted["n_background"], planted["p_background"],
                                      planted["clique_size"], planted.get("attach_edges", 0),
                                      planted.get("seed", 0))
    except KeyError as exc:
        raise ConfigError(f"planted config lacks {exc}") from None


def sample_queries(g: Graph, count: int, seed: int) -> list[int]:
    """Seeded sample of nodes that sit in at least one triangle."""
    sup = compute_supports(g).values
    eligible = np.unique(g.edges[sup > 0]) if g.n_edges else np.zeros(0, dtype=np.int64)
    if len(eligible) == 0:
        raise ConfigError("graph has no triangles to query from")
    rng = np.random.default_rng(seed)
    count = min(count, len(eligible))
    return sorted(rng.choice(eligible, size=count, replace=False).tolist())


def run_experiment(cfg: ExperimentConfig, graph: Graph | None = None) -> MetricsReport:
    """Ground truth, candidate and metrics for every (query, algorithm) pair."""
    g = graph if graph is not None else _load_graph(cfg)[0]
    if cfg.query_ids is not None:
        try:
            queries = [g.node(x) for x in cfg.query_ids]
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
    else:
        queries = sample_queries(g, cfg.query_count, cfg.query_seed)
    phi = truss_decompose(g)
    index = None
    if ("exact", "tcp") in cfg.algorithms:
        index = build_tcp_index(g, phi)

    rows = []
    for q in queries:
        truth = key_members_from_trussness(g, phi, q)
        n = max(1, math.ceil(cfg.fraction / 100.0 * len(truth.members)))
        for algo, variant in cfg.algorithms:
            rows.append(_evaluate(g, q, truth, algo, variant, n, cfg, index))
    return MetricsReport(rows, _summarize(rows, cfg))


def _evaluate(g, q, truth, algo, variant, n, cfg, index) -> dict:
    row = {"query_id": g.label(q), "algo": algo, "variant": variant,
           "m": cfg.m if algo == "rw" else "", "r": cfg.r if algo == "rw" else "",
           "alpha": cfg.alpha if algo == "rw" else "", "n": n,
           "precision": math.nan, "recall": math.nan, "f1": math.nan,
           "diameter": math.nan, "density": math.nan, "runtime_ms": math.nan}
    flags = []
    t0 = time.perf_counter()
    try:
        if algo == "exact":
            if variant == "tcp":
                res = tcp_query(index, g, q)
            else:
                res = key_members_exact(g, q, variant)
            result = res.members
            row["n"] = len(result)
            if res.degenerate:
                flags.append("degenerate")
        else:
            res = cks_random_walk(g, [q], cfg.walk_params(variant, n))
            result = res.members
            if res.truncated:
                flags.append("truncated")
        elapsed = (time.perf_counter() - t0) * 1000.0
    except Exception as exc:  # recorded per row; the batch continues
        row["flags"] = f"error:{type(exc).__name__}"
        return row
    p, r, f1 = precision_recall_f1(result, truth.members)
    sub = induced_subgraph(g, result)
    if not is_connected(sub):
        flags.append("disconnected")
    row.update(precision=p, recall=r, f1=f1, diameter=float(diameter(sub)),
               density=density(sub), runtime_ms=elapsed if cfg.timing else 0.0)
    row["flags"] = ";".join(flags)
    return row


def _summarize(rows: Sequence[dict], cfg: ExperimentConfig) -> dict:
    by_algo: dict[str, list[dict]] = {}
    for row in rows:
        by_algo.setdefault(f"{row['algo']}-{row['variant']}", []).append(row)
    out = {}
    for name, group in by_algo.items():
        ok = [r for r in group if "error" not in r["flags"]]
        stats = {"queries": len(group), "errors": len(group) - len(ok)}
        for key in ("precision", "recall", "f1", "diameter", "density", "runtime_ms"):
            vals = [r[key] for r in ok]
            stats[key] = float(np.mean(vals)) if vals else None
        out[name] = stats
    return {
        "algorithms": out,
        "density_formula": DENSITY_FORMULA,
        "refine_tie_break": "equal score keeps incumbents first, then smaller node id",
        "config": {k: v for k, v in asdict(cfg).items() if k not in ("out",)},
    }


def write_report(report: MetricsReport, out_dir, figures: bool = True) -> dict[str, Path]:
    """Write ``results.csv``, ``summary.json`` and, optionally, PNG figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out_dir / "results.csv", "summary": out_dir / "summary.json"}
    paths["csv"].write_text(report.to_csv())
    paths["summary"].write_text(json.dumps(report.summary, indent=2, default=_fmt) + "\n")
    if figures:
        from .plotting import plot_report
        paths.update(plot_report(report, out_dir / "figures"))
    return paths
