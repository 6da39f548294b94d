"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 partial failure
in a batch run.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .analysis import (DegenerateSampleError, DomainError, HyperChainParams,
                       MissingHyperedgeError, build_hypergraph_params, chain_eigen_check,
                       chain_transition_matrix, community_sample, extended_chain, fit_mixture,
                       key_member_posterior, pearson_correlation)
from .evaluation import (ConfigError, ExperimentConfig, generate_planted_truss, run_experiment,
                         write_report)
from .graph import GraphError, read_edge_list, serialize_edge_list
from .truss import (IndexFormatError, TCPIndex, build_tcp_index, key_members_exact,
                    key_members_from_trussness, tcp_query, truss_decompose)
from .walk import VARIANTS, WalkParams, cks_random_walk

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PARTIAL = 0, 2, 3, 4


class DataError(Exception):
    pass


def _emit(payload, args, csv_rows=None, csv_header=None) -> None:
    if getattr(args, "format", "json") == "csv" and csv_rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(csv_header)
        w.writerows(csv_rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args):
    try:
        g, _ = read_edge_list(args.graph)
    except OSError as exc:
        raise DataError(f"cannot read graph: {exc}") from None
    return g


def _query_ids(g, text: str) -> list[int]:
    labels = [x for x in text.split(",") if x.strip()]
    if not labels:
        raise ConfigError("--q needs at least one node label")
    try:
        return [g.node(x.strip()) for x in labels]
    except KeyError as exc:
        raise DataError(str(exc.args[0])) from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_query(args) -> int:
    g = _load(args)
    Q = _query_ids(g, args.q)
    n = args.n
    if n is None:
        phi = truss_decompose(g)
        n = len(key_members_from_trussness(g, phi, Q[0]).members)
    try:
        params = WalkParams(m=args.m, r=args.r, alpha=args.alpha, n=n, variant=args.variant,
                            refine_iters=args.refine, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = cks_random_walk(g, Q, params, trace=bool(args.trace_fig))
    if args.trace_fig:
        from .plotting import plot_convergence
        plot_convergence(res.trace, args.trace_fig)
    payload = res.to_labels(g)
    payload["params"] = {"m": params.m, "r": params.r, "alpha": params.alpha, "n": n,
                         "refine": params.refine_iters, "seed": params.seed}
    prob = dict(res.ranked)
    rows = [(i + 1, g.label(u), f"{prob[u]:.12g}" if u in prob else "")
            for i, u in enumerate(res.members)]
    _emit(payload, args, rows, ("rank", "node", "prob"))
    return EXIT_OK


def _exact_rows(g, res):
    return [(g.label(u), "member" if u in res.members else "community")
            for u in sorted(res.community)]


def cmd_exact(args) -> int:
    g = _load(args)
    Q = _query_ids(g, args.q)
    index = None
    if args.method == "tcp":
        index = TCPIndex.load(args.index, g) if args.index else build_tcp_index(g)
    out, rows = [], []
    for q in Q:
        res = tcp_query(index, g, q) if index else key_members_exact(g, q, args.method)
        d = res.to_labels(g)
        d["query"] = g.label(q)
        d["method"] = args.method
        out.append(d)
        rows.extend((g.label(q),) + r for r in _exact_rows(g, res))
    _emit(out[0] if len(out) == 1 else out, args, rows, ("query", "node", "role"))
    return EXIT_OK


def cmd_index_build(args) -> int:
    g = _load(args)
    idx = build_tcp_index(g)
    idx.save(args.out)
    sys.stdout.write(json.dumps({"nodes": g.n_nodes, "edges": g.n_edges,
                                 "max_trussness": idx.trussness.max_trussness,
                                 "index": str(args.out)}) + "\n")
    return EXIT_OK


def cmd_index_query(args) -> int:
    g = _load(args)
    idx = TCPIndex.load(args.index, g)
    out, rows = [], []
    for q in _query_ids(g, args.q):
        res = tcp_query(idx, g, q)
        d = res.to_labels(g)
        d["query"] = g.label(q)
        out.append(d)
        rows.extend((g.label(q),) + r for r in _exact_rows(g, res))
    _emit(out[0] if len(out) == 1 else out, args, rows, ("query", "node", "role"))
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    report = run_experiment(cfg)
    out = args.out or cfg.out
    fmt = args.format or cfg.format
    if out:
        paths = write_report(report, out, figures=not args.no_figures)
        if fmt == "json":
            (Path(out) / "results.json").write_text(report.to_json() + "\n")
        sys.stdout.write(json.dumps({k: str(v) for k, v in paths.items()}) + "\n")
    else:
        sys.stdout.write(report.to_json() + "\n" if fmt == "json" else report.to_csv())
    return EXIT_PARTIAL if report.failed else EXIT_OK


def cmd_gen(args) -> int:
    g, planted = generate_planted_truss(args.background, args.p, args.clique, args.attach,
                                        args.seed)
    header = (f"# planted truss: background={args.background} p={args.p} clique={args.clique} "
              f"attach={args.attach} seed={args.seed}\n"
              f"# planted nodes: {' '.join(g.label(u) for u in sorted(planted))}\n")
    text = header + serialize_edge_list(g)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze_bayes(args) -> int:
    g = _load(args)
    q = _query_ids(g, args.q)[0]
    sample = community_sample(g, q, alpha=args.alpha)
    if sample.positive.shape[0] < 4 or sample.negative.shape[0] < 4:
        raise DataError("community too small to fit both classes (need 4 nodes each)")
    mix = fit_mixture(sample.positive, sample.negative)
    posts = []
    for u, x, member in zip(sample.nodes, sample.features, sample.is_member):
        p = key_member_posterior(x, mix)
        posts.append({"node": g.label(u), "member": bool(member),
                      "features": [float(v) for v in x],
                      "posterior": float(f"{p.probability:.12g}"),
                      "out_of_support": p.out_of_support})
    member_post = [p["posterior"] for p in posts if p["member"]]
    payload = {"query": g.label(q), "k": sample.k, "k_hat": sample.k_hat,
               "model": mix.to_dict(),
               "member_posterior": {"min": min(member_post), "mean": sum(member_post) / len(member_post),
                                    "max": max(member_post)},
               "nodes": posts}
    rows = [(p["node"], int(p["member"]), p["posterior"]) for p in posts]
    _emit(payload, args, rows, ("node", "member", "posterior"))
    return EXIT_OK


def cmd_analyze_chain(args) -> int:
    if args.graph:
        g = _load(args)
        Q = _query_ids(g, args.q)
        phi = truss_decompose(g)
        K = key_members_from_trussness(g, phi, Q[0]).members - set(Q)
        params = build_hypergraph_params(g, phi, Q, K)
    else:
        if None in (args.gamma, args.mu, args.beta):
            raise ConfigError("give --graph/--q or all of --gamma --mu --beta")
        params = HyperChainParams(args.gamma, args.mu, args.beta)
    check = chain_eigen_check(params, args.r)
    payload = {
        "params": {"gamma": params.gamma, "mu": params.mu, "beta": params.beta},
        "matrix": chain_transition_matrix(params).tolist(),
        "eigenvalues": [float(x) for x in check.eigenvalues],
        "residuals": check.residuals.tolist(),
        "pi_r": check.pi_power.tolist(),
        "pi_r_diagonalized": check.pi_diagonal.tolist(),
    }
    if args.eta is not None:
        payload["extended"] = [
            {"l": l, "k_stationary": ext.k_probability, "k_after_r": ext.k_probability_r}
            for l in range(1, args.max_l + 1)
            for ext in [extended_chain(params.gamma, args.eta, l, args.r)]
        ]
    _emit(payload, args)
    return EXIT_OK


def cmd_analyze_pcc(args) -> int:
    try:
        with open(args.csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataError(str(exc)) from None
    xs, ys = [], []
    for row in rows:
        try:
            xs.append(float(row[args.x]))
            ys.append(float(row[args.y]))
        except KeyError as exc:
            raise ConfigError(f"no column {exc}") from None
        except ValueError:
            continue
    res = pearson_correlation(xs, ys)
    _emit({"x": args.x, "y": args.y, "n": len(xs), "r": res.r, "t": res.t,
           "p_value": res.p_value}, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _walk_flags(p) -> None:
    p.add_argument("--variant", choices=VARIANTS, default="tb")
    p.add_argument("--m", type=float, default=2)
    p.add_argument("--r", type=int, default=150)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--n", type=int, default=None,
                   help="result size (default: size of the exact key-member set)")
    p.add_argument("--refine", type=int, default=0, metavar="ITERS",
                   help="refinement passes; ties keep incumbents, then smaller ids")
    p.add_argument("--seed", type=int, default=0)


def _output_flags(p) -> None:
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cksearch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("query", help="approximate key members by random walk")
    p.add_argument("--graph", required=True)
    p.add_argument("--q", required=True, help="comma-separated node labels")
    _walk_flags(p)
    _output_flags(p)
    p.add_argument("--trace-fig", help="write a convergence plot to this PNG")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("exact", help="exact key members (ground truth)")
    p.add_argument("--graph", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--method", choices=("bottomup", "topdown", "tcp"), default="bottomup")
    p.add_argument("--index", help="prebuilt TCP index for --method tcp")
    _output_flags(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("index", help="TCP index")
    isub = p.add_subparsers(dest="index_command", required=True)
    b = isub.add_parser("build")
    b.add_argument("--graph", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_index_build)
    qp = isub.add_parser("query")
    qp.add_argument("--graph", required=True)
    qp.add_argument("--index", required=True)
    qp.add_argument("--q", required=True)
    _output_flags(qp)
    qp.set_defaults(func=cmd_index_query)

    p = sub.add_parser("eval", help="batch experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--seed", type=int)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", help="planted-truss synthetic graph")
    p.add_argument("--background", type=int, default=200)
    p.add_argument("--p", type=float, default=0.02)
    p.add_argument("--clique", type=int, default=10)
    p.add_argument("--attach", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze", help="statistical analyses")
    asub = p.add_subparsers(dest="analyze_command", required=True)
    a = asub.add_parser("bayes", help="key-membership posterior of a query's community")
    a.add_argument("--graph", required=True)
    a.add_argument("--q", required=True)
    a.add_argument("--alpha", type=float, default=1.0)
    _output_flags(a)
    a.set_defaults(func=cmd_analyze_bayes)
    a = asub.add_parser("chain", help="collapsed Q/X/K Markov chain")
    a.add_argument("--graph")
    a.add_argument("--q")
    a.add_argument("--gamma", type=float)
    a.add_argument("--mu", type=float)
    a.add_argument("--beta", type=float)
    a.add_argument("--eta", type=float, help="also sweep the path-extended chain")
    a.add_argument("--max-l", type=int, default=6)
    a.add_argument("--r", type=int, default=150)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze_chain)
    a = asub.add_parser("pcc", help="Pearson correlation of two CSV columns")
    a.add_argument("--csv", required=True)
    a.add_argument("--x", required=True)
    a.add_argument("--y", required=True)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze_pcc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, GraphError, IndexFormatError, MissingHyperedgeError,
            DegenerateSampleError, KeyError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
