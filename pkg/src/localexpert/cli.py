"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Timing figures go to stdout only with ``--timings`` so that seeded runs
print byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import logging
import random
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from .errors import DataError, LocalExpertError
from .ingest import Lexicon, load_dataset
from .metrics import DEFAULT_X, EvalConfig, evaluate_query
from .recommend import (AGGREGATIONS, METHODS, POOL, dumps_body, make_query, recommend,
                        run_body)
from .synth import SynthParams, generate
from .walk import DEFAULT_STAY, WALK_METHODS, WalkConfig

log = logging.getLogger("localexpert")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def draw_seed() -> int:
    return random.SystemRandom().getrandbits(63)


def effective_seed(seed: Optional[int], method: str) -> Optional[int]:
    """Walk methods always run with a seed; static methods ignore it."""
    if seed is not None:
        return seed
    return draw_seed() if method in WALK_METHODS else None


def _fmt(v, digits=4):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.{digits}f}"
    return str(v)


def _table(header, rows) -> str:
    cells = [[str(h) for h in header]] + [[_fmt(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _probability(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {v}")
    return v


# -- commands ---------------------------------------------------------------

def cmd_ingest(args) -> int:
    lexicon = Lexicon.from_file(args.lexicon) if args.lexicon else None
    ds = load_dataset(args.data, lexicon)
    counts = ds.counts()
    labels = {"positive": 0, "negative": 0, "neutral": 0}
    for r in ds.reviews:
        labels[r.label] += 1
    if args.format == "json":
        print(json.dumps({"counts": counts, "labels": labels, "violations": 0}, sort_keys=True))
    else:
        print(f"users: {counts['users']}  places: {counts['places']}  reviews: {counts['reviews']}")
        print("labels: " + "  ".join(f"{k}: {v}" for k, v in labels.items()))
        print("violations: 0")
    return EXIT_OK


def cmd_recommend(args) -> int:
    if args.mode == "pa" and not args.user:
        raise UsageError("--mode pa needs --user")
    ds = load_dataset(args.data)
    query = make_query(args.query, args.city, args.mode, args.k, args.user)
    seed = effective_seed(args.seed, args.method)
    cfg = WalkConfig(args.method if args.method in WALK_METHODS else "lrw", args.k,
                     args.stay, seed or 0)
    run = recommend(ds, query, args.method, cfg, args.aggregate, workers=args.threads)
    if args.format == "json":
        print(dumps_body(run_body(run, seed, args.top, args.timings)))
        return EXIT_OK
    ranked = run.ranked if args.top is None else run.ranked[:args.top]
    print(f"query: {query.text!r} -> {query.category!r}  city: {query.city}  mode: {query.mode}"
          f"  method: {run.method}  k: {query.k}  seed: {_fmt(seed)}")
    print("experts: " + (", ".join(run.experts) or "-"))
    print(f"fallback: {run.fallback}")
    print("[" + ", ".join(f"({p.name!r}, {p.pos}, {p.neg})" for p in ranked) + "]")
    if args.timings:
        t = run.timings
        print(f"t_graph: {t.t_graph:.6f}  t_algo: {t.t_algo:.6f}  t_other: {t.t_other:.6f}"
              f"  t_total: {t.t_total:.6f}")
    return EXIT_OK


def read_query_list(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{n}: {exc}") from None
            if not isinstance(rec, dict):
                raise DataError(f"{path}:{n}: expected a JSON object")
            missing = [k for k in ("query", "city", "mode", "method", "k") if k not in rec]
            if missing:
                raise DataError(f"{path}:{n}: missing field(s): {', '.join(missing)}")
            if rec["method"] not in METHODS:
                raise DataError(f"{path}:{n}: unknown method {rec['method']!r}")
            k = rec["k"]
            if not isinstance(k, int) or isinstance(k, bool):
                raise DataError(f"{path}:{n}: k must be an integer")
            try:
                EvalConfig(k=k)
                make_query(rec["query"], rec["city"], rec["mode"], k, rec.get("user"))
            except LocalExpertError as exc:
                raise DataError(f"{path}:{n}: {exc}") from None
            rows.append(rec)
    return rows


def cmd_evaluate(args) -> int:
    ds = load_dataset(args.data)
    rows = read_query_list(args.queries)
    seed = args.seed if args.seed is not None else draw_seed()
    x_values = tuple(args.x)

    def one(rec):
        q = make_query(rec["query"], rec["city"], rec["mode"], rec["k"], rec.get("user"))
        cfg = EvalConfig(args.m, x_values, q.k)
        return evaluate_query(ds, q, rec["method"], cfg, seed, args.stay, args.aggregate)

    if args.threads and args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            reports = list(pool.map(one, rows))
    else:
        reports = [one(r) for r in rows]

    records = []
    for rec, rep in zip(rows, reports):
        out = {
            "query": rec["query"], "city": rec["city"], "mode": rec["mode"],
            "method": rec["method"], "k": rec["k"], "m": args.m, "seed": seed,
            "E_R": rep.expected_r, "MSE": rep.mse, "degenerate": rep.degenerate,
            "r_scores": [list(p) for p in rep.r_scores],
            "precision": {f"p@{x}": v for x, v in rep.precision.items()},
        }
        if args.timings:
            out["timings"] = rep.timings.as_dict()
        records.append(out)

    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            for out in records:
                fh.write(json.dumps(out, sort_keys=True) + "\n")
    if args.format == "json":
        for out in records:
            print(json.dumps(out, sort_keys=True))
        return EXIT_OK
    header = ["query", "city", "mode", "method", "k", "E_R", "MSE"] + [f"p@{x}" for x in x_values]
    if args.timings:
        header += ["t_graph", "t_algo", "t_other", "t_total"]
    table = []
    for out, rep in zip(records, reports):
        row = [out["query"], out["city"], out["mode"], out["method"], out["k"], out["E_R"], out["MSE"]]
        row += [rep.precision[x] for x in x_values]
        if args.timings:
            t = rep.timings
            row += [t.t_graph, t.t_algo, t.t_other, t.t_total]
        table.append(row)
    print(f"seed: {seed}  m: {args.m}")
    print(_table(header, table))
    return EXIT_OK


def cmd_synth(args) -> int:
    base = SynthParams.from_file(args.config) if args.config else SynthParams()
    overrides = {
        "n_users": args.users, "n_places": args.places, "n_reviews": args.reviews,
        "n_cities": args.cities, "contact_degree_mean": args.contact_degree,
        "review_skew": args.skew, "positive_ratio": args.positive_ratio, "seed": args.seed,
    }
    params = asdict(base)
    params.update({k: v for k, v in overrides.items() if v is not None})
    if args.categories:
        params["categories"] = tuple(c.strip() for c in args.categories.split(",") if c.strip())
    params = SynthParams(**params)
    out = generate(params, args.out)
    print(json.dumps({"out": str(out), "users": params.n_users, "places": params.n_places,
                      "reviews": params.n_reviews, "seed": params.seed}, sort_keys=True))
    return EXIT_OK


def bench_rows(ds, query_text, city, k, seed, methods, stay=DEFAULT_STAY):
    query = make_query(query_text, city, "global", k)
    rows = []
    for method in methods:
        cfg = WalkConfig(method if method in WALK_METHODS else "lrw", k, stay, seed)
        run = recommend(ds, query, method, cfg)
        rows.append((method, run))
    return rows


def cmd_bench(args) -> int:
    with tempfile.TemporaryDirectory() as tmp:
        data = args.data
        if data is None:
            data = generate(SynthParams(seed=args.synth_seed), Path(tmp) / "synth")
        ds = load_dataset(data)
    rows = bench_rows(ds, args.query, args.city, args.k, args.seed, args.methods)
    records = []
    for method, run in rows:
        t = run.timings
        records.append({"method": method, **t.as_dict(),
                        **{f"pct_{k}": v for k, v in t.shares().items()},
                        "graph_nodes": run.graph_size, "ranked": len(run.ranked)})
    by = {r["method"]: r for r in records}
    diff = None
    if "rw" in by and "lrw" in by:
        diff = by["lrw"]["t_total"] - by["rw"]["t_total"]
    if args.format == "json":
        for r in records:
            print(json.dumps(r, sort_keys=True))
        print(json.dumps({"counts": ds.counts(), "lrw_minus_rw_t_total": diff}, sort_keys=True))
        return EXIT_OK
    c = ds.counts()
    print(f"dataset: {c['users']} users / {c['places']} places / {c['reviews']} reviews"
          f"  query: {args.query!r} city: {args.city} k: {args.k}")
    header = ["method", "nodes", "t_graph", "t_algo", "t_other", "t_total", "%graph", "%algo", "%other"]
    table = [[r["method"], r["graph_nodes"], r["t_graph"], r["t_algo"], r["t_other"], r["t_total"],
              round(r["pct_graph"], 2), round(r["pct_algo"], 2), round(r["pct_other"], 2)]
             for r in records]
    print(_table(header, table))
    if diff is not None:
        print(f"lrw - rw t_total: {diff:+.6f} s")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    cfg = ServiceConfig.from_env()
    cfg = ServiceConfig(
        bind=args.bind or cfg.bind,
        data_dir=args.data or cfg.data_dir,
        default_method=args.method or cfg.default_method,
        default_k=args.k or cfg.default_k,
        seed_policy=args.seed_policy or cfg.seed_policy,
        seed=args.seed if args.seed is not None else cfg.seed,
    )
    serve(cfg)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="localexpert", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="load and validate a dataset directory")
    s.add_argument("--data", required=True)
    s.add_argument("--lexicon")
    s.add_argument("--format", choices=("table", "json"), default="table")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("recommend", help="recommend places for one query")
    s.add_argument("--data", required=True)
    s.add_argument("--query", required=True)
    s.add_argument("--city", required=True)
    s.add_argument("--mode", choices=("global", "pa"), default="global")
    s.add_argument("--user")
    s.add_argument("--method", choices=METHODS, default="lrw")
    s.add_argument("--k", type=_positive_int, default=5)
    s.add_argument("--stay", type=_probability, default=DEFAULT_STAY)
    s.add_argument("--seed", type=int)
    s.add_argument("--top", type=_positive_int)
    s.add_argument("--aggregate", choices=AGGREGATIONS, default=POOL)
    s.add_argument("--format", choices=("table", "json"), default="table")
    s.add_argument("--threads", type=_positive_int, default=1)
    s.add_argument("--timings", action="store_true", help="include stage timings in the output")
    s.set_defaults(func=cmd_recommend)

    s = sub.add_parser("evaluate", help="score a query list against gold standards")
    s.add_argument("--data", required=True)
    s.add_argument("--queries", required=True, help="JSON lines: {query, city, mode, method, k}")
    s.add_argument("--m", type=_positive_int, default=10)
    s.add_argument("--seed", type=int)
    s.add_argument("--x", type=_positive_int, nargs="+", default=list(DEFAULT_X))
    s.add_argument("--stay", type=_probability, default=DEFAULT_STAY)
    s.add_argument("--aggregate", choices=AGGREGATIONS, default=POOL)
    s.add_argument("--report", help="also write the JSON lines report to this file")
    s.add_argument("--format", choices=("table", "json"), default="table")
    s.add_argument("--threads", type=_positive_int, default=1)
    s.add_argument("--timings", action="store_true")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("synth", help="write a synthetic dataset directory")
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="JSON file with generator parameters")
    s.add_argument("--users", type=_positive_int)
    s.add_argument("--places", type=_positive_int)
    s.add_argument("--reviews", type=_positive_int)
    s.add_argument("--cities", type=_positive_int)
    s.add_argument("--categories", help="comma-separated category vocabulary")
    s.add_argument("--contact-degree", type=float)
    s.add_argument("--skew", type=float)
    s.add_argument("--positive-ratio", type=_probability)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("bench", help="time every method on one query")
    s.add_argument("--data", help="dataset directory (default: full-size synthetic data)")
    s.add_argument("--synth-seed", type=int, default=7)
    s.add_argument("--query", default="mall")
    s.add_argument("--city", default="Bandung")
    s.add_argument("--k", type=_positive_int, default=5)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    s.add_argument("--format", choices=("table", "json"), default="table")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("serve", help="serve GET /recommend and /health over HTTP")
    s.add_argument("--data")
    s.add_argument("--bind", help="HOST:PORT")
    s.add_argument("--method", choices=METHODS)
    s.add_argument("--k", type=_positive_int)
    s.add_argument("--seed-policy", choices=("fixed", "random"))
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LocalExpertError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
