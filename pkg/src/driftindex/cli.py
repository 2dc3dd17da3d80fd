"""Command-line entry point: ``driftindex gen|ingest|query|bench``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .detector import ThetaEstimator
from .exceptions import ConfigError, DataError, QueryError
from .index import DriftIndex, MaterializationPolicy
from .query import rq, sq, uq_result
from .stream import GranularityChain
from .summary import DecayConfig, EpsilonConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="driftindex", description="Multi-granularity drift index over numeric streams.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a synthetic stream with sudden drifts")
    gen.add_argument("--dim", type=int, required=True)
    gen.add_argument("--points", type=int, required=True)
    when = gen.add_mutually_exclusive_group(required=True)
    when.add_argument("--period", type=int)
    when.add_argument("--drift-at", type=_int_list)
    gen.add_argument("--magnitude", type=float, required=True)
    gen.add_argument("--components", type=int, default=3)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--truth-out")
    gen.add_argument("--no-header", action="store_true")

    ing = sub.add_parser("ingest", help="build a drift index from a CSV stream")
    ing.add_argument("--input", required=True)
    ing.add_argument("--columns", help="1-based columns, e.g. 1,5-9 (default: all)")
    ing.add_argument("--skip-header", action="store_true")
    ing.add_argument("--drop-non-numeric", action="store_true",
                     help="ignore non-numeric columns instead of failing")
    ing.add_argument("--granularities", default="100,500,1000")
    ing.add_argument("--mode", choices=["independent", "cumulative"], default="independent")
    ing.add_argument("--policy", default="full", help="full | bottom | partial:LEVELS")
    ing.add_argument("--cache-derived", action="store_true")
    ing.add_argument("--theta", default="mean_k_sigma:2", help="mean_k_sigma:K | quantile:Q")
    ing.add_argument("--theta-window", type=int, default=20)
    ing.add_argument("--theta-fixed", action="store_true",
                     help="freeze each level's threshold once its window is full")
    ing.add_argument("--alpha", type=float, default=0.5)
    ing.add_argument("--sample-size", type=int, default=200)
    ing.add_argument("--epsilon", type=float)
    ing.add_argument("--decay", type=float, default=1.0)
    ing.add_argument("--index-out", required=True)

    qry = sub.add_parser("query", help="query a saved index (JSON on stdout)")
    qsub = qry.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    q_uq = qsub.add_parser("uq", help="all drifts at one granularity")
    q_uq.add_argument("--index", required=True)
    q_uq.add_argument("--g", type=int, required=True)
    q_uq.add_argument("--jsonl", action="store_true", help="one drift record per line")
    for name, text in (("rq", "refine coarse drifts"), ("sq", "synthesize fine drifts")):
        q = qsub.add_parser(name, help=text)
        q.add_argument("--index", required=True)
        q.add_argument("--gs", type=int, required=True)
        q.add_argument("--gt", type=int, required=True)
        q.add_argument("--strict", action="store_true",
                       help="compare two-interval windows on both sides")

    bn = sub.add_parser("bench", help="run a benchmark grid described by a TOML file")
    bn.add_argument("--spec", required=True)
    bn.add_argument("--report", required=True)
    return p


def _cmd_gen(args) -> int:
    from .harness.synthetic import SyntheticConfig, generate, write_stream_csv

    cfg = SyntheticConfig(dim=args.dim, n_points=args.points, drift_at=tuple(args.drift_at or ()),
                          period=args.period, magnitude=args.magnitude,
                          n_components=args.components, seed=args.seed)
    X, truth = generate(cfg)
    write_stream_csv(args.out, X, header=not args.no_header)
    if args.truth_out:
        with open(args.truth_out, "w", encoding="utf-8") as fh:
            json.dump({**truth.to_dict(), "config": cfg.to_dict()}, fh, indent=2)
    return EXIT_OK


def _cmd_ingest(args) -> int:
    from .harness.csvio import load_csv, parse_columns

    index = DriftIndex(
        GranularityChain.parse(args.granularities),
        MaterializationPolicy.parse(args.policy, cache_derived=args.cache_derived),
        args.mode,
        ThetaEstimator.parse(args.theta, window=args.theta_window, adaptive=not args.theta_fixed),
        args.epsilon,
        EpsilonConfig(args.alpha, args.sample_size),
        DecayConfig(args.decay),
    )
    X = load_csv(args.input, parse_columns(args.columns), args.skip_header, args.drop_non_numeric)
    if X.shape[0]:
        index.ingest_many(X)
    index.finalize()
    index.save(args.index_out)
    json.dump({"metadata": index.metadata(), "storage": index.storage_report()},
              sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _cmd_query(args) -> int:
    index = DriftIndex.load(args.index)
    if args.kind == "uq":
        res = uq_result(index, args.g)
        if args.jsonl:
            sys.stdout.write(res.drifts.to_jsonl())
            return EXIT_OK
    elif args.kind == "rq":
        res = rq(index, args.gs, args.gt, args.strict)
    else:
        res = sq(index, args.gs, args.gt, args.strict)
    sys.stdout.write(res.to_json(indent=2) + "\n")
    return EXIT_OK


def _cmd_bench(args) -> int:
    import tomli

    from .harness.evaluation import bench

    try:
        with open(args.spec, "rb") as fh:
            spec = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read bench spec {args.spec}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"bad bench spec {args.spec}: {exc}") from exc
    report = bench(spec)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    return EXIT_OK


COMMANDS = {"gen": _cmd_gen, "ingest": _cmd_ingest, "query": _cmd_query, "bench": _cmd_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, QueryError) as exc:
        print(f"driftindex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"driftindex: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
