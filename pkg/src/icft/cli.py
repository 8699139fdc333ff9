"""Command line entry point: ``icft prep|discretize|run|gen``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .classifier import DriftPolicy
from .dataprep import (ImputationPolicy, impute_missing, load_schema, normalize_dataset,
                       read_csv, write_csv)
from .discretize import fit_scheme
from .stream import (RunConfig, StreamSpec, emit_metrics, generate_stream, prequential_run)

log = logging.getLogger("icft")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def cmd_prep(args) -> int:
    schema = load_schema(args.schema)
    data = read_csv(args.input, schema)
    data.instances = impute_missing(data.instances, schema,
                                    ImputationPolicy(args.skew_threshold))
    if args.normalize:
        data = normalize_dataset(data, args.normalize)
    write_csv(args.out, data)
    log.info("wrote %d instances to %s", len(data.instances), args.out)
    return 0


def cmd_discretize(args) -> int:
    schema = load_schema(args.schema)
    data = read_csv(args.input, schema)
    scheme = fit_scheme(data, method=args.method, epsilon=args.epsilon)
    Path(args.out).write_text(scheme.to_json() + "\n", encoding="utf-8")
    for name, flag in scheme.flags.items():
        log.warning("%s: %s", name, flag)
    return 0


def cmd_run(args) -> int:
    schema = load_schema(args.schema)
    data = read_csv(args.input, schema)
    config = RunConfig(
        minsup=args.minsup, top_k=args.topk, floor=args.floor,
        policy=DriftPolicy(args.window, args.delta, args.min_leaf, args.rebuild_every),
        method=args.method, epsilon=args.epsilon, warmup=args.warmup,
        report_every=args.report_every, rebuilds=not args.no_rebuild,
        background=args.background,
    )
    t0 = time.perf_counter()
    result = prequential_run(data, config)
    elapsed = time.perf_counter() - t0

    if args.metrics:
        emit_metrics(result.rows, args.metrics)
        if not args.no_figure:
            from .report import plot_metrics
            fig = args.figure or str(Path(args.metrics).with_suffix(".png"))
            plot_metrics(result.rows, fig, rebuilds=[i for i, _ in result.rebuild_log],
                         title=Path(args.input).name)
    else:
        emit_metrics(result.rows, sys.stdout)

    names = schema.feature_names
    if args.dump_model:
        Path(args.dump_model).write_text(result.engine.model.dump(names) + "\n", encoding="utf-8")
    if args.features and result.engine.report is not None:
        Path(args.features).write_text(result.engine.report.to_json(names) + "\n",
                                       encoding="utf-8")
    last = result.rows[-1] if result.rows else None
    log.info("processed %d instances in %.2fs; rebuilds=%d; final cumulative accuracy=%s",
             len(data.instances), elapsed, result.engine.rebuilds_total,
             f"{last.cumulative_accuracy:.4f}" if last else "n/a")
    return 0


def cmd_gen(args) -> int:
    spec = StreamSpec(n=args.n, drift_at=_ints(args.drift_at), thresholds=_floats(args.theta),
                      noise=args.noise, seed=args.seed, kind=args.kind)
    data = generate_stream(spec)
    write_csv(args.out, data)
    if args.schema_out:
        Path(args.schema_out).write_text(json.dumps(data.schema.to_dict(), indent=2) + "\n",
                                         encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="icft", description="Incremental classification "
                                "with a trie feature tree.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prep", help="impute missing values, optionally normalize")
    s.add_argument("--input", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--normalize", choices=["minmax", "zscore", "decimal"])
    s.add_argument("--skew-threshold", type=float, default=1.0)
    s.set_defaults(func=cmd_prep)

    s = sub.add_parser("discretize", help="fit a discretization scheme")
    s.add_argument("--input", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--method", choices=["caim", "mcaim"], default="mcaim")
    s.add_argument("--epsilon", type=float, default=0.01)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_discretize)

    s = sub.add_parser("run", help="prequential run over a prepared CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--minsup", type=float, default=0.05)
    s.add_argument("--topk", type=int, default=10)
    s.add_argument("--floor", type=float, default=0.0)
    s.add_argument("--window", type=int, default=200)
    s.add_argument("--delta", type=float, default=0.15)
    s.add_argument("--min-leaf", type=int, default=5)
    s.add_argument("--rebuild-every", type=int, default=500)
    s.add_argument("--warmup", type=int, default=500)
    s.add_argument("--report-every", type=int, default=100)
    s.add_argument("--method", choices=["caim", "mcaim"], default="mcaim")
    s.add_argument("--epsilon", type=float, default=0.01)
    s.add_argument("--metrics", help="metrics CSV path (stdout when omitted)")
    s.add_argument("--figure", help="figure path (default: metrics path with .png)")
    s.add_argument("--no-figure", action="store_true")
    s.add_argument("--dump-model", help="write the final model as JSON")
    s.add_argument("--features", help="write the last feature report as JSON")
    s.add_argument("--no-rebuild", action="store_true", help="disable drift rebuilds")
    s.add_argument("--background", action="store_true",
                   help="run rebuilds on a worker thread")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("gen", help="generate a synthetic drifting stream")
    s.add_argument("--kind", choices=["sea"], default="sea")
    s.add_argument("--n", type=int, default=10_000)
    s.add_argument("--drift-at", default="5000")
    s.add_argument("--theta", default="8,5")
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--out", required=True)
    s.add_argument("--schema-out", help="also write the matching schema JSON")
    s.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
