"""Command-line front end: cluster, generate, evaluate, sweep, bench, plot."""

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from .datagen import (
    CsvFormatError,
    GenSpec,
    atomic_write_text,
    generate,
    load_csv,
    load_labels,
    save_csv,
    save_labels,
)
from .density import FcParams, fc_knn
from .evaluation import evaluate
from .fission import fission_cluster
from .metricspace import Dataset, Metric, distance_matrix
from .plotting import render_svg

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_ALGORITHM = 4

_EPILOG = """\
exit codes:
  0  success
  2  validation error (bad flags, malformed input data or spec)
  3  I/O error (missing or unwritable files)
  4  algorithmic error (over-denoised subset, non-termination guard)

environment:
  FC_THREADS  caps internal parallelism; 0 or unset means auto
"""


def _parse_n0(text: str):
    """'12' -> 12 neighbors, '2%' -> fraction 0.02 of n."""
    text = text.strip()
    if text.endswith("%"):
        return float(text[:-1]) / 100.0
    return int(text)


def _apply_thread_cap():
    raw = os.environ.get("FC_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"FC_THREADS must be an integer, got {raw!r}") from None
    if cap > 0:
        import numba

        numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))


def _load_input(args) -> Dataset:
    if getattr(args, "input", None):
        return load_csv(args.input)
    with open(args.generate) as fh:
        spec = GenSpec.from_json(fh.read())
    if getattr(args, "seed", None) is not None:
        spec.seed = args.seed
    return generate(spec)


def _fc_params(args) -> FcParams:
    return FcParams(
        t=args.t,
        n0=args.n0,
        r_start=args.r_start,
        r_step=args.r_step,
        r_max=args.r_max,
        metric=Metric.parse(args.metric),
    )


def _json_report(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _denoise_doc(res) -> dict:
    return {
        "r_final": res.r_final,
        "mc_final": res.mc_final,
        "d0_final": res.d0_final,
        "separated": res.separated,
        "dense_size": int(res.dense_subset.size),
        "removed_size": int(res.removed.size),
    }


def _trace_doc(trace) -> list:
    return [{"size": t.size, "crack": t.crack, "threshold": t.threshold} for t in trace]


def cmd_cluster(args) -> int:
    ds = _load_input(args)
    warnings = []
    metric = Metric.parse(args.metric)
    dm = distance_matrix(ds, metric, max_entries=args.max_matrix_entries)
    timings = {}
    t0 = time.perf_counter()
    if args.algorithm == "fc":
        if args.t != 4.0 or args.n0 is not None:
            warnings.append("plain fc ignores --t and --n0")
        part = fission_cluster(dm, threshold_mode=args.threshold_mode)
    else:
        if args.threshold_mode != "global":
            warnings.append("fc-knn always stops at the dense subset's own threshold")
        part = fc_knn(dm, _fc_params(args))
        warnings.extend(part.warnings)
    timings["cluster_seconds"] = time.perf_counter() - t0

    report = {
        "command": "cluster",
        "algorithm": args.algorithm,
        "input": ds.name,
        "n": ds.n,
        "d": ds.d,
        "metric": metric.tag,
        "threshold_mode": args.threshold_mode,
        "k": part.k,
        "split_trace": _trace_doc(part.split_trace),
        "denoise": _denoise_doc(part.denoise) if part.denoise is not None else None,
        "evaluation": evaluate(part.labels, ds.labels).to_dict() if ds.labels is not None else None,
        "warnings": warnings,
    }
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    # Timings go to stderr only: reports must be byte-identical across runs.
    print(f"clustered {ds.n} points into k={part.k} in {timings['cluster_seconds']:.3f}s",
          file=sys.stderr)
    if args.labels_out:
        save_labels(part, args.labels_out)
    if args.report_out:
        atomic_write_text(args.report_out, _json_report(report))
    if args.plot_out:
        atomic_write_text(args.plot_out, render_svg(ds.points, part.labels))
    if not (args.labels_out or args.report_out or args.plot_out):
        sys.stdout.write(_json_report(report))
    return EXIT_OK


def cmd_generate(args) -> int:
    with open(args.spec) as fh:
        spec = GenSpec.from_json(fh.read())
    if args.seed is not None:
        spec.seed = args.seed
    ds = generate(spec)
    save_csv(ds, args.out)
    print(f"wrote {ds.n} points ({ds.d}-D, {ds.n_classes} classes) to {args.out}", file=sys.stderr)
    if args.plot_out:
        atomic_write_text(args.plot_out, render_svg(ds.points, ds.labels))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pred = load_labels(args.pred)
    if args.truth:
        truth = load_labels(args.truth)
    else:
        ds = load_csv(args.input)
        if ds.labels is None:
            raise ValueError(f"{args.input} has no label column; pass --truth")
        truth = ds.labels
    report = evaluate(pred, truth).to_dict()
    text = _json_report(report)
    if args.report_out:
        atomic_write_text(args.report_out, text)
    sys.stdout.write(text)
    return EXIT_OK


def _float_range(lo: float, hi: float, step: float) -> list:
    if hi < lo:
        raise ValueError(f"empty range: max {hi} < min {lo}")
    if step <= 0:
        raise ValueError("step must be > 0")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(count)]


def _stable_intervals(ts: list, ks: list) -> list:
    intervals = []
    start = 0
    for i in range(1, len(ks) + 1):
        if i == len(ks) or ks[i] != ks[start]:
            intervals.append({"t_min": ts[start], "t_max": ts[i - 1], "k": ks[start]})
            start = i
    return intervals


def cmd_sweep(args) -> int:
    ds = _load_input(args)
    metric = Metric.parse(args.metric)
    dm = distance_matrix(ds, metric, max_entries=args.max_matrix_entries)
    ts = _float_range(args.t_min, args.t_max, args.t_step)
    n0s = args.n0_values or [None]
    rows = []
    for n0 in n0s:
        ks = []
        for t in ts:
            params = FcParams(t=t, n0=n0, r_start=args.r_start, r_step=args.r_step,
                              r_max=args.r_max, metric=metric)
            part = fc_knn(dm, params)
            row = {
                "t": t,
                "n0": params.resolve_n0(ds.n),
                "k": part.k,
                "separated": part.denoise.separated,
                "accuracy": None,
            }
            if ds.labels is not None:
                row["accuracy"] = evaluate(part.labels, ds.labels).accuracy
            rows.append(row)
            ks.append(part.k)
    report = {
        "command": "sweep",
        "input": ds.name,
        "n": ds.n,
        "t_values": ts,
        "results": rows,
        "stable_intervals": {},
    }
    for n0 in sorted({r["n0"] for r in rows}):
        sub = [r for r in rows if r["n0"] == n0]
        report["stable_intervals"][str(n0)] = _stable_intervals(
            [r["t"] for r in sub], [r["k"] for r in sub]
        )
    for r in rows:
        acc = "-" if r["accuracy"] is None else f"{r['accuracy']:.4f}"
        print(f"t={r['t']:<6g} n0={r['n0']:<4d} k={r['k']:<4d} "
              f"separated={str(r['separated']):<5s} accuracy={acc}")
    text = _json_report(report)
    if args.report_out:
        atomic_write_text(args.report_out, text)
    return EXIT_OK


def cmd_bench(args) -> int:
    from .density import knn_density

    if any(s < 10 for s in args.sizes):
        raise ValueError("bench sizes must be >= 10")
    lines = ["n,op,median_seconds"]
    for n in args.sizes:
        k = max(2, min(8, n // 200))
        spec = GenSpec("blobs", args.seed, {"counts": [n // k] * (k - 1) + [n - (n // k) * (k - 1)],
                                            "separation": 50.0, "spread": 1.0})
        ds = generate(spec)
        dm = distance_matrix(ds, max_entries=args.max_matrix_entries)
        n0 = args.n0 if isinstance(args.n0, int) else max(1, math.ceil((args.n0 or 0.02) * n))
        ops = {
            "distance_matrix": lambda: distance_matrix(ds, max_entries=args.max_matrix_entries),
            "knn_density": lambda: knn_density(dm, n0),
            "fc": lambda: fission_cluster(dm),
            "fc_knn": lambda: fc_knn(dm, FcParams(n0=n0)),
        }
        for name, op in ops.items():
            op()  # warm caches and JIT before timing
            samples = []
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                op()
                samples.append(time.perf_counter() - t0)
            med = sorted(samples)[len(samples) // 2]
            lines.append(f"{n},{name},{med:.6f}")
            print(lines[-1], file=sys.stderr)
    table = "\n".join(lines) + "\n"
    if args.out:
        atomic_write_text(args.out, table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


def cmd_plot(args) -> int:
    ds = load_csv(args.input)
    if args.labels:
        labels = load_labels(args.labels)
        if labels.size != ds.n:
            raise ValueError(f"{args.labels} has {labels.size} labels for {ds.n} points")
    elif ds.labels is not None:
        labels = ds.labels
    else:
        labels = np.zeros(ds.n, dtype=np.int64)
    atomic_write_text(args.out, render_svg(ds.points, labels))
    return EXIT_OK


def _add_input_flags(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="dataset CSV (numeric columns, optional label header)")
    src.add_argument("--generate", metavar="SPEC.JSON", help="generate the dataset from a spec")
    p.add_argument("--seed", type=int, default=None, help="override the generator seed")
    p.add_argument("--metric", default="euclidean",
                   help="euclidean | manhattan | minkowski:<p> (default euclidean)")
    p.add_argument("--max-matrix-entries", type=int, default=10**8,
                   help="memory guard on the dense n*n matrix")


def _add_fc_knn_flags(p: argparse.ArgumentParser):
    p.add_argument("--n0", type=_parse_n0, default=None,
                   help="density neighborhood size: int or percentage like 2%% (default 2%%)")
    p.add_argument("--r-start", type=float, default=0.4, help="initial removal ratio")
    p.add_argument("--r-step", type=float, default=0.1, help="removal ratio increment")
    p.add_argument("--r-max", type=float, default=0.9, help="removal ratio ceiling")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fisclust",
        description="Fission clustering: split datasets at the largest crack of their "
                    "distance matrix; optionally denoise sparse borders by KNN density first.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster a CSV or generated dataset",
                       epilog=_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_input_flags(p)
    p.add_argument("--algorithm", choices=["fc", "fc-knn"], default="fc-knn")
    p.add_argument("--t", type=float, default=4.0, help="separation multiplier (fc-knn)")
    _add_fc_knn_flags(p)
    p.add_argument("--threshold-mode", choices=["global", "per-subset"], default="global",
                   help="stop rule reference for plain fc")
    p.add_argument("--labels-out", help="write one cluster id per line")
    p.add_argument("--report-out", help="write a JSON report")
    p.add_argument("--plot-out", help="write an SVG scatter (2-D data only)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("generate", help="write a synthetic dataset CSV from a JSON spec")
    p.add_argument("--spec", required=True, help="generator spec JSON file")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--plot-out", help="also write an SVG of the generated data")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score predicted labels against ground truth")
    p.add_argument("--pred", required=True, help="predicted labels file (one id per line)")
    p.add_argument("--truth", help="true labels file; or use --input")
    p.add_argument("--input", help="dataset CSV whose label column is the truth")
    p.add_argument("--report-out", help="write the JSON report here too")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="map k over a grid of t and n0 values",
                       epilog=_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_input_flags(p)
    p.add_argument("--t-min", type=float, default=2.0)
    p.add_argument("--t-max", type=float, default=13.0)
    p.add_argument("--t-step", type=float, default=1.0)
    p.add_argument("--n0-values", type=lambda s: [_parse_n0(v) for v in s.split(",")],
                   default=None, help="comma-separated n0 values (ints or percentages)")
    _add_fc_knn_flags(p)
    p.add_argument("--report-out", help="write a JSON report")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="time the core operations over dataset sizes")
    p.add_argument("--sizes", type=lambda s: [int(v) for v in s.split(",")],
                   default=[1000, 2000, 4000])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--n0", type=_parse_n0, default=20, help="fixed neighborhood size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-matrix-entries", type=int, default=10**8)
    p.add_argument("--out", help="write the CSV timing table here (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="render a dataset and labels as an SVG scatter")
    p.add_argument("--input", required=True, help="dataset CSV (2-D)")
    p.add_argument("--labels", help="labels file; default: CSV label column or single color")
    p.add_argument("--out", required=True, help="output SVG path")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_thread_cap()
        return args.func(args)
    except (CsvFormatError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM


if __name__ == "__main__":
    sys.exit(main())
