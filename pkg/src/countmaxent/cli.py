"""Command-line front end: ``countmaxent generate|fit|query|evaluate``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from . import plotting
from .dataset import GENERATOR_KINDS, DataError, Dataset, generate_synthetic, load_fimi, save_fimi, split
from .evaluation import (
    RANK_KEYS,
    ZeroProbabilityTransaction,
    bic,
    mine_closed_frequent,
    rank,
    score_itemsets,
    summarize,
)
from .maxent import FitConfig, InfeasibleBucket, ModelFormatError, fit_dataset, load_model, query_itemset, save_model
from .statistics import STAT_ALIASES, empirical_histogram

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NOT_CONVERGED = 4

log = logging.getLogger("countmaxent")


class UsageError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _read_data(path, args) -> Dataset:
    if not Path(path).is_file():
        raise DataError(f"no such file: {path}")
    data = load_fimi(path)
    if getattr(args, "prune_freq", None):
        data = data.prune(args.prune_freq)
    if getattr(args, "drop_empty", False):
        data = data.drop_empty()
        if len(data) == 0:
            raise DataError("no transactions left after dropping empty ones")
    return data


def _fit_config(args) -> FitConfig:
    return FitConfig(tolerance=args.tol, max_sweeps=args.max_sweeps, exclude_constant_columns=args.exclude_constant)


def cmd_generate(args) -> int:
    data = generate_synthetic(args.kind, args.attributes, args.rows, args.seed)
    save_fimi(data, args.out)
    mean_row = float(data.rows.sum(axis=1).mean())
    print(f"N={data.n_attributes} |D|={len(data)} mean_row_margin={mean_row:.4f} -> {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    data = _read_data(args.data, args)
    start = time.perf_counter()
    model = fit_dataset(data, args.stat, _fit_config(args))
    elapsed = time.perf_counter() - start
    save_model(model, args.out)
    d = model.diagnostics
    print(f"stat={model.stat.name} N={model.n_attributes} |D|={len(data)}")
    print(f"iterations={d.sweeps} time={elapsed:.3f}s residual={d.residual:.3e} converged={d.converged}")
    return EXIT_OK if d.converged else EXIT_NOT_CONVERGED


def cmd_query(args) -> int:
    model = load_model(args.model)
    if model.labels:
        lookup = {lab: i for i, lab in enumerate(model.labels)}
        try:
            items = [lookup[str(x)] for x in args.items]
        except KeyError as exc:
            raise UsageError(f"unknown attribute label {exc.args[0]}") from None
    else:
        items = [int(x) - 1 for x in args.items]
        if any(not 0 <= i < model.n_attributes for i in items):
            raise UsageError("attribute positions must lie in 1..N")
    print(f"{query_itemset(model, items):.10g}")
    return EXIT_OK


def _write_table(path: Path, header, rows, fmt: str):
    if fmt == "json":
        path = path.with_suffix(".json")
        path.write_text(json.dumps([dict(zip(header, r)) for r in rows], indent=1))
    else:
        path = path.with_suffix(".csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, delimiter=";")
            writer.writerow(header)
            writer.writerows(rows)
    return path


def cmd_evaluate(args) -> int:
    if args.test:
        train = _read_data(args.train, args)
        test = _read_data(args.test, args)
        if train.labels != test.labels:
            # align the test columns to the training attribute order
            try:
                cols = test.label_index(train.labels)
            except KeyError as exc:
                raise DataError(f"test data lacks training items: {exc}") from None
            test = Dataset(test.rows[:, cols], train.labels)
    else:
        pair = split(_read_data(args.train, args), args.split, args.seed)
        train, test = pair.train, pair.test
    stats = ["independence"] + [s for s in args.stats if s != "independence"]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _fit_config(args)

    models = {}
    exit_code = EXIT_OK
    for name in stats:
        start = time.perf_counter()
        models[name] = fit_dataset(train, name, config)
        d = models[name].diagnostics
        log.info("%s: %d sweeps, %.3fs, residual %.2e", name, d.sweeps, time.perf_counter() - start, d.residual)
        if not d.converged:
            exit_code = EXIT_NOT_CONVERGED

    bic_rows = []
    for name, model in models.items():
        report = bic(model, train)
        bic_rows.append(
            {
                "model": name,
                "neg_log_likelihood": report.neg_log_likelihood,
                "penalty": report.penalty,
                "free_params": report.free_params,
                "total": report.total,
                "sweeps": model.diagnostics.sweeps,
                "residual": model.diagnostics.residual,
            }
        )
    header = list(bic_rows[0])
    written = [_write_table(out_dir / "bic", header, [list(r.values()) for r in bic_rows], args.format)]

    closed = mine_closed_frequent(test, args.top_k)
    itemsets = [items for items, _ in closed]
    labels = [str(lab) for lab in train.labels]
    scores_by_model = {}
    summary_rows = []
    for name, model in models.items():
        scores = rank(score_itemsets(model, models["independence"], itemsets, test, args.threads), args.rank_by)
        scores_by_model[name] = scores
        rows = [
            [" ".join(labels[i] for i in s.itemset), s.observed_freq, s.expected_freq, s.abs_error, s.rel_error, s.ll_improvement]
            for s in scores
        ]
        header = ["itemset", "observed", "expected", "abs_err", "rel_err", "ll_improvement"]
        written.append(_write_table(out_dir / f"scores_{name}", header, rows, args.format))
        summary_rows.append({"model": name, **summarize(scores)})
    written.append(
        _write_table(out_dir / "summary", list(summary_rows[0]), [list(r.values()) for r in summary_rows], args.format)
    )

    if not args.no_figures:
        written.append(plotting.plot_bic(bic_rows, out_dir / "bic.png"))
        written.append(plotting.plot_estimates(scores_by_model, out_dir / "estimates.png"))
        for name, model in models.items():
            if model.stat.name in ("constant", "bounds_joint"):
                continue
            observed = empirical_histogram(train, model.stat)
            written.append(plotting.plot_buckets(observed, model.bucket_probs(), out_dir / f"buckets_{name}.png", name))

    width = max(len(r["model"]) for r in bic_rows)
    print(f"train |D|={len(train)} test |D|={len(test)} N={train.n_attributes} closed itemsets={len(itemsets)}")
    for r, s in zip(bic_rows, summary_rows):
        print(
            f"{r['model']:<{width}}  bic={r['total']:.1f}  sweeps={r['sweeps']}  "
            f"abs_err={s['mean_abs_error']:.4%}  rel_err={s['mean_rel_error']:.4%}  ll_gain={s['mean_ll_improvement']:.2f}"
        )
    for path in written:
        print(f"wrote {path}")
    return exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="countmaxent", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    stat_choices = sorted(STAT_ALIASES)

    def add_fit_flags(p):
        p.add_argument("--tol", type=float, default=1e-6, help="max constraint residual (default 1e-6)")
        p.add_argument("--max-sweeps", type=_positive_int, default=1000)
        p.add_argument("--prune-freq", type=float, default=None, help="drop items rarer than this frequency")
        p.add_argument("--drop-empty", action="store_true", help="delete empty transactions after pruning")
        p.add_argument(
            "--exclude-constant",
            action="store_true",
            help="pin all-zero/all-one columns exactly instead of clamping their margins",
        )

    p = sub.add_parser("generate", help="write a synthetic FIMI dataset")
    p.add_argument("--kind", choices=GENERATOR_KINDS, required=True)
    p.add_argument("--attributes", "-N", type=_positive_int, default=20)
    p.add_argument("--rows", type=_positive_int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit a maximum-entropy model to a FIMI file")
    p.add_argument("data")
    p.add_argument("--stat", choices=stat_choices, default="margins")
    p.add_argument("--out", "-o", required=True, help="model file to write")
    add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("query", help="expected frequency of an itemset under a model")
    p.add_argument("model")
    p.add_argument("items", nargs="*", help="item labels (or 1-based positions if the model has none)")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="fit models on train data and score closed itemsets of test data")
    p.add_argument("train", help="FIMI file; split with --split unless --test is given")
    p.add_argument("--test", default=None)
    p.add_argument("--stats", type=lambda s: s.split(","), default=["margins", "lazarus", "bounds"])
    p.add_argument("--split", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top-k", type=_positive_int, default=10000)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--rank-by", choices=RANK_KEYS, default="abs_error")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out-dir", "-o", default="report")
    p.add_argument("--no-figures", action="store_true")
    add_fit_flags(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "stats", None):
        unknown = [s for s in args.stats if s not in STAT_ALIASES]
        if unknown:
            parser.error(f"unknown statistics {unknown}; choose from {sorted(STAT_ALIASES)}")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ModelFormatError, ZeroProbabilityTransaction, InfeasibleBucket, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
