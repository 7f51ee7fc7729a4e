"""Command-line interface: ``avgk <subcommand>``.

Class indices are 0-based in every file format.  Data goes to ``--out`` (or
stdout), diagnostics to stderr.  Exit codes: 0 success, 1 failed
verification, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import calibration, metrics, oracle, predictors
from .core import (
    AvgKError,
    DomainError,
    load_distribution,
    load_labels,
    load_scores,
    save_labels,
)
from .verify import run_checks, verdict_json

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


def _threads() -> int | None:
    raw = os.environ.get("AVGK_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"AVGK_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise DomainError("AVGK_THREADS must be >= 0")
    return None if n == 0 else n


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(data, out: str | None) -> None:
    _emit(json.dumps(data, indent=2, sort_keys=True) + "\n", out)


def format_sets(mask, as_mask: bool = False) -> str:
    if as_mask:
        return "".join(",".join("1" if v else "0" for v in row) + "\n" for row in mask)
    return "".join(";".join(str(int(j)) for j in row.nonzero()[0]) + "\n" for row in mask)


def _load_dist(args):
    if args.example is not None:
        return oracle.builtin_example(args.example)
    return load_distribution(args.spec)


def cmd_predict(args) -> int:
    scores = load_scores(args.scores)
    if args.mode == "topk":
        if not float(args.k).is_integer():
            raise DomainError(f"top-K needs an integer k, got {args.k}")
        sets = predictors.top_k_sets(scores, int(args.k)).mask
    else:
        sets = predictors.average_k_sets(scores, args.k).sets.mask
    _emit(format_sets(sets, args.mask), args.out)
    print(f"mean set size: {sets.sum() / sets.shape[0]:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    scores = load_scores(args.scores)
    labels = load_labels(args.labels, scores.n_classes)
    k_max = args.kmax if args.kmax is not None else min(scores.n_classes, 20)
    report = metrics.evaluate_curves(scores, labels, k_max, workers=_threads())
    _emit_json(report.to_dict(), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.table1:
        _emit_json({"k": 2, "rows": oracle.table1(2)}, args.out)
        return EXIT_OK
    if args.example is None and args.spec is None:
        raise DomainError("oracle needs --example, --spec or --table1")
    dist = _load_dist(args)
    _emit_json(oracle.analyze(dist, args.k).to_dict(), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.samples < 1:
        raise DomainError("--samples must be positive")
    if args.corrupt is not None and not 0 <= args.corrupt <= 1:
        raise DomainError("--corrupt must lie in [0, 1]")
    dist = _load_dist(args)
    verdict = run_checks(dist, args.samples, args.seed, args.corrupt)
    _emit_json(verdict_json(verdict), args.out)
    return EXIT_OK if verdict["passed"] else EXIT_CHECK_FAILED


def cmd_calibrate(args) -> int:
    logits = load_scores(args.logits)
    labels = load_labels(args.labels, logits.n_classes)
    if len(labels) != logits.n_samples:
        raise DomainError(f"{logits.n_samples} logit rows but {len(labels)} labels")
    fit = calibration.fit_temperature(logits, labels)
    if fit.warning:
        print(f"warning: {fit.warning}", file=sys.stderr)
    _emit_json(fit.to_dict(), args.out)
    return EXIT_OK


def cmd_noise_inject(args) -> int:
    try:
        groups = oracle.NoiseGroups.from_dict(json.loads(Path(args.groups).read_text()))
    except json.JSONDecodeError as exc:
        raise DomainError(f"invalid groups JSON: {exc}") from None
    n_classes = sum(len(g) for g in groups.groups)
    labels = load_labels(args.labels, n_classes)
    noisy = oracle.inject_label_noise(labels, groups, args.seed)
    if args.out:
        save_labels(args.out, noisy)
    else:
        sys.stdout.write("".join(f"{v}\n" for v in noisy.labels.tolist()))
    return EXIT_OK


def _add_dist_source(p: argparse.ArgumentParser, required: bool) -> None:
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--example", type=int, choices=oracle.EXAMPLE_IDS, help="built-in toy distribution")
    src.add_argument("--spec", help="distribution JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avgk",
        description="Top-K and average-K set-valued classification. Class indices are 0-based.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="build top-K or average-K sets from a score CSV")
    p.add_argument("--scores", required=True)
    p.add_argument("--k", type=float, required=True, help="set size (topk) or average set size (avgk)")
    p.add_argument("--mode", choices=("topk", "avgk"), default="avgk")
    p.add_argument("--out")
    p.add_argument("--mask", action="store_true", help="write an N x C 0/1 matrix instead of index lists")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="error-vs-K curves as JSON")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--kmax", type=int, help="largest K (default min(C, 20))")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle", help="closed-form analysis of a finite-zone distribution")
    _add_dist_source(p, required=False)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--table1", action="store_true", help="heterogeneity decomposition for examples 2-4")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="Monte-Carlo agreement and bound checks")
    _add_dist_source(p, required=True)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt", type=float, help="also check plug-in bounds at this corruption level")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("calibrate", help="fit a softmax temperature to logits")
    p.add_argument("--logits", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("noise-inject", help="resample labels uniformly within class groups")
    p.add_argument("--labels", required=True)
    p.add_argument("--groups", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_noise_inject)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AvgKError, OSError) as exc:
        print(f"avgk {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
