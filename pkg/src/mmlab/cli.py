"""Command-line entry point: ``mmlab {train,eval,compare,export-plot,gradcheck,show-config}``.

Exit codes: 0 success, 1 configuration/usage error, 2 numeric divergence.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError, FormatError, NumericError
from .evaluation import compare, histogram, load_policy, write_histogram_csv
from .neural import gradient_check, random_check_pair
from .training import train, write_trace

log = logging.getLogger("mmlab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
GRADCHECK_TOL = 1e-4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="flat key=value run configuration")
    p.add_argument("--seed", type=int, default=0, help="master seed for episode streams")
    p.add_argument("--episodes", type=int, default=None)


def _eval_opts(p):
    p.add_argument("--report", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--workers", type=int, default=1, help="parallel rollout processes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmlab", description="Market-making reinforcement learning laboratory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a tabular or deep Q agent")
    _common(p)
    p.add_argument("--algo", choices=("tabular", "deep"))
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--trace", help="CSV of per-episode cumulative reward")

    p = sub.add_parser("eval", help="evaluate one policy")
    _common(p)
    p.add_argument("--policy", required=True, help="optimal, symmetric or a checkpoint path")
    _eval_opts(p)

    p = sub.add_parser("compare", help="evaluate several policies on common random numbers")
    _common(p)
    p.add_argument("--policies", nargs="+", required=True)
    _eval_opts(p)

    p = sub.add_parser("export-plot", help="histogram of final wealth or cumulative reward as CSV")
    _common(p)
    p.add_argument("--policy", default="optimal")
    p.add_argument("--metric", choices=("wealth", "reward"), required=True)
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("gradcheck", help="verify network gradients against finite differences")
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("show-config", help="print the effective configuration")
    p.add_argument("--config")
    return parser


def _run_config(args) -> RunConfig:
    return load_config(args.config) if args.config else RunConfig()


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_train(args):
    cfg = _run_config(args).with_overrides(algorithm=args.algo, episodes=args.episodes, master_seed=args.seed)
    artifact, report = train(cfg.train, cfg.params, cfg.grid, checkpoint_path=args.out)
    if args.trace:
        write_trace(report, args.trace)
    tail = report.rewards[-100:]
    mean_tail = float(np.mean(tail)) if tail else float("nan")
    print(
        f"trained {cfg.train.algorithm} for {report.episodes_run} episodes in "
        f"{report.wall_seconds:.1f}s; mean reward over last {len(tail)} episodes {mean_tail:.3f}; "
        f"checkpoint {args.out}"
    )


def _evaluate(args, specs):
    cfg = _run_config(args)
    policies = [load_policy(s, cfg.params, cfg.grid) for s in specs]
    n = args.episodes if args.episodes is not None else 1000
    return compare(policies, cfg.params, n, args.seed, workers=args.workers)


def _cmd_eval(args):
    _emit(_evaluate(args, [args.policy]).render(args.format), args.report)


def _cmd_compare(args):
    _emit(_evaluate(args, args.policies).render(args.format), args.report)


def _cmd_export_plot(args):
    result = _evaluate(args, [args.policy]).results[0]
    samples = result.wealth if args.metric == "wealth" else result.rewards
    write_histogram_csv(histogram(samples, args.bins), args.out)
    print(f"wrote {args.bins}-bin {args.metric} histogram to {args.out}")


def _cmd_gradcheck(args):
    rng = np.random.default_rng(args.seed)
    worst = max(gradient_check(*random_check_pair(rng), h=args.h) for _ in range(args.pairs))
    print(f"max relative error over {args.pairs} pairs: {worst:.3e}")
    return EXIT_OK if worst < GRADCHECK_TOL else EXIT_NUMERIC


def _cmd_show_config(args):
    sys.stdout.write(_run_config(args).to_text())


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
    "export-plot": _cmd_export_plot,
    "gradcheck": _cmd_gradcheck,
    "show-config": _cmd_show_config,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return _COMMANDS[args.command](args) or EXIT_OK
    except (ConfigError, FormatError) as exc:
        print(f"mmlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"mmlab: numeric divergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"mmlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
