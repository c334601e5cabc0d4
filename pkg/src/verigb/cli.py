"""``verigb`` command line.

Exit codes for ``verify-local`` and ``oracle``: 0 robust, 1 not robust,
2 timeout, 3 unknown or error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .booster import TrainConfig, load_dataset, save_dataset, synth_dataset, train
from .campaign import CampaignConfig, TrendConfig, run_campaign, run_trend, write_trend_csv
from .images import ImageSpec, render_counterexample
from .model import validate
from .modelio import ModelFormatError, load_model, save_model
from .numbers import as_vector
from .oracle import OracleTooLarge, oracle_check
from .query import RobustnessQuery
from .robustness import check_local
from .solver import SolverConfig, default_command
from .verdict import CounterExample, VerdictKind

EXIT_CODES = {
    VerdictKind.ROBUST: 0,
    VerdictKind.NOT_ROBUST: 1,
    VerdictKind.TIMEOUT: 2,
    VerdictKind.UNKNOWN: 3,
}
EXIT_ERROR = 3

log = logging.getLogger("verigb")


def _parse_input(text: str):
    if text.startswith("@"):
        raw = json.loads(Path(text[1:]).read_text())
        if isinstance(raw, dict):
            raw = raw.get("x", raw.get("x_prime"))
        return as_vector(raw)
    return as_vector(v for v in text.split(",") if v.strip())


def _query_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--input", required=True, help="comma-separated values, or @file.json holding a list")
    p.add_argument("--epsilon", required=True)
    p.add_argument("--delta", default=None, help="output tolerance (regressors only)")
    p.add_argument("--norm", default="inf", choices=["inf", "1"])
    p.add_argument("--clamp", action="store_true", help="keep perturbations inside feature domain bounds")
    p.add_argument("--ce-out", default=None, help="write the counter-example JSON here")


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--budget", type=float, default=600.0, help="seconds per query (per class-thread)")
    p.add_argument("--kill-grace", type=float, default=2.0)
    p.add_argument("--solver", default=None, help=f"solver command line (default: {' '.join(default_command())})")
    p.add_argument("--dump-dir", default=None, help="keep every SMT-LIB script sent to the solver")
    p.add_argument("--width", type=int, default=None, help="concurrent class-threads")
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--monolithic", action="store_true", help="single argmax query instead of per-class split")


def _report_verdict(verdict, model, ce_out) -> int:
    print(f"verdict: {verdict.kind.value}")
    if verdict.reason:
        print(f"reason: {verdict.reason}")
    if verdict.prune_stats is not None:
        print(f"leaves pruned: {verdict.prune_stats.leaves_pruned}/{verdict.prune_stats.leaves_total}")
    print(f"elapsed: {verdict.elapsed:.3f}s")
    if verdict.counterexample is not None:
        payload = verdict.counterexample.to_json(model)
        print("x': " + ", ".join(payload["x_prime"]))
        print(f"output: {payload['original_output']} -> {payload['adversarial_output']}")
        if ce_out:
            Path(ce_out).write_text(json.dumps(payload, indent=1) + "\n")
            print(f"counter-example written to {ce_out}")
    return EXIT_CODES[verdict.kind]


def cmd_verify_local(args) -> int:
    model = load_model(args.model)
    query = RobustnessQuery.make(_parse_input(args.input), args.epsilon, args.delta, args.norm, args.clamp)
    cfg = SolverConfig(args.solver or default_command(), args.budget, args.kill_grace, args.dump_dir)
    verdict = check_local(model, query, cfg, width=args.width, prune=not args.no_prune, per_class=not args.monolithic)
    return _report_verdict(verdict, model, args.ce_out)


def cmd_oracle(args) -> int:
    model = load_model(args.model)
    query = RobustnessQuery.make(_parse_input(args.input), args.epsilon, args.delta, args.norm, args.clamp)
    try:
        verdict = oracle_check(model, query, args.method, args.cap)
    except OracleTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return _report_verdict(verdict, model, args.ce_out)


def cmd_verify_universal(args) -> int:
    cfg = CampaignConfig.load(args.config)
    if args.output:
        cfg.output = args.output
    report = run_campaign(cfg)
    sys.stdout.write(report.table())
    if cfg.output:
        print(f"report written to {cfg.output}")
    return 0


def cmd_render_ce(args) -> int:
    ce = CounterExample.from_json(json.loads(Path(args.ce).read_text()))
    spec = ImageSpec(args.width, args.height, args.channels)
    paths = render_counterexample(ce, spec, args.out_dir, args.prefix)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_trend(args) -> int:
    cfg = TrendConfig.load(args.config)
    rows = run_trend(cfg)
    out = write_trend_csv(rows, args.out)
    print(f"{len(rows)} rows written to {out}")
    return 0


def cmd_validate_model(args) -> int:
    model = load_model(args.model, check=False)
    problems = validate(model)
    for p in problems:
        print(p)
    if not problems:
        kind = "classifier" if model.is_classifier else "regressor"
        trees = sum(len(r.trees) for r in model.regressors)
        print(f"ok: {kind}, {model.n_features} features, {trees} trees")
    return 1 if problems else 0


def cmd_train(args) -> int:
    if args.synth:
        data = synth_dataset(args.synth, args.n, args.seed)
        if args.save_data:
            save_dataset(data, args.save_data)
    elif args.dataset:
        data = load_dataset(args.dataset)
    else:
        print("error: need --dataset or --synth", file=sys.stderr)
        return EXIT_ERROR
    cfg = TrainConfig(args.trees, args.depth, args.learning_rate, data.task, args.seed)
    model = train(data, cfg)
    save_model(model, args.out)
    print(f"model written to {args.out}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="verigb", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"verigb {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-local", help="check one input")
    _query_args(p)
    _solver_args(p)
    p.set_defaults(func=cmd_verify_local)

    p = sub.add_parser("verify-universal", help="run a campaign from a JSON config")
    p.add_argument("config")
    p.add_argument("--output", default=None, help="report directory (overrides the config)")
    p.set_defaults(func=cmd_verify_universal)

    p = sub.add_parser("render-ce", help="draw a counter-example as PGM/PPM images")
    p.add_argument("--ce", required=True, help="counter-example JSON")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--channels", type=int, default=1, choices=[1, 3])
    p.add_argument("--out-dir", default=".")
    p.add_argument("--prefix", default="ce")
    p.set_defaults(func=cmd_render_ce)

    p = sub.add_parser("trend", help="train a depth x trees grid and emit robustness CSV")
    p.add_argument("config")
    p.add_argument("--out", default="trend.csv")
    p.set_defaults(func=cmd_trend)

    p = sub.add_parser("oracle", help="decide a local query by exhaustive enumeration")
    _query_args(p)
    p.add_argument("--method", default="auto", choices=["auto", "grid", "tuple"])
    p.add_argument("--cap", type=int, default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("validate-model", help="report well-formedness violations")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate_model)

    p = sub.add_parser("train", help="train a model with the built-in booster")
    p.add_argument("--dataset", default=None, help="CSV with a .schema.json sidecar")
    p.add_argument("--synth", default=None, choices=["blobs", "rings", "housing-like"])
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--save-data", default=None, help="also write the synthetic dataset here")
    p.add_argument("--trees", type=int, default=20)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--learning-rate", default="1/10")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ModelFormatError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
