"""Operator CLI.

Subcommands:
  serve     run the HTTP API
  rank      offline fit + bridging ranking from a vote-events file
  simulate  run robustness scenarios from a scenario file
  report    emit report files for a stored deliberation
  sample    draw a stratified sample from a population frame

All commands accept --seed and are deterministic offline for fixed inputs.
Domain errors exit non-zero and print the error name on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

from .. import sim
from ..consensus import report_to_json, report_to_table
from ..errors import PlazaError
from ..model import matrix_from_vote_events, read_vote_events
from ..panel import load_frame, stratified_sample
from ..ranking import BridgingConfig, bridging_rank, export_model, fit_bridging_model
from .config import load_config
from .store import DeliberationStore


def _rank_command(args: argparse.Namespace) -> int:
    with open(args.votes_file, encoding="utf-8") as fh:
        matrix = matrix_from_vote_events(read_vote_events(fh))
    config = BridgingConfig(seed=args.seed)
    model = fit_bridging_model(matrix, config)
    ranked = bridging_rank(model, matrix.statements)
    print("rank\tstatement\tintercept\tfactor_norm\tstatus")
    for rank, entry in enumerate(ranked, start=1):
        print(
            f"{rank}\t{entry.statement}\t{entry.intercept:.6f}"
            f"\t{entry.factor_norm:.6f}\t{entry.status.value}"
        )
    if args.model_out:
        with open(args.model_out, "w", encoding="utf-8") as fh:
            fh.write(export_model(model))
    return 0


def _simulate_command(args: argparse.Namespace) -> int:
    scenarios, config, k_range = sim.load_scenarios(args.scenario_file)
    if args.seed is not None:
        config = BridgingConfig.from_dict({**config.to_dict(), "seed": args.seed})
    rows = sim.run_scenarios(scenarios, config, k_range)
    sys.stdout.write(sim.results_table(rows))
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            json.dump(sim.results_summary(rows), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _sample_command(args: argparse.Namespace) -> int:
    frame = load_frame(args.frame_file)
    targets = json.loads(args.targets)
    chosen = stratified_sample(frame, args.n, targets, seed=args.seed)
    for candidate in chosen:
        print(candidate)
    return 0


def _report_command(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    storage = args.storage or config.resolved_storage_dir()
    store = DeliberationStore(storage, config)
    _record, report_id = store.get_or_create_report(args.deliberation_id)
    report = store.report_with_endorsements(report_id)
    if args.out:
        json_path = f"{args.out}/{report_id}.json"
        table_path = f"{args.out}/{report_id}.tsv"
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(report_to_json(report) + "\n")
        with open(table_path, "w", encoding="utf-8") as fh:
            fh.write(report_to_table(report))
        print(f"wrote {json_path} and {table_path}")
    else:
        sys.stdout.write(report_to_table(report))
    return 0


def _serve_command(args: argparse.Namespace) -> int:
    from .api import serve

    config = load_config(args.config)
    storage = args.storage or config.resolved_storage_dir()
    store = DeliberationStore(storage, config)
    serve(store, host=args.host, port=args.port or config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plaza", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve_p = sub.add_parser("serve", help="run the HTTP API")
    serve_p.add_argument("--config", default=None, help="service config JSON file")
    serve_p.add_argument("--storage", default=None, help="storage directory override")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=None)
    serve_p.add_argument("--seed", type=int, default=0)
    serve_p.set_defaults(func=_serve_command)

    rank_p = sub.add_parser("rank", help="fit and rank a vote-events file")
    rank_p.add_argument("votes_file")
    rank_p.add_argument("--seed", type=int, default=0)
    rank_p.add_argument("--model-out", default=None, help="write the fitted model JSON here")
    rank_p.set_defaults(func=_rank_command)

    sim_p = sub.add_parser("simulate", help="run robustness scenarios")
    sim_p.add_argument("scenario_file")
    sim_p.add_argument("--seed", type=int, default=None, help="override the fit seed")
    sim_p.add_argument("--summary", default=None, help="write a JSON summary here")
    sim_p.set_defaults(func=_simulate_command)

    report_p = sub.add_parser("report", help="emit report files for a deliberation")
    report_p.add_argument("deliberation_id")
    report_p.add_argument("--config", default=None)
    report_p.add_argument("--storage", default=None)
    report_p.add_argument("--out", default=None, help="directory for report files")
    report_p.add_argument("--seed", type=int, default=0)
    report_p.set_defaults(func=_report_command)

    sample_p = sub.add_parser("sample", help="stratified sample from a frame file")
    sample_p.add_argument("frame_file")
    sample_p.add_argument("--n", type=int, required=True)
    sample_p.add_argument(
        "--targets", required=True, help='JSON, e.g. \'{"gender": {"F": 0.5, "M": 0.5}}\''
    )
    sample_p.add_argument("--seed", type=int, default=0)
    sample_p.set_defaults(func=_sample_command)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PlazaError as exc:
        detail = str(exc)
        extra = (
            f" achieved_deviation={exc.achieved_deviation:.6f}"
            if hasattr(exc, "achieved_deviation")
            else ""
        )
        print(f"{exc.name}: {detail}{extra}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
