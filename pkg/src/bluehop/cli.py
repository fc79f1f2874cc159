"""Command-line entry points: run scenarios, dump tables, dump topology.

Exit codes: 0 success, 1 scenario validation error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .metrics import deliveries_from_trace, summarize
from .scenario import ScenarioError, parse_scenario, sec_to_hus
from .simkernel import Engine

CSV_HEADER = ["msg_id", "src", "dst", "bytes", "outcome", "hops", "latency_us", "retries"]


def _write_outputs(out_dir: Path, engine: Engine) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    report = summarize(engine.metrics)
    (out_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with open(out_dir / "trace.ndjson", "w", encoding="utf-8") as fh:
        for record in engine.trace:
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
    with open(out_dir / "deliveries.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        writer.writeheader()
        for row in deliveries_from_trace(engine.trace):
            writer.writerow(row)


def _parse_seeds(args) -> list[int]:
    if args.seeds:
        lo, _, hi = args.seeds.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [args.seed]


def _cmd_run(args) -> int:
    config = parse_scenario(args.scenario)
    seeds = _parse_seeds(args)
    base = Path(args.out)
    for seed in seeds:
        engine = Engine(config, seed)
        engine.run()
        out_dir = base / f"seed-{seed}" if len(seeds) > 1 else base
        _write_outputs(out_dir, engine)
    return 0


def _cmd_tables(args) -> int:
    config = parse_scenario(args.scenario)
    engine = Engine(config, args.seed)
    engine.run(until=sec_to_hus(args.at))
    print(json.dumps(engine.routing_tables_json(), indent=2))
    return 0


def _cmd_topo(args) -> int:
    config = parse_scenario(args.scenario)
    engine = Engine(config, args.seed)
    engine.run(until=0)
    print(json.dumps(engine.topo_json(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bluehop",
        description="Multi-hop range-extension simulator for short-range radios",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write report, trace, deliveries")
    p_run.add_argument("scenario", help="scenario JSON file")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--seeds", help="inclusive seed range A..B for a sweep")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_tables = sub.add_parser("tables", help="dump every routing table at a simulated time")
    p_tables.add_argument("scenario")
    p_tables.add_argument("--seed", type=int, default=0)
    p_tables.add_argument("--at", type=float, required=True, help="simulated seconds")
    p_tables.set_defaults(func=_cmd_tables)

    p_topo = sub.add_parser("topo", help="dump the adjacency (and scatternet) at t=0")
    p_topo.add_argument("scenario")
    p_topo.add_argument("--seed", type=int, default=0)
    p_topo.set_defaults(func=_cmd_topo)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        for line in exc.errors:
            print(f"error: {line}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - map anything else to exit 2
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
