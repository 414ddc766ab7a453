"""Command line harness.

Commands:
  gen-map       build a map and write it as ASCII
  gen-problems  sample random start/goal assignments onto a map
  run           run one scenario and print its metrics
  bench         sweep a problem set over heuristics and comm ranges to CSV

Exit codes: 0 success, 1 usage error, 2 infeasible scenario/problem,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

from .coordination import Scenario, load_scenario, run_scenario, save_scenario
from .errors import InfeasibleError, InvariantViolation, MapFormatError
from .grid import load_map_file, save_map_file
from .harness import (
    DESK_COMM_RANGES,
    DESK_PROBLEM_COUNT,
    DESK_ROSTER,
    Roster,
    World,
    aggregate,
    finalize_row,
    generate_problem,
    hierarchic_diversity,
    ideal_metrics,
    problem_prospects,
    shannon_diversity,
    write_rows,
)
from .mapgen import KINDS, generate_map
from .priority import KIND_NAMES, parse_heuristic
from .spacetime import Plan, format_plan

log = logging.getLogger(__name__)

DESK_MAX_DIM = 40
DESK_MAX_ROBOTS = 8
DESK_MAX_PROBLEMS = 150


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _parse_size(text: str) -> tuple[int, int]:
    w, _, h = text.lower().partition("x")
    return int(w), int(h)


def _parse_params(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        key, _, value = pair.partition("=")
        if not _:
            raise ValueError(f"--param expects key=value, got {pair!r}")
        try:
            out[key] = int(value)
        except ValueError:
            out[key] = float(value)
    return out


def build_parser() -> _Parser:
    parser = _Parser(prog="prospect-mapf")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-map", parents=[], help="generate a map")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--size", required=True, type=_parse_size, metavar="WxH")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("gen-problems", help="sample random problems onto a map")
    p.add_argument("--map", required=True)
    p.add_argument("--roster", default=None, help="sizes spec, e.g. 1x2,2x2,3x2")
    p.add_argument("--count", type=int, default=DESK_PROBLEM_COUNT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--comm-range", type=float, default=DESK_COMM_RANGES[0])
    p.add_argument("--heuristic", default="PP-LF", choices=KIND_NAMES)
    p.add_argument("--t-max", type=int, default=None)
    p.add_argument("-o", "--output", required=True, help="output directory")

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--heuristic", choices=KIND_NAMES)
    p.add_argument("--comm-range", type=float)
    p.add_argument("--z", type=int, default=30)
    p.add_argument("--dump-trajectories", metavar="FILE")

    p = sub.add_parser("bench", help="sweep problems x heuristics x ranges")
    p.add_argument("--problems", required=True, help="directory of scenario JSON files")
    p.add_argument("--heuristics", default=",".join(KIND_NAMES))
    p.add_argument("--ranges", default=",".join(str(r) for r in DESK_COMM_RANGES))
    p.add_argument("--z", type=int, default=30)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--full", action="store_true",
                   help="allow sweeps beyond desk scale (long runtimes)")
    p.add_argument("-o", "--output", required=True, help="CSV output path")
    return parser


def _cmd_gen_map(args) -> int:
    params = _parse_params(args.param)
    if args.density is not None:
        params["density"] = args.density
    width, height = args.size
    grid = generate_map(args.kind, width, height, args.seed, **params)
    save_map_file(grid, args.output)
    print(f"wrote {args.kind} map {width}x{height} to {args.output}")
    return 0


def _cmd_gen_problems(args) -> int:
    grid = load_map_file(args.map)
    roster = Roster.parse(args.roster) if args.roster else DESK_ROSTER
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    world = World(grid)
    heuristic = parse_heuristic(args.heuristic)
    rel_map = Path(os.path.relpath(Path(args.map).resolve(), outdir.resolve()))
    for i in range(args.count):
        sc = generate_problem(
            grid, roster, seed=args.seed + i, comm_range=args.comm_range,
            heuristic=heuristic, t_max=args.t_max, world=world,
        )
        sc.map_source = {"map_path": str(rel_map)}
        save_scenario(sc, outdir / f"problem_{i:04d}.json")
    print(f"wrote {args.count} problems to {outdir}")
    return 0


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    if args.heuristic:
        sc.heuristic = parse_heuristic(args.heuristic, args.z)
    if args.comm_range is not None:
        sc.comm_range = args.comm_range
    world = World(sc.grid)
    record = run_scenario(sc)
    ideals = ideal_metrics(sc, world)
    prospects = problem_prospects(sc, world)
    row = finalize_row(
        Path(args.scenario).stem, sc.heuristic.name, sc.comm_range, record, ideals,
        (shannon_diversity(prospects), hierarchic_diversity(prospects)),
    )
    summary = asdict(row)
    summary["replan_counts"] = record.replan_counts
    summary["negotiation_rounds"] = [r[1] for r in record.rounds]
    summary["finish_ticks"] = record.finish_ticks
    print(json.dumps(summary, indent=1))
    if args.dump_trajectories:
        with open(args.dump_trajectories, "w", encoding="ascii") as fh:
            for rid, traj in enumerate(record.trajectories):
                plan = Plan(0, tuple(traj), sc.robots[rid].rho)
                fh.write(format_plan(rid, plan) + "\n")
    return 0


def _bench_task(task):
    problem_path, heuristic_name, z, comm_range = task
    sc = load_scenario(problem_path)
    sc.heuristic = parse_heuristic(heuristic_name, z)
    sc.comm_range = comm_range
    world = World(sc.grid)
    record = run_scenario(sc)
    ideals = ideal_metrics(sc, world)
    prospects = problem_prospects(sc, world)
    return finalize_row(
        Path(problem_path).stem, heuristic_name, comm_range, record, ideals,
        (shannon_diversity(prospects), hierarchic_diversity(prospects)),
    )


def _cmd_bench(args) -> int:
    problem_files = sorted(Path(args.problems).glob("*.json"))
    if not problem_files:
        raise InfeasibleError(f"no scenario files in {args.problems}")
    heuristics = [h.strip() for h in args.heuristics.split(",") if h.strip()]
    ranges = [float(r) for r in args.ranges.split(",") if r.strip()]
    if not args.full:
        probe = load_scenario(problem_files[0])
        too_big = (
            len(problem_files) > DESK_MAX_PROBLEMS
            or len(probe.robots) > DESK_MAX_ROBOTS
            or max(probe.grid.width, probe.grid.height) > DESK_MAX_DIM
        )
        if too_big:
            sys.stderr.write(
                "bench: problem set exceeds desk scale; pass --full to run it "
                "(expect a long runtime)\n"
            )
            return 1

    tasks = [
        (str(path), h, args.z, rng)
        for path in problem_files
        for h in heuristics
        for rng in ranges
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_task, tasks, chunksize=4))
    else:
        rows = []
        worlds: dict[str, World] = {}
        for path, h, z, rng in tasks:
            sc = load_scenario(path)
            sc.heuristic = parse_heuristic(h, z)
            sc.comm_range = rng
            key = json.dumps(sc.map_source, sort_keys=True) if sc.map_source else path
            world = worlds.setdefault(key, World(sc.grid))
            sc.grid = world.grid  # share one grid per map so caches apply
            record = run_scenario(sc)
            ideals = ideal_metrics(sc, world)
            prospects = problem_prospects(sc, world)
            rows.append(
                finalize_row(
                    Path(path).stem, h, rng, record, ideals,
                    (shannon_diversity(prospects), hierarchic_diversity(prospects)),
                )
            )
    out_path = Path(args.output)
    with open(out_path, "w", encoding="ascii", newline="") as fh:
        write_rows(rows, fh)
    summary = [asdict(g) for g in aggregate(rows)]
    summary_path = out_path.with_suffix(".summary.json")
    with open(summary_path, "w", encoding="ascii") as fh:
        json.dump(summary, fh, indent=1)
        fh.write("\n")
    print(f"wrote {len(rows)} rows to {out_path} and summary to {summary_path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose >= 2:
        logging.basicConfig(level=logging.DEBUG)
    elif args.verbose == 1:
        logging.basicConfig(level=logging.INFO)
    try:
        if args.command == "gen-map":
            return _cmd_gen_map(args)
        if args.command == "gen-problems":
            return _cmd_gen_problems(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "bench":
            return _cmd_bench(args)
        parser.error(f"unknown command {args.command}")
    except (MapFormatError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except InfeasibleError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return 2
    except InvariantViolation as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
