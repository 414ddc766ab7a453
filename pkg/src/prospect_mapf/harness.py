"""Experiment pipeline: problem generation, metrics, diversity, aggregation.

The benchmark sweeps a problem set over heuristics and communication ranges
and emits one CSV row per run plus a JSON summary per (heuristic, range)
group.  Percent increases compare against an ideal run in a collision-free
world where every robot follows its unconstrained shortest path.
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, fields

from .coordination import RobotSpec, RunRecord, Scenario, World, validate_scenario
from .errors import InfeasibleError
from .grid import GridMap
from .priority import HeuristicKind
from .prospects import forwards_vertices, path_prospects
from .spacetime import footprints_overlap


@dataclass(frozen=True)
class Roster:
    """Robot sizes to place, e.g. sizes=(1, 1, 2, 2, 3, 3)."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        if not self.sizes or any(s < 1 for s in self.sizes):
            raise ValueError("roster sizes must be positive")

    @classmethod
    def parse(cls, text: str) -> "Roster":
        """Parse 'RHOxCOUNT,...', e.g. '1x2,2x2,3x2'."""
        sizes = []
        for part in text.split(","):
            rho, _, count = part.strip().partition("x")
            sizes.extend([int(rho)] * (int(count) if count else 1))
        return cls(tuple(sizes))


DESK_ROSTER = Roster((1, 1, 2, 2, 3, 3))
DESK_COMM_RANGES = (12.0, 20.0)
DESK_PROBLEM_COUNT = 100
DESK_MAP_SIZE = 30


def generate_problem(
    grid: GridMap,
    roster: Roster,
    seed: int,
    comm_range: float = DESK_COMM_RANGES[0],
    heuristic: HeuristicKind = HeuristicKind("PP-LF"),
    t_max: int | None = None,
    world: World | None = None,
    max_passes: int = 500,
) -> Scenario:
    """Rejection-sample disjoint starts and goals until the scenario validates."""
    if world is None:
        world = World(grid)
    rng = random.Random(seed)
    anchors_by_rho = {}
    for rho in sorted(set(roster.sizes)):
        cs = world.config_space(rho)
        anchors = sorted(cs.iter_valid())
        if not anchors:
            raise InfeasibleError(f"no valid anchor for footprint {rho}")
        anchors_by_rho[rho] = anchors

    def sample_disjoint(taken, rho, forbidden=None):
        pool = anchors_by_rho[rho]
        for _ in range(200):
            a = pool[rng.randrange(len(pool))]
            if forbidden is not None and a == forbidden:
                continue
            if all(not footprints_overlap(a, rho, b, brho) for b, brho in taken):
                return a
        return None

    for _ in range(max_passes):
        starts = []
        ok = True
        for rho in roster.sizes:
            a = sample_disjoint(starts, rho)
            if a is None:
                ok = False
                break
            starts.append((a, rho))
        if not ok:
            continue
        goals = []
        for i, rho in enumerate(roster.sizes):
            cs = world.config_space(rho)
            start = starts[i][0]
            from_start = cs.distance_field(start)  # grid distances are symmetric
            g = None
            for _ in range(200):
                cand = sample_disjoint(goals, rho, forbidden=start)
                if cand is None:
                    break
                if from_start[cand] is not None:
                    g = cand
                    break
            if g is None:
                ok = False
                break
            goals.append((g, rho))
        if not ok:
            continue
        robots = [
            RobotSpec(rho, starts[i][0], goals[i][0]) for i, rho in enumerate(roster.sizes)
        ]
        sc = Scenario(
            grid=grid,
            robots=robots,
            comm_range=comm_range,
            heuristic=heuristic,
            seed=seed,
            t_max=t_max,
        )
        validate_scenario(sc, world)
        return sc
    raise InfeasibleError(
        f"could not place roster {roster.sizes} after {max_passes} sampling passes"
    )


def ideal_metrics(sc: Scenario, world: World | None = None) -> tuple[float, int]:
    """(ideal flowtime, ideal makespan) in a collision-free world."""
    if world is None:
        world = World(sc.grid)
    dists = []
    for spec in sc.robots:
        cs = world.config_space(spec.rho)
        d = cs.distance_field(spec.goal)[spec.start]
        if d is None:
            raise InfeasibleError("scenario robot cannot reach its goal")
        dists.append(d)
    return sum(dists) / len(dists), max(dists)


def problem_prospects(sc: Scenario, world: World | None = None) -> list[int]:
    """Per-robot prospects at tick 0 under the team-wide longest true distance."""
    if world is None:
        world = World(sc.grid)
    announced = []
    for spec in sc.robots:
        cs = world.config_space(spec.rho)
        announced.append(cs.distance_field(spec.goal)[spec.start])
    bound = max(announced)
    values = []
    for spec in sc.robots:
        cs = world.config_space(spec.rho)
        dist = cs.distance_field(spec.goal)
        fs = forwards_vertices(cs, spec.start, 0, spec.goal, dist, bound)
        values.append(path_prospects(cs, fs).prospects)
    return values


# ---- diversity measures ----

def shannon_diversity(prospects) -> float:
    """Entropy in bits of the class proportions, classes = equal prospect values."""
    if not prospects:
        raise ValueError("prospect vector must be nonempty")
    counts = {}
    for p in prospects:
        counts[p] = counts.get(p, 0) + 1
    n = len(prospects)
    h = 0.0
    for c in counts.values():
        pk = c / n
        h -= pk * math.log2(pk)
    return h


def hierarchic_diversity(prospects) -> float:
    """Integral of clustering entropy over taxonomic level h.

    Single-linkage agglomeration over |kappa_i - kappa_j| with kappa the
    prospect exponent; entropy is piecewise constant between merge heights,
    so the integral is a finite sum ending at the final merge.
    """
    if not prospects:
        raise ValueError("prospect vector must be nonempty")
    kappas = [math.log2(p) for p in prospects]
    n = len(kappas)
    if n == 1:
        return 0.0

    def entropy_at(h: float) -> float:
        # clusters: components of the graph {dist <= h} (single linkage)
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i in range(n):
            for j in range(i + 1, n):
                if abs(kappas[i] - kappas[j]) <= h:
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[ri] = rj
        sizes = {}
        for i in range(n):
            r = find(i)
            sizes[r] = sizes.get(r, 0) + 1
        total = 0.0
        for c in sizes.values():
            pk = c / n
            total -= pk * math.log2(pk)
        return total

    heights = sorted({abs(a - b) for a in kappas for b in kappas if a != b})
    if not heights:
        return 0.0
    s = 0.0
    prev = 0.0
    for h in heights:
        s += (h - prev) * entropy_at(prev)
        prev = h
    return s


# ---- rows, CSV, aggregation ----

@dataclass(frozen=True)
class MetricsRow:
    problem_id: str
    heuristic: str
    comm_range: float
    success: bool
    flowtime: float | None
    makespan: int | None
    pct_flowtime_increase: float | None
    pct_makespan_increase: float | None
    diversity_H: float
    diversity_S: float


CSV_COLUMNS = [f.name for f in fields(MetricsRow)]


def finalize_row(
    problem_id: str,
    heuristic: str,
    comm_range: float,
    record: RunRecord,
    ideals: tuple[float, int],
    diversity: tuple[float, float],
) -> MetricsRow:
    ideal_flow, ideal_make = ideals
    if record.success:
        pct_flow = 100.0 * (record.flowtime - ideal_flow) / ideal_flow if ideal_flow else 0.0
        pct_make = 100.0 * (record.makespan - ideal_make) / ideal_make if ideal_make else 0.0
        return MetricsRow(
            problem_id, heuristic, comm_range, True,
            record.flowtime, record.makespan, pct_flow, pct_make,
            diversity[0], diversity[1],
        )
    return MetricsRow(
        problem_id, heuristic, comm_range, False,
        None, None, None, None, diversity[0], diversity[1],
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    return repr(value) if isinstance(value, float) else str(value)


def write_rows(rows, out) -> None:
    """Emit CSV with the MetricsRow columns in declared order."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    write_rows(rows, buf)
    return buf.getvalue()


def read_rows(source) -> list[MetricsRow]:
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader)
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV columns {header}")
    out = []
    for rec in reader:
        vals = dict(zip(CSV_COLUMNS, rec))
        out.append(
            MetricsRow(
                problem_id=vals["problem_id"],
                heuristic=vals["heuristic"],
                comm_range=float(vals["comm_range"]),
                success=vals["success"] == "1",
                flowtime=float(vals["flowtime"]) if vals["flowtime"] else None,
                makespan=int(vals["makespan"]) if vals["makespan"] else None,
                pct_flowtime_increase=(
                    float(vals["pct_flowtime_increase"]) if vals["pct_flowtime_increase"] else None
                ),
                pct_makespan_increase=(
                    float(vals["pct_makespan_increase"]) if vals["pct_makespan_increase"] else None
                ),
                diversity_H=float(vals["diversity_H"]),
                diversity_S=float(vals["diversity_S"]),
            )
        )
    return out


@dataclass(frozen=True)
class GroupSummary:
    heuristic: str
    comm_range: float
    runs: int
    success_rate: float
    success_ci: float
    mean_pct_flowtime: float | None
    pct_flowtime_ci: float | None
    mean_pct_makespan: float | None
    pct_makespan_ci: float | None


def _mean_ci(values):
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, 1.96 * math.sqrt(var / n)


def aggregate(rows) -> list[GroupSummary]:
    """Per (heuristic, comm_range): success rate and mean pct increases with 95% CIs."""
    groups: dict[tuple[str, float], list[MetricsRow]] = {}
    for row in rows:
        groups.setdefault((row.heuristic, row.comm_range), []).append(row)
    out = []
    for (heuristic, rng), members in sorted(groups.items()):
        if not members:
            raise ValueError("empty aggregation group")
        n = len(members)
        successes = [m for m in members if m.success]
        rate = len(successes) / n
        rate_ci = 1.96 * math.sqrt(rate * (1.0 - rate) / n)
        if successes:
            ft, ft_ci = _mean_ci([m.pct_flowtime_increase for m in successes])
            ms, ms_ci = _mean_ci([m.pct_makespan_increase for m in successes])
        else:
            ft = ft_ci = ms = ms_ci = None
        out.append(
            GroupSummary(heuristic, rng, n, rate, rate_ci, ft, ft_ci, ms, ms_ci)
        )
    return out
