"""Decentralized coordination engine: negotiation, replanning, lockstep execution.

One scenario is a deterministic single-threaded state machine.  Robots are
simulated actors that exchange messages; clocks are synchronized and
messaging delay is negligible, so each tick runs negotiation waves to a
fixed point before anyone moves.  Within a wave robots are processed from
highest to lowest priority and messages to robots not yet processed are
delivered in the same wave, which keeps the number of waves within the size
of the negotiating neighborhood.

Per tick:
  1. range events are detected (enter/leave, always mutual);
  2. events are negotiated to a fixed point: on a new robot or a new
     priority a robot recomputes its own score, rebuilds its higher/lower
     lists from the previous members plus the newcomer, and replans iff the
     higher list changed; on a departure it drops the robot and replans iff
     it was higher; on a plan received from a higher robot it replans;
  3. every robot advances one step along its plan.

A robot whose planner finds no conflict-free path waits in place for a few
ticks (broadcasting the wait so lower robots avoid it) and retries on the
next trigger or when the wait expires.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .errors import InfeasibleError, InvariantViolation
from .grid import Anchor, ConfigSpace, GridMap, load_map_file
from .mapgen import generate_map
from .priority import HeuristicKind, PriorityScore, compute_priority, parse_heuristic
from .spacetime import Plan, ReservationTable, footprints_overlap, plan_path

log = logging.getLogger(__name__)

REPLAN_WAIT_TICKS = 5


@dataclass(frozen=True)
class RobotSpec:
    rho: int
    start: Anchor
    goal: Anchor


@dataclass
class Scenario:
    grid: GridMap
    robots: list[RobotSpec]
    comm_range: float
    heuristic: HeuristicKind
    seed: int = 0
    t_max: int | None = None
    map_source: dict | None = None

    def horizon(self) -> int:
        if self.t_max is not None:
            return self.t_max
        return 8 * (self.grid.width + self.grid.height)


@dataclass
class RunRecord:
    finish_ticks: list
    success: bool
    flowtime: float | None
    makespan: int | None
    ideal_flowtime: float
    ideal_makespan: int
    replan_counts: list
    rounds: list  # (tick, rounds used, neighborhood bound)
    trajectories: list
    ticks: int


class World:
    """Shared immutable planning data for one map: config spaces per footprint."""

    def __init__(self, grid: GridMap):
        self.grid = grid
        self._spaces: dict[int, ConfigSpace] = {}

    def config_space(self, rho: int) -> ConfigSpace:
        cs = self._spaces.get(rho)
        if cs is None:
            cs = ConfigSpace(self.grid, rho)
            self._spaces[rho] = cs
        return cs


def validate_scenario(sc: Scenario, world: World | None = None) -> World:
    """Check scenario invariants; returns the world cache for reuse."""
    if world is None:
        world = World(sc.grid)
    if not sc.robots:
        raise InfeasibleError("scenario has no robots")
    if sc.comm_range <= 0:
        raise InfeasibleError("communication range must be positive")
    for i, spec in enumerate(sc.robots):
        cs = world.config_space(spec.rho)
        if not cs.is_valid(*spec.start):
            raise InfeasibleError(f"robot {i} start {spec.start} invalid for rho={spec.rho}")
        if not cs.is_valid(*spec.goal):
            raise InfeasibleError(f"robot {i} goal {spec.goal} invalid for rho={spec.rho}")
        if cs.distance_field(spec.goal)[spec.start] is None:
            raise InfeasibleError(f"robot {i} goal unreachable from start")
    for i in range(len(sc.robots)):
        for j in range(i + 1, len(sc.robots)):
            a, b = sc.robots[i], sc.robots[j]
            if footprints_overlap(a.start, a.rho, b.start, b.rho):
                raise InfeasibleError(f"robots {i} and {j} start overlapping")
            if footprints_overlap(a.goal, a.rho, b.goal, b.rho):
                raise InfeasibleError(f"robots {i} and {j} have overlapping goals")
    return world


class _Mailbox:
    __slots__ = ("entered", "left", "prios", "plans", "self_replan")

    def __init__(self):
        self.entered = {}
        self.left = set()
        self.prios = {}
        self.plans = set()
        self.self_replan = False

    def pending(self) -> bool:
        return bool(self.entered or self.left or self.prios or self.plans or self.self_replan)

    def take(self):
        snap = (self.entered, self.left, self.prios, self.plans, self.self_replan)
        self.entered = {}
        self.left = set()
        self.prios = {}
        self.plans = set()
        self.self_replan = False
        return snap


class _RobotState:
    __slots__ = (
        "id", "rho", "start", "goal", "cs", "dist", "announced", "anchor",
        "plan", "plan_version", "priority", "last_broadcast", "known", "H", "L",
        "T", "heard", "replan_count", "prio_tick", "last_plan_key", "mailbox",
    )

    def __init__(self, rid, spec: RobotSpec, cs: ConfigSpace):
        self.id = rid
        self.rho = spec.rho
        self.start = spec.start
        self.goal = spec.goal
        self.cs = cs
        self.dist = cs.distance_field(spec.goal)
        self.announced = self.dist[spec.start]
        self.anchor = spec.start
        self.plan = None
        self.plan_version = 0
        self.priority = None
        self.last_broadcast = None
        self.known = {}   # id -> PriorityScore of peers currently in range
        self.H = set()
        self.L = set()
        self.T = self.announced
        self.heard = set()
        self.replan_count = 0
        self.prio_tick = None
        self.last_plan_key = None
        self.mailbox = _Mailbox()

    def center2(self) -> tuple[int, int]:
        # footprint center in doubled cell coordinates
        return (2 * self.anchor[0] + self.rho - 1, 2 * self.anchor[1] + self.rho - 1)


class Simulation:
    """Deterministic lockstep execution of one scenario.

    priority_overrides, if given, maps robot id to a fixed primary score and
    bypasses the heuristic; used to replay runs under a forced ordering.
    """

    def __init__(self, scenario: Scenario, priority_overrides: dict | None = None):
        self.scenario = scenario
        self.world = validate_scenario(scenario)
        self.t_max = scenario.horizon()
        self.heuristic = scenario.heuristic
        self.seed = scenario.seed
        self.overrides = priority_overrides
        self.robots: dict[int, _RobotState] = {}
        self.trajectories: list[list[Anchor]] = []
        self.rounds_log: list[tuple[int, int, int]] = []
        self.tick = 0
        self._prev_pairs: set = set()
        self._ended_settled = False
        self._started = False

    # ---- lifecycle ----

    def setup(self) -> None:
        for rid, spec in enumerate(self.scenario.robots):
            cs = self.world.config_space(spec.rho)
            self.robots[rid] = _RobotState(rid, spec, cs)
        for rid in sorted(self.robots):
            r = self.robots[rid]
            self._compute_new_plan(r, 0)
        self.trajectories = [[r.anchor] for _, r in sorted(self.robots.items())]
        self._started = True

    def step(self) -> bool:
        """Run one tick; True when the run is over."""
        t = self.tick
        self._detect_range_events(t)
        self._queue_wait_retries(t)
        if any(r.mailbox.pending() for r in self.robots.values()):
            rounds, bound = self._negotiate(t)
            self.rounds_log.append((t, rounds, bound))
        if all(
            r.anchor == r.goal and r.plan.settled_at(t, r.goal)
            for r in self.robots.values()
        ):
            self._ended_settled = True
            return True
        if t >= self.t_max:
            return True
        self.tick = t + 1
        for rid in sorted(self.robots):
            r = self.robots[rid]
            r.anchor = r.plan.position(self.tick)
            self.trajectories[rid].append(r.anchor)
        return False

    def run(self) -> RunRecord:
        if not self._started:
            self.setup()
        while not self.step():
            pass
        return self.finalize()

    def finalize(self) -> RunRecord:
        finishes = []
        for rid in sorted(self.robots):
            r = self.robots[rid]
            traj = self.trajectories[rid]
            if traj[-1] == r.goal and r.plan.settled_at(self.tick, r.goal):
                last_away = max((i for i, a in enumerate(traj) if a != r.goal), default=-1)
                finishes.append(last_away + 1)
            else:
                finishes.append(None)
        success = self._ended_settled and all(f is not None for f in finishes)
        ideals = [r.announced for _, r in sorted(self.robots.items())]
        self._verify_executed_safety()
        return RunRecord(
            finish_ticks=finishes,
            success=success,
            flowtime=(sum(finishes) / len(finishes)) if success else None,
            makespan=max(finishes) if success else None,
            ideal_flowtime=sum(ideals) / len(ideals),
            ideal_makespan=max(ideals),
            replan_counts=[r.replan_count for _, r in sorted(self.robots.items())],
            rounds=list(self.rounds_log),
            trajectories=[list(t) for t in self.trajectories],
            ticks=self.tick,
        )

    # ---- events ----

    def _in_range(self, a: _RobotState, b: _RobotState) -> bool:
        ax, ay = a.center2()
        bx, by = b.center2()
        return (ax - bx) ** 2 + (ay - by) ** 2 < (2 * self.scenario.comm_range) ** 2

    def _detect_range_events(self, t: int) -> None:
        ids = sorted(self.robots)
        current = set()
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                if self._in_range(self.robots[a], self.robots[b]):
                    current.add((a, b))
        for a, b in sorted(current - self._prev_pairs):
            ra, rb = self.robots[a], self.robots[b]
            ra.mailbox.entered[b] = (rb.priority, rb.announced)
            rb.mailbox.entered[a] = (ra.priority, ra.announced)
            log.debug("tick %d: robots %d and %d enter range", t, a, b)
        for a, b in sorted(self._prev_pairs - current):
            self.robots[a].mailbox.left.add(b)
            self.robots[b].mailbox.left.add(a)
            log.debug("tick %d: robots %d and %d leave range", t, a, b)
        self._prev_pairs = current

    def _queue_wait_retries(self, t: int) -> None:
        for rid in sorted(self.robots):
            r = self.robots[rid]
            if r.anchor != r.goal and r.plan.end_tick <= t:
                r.mailbox.self_replan = True
                log.debug("tick %d: robot %d retries after waiting", t, rid)

    # ---- negotiation ----

    def _neighborhood_bound(self, involved_ids) -> int:
        parent = {rid: rid for rid in self.robots}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self._prev_pairs:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        sizes = {}
        for rid in self.robots:
            root = find(rid)
            sizes[root] = sizes.get(root, 0) + 1
        return max((sizes[find(rid)] for rid in involved_ids), default=1)

    def _negotiate(self, t: int) -> tuple[int, int]:
        involved = [rid for rid in sorted(self.robots) if self.robots[rid].mailbox.pending()]
        bound = self._neighborhood_bound(involved)
        rounds = 0
        while any(r.mailbox.pending() for r in self.robots.values()):
            rounds += 1
            if rounds > bound + 1:
                raise InvariantViolation(
                    f"negotiation at tick {t} exceeded {bound + 1} rounds; "
                    "priority ordering violated"
                )
            processed = set()
            while True:
                candidates = [
                    rid
                    for rid in self.robots
                    if rid not in processed and self.robots[rid].mailbox.pending()
                ]
                if not candidates:
                    break
                nxt = min(candidates, key=lambda rid: self.robots[rid].priority.sort_key())
                self._process(self.robots[nxt], t)
                processed.add(nxt)
        self._check_fixed_point(t)
        return rounds, bound

    def _process(self, r: _RobotState, t: int) -> None:
        entered, left, prios, plans, self_replan = r.mailbox.take()
        replan = False
        for m in sorted(left):
            r.known.pop(m, None)
            r.L.discard(m)
            if m in r.H:
                r.H.discard(m)
                replan = True
                log.debug("tick %d: robot %d lost higher-priority %d, replans", t, r.id, m)
        news = dict(entered)
        news.update(prios)  # a fresh broadcast beats the handshake snapshot
        trigger_a = bool(news)
        for m in sorted(news):
            score, announced = news[m]
            r.known[m] = score
            r.heard.add(m)
            if announced > r.T:
                r.T = announced
        if trigger_a:
            self._ensure_priority(r, t)
            old_h = set(r.H)
            own = r.priority.sort_key()
            r.H = {m for m, s in r.known.items() if s.sort_key() < own}
            r.L = set(r.known) - r.H
            if r.H != old_h:
                replan = True
            self._broadcast_priority_if_changed(r)
        if any(m in r.H for m in plans):
            replan = True
        if self_replan:
            replan = True
        if replan:
            self._compute_new_plan(r, t)

    def _ensure_priority(self, r: _RobotState, t: int) -> None:
        if r.prio_tick == t:
            return
        if self.overrides is not None:
            r.priority = PriorityScore(float(self.overrides[r.id]), 0.0, r.id)
        else:
            r.priority = compute_priority(
                self.heuristic,
                grid=self.scenario.grid,
                cs=r.cs,
                dist=r.dist,
                anchor=r.anchor,
                tick=t,
                goal=r.goal,
                bound=r.T,
                robot_id=r.id,
                seed=self.seed,
            )
        r.prio_tick = t

    def _broadcast_priority_if_changed(self, r: _RobotState) -> None:
        if r.priority == r.last_broadcast:
            return
        r.last_broadcast = r.priority
        for m in sorted(r.known):
            self.robots[m].mailbox.prios[r.id] = (r.priority, r.announced)

    def _broadcast_plan(self, r: _RobotState) -> None:
        for m in sorted(r.L):
            self.robots[m].mailbox.plans.add(r.id)

    def _compute_new_plan(self, r: _RobotState, t: int) -> None:
        key = (
            t,
            r.anchor,
            tuple(sorted((m, self.robots[m].plan_version) for m in r.H)),
        )
        if key == r.last_plan_key:
            return  # identical inputs; the planner would return the same plan
        r.last_plan_key = key
        table = ReservationTable()
        for m in sorted(r.H):
            peer = self.robots[m]
            table.reserve(m, peer.plan)
            if footprints_overlap(r.anchor, r.rho, peer.plan.position(t), peer.rho):
                raise InvariantViolation(
                    f"robot {r.id} is already overlapped by robot {m} at tick {t}"
                )
        new = plan_path(r.cs, r.anchor, t, r.goal, table, self.t_max, r.dist)
        r.replan_count += 1
        if new is None:
            new = Plan(t, (r.anchor,) * (REPLAN_WAIT_TICKS + 1), r.rho)
            log.debug("tick %d: robot %d found no path, waits in place", t, r.id)
        if r.plan is None or not _plans_equal_from(r.plan, new, t):
            r.plan = new
            r.plan_version += 1
            self._broadcast_plan(r)
            log.debug(
                "tick %d: robot %d adopts plan arriving at %d", t, r.id, new.end_tick
            )
        self._ensure_priority(r, t)
        self._broadcast_priority_if_changed(r)

    # ---- invariants ----

    def _check_fixed_point(self, t: int) -> None:
        for rid in sorted(self.robots):
            r = self.robots[rid]
            if r.H & r.L:
                raise InvariantViolation(f"robot {rid} has overlapping H and L")
            if set(r.known) != r.H | r.L:
                raise InvariantViolation(f"robot {rid} H+L diverged from its range set")
            for m in r.H:
                if rid not in self.robots[m].L:
                    raise InvariantViolation(
                        f"tick {t}: robot {m} in H of {rid} but {rid} not in L of {m}"
                    )
            for m in r.L:
                if rid not in self.robots[m].H:
                    raise InvariantViolation(
                        f"tick {t}: robot {m} in L of {rid} but {rid} not in H of {m}"
                    )
        color = {}

        def dfs(u):
            color[u] = 1
            for v in self.robots[u].H:
                c = color.get(v, 0)
                if c == 1:
                    raise InvariantViolation(f"tick {t}: priority cycle through robot {v}")
                if c == 0:
                    dfs(v)
            color[u] = 2

        for rid in sorted(self.robots):
            if color.get(rid, 0) == 0:
                dfs(rid)

    def _verify_executed_safety(self) -> None:
        ids = sorted(self.robots)
        span = len(self.trajectories[0]) if self.trajectories else 0
        for t in range(span - 1):
            for i, a in enumerate(ids):
                ta = self.trajectories[a]
                ra = self.robots[a].rho
                for b in ids[i + 1:]:
                    tb = self.trajectories[b]
                    rb = self.robots[b].rho
                    if (
                        footprints_overlap(ta[t], ra, tb[t], rb)
                        or footprints_overlap(ta[t], ra, tb[t + 1], rb)
                        or footprints_overlap(ta[t + 1], ra, tb[t], rb)
                        or footprints_overlap(ta[t + 1], ra, tb[t + 1], rb)
                    ):
                        raise InvariantViolation(
                            f"executed conflict between robots {a} and {b} at tick {t}"
                        )


def _plans_equal_from(old: Plan, new: Plan, t: int) -> bool:
    horizon = max(old.end_tick, new.end_tick) + 1
    return all(old.position(k) == new.position(k) for k in range(t, horizon + 1))


def run_scenario(scenario: Scenario, priority_overrides: dict | None = None) -> RunRecord:
    return Simulation(scenario, priority_overrides).run()


# ---- scenario files ----

def save_scenario(sc: Scenario, path) -> None:
    doc = {
        "robots": [
            {"rho": s.rho, "start": list(s.start), "goal": list(s.goal)} for s in sc.robots
        ],
        "comm_range": sc.comm_range,
        "heuristic": sc.heuristic.name,
        "z": sc.heuristic.z,
        "seed": sc.seed,
        "t_max": sc.t_max,
    }
    if sc.map_source and ("map_path" in sc.map_source or "generator" in sc.map_source):
        doc.update(sc.map_source)
    else:
        doc["map_text"] = sc.grid.to_text()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "map_path" in doc:
        map_path = Path(doc["map_path"])
        if not map_path.is_absolute():
            map_path = path.parent / map_path
        grid = load_map_file(map_path)
        source = {"map_path": doc["map_path"]}
    elif "generator" in doc:
        gen = dict(doc["generator"])
        grid = generate_map(
            gen.pop("kind"), gen.pop("width"), gen.pop("height"), gen.pop("seed", 0),
            **gen.pop("params", {}),
        )
        source = {"generator": doc["generator"]}
    elif "map_text" in doc:
        grid = GridMap.from_text(doc["map_text"])
        source = None
    else:
        raise InfeasibleError(f"scenario {path} carries no map_path, generator, or map_text")
    robots = [
        RobotSpec(r["rho"], tuple(r["start"]), tuple(r["goal"])) for r in doc["robots"]
    ]
    heuristic = parse_heuristic(doc.get("heuristic", "PP-LF"), doc.get("z", 30))
    return Scenario(
        grid=grid,
        robots=robots,
        comm_range=float(doc["comm_range"]),
        heuristic=heuristic,
        seed=int(doc.get("seed", 0)),
        t_max=doc.get("t_max"),
        map_source=source,
    )
