"""Space-time planning: reservation tables, conflict tests, and the planner.

Plans advance one anchor per integer tick.  A robot holds its final anchor
for every later tick, so reservations never expire; the planner's goal test
checks that parking at the goal stays conflict-free forever.

The transition conflict rule is conservative: a move a->b at tick t
conflicts with another robot's move p->q at the same tick iff the union of
footprint squares {a, b} intersects the union {p, q}.  This subsumes vertex
and swap conflicts uniformly for all footprint sizes.
"""

from __future__ import annotations

import heapq
import re
from collections import deque
from dataclasses import dataclass, field

from .grid import NEIGHBORS4, Anchor, ConfigSpace, DistanceField


@dataclass(frozen=True)
class Plan:
    """Timestamped anchor trajectory: one anchor per tick from start_tick.

    goal_hold means the final anchor stays occupied for all later ticks;
    every plan in this package holds (robots never vanish).
    """

    start_tick: int
    anchors: tuple[Anchor, ...]
    rho: int
    goal_hold: bool = True

    def __post_init__(self):
        if not self.anchors:
            raise ValueError("plan must contain at least one anchor")
        for (ax, ay), (bx, by) in zip(self.anchors, self.anchors[1:]):
            if abs(ax - bx) + abs(ay - by) > 1:
                raise ValueError(
                    f"plan steps must wait or move to a 4-neighbor: {(ax, ay)}->{(bx, by)}"
                )

    @property
    def end_tick(self) -> int:
        return self.start_tick + len(self.anchors) - 1

    def position(self, tick: int) -> Anchor:
        """Anchor at ``tick``, clamped to the first/last anchor outside the span."""
        i = tick - self.start_tick
        if i <= 0:
            return self.anchors[0]
        if i >= len(self.anchors):
            return self.anchors[-1]
        return self.anchors[i]

    def settled_at(self, tick: int, goal: Anchor) -> bool:
        """True if the robot sits on ``goal`` at ``tick`` and never moves again."""
        i = max(0, tick - self.start_tick)
        return all(a == goal for a in self.anchors[i:]) and self.anchors[-1] == goal

    def validate(self, cs: ConfigSpace) -> None:
        for a in self.anchors:
            if not cs.is_valid(*a):
                raise ValueError(f"plan anchor {a} invalid for rho={cs.rho}")


def footprints_overlap(a: Anchor, rho_a: int, b: Anchor, rho_b: int) -> bool:
    """Axis-aligned square overlap test in cell space."""
    return (
        a[0] < b[0] + rho_b
        and b[0] < a[0] + rho_a
        and a[1] < b[1] + rho_b
        and b[1] < a[1] + rho_a
    )


def transition_conflicts(
    a_from: Anchor, a_to: Anchor, tick: int, rho: int, entry: Plan
) -> bool:
    """Union-of-endpoints conflict between one move and one reserved plan."""
    p = entry.position(tick)
    q = entry.position(tick + 1)
    er = entry.rho
    return (
        footprints_overlap(a_from, rho, p, er)
        or footprints_overlap(a_from, rho, q, er)
        or footprints_overlap(a_to, rho, p, er)
        or footprints_overlap(a_to, rho, q, er)
    )


class ReservationTable:
    """Reserved space-time volumes of higher-priority robots.

    One plan per owner; reserving again for the same owner replaces the old
    entry.  Queries are pure functions of the entries.
    """

    def __init__(self):
        self._entries: dict = {}

    def reserve(self, owner, plan: Plan) -> None:
        if not isinstance(plan, Plan):
            raise ValueError("reserve expects a Plan")
        self._entries[owner] = plan

    def release(self, owner) -> None:
        self._entries.pop(owner, None)

    def copy(self) -> "ReservationTable":
        dup = ReservationTable()
        dup._entries = dict(self._entries)
        return dup

    def __len__(self) -> int:
        return len(self._entries)

    def owners(self):
        return sorted(self._entries)

    def plans(self) -> list[Plan]:
        return [self._entries[o] for o in sorted(self._entries)]

    def plan_of(self, owner) -> Plan:
        return self._entries[owner]

    def occupied(self, anchor: Anchor, tick: int, rho: int) -> bool:
        """True if a footprint parked at ``anchor`` overlaps any entry at ``tick``."""
        return any(
            footprints_overlap(anchor, rho, p.position(tick), p.rho)
            for p in self._entries.values()
        )

    def is_transition_free(self, a_from: Anchor, a_to: Anchor, tick: int, rho: int) -> bool:
        for p in self._entries.values():
            if transition_conflicts(a_from, a_to, tick, rho, p):
                return False
        return True

    def max_end_tick(self, default: int = 0) -> int:
        return max((p.end_tick for p in self._entries.values()), default=default)


def _residual_field(cs: ConfigSpace, goal: Anchor, parked: list[tuple[Anchor, int]]):
    """BFS distances to goal avoiding footprints parked forever, or None if the
    goal itself overlaps a parked footprint."""
    aw, ah = cs.anchor_width, cs.anchor_height
    rho = cs.rho
    open_mask = bytearray(cs._valid)
    for i in range(aw * ah):
        if open_mask[i]:
            a = (i % aw, i // aw)
            for (p, prho) in parked:
                if footprints_overlap(a, rho, p, prho):
                    open_mask[i] = 0
                    break
    gi = goal[1] * aw + goal[0]
    if not open_mask[gi]:
        return None
    dist = [-1] * (aw * ah)
    dist[gi] = 0
    queue = deque([goal])
    while queue:
        x, y = queue.popleft()
        d = dist[y * aw + x] + 1
        for dx, dy in NEIGHBORS4:
            nx, ny = x + dx, y + dy
            if 0 <= nx < aw and 0 <= ny < ah:
                i = ny * aw + nx
                if open_mask[i] and dist[i] == -1:
                    dist[i] = d
                    queue.append((nx, ny))
    return dist


def plan_path(
    cs: ConfigSpace,
    start: Anchor,
    start_tick: int,
    goal: Anchor,
    table: ReservationTable,
    t_max: int,
    dist: DistanceField | None = None,
):
    """Minimum-arrival-tick conflict-free plan from start to goal, or None.

    A* over (anchor, tick) with the static true distance as heuristic.
    Ties prefer smaller heuristic, then fewer waits, then lexicographic
    anchor, which makes returned plans deterministic.  Once every reserved
    plan has parked (tick >= quiet), the remaining problem is static, so the
    search switches to a precomputed residual shortest path instead of
    expanding further in time.  Returns None when no plan arrives by t_max.
    """
    if dist is None:
        dist = cs.distance_field(goal)
    if not cs.is_valid(*start) or not cs.is_valid(*goal):
        return None
    h0 = dist[start]
    if h0 is None or start_tick + h0 > t_max:
        return None

    entries = table.plans()
    rho = cs.rho
    parked = [(p.anchors[-1], p.rho) for p in entries]
    residual = _residual_field(cs, goal, parked)
    if residual is None:
        return None  # goal can never be held: a reserved robot parks on it
    quiet = max(table.max_end_tick(start_tick), start_tick)
    aw = cs.anchor_width

    def hold_safe(t: int) -> bool:
        # parking on the goal from t onward; past `quiet` the world is static
        # and residual[goal] == 0 already guarantees safety there
        for k in range(t, quiet + 1):
            for p in entries:
                if transition_conflicts(goal, goal, k, rho, p):
                    return False
        return True

    def walk_residual(a: Anchor) -> list[Anchor]:
        path = [a]
        x, y = a
        d = residual[y * aw + x]
        while d > 0:
            for dx, dy in NEIGHBORS4:
                nx, ny = x + dx, y + dy
                if (
                    0 <= nx < aw
                    and 0 <= ny < cs.anchor_height
                    and residual[ny * aw + nx] == d - 1
                ):
                    x, y, d = nx, ny, d - 1
                    path.append((x, y))
                    break
            else:
                raise AssertionError("residual field inconsistent")
        return path

    # heap items: (f, h, waits, x, y, seq, tick, parent, kind)
    seq = 0
    heap = [(start_tick + h0, h0, 0, start[0], start[1], seq, start_tick, None, "node")]
    visited = set()
    parents = {}

    def reconstruct(state) -> list[Anchor]:
        out = []
        while state is not None:
            (x, y, t) = state
            out.append((x, y))
            state = parents[state]
        out.reverse()
        return out

    while heap:
        f, h, waits, x, y, _, t, parent, kind = heapq.heappop(heap)
        if kind == "arrive":
            prefix = reconstruct(parent)
            tail = walk_residual((x, y))
            anchors = prefix + tail[1:]
            return Plan(start_tick, tuple(anchors), rho)
        state = (x, y, t)
        if state in visited:
            continue
        visited.add(state)
        parents[state] = parent
        a = (x, y)
        if a == goal and hold_safe(t):
            return Plan(start_tick, tuple(reconstruct(state)), rho)
        if t >= quiet:
            r = residual[y * aw + x]
            if r >= 0 and t + r <= t_max:
                seq += 1
                heapq.heappush(heap, (t + r, 0, waits, x, y, seq, t, state, "arrive"))
            continue
        nt = t + 1
        for dx, dy in ((0, 0),) + NEIGHBORS4:
            nx, ny = x + dx, y + dy
            if not cs.is_valid(nx, ny) or (nx, ny, nt) in visited:
                continue
            nh = dist[(nx, ny)]
            if nh is None or nt + nh > t_max:
                continue
            ok = True
            for p in entries:
                if transition_conflicts(a, (nx, ny), t, rho, p):
                    ok = False
                    break
            if ok:
                seq += 1
                nw = waits + (1 if (dx, dy) == (0, 0) else 0)
                heapq.heappush(heap, (nt + nh, nh, nw, nx, ny, seq, nt, state, "node"))
    return None


_PLAN_RE = re.compile(
    r"^robot (\S+) rho (\d+) t0 (-?\d+) : ((?:\(-?\d+,-?\d+\)\s*)+)$"
)


def format_plan(owner, plan: Plan) -> str:
    pts = " ".join(f"({x},{y})" for x, y in plan.anchors)
    return f"robot {owner} rho {plan.rho} t0 {plan.start_tick} : {pts}"


def parse_plan(line: str):
    m = _PLAN_RE.match(line.strip())
    if not m:
        raise ValueError(f"unparseable plan record: {line!r}")
    owner = m.group(1)
    anchors = tuple(
        (int(a), int(b)) for a, b in re.findall(r"\((-?\d+),(-?\d+)\)", m.group(4))
    )
    return owner, Plan(int(m.group(3)), anchors, int(m.group(2)))
