"""Path prospects: forward vertex sets and homology-class counting.

A robot's prospects at a position are 2**kappa, where kappa counts the
effective obstacles fully enclosed by the robot's forward area: the anchors
it can still visit while keeping total arrival time within the bound T.
Each enclosed obstacle doubles the number of Z2-homology classes of
goal-reaching trajectories, i.e. the number of genuinely distinct routes.

The independent check, homology_class_oracle, enumerates bounded simple
paths and counts distinct crossing-parity vectors against one downward ray
per effective obstacle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import InfeasibleError
from .grid import NEIGHBORS4, NEIGHBORS8, Anchor, ConfigSpace, DistanceField


@dataclass(frozen=True)
class ForwardSet:
    """Spatial projection of the vertices reachable within the arrival bound."""

    anchors: frozenset[Anchor]
    source: tuple[Anchor, int]
    bound: int


@dataclass(frozen=True)
class ProspectValue:
    kappa: int
    prospects: int


def forwards_vertices(
    cs: ConfigSpace,
    v: Anchor,
    t_now: int,
    goal: Anchor,
    dist: DistanceField,
    bound: int,
) -> ForwardSet:
    """Anchors reachable from (v, t_now) under the guard t + dist(a) <= bound.

    Best-first by arrival tick; wait edges are excluded since on the static
    graph waiting only raises t without reaching new anchors.  The source
    itself must satisfy the guard, otherwise the set is empty.
    """
    if not cs.is_valid(*v):
        raise ValueError(f"source anchor {v} is blocked")
    if dist.goal != goal:
        raise ValueError("distance field was built for a different goal")
    dv = dist[v]
    if dv is None or t_now + dv > bound:
        return ForwardSet(frozenset(), (v, t_now), bound)
    admitted = {v}
    queue = deque([(v, t_now)])
    while queue:
        (x, y), t = queue.popleft()
        nt = t + 1
        for dx, dy in NEIGHBORS4:
            nb = (x + dx, y + dy)
            if nb in admitted or not cs.is_valid(*nb):
                continue
            d = dist[nb]
            if d is not None and nt + d <= bound:
                admitted.add(nb)
                queue.append((nb, nt))
    return ForwardSet(frozenset(admitted), (v, t_now), bound)


def enclosed_obstacles(cs: ConfigSpace, fs: ForwardSet) -> list[frozenset[Anchor]]:
    """Complement components of the forward area that are whole obstacles.

    A component of non-forward anchors counts iff it contains no valid
    anchor (a pocket of merely unreachable free space offers no route) and
    does not touch the anchor-grid border (nothing can wind around an
    obstacle fused with the boundary).  Each such component is exactly one
    effective obstacle.
    """
    aw, ah = cs.anchor_width, cs.anchor_height
    forward = fs.anchors
    seen = bytearray(aw * ah)
    out = []
    for y0 in range(ah):
        for x0 in range(aw):
            if seen[y0 * aw + x0] or (x0, y0) in forward:
                continue
            comp = []
            stack = [(x0, y0)]
            seen[y0 * aw + x0] = 1
            all_blocked = True
            touches_border = False
            while stack:
                x, y = stack.pop()
                comp.append((x, y))
                if cs.is_valid(x, y):
                    all_blocked = False
                if x == 0 or y == 0 or x == aw - 1 or y == ah - 1:
                    touches_border = True
                for dx, dy in NEIGHBORS8:
                    nx, ny = x + dx, y + dy
                    if 0 <= nx < aw and 0 <= ny < ah and not seen[ny * aw + nx]:
                        if (nx, ny) not in forward:
                            seen[ny * aw + nx] = 1
                            stack.append((nx, ny))
            if all_blocked and not touches_border:
                out.append(frozenset(comp))
    return out


def path_prospects(cs: ConfigSpace, fs: ForwardSet) -> ProspectValue:
    """Prospects 2**kappa with kappa the enclosed effective obstacle count."""
    kappa = len(enclosed_obstacles(cs, fs))
    return ProspectValue(kappa, 2 ** kappa)


def forward_overlay(cs: ConfigSpace, fs: ForwardSet) -> str:
    """ASCII debug dump: '#' blocked, '*' forward, '.' valid but not forward."""
    rows = []
    for y in range(cs.anchor_height):
        row = []
        for x in range(cs.anchor_width):
            if not cs.is_valid(x, y):
                row.append("#")
            elif (x, y) in fs.anchors:
                row.append("*")
            else:
                row.append(".")
        rows.append("".join(row))
    return "\n".join(rows) + "\n"


def homology_class_oracle(
    cs: ConfigSpace,
    s: Anchor,
    g: Anchor,
    length_bound: int,
    step_budget: int = 5_000_000,
    representatives: list[Anchor] | None = None,
) -> int:
    """Count Z2 homology classes realized by simple paths of bounded length.

    Enumerates every simple 4-connected path s -> g with at most
    ``length_bound`` moves.  Each path gets a parity vector: for one
    representative cell per effective obstacle, the parity of path edges
    crossing the downward vertical ray cast from that cell (the ray runs at
    x = ox + epsilon, so a horizontal edge crosses iff its left endpoint is
    at ox and it lies strictly below oy; no corner double counts).  Returns
    the number of distinct parity vectors.  Intended for small instances;
    raises InfeasibleError if the enumeration exceeds ``step_budget``.
    """
    if not cs.is_valid(*s) or not cs.is_valid(*g):
        raise ValueError("start and goal anchors must be valid")
    dist = cs.distance_field(g)
    if dist[s] is None or dist[s] > length_bound:
        return 0
    if representatives is None:
        reps = [min(comp) for comp in cs.effective_obstacles]
    else:
        reps = list(representatives)
    vectors = set()
    steps = 0
    on_path = {s}
    path = [s]

    def edge_parity_deltas(a: Anchor, b: Anchor) -> int:
        # bitmask of obstacle rays crossed by edge a->b
        if a[1] != b[1]:
            return 0  # vertical edges never cross a vertical ray
        left = min(a[0], b[0])
        yy = a[1]
        mask = 0
        for i, (ox, oy) in enumerate(reps):
            if left == ox and yy > oy:
                mask |= 1 << i
        return mask

    def dfs(current: Anchor, length: int, signature: int):
        nonlocal steps
        steps += 1
        if steps > step_budget:
            raise InfeasibleError("homology oracle enumeration budget exceeded")
        if current == g:
            # simple paths end at their first goal visit
            vectors.add(signature)
            return
        x, y = current
        for dx, dy in NEIGHBORS4:
            nb = (x + dx, y + dy)
            if nb in on_path or not cs.is_valid(*nb):
                continue
            d = dist[nb]
            if d is None or length + 1 + d > length_bound:
                continue
            on_path.add(nb)
            path.append(nb)
            dfs(nb, length + 1, signature ^ edge_parity_deltas(current, nb))
            path.pop()
            on_path.remove(nb)

    dfs(s, 0, 0)
    return len(vectors)
