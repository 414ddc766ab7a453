"""Structured random map generators: maze, clutter, crossing, corridor, tunnel.

Each generator is deterministic per (kind, size, seed, params) and produces
a map whose free cells form a single 4-connected component, so a unit robot
can always travel between any two free cells.  The layouts imitate common
benchmark families; parameters are documented per generator.
"""

from __future__ import annotations

import random

from .errors import InfeasibleError
from .grid import GridMap

KINDS = ("maze", "clutter", "crossing", "corridor", "tunnel")


def generate_map(kind: str, width: int, height: int, seed: int = 0, **params) -> GridMap:
    """Build a connected map of the given family.

    Supported params:
      clutter:  density (fraction of cells to block, default 0.10)
      maze:     corridor (passage width, default 2), braid (loop probability, 0.15)
      crossing: block (obstacle block side, 3), gap (corridor width, 2)
      corridor: spacing (rows between walls, 4), door (door width, 2)
      tunnel:   thickness (dividing wall, 2), tunnels (openings, 2), tunnel_width (2)
    """
    if kind not in KINDS:
        raise ValueError(f"unknown map kind {kind!r}; expected one of {KINDS}")
    if width < 8 or height < 8:
        raise ValueError("generated maps must be at least 8x8")
    rng = random.Random(seed)
    builder = {
        "maze": _maze,
        "clutter": _clutter,
        "crossing": _crossing,
        "corridor": _corridor,
        "tunnel": _tunnel,
    }[kind]
    grid = builder(width, height, rng, params)
    comps = grid.free_components()
    if len(comps) != 1:
        raise InfeasibleError(
            f"{kind} generator produced {len(comps)} free components (params {params})"
        )
    return grid


def _connected_without(width, height, blocked, extra) -> bool:
    """True if free cells stay 4-connected when ``extra`` is also blocked."""
    total_free = width * height - len(blocked) - 1
    if total_free <= 0:
        return False
    start = None
    for i in range(width * height):
        cell = (i % width, i // width)
        if cell not in blocked and cell != extra:
            start = cell
            break
    stack = [start]
    seen = {start}
    while stack:
        x, y = stack.pop()
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < width and 0 <= ny < height:
                cell = (nx, ny)
                if cell not in seen and cell not in blocked and cell != extra:
                    seen.add(cell)
                    stack.append(cell)
    return len(seen) == total_free


def _clutter(width, height, rng, params) -> GridMap:
    density = params.get("density", 0.10)
    if not 0.0 <= density < 1.0:
        raise ValueError(f"clutter density must be in [0, 1), got {density}")
    target = int(density * width * height)
    blocked: set = set()
    attempts = 0
    budget = 50 * max(target, 1)
    while len(blocked) < target:
        attempts += 1
        if attempts > budget:
            raise InfeasibleError(
                f"could not place {target} obstacle cells while keeping the map "
                f"connected ({len(blocked)} placed)"
            )
        x = rng.randrange(width)
        y = rng.randrange(height)
        if (x, y) in blocked:
            continue
        if _connected_without(width, height, blocked, (x, y)):
            blocked.add((x, y))
    return GridMap(width, height, blocked)


def _maze(width, height, rng, params) -> GridMap:
    corridor = params.get("corridor", 2)
    braid = params.get("braid", 0.15)
    if corridor < 1:
        raise ValueError("maze corridor width must be >= 1")
    pitch = corridor + 1
    mx = (width - 1) // pitch
    my = (height - 1) // pitch
    if mx < 2 or my < 2:
        raise InfeasibleError(f"maze cell lattice degenerate for {width}x{height}")

    def cell_origin(i, j):
        return 1 + i * pitch, 1 + j * pitch

    free: set = set()
    for j in range(my):
        for i in range(mx):
            ox, oy = cell_origin(i, j)
            for y in range(oy, oy + corridor):
                for x in range(ox, ox + corridor):
                    free.add((x, y))

    def open_passage(a, b):
        (ix, iy), (jx, jy) = a, b
        ox, oy = cell_origin(ix, iy)
        if jx == ix + 1:
            for y in range(oy, oy + corridor):
                free.add((ox + corridor, y))
        elif jy == iy + 1:
            for x in range(ox, ox + corridor):
                free.add((x, oy + corridor))
        else:
            open_passage(b, a)

    # depth-first spanning tree over the coarse lattice
    visited = {(0, 0)}
    stack = [(0, 0)]
    tree_edges = set()
    while stack:
        i, j = stack[-1]
        options = [
            (i + di, j + dj)
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))
            if 0 <= i + di < mx and 0 <= j + dj < my and (i + di, j + dj) not in visited
        ]
        if not options:
            stack.pop()
            continue
        nxt = rng.choice(options)
        visited.add(nxt)
        tree_edges.add(frozenset(((i, j), nxt)))
        open_passage((i, j), nxt)
        stack.append(nxt)

    # braid: open a fraction of the remaining walls to create loops
    for j in range(my):
        for i in range(mx):
            for di, dj in ((1, 0), (0, 1)):
                ni, nj = i + di, j + dj
                if ni < mx and nj < my:
                    edge = frozenset(((i, j), (ni, nj)))
                    if edge not in tree_edges and rng.random() < braid:
                        open_passage((i, j), (ni, nj))

    blocked = {
        (x, y) for y in range(height) for x in range(width) if (x, y) not in free
    }
    return GridMap(width, height, blocked)


def _crossing(width, height, rng, params) -> GridMap:
    block = params.get("block", 3)
    gap = params.get("gap", 2)
    if block < 1 or gap < 1:
        raise ValueError("crossing block and gap must be >= 1")
    pitch = block + gap
    blocked = set()
    for by in range(gap, height - block, pitch):
        for bx in range(gap, width - block, pitch):
            for y in range(by, by + block):
                for x in range(bx, bx + block):
                    blocked.add((x, y))
    return GridMap(width, height, blocked)


def _corridor(width, height, rng, params) -> GridMap:
    spacing = params.get("spacing", 4)
    door = params.get("door", 2)
    if spacing < 2 or door < 1 or door > width - 2:
        raise ValueError("corridor spacing must be >= 2 and door must fit the width")
    blocked = set()
    for wy in range(spacing, height - 1, spacing + 1):
        doors = sorted(rng.sample(range(1, width - door), k=min(2, width - door - 1)))
        open_cells = set()
        for dx in doors:
            open_cells.update(range(dx, dx + door))
        for x in range(width):
            if x not in open_cells:
                blocked.add((x, wy))
    return GridMap(width, height, blocked)


def _tunnel(width, height, rng, params) -> GridMap:
    thickness = params.get("thickness", 2)
    tunnels = params.get("tunnels", 2)
    tunnel_width = params.get("tunnel_width", 2)
    if thickness < 1 or tunnels < 1 or tunnel_width < 1:
        raise ValueError("tunnel parameters must be >= 1")
    if tunnels * (tunnel_width + 1) > height - 1:
        raise InfeasibleError("tunnel openings do not fit the map height")
    x0 = (width - thickness) // 2
    blocked = {(x, y) for x in range(x0, x0 + thickness) for y in range(height)}
    starts = rng.sample(
        range(1, height - tunnel_width), k=tunnels
    )
    for sy in sorted(starts):
        for y in range(sy, sy + tunnel_width):
            for x in range(x0, x0 + thickness):
                blocked.discard((x, y))
    return GridMap(width, height, blocked)
