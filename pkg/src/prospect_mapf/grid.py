"""Grid workspace, footprint inflation, and goal distance fields.

Coordinates are (x, y) with x the column and y the row; (0, 0) is the
top-left cell.  Robots occupy a rho x rho square of cells anchored at the
square's top-left cell, so a robot is a single point in its anchor grid
(the configuration space).  Motion is 4-connected; obstacle components are
8-connected, which prevents paths from slipping diagonally between two
corner-touching obstacle cells.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass

from .errors import MapFormatError

Cell = tuple[int, int]
Anchor = tuple[int, int]

NEIGHBORS4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
NEIGHBORS8 = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))

_HEADER_RE = re.compile(r"^# grid (\d+) (\d+)\s*$")
UNREACHABLE = -1


@dataclass(frozen=True)
class Footprint:
    """Square footprint of side ``rho`` cells, anchored at its top-left cell."""

    rho: int

    def __post_init__(self):
        if self.rho < 1:
            raise ValueError(f"footprint side must be >= 1, got {self.rho}")


class GridMap:
    """Static workspace: free/obstacle cells plus 8-connected obstacle components."""

    def __init__(self, width: int, height: int, obstacles=()):
        if width < 1 or height < 1:
            raise ValueError("map dimensions must be >= 1")
        self.width = width
        self.height = height
        self._blocked = bytearray(width * height)
        for (x, y) in obstacles:
            if not (0 <= x < width and 0 <= y < height):
                raise ValueError(f"obstacle cell {(x, y)} outside {width}x{height} map")
            self._blocked[y * width + x] = 1
        self._components = None

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_obstacle(self, x: int, y: int) -> bool:
        return bool(self._blocked[y * self.width + x])

    def is_free(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and not self._blocked[y * self.width + x]

    def obstacle_cells(self) -> set[Cell]:
        w = self.width
        return {(i % w, i // w) for i, b in enumerate(self._blocked) if b}

    @property
    def obstacle_count(self) -> int:
        return sum(self._blocked)

    @property
    def obstacle_components(self) -> tuple[frozenset[Cell], ...]:
        """Maximal 8-connected components of obstacle cells (a partition)."""
        if self._components is None:
            self._components = _components(
                self.width, self.height, lambda x, y: self.is_obstacle(x, y), NEIGHBORS8
            )
        return self._components

    def free_components(self) -> tuple[frozenset[Cell], ...]:
        """Maximal 4-connected components of free cells."""
        return _components(self.width, self.height, self.is_free, NEIGHBORS4)

    # ---- ASCII round trip ----

    @classmethod
    def from_text(cls, text: str) -> "GridMap":
        lines = [ln for ln in text.splitlines()]
        while lines and not lines[-1].strip():
            lines.pop()
        if not lines:
            raise MapFormatError("empty map input")
        header = _HEADER_RE.match(lines[0])
        if header:
            lines = lines[1:]
            if not lines:
                raise MapFormatError("map header without rows")
        widths = {len(ln) for ln in lines}
        if len(widths) != 1:
            raise MapFormatError(f"ragged rows: widths {sorted(widths)}")
        width = widths.pop()
        if width == 0:
            raise MapFormatError("empty map rows")
        height = len(lines)
        if header and (int(header.group(1)) != width or int(header.group(2)) != height):
            raise MapFormatError(
                f"header says {header.group(1)}x{header.group(2)}, rows are {width}x{height}"
            )
        obstacles = []
        for y, ln in enumerate(lines):
            for x, ch in enumerate(ln):
                if ch == "#":
                    obstacles.append((x, y))
                elif ch != ".":
                    raise MapFormatError(f"illegal character {ch!r} at {(x, y)}")
        return cls(width, height, obstacles)

    def to_text(self, header: bool = True) -> str:
        rows = []
        if header:
            rows.append(f"# grid {self.width} {self.height}")
        for y in range(self.height):
            rows.append(
                "".join("#" if self.is_obstacle(x, y) else "." for x in range(self.width))
            )
        return "\n".join(rows) + "\n"


def load_map(source) -> GridMap:
    """Parse an ASCII map ('.' free, '#' obstacle, optional ``# grid W H`` header)."""
    if hasattr(source, "read"):
        return GridMap.from_text(source.read())
    return GridMap.from_text(str(source))


def load_map_file(path) -> GridMap:
    with open(path, "r", encoding="ascii") as fh:
        return GridMap.from_text(fh.read())


def save_map_file(grid: GridMap, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(grid.to_text())


class ConfigSpace:
    """Anchor grid for one footprint: placements whose full square is free.

    An anchor (x, y) is valid iff every cell of [x, x+rho) x [y, y+rho) is
    inside the map and free.  Effective obstacles are the 8-connected
    components of blocked anchors: original obstacles merged wherever the
    footprint cannot pass between them.
    """

    def __init__(self, grid: GridMap, rho: int):
        if rho < 1:
            raise ValueError("rho must be >= 1")
        if rho > min(grid.width, grid.height):
            raise ValueError(
                f"footprint {rho} exceeds map dimensions {grid.width}x{grid.height}"
            )
        self.grid = grid
        self.rho = rho
        self.anchor_width = grid.width - rho + 1
        self.anchor_height = grid.height - rho + 1
        self._valid = self._erode()
        self._effective = None
        self._fields: dict[Anchor, DistanceField] = {}

    def _erode(self) -> bytearray:
        # prefix sums over blocked cells, then window queries per anchor
        gw, gh, rho = self.grid.width, self.grid.height, self.rho
        blocked = self.grid._blocked
        pref = [0] * ((gw + 1) * (gh + 1))
        for y in range(gh):
            row_acc = 0
            base = y * gw
            pbase = (y + 1) * (gw + 1)
            prev = y * (gw + 1)
            for x in range(gw):
                row_acc += blocked[base + x]
                pref[pbase + x + 1] = pref[prev + x + 1] + row_acc
        aw, ah = self.anchor_width, self.anchor_height
        valid = bytearray(aw * ah)
        for ay in range(ah):
            top = ay * (gw + 1)
            bot = (ay + rho) * (gw + 1)
            for ax in range(aw):
                covered = (
                    pref[bot + ax + rho] - pref[bot + ax] - pref[top + ax + rho] + pref[top + ax]
                )
                if covered == 0:
                    valid[ay * aw + ax] = 1
        return valid

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.anchor_width and 0 <= y < self.anchor_height

    def is_valid(self, x: int, y: int) -> bool:
        return (
            0 <= x < self.anchor_width
            and 0 <= y < self.anchor_height
            and bool(self._valid[y * self.anchor_width + x])
        )

    def iter_valid(self):
        aw = self.anchor_width
        for i, v in enumerate(self._valid):
            if v:
                yield (i % aw, i // aw)

    def valid_count(self) -> int:
        return sum(self._valid)

    def neighbors4(self, a: Anchor) -> list[Anchor]:
        x, y = a
        out = []
        for dx, dy in NEIGHBORS4:
            if self.is_valid(x + dx, y + dy):
                out.append((x + dx, y + dy))
        return out

    def covered_cells(self, a: Anchor):
        """Cells occupied by the footprint placed at anchor ``a``."""
        x, y = a
        for cy in range(y, y + self.rho):
            for cx in range(x, x + self.rho):
                yield (cx, cy)

    @property
    def effective_obstacles(self) -> tuple[frozenset[Anchor], ...]:
        """8-connected components of blocked anchors (a partition of them)."""
        if self._effective is None:
            self._effective = _components(
                self.anchor_width,
                self.anchor_height,
                lambda x, y: not self._valid[y * self.anchor_width + x],
                NEIGHBORS8,
            )
        return self._effective

    def distance_field(self, goal: Anchor) -> "DistanceField":
        """Memoized true-distance field toward ``goal`` (see true_distance_field)."""
        field = self._fields.get(goal)
        if field is None:
            field = true_distance_field(self, goal)
            self._fields[goal] = field
        return field


def build_config_space(grid: GridMap, footprint) -> ConfigSpace:
    """Inflate the map by a footprint, yielding the robot's anchor grid."""
    rho = footprint.rho if isinstance(footprint, Footprint) else int(footprint)
    return ConfigSpace(grid, rho)


class DistanceField:
    """Shortest-path tick counts from every valid anchor to one goal anchor.

    Unit-cost 4-connected moves over valid anchors; unreachable anchors and
    blocked anchors report None.
    """

    def __init__(self, cs: ConfigSpace, goal: Anchor, dist: list[int]):
        self.cs = cs
        self.goal = goal
        self._dist = dist

    def value(self, a: Anchor):
        x, y = a
        if not self.cs.in_bounds(x, y):
            return None
        d = self._dist[y * self.cs.anchor_width + x]
        return None if d == UNREACHABLE else d

    __getitem__ = value

    def reachable(self, a: Anchor) -> bool:
        return self.value(a) is not None


def true_distance_field(cs: ConfigSpace, goal: Anchor) -> DistanceField:
    """Backward BFS from the goal over the static (untrimmed) anchor grid."""
    if not cs.is_valid(*goal):
        raise ValueError(f"goal anchor {goal} is blocked")
    aw = cs.anchor_width
    dist = [UNREACHABLE] * (aw * cs.anchor_height)
    gx, gy = goal
    dist[gy * aw + gx] = 0
    queue = deque([goal])
    while queue:
        x, y = queue.popleft()
        d = dist[y * aw + x] + 1
        for dx, dy in NEIGHBORS4:
            nx, ny = x + dx, y + dy
            if cs.is_valid(nx, ny) and dist[ny * aw + nx] == UNREACHABLE:
                dist[ny * aw + nx] = d
                queue.append((nx, ny))
    return DistanceField(cs, goal, dist)


def _components(width, height, predicate, neighborhood) -> tuple[frozenset, ...]:
    """Connected components of {(x,y) : predicate}, in row-major discovery order."""
    seen = bytearray(width * height)
    comps = []
    for y0 in range(height):
        for x0 in range(width):
            if seen[y0 * width + x0] or not predicate(x0, y0):
                continue
            comp = []
            stack = [(x0, y0)]
            seen[y0 * width + x0] = 1
            while stack:
                x, y = stack.pop()
                comp.append((x, y))
                for dx, dy in neighborhood:
                    nx, ny = x + dx, y + dy
                    if 0 <= nx < width and 0 <= ny < height and not seen[ny * width + nx]:
                        if predicate(nx, ny):
                            seen[ny * width + nx] = 1
                            stack.append((nx, ny))
            comps.append(frozenset(comp))
    return tuple(comps)
