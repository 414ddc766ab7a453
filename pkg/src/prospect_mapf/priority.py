"""The seven online prioritization heuristics and their total-order scores.

Every heuristic reduces to a PriorityScore (primary, tiebreak, robot_id)
compared lexicographically with smaller meaning higher priority; quantities
where the larger robot should win are negated so the comparison stays
uniform.  The robot id is the final key, so any set of scores with distinct
ids is strictly totally ordered.

Kinds:
  NS     negated count of original obstacle components within Chebyshev
         range z of the footprint center; ties by longest remaining path
  CS     same count over the robot's own effective obstacles
  LF     negated remaining true distance; ties by a per-robot random draw
  FL     2**kappa over ORIGINAL obstacle components enclosed by the robot's
         forward set; ties by longest remaining path
  PP-R   prospects (2**kappa over effective obstacles); random ties
  PP-LF  prospects; ties by longest remaining path
  R      per-robot random draw; ties by robot id alone

Random draws are one seeded value per (robot, run), never re-rolled, so
broadcast priorities stay stable between triggers.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .grid import Anchor, ConfigSpace, DistanceField, GridMap
from .prospects import enclosed_obstacles, forwards_vertices, path_prospects

KIND_NAMES = ("NS", "CS", "LF", "FL", "PP-R", "PP-LF", "R")
DEFAULT_RANGE_Z = 30


@dataclass(frozen=True)
class HeuristicKind:
    name: str
    z: int = DEFAULT_RANGE_Z

    def __post_init__(self):
        if self.name not in KIND_NAMES:
            raise ValueError(f"unknown heuristic {self.name!r}; expected one of {KIND_NAMES}")
        if self.z < 0:
            raise ValueError("range z must be >= 0")


def parse_heuristic(text: str, z: int = DEFAULT_RANGE_Z) -> HeuristicKind:
    return HeuristicKind(text.strip(), z)


@dataclass(frozen=True)
class PriorityScore:
    """Broadcastable strict-total-order key; smaller sorts first (= higher priority)."""

    primary: float
    tiebreak: float
    robot_id: int

    def sort_key(self):
        return (self.primary, self.tiebreak, self.robot_id)

    def precedes(self, other: "PriorityScore") -> bool:
        if self.robot_id == other.robot_id:
            raise ValueError("cannot order two scores with the same robot id")
        return self.sort_key() < other.sort_key()


def compare(a: PriorityScore, b: PriorityScore) -> str:
    """Return 'a_higher' or 'b_higher'; never equality."""
    return "a_higher" if a.precedes(b) else "b_higher"


def stable_random(seed: int, robot_id: int, salt: int) -> float:
    """One deterministic uniform draw per (seed, robot, role)."""
    mixed = (seed * 1_000_003 + robot_id * 9_176 + salt * 31) & 0x7FFFFFFFFFFF
    return random.Random(mixed).random()


def _components_in_range(components, cx2: int, cy2: int, z: int) -> int:
    """Components with any member within Chebyshev z of the (doubled) center."""
    z2 = 2 * z
    count = 0
    for comp in components:
        for (x, y) in comp:
            if abs(2 * x - cx2) <= z2 and abs(2 * y - cy2) <= z2:
                count += 1
                break
    return count


def _enclosed_original_count(grid: GridMap, cs: ConfigSpace, fs) -> int:
    """Original obstacle components whose inflated anchors the forward set encloses."""
    enclosed = enclosed_obstacles(cs, fs)
    pocket = set()
    for comp in enclosed:
        pocket |= comp
    rho = cs.rho
    aw, ah = cs.anchor_width, cs.anchor_height
    count = 0
    for comp in grid.obstacle_components:
        inside = True
        nonempty = False
        for (x, y) in comp:
            for ax in range(max(0, x - rho + 1), min(aw - 1, x) + 1):
                for ay in range(max(0, y - rho + 1), min(ah - 1, y) + 1):
                    nonempty = True
                    if (ax, ay) not in pocket:
                        inside = False
                        break
                if not inside:
                    break
            if not inside:
                break
        if inside and nonempty:
            count += 1
    return count


def compute_priority(
    kind: HeuristicKind,
    *,
    grid: GridMap,
    cs: ConfigSpace,
    dist: DistanceField,
    anchor: Anchor,
    tick: int,
    goal: Anchor,
    bound: int,
    robot_id: int,
    seed: int,
) -> PriorityScore:
    """Score one robot under one heuristic; pure given (state, heuristic, seed)."""
    if not cs.is_valid(*anchor):
        raise ValueError(f"robot {robot_id} is not on a valid anchor: {anchor}")
    remaining = dist[anchor]
    if remaining is None:
        raise ValueError(f"robot {robot_id} cannot reach its goal from {anchor}")
    name = kind.name
    longest_first = -float(remaining)

    if name == "NS":
        cx2, cy2 = 2 * anchor[0] + cs.rho - 1, 2 * anchor[1] + cs.rho - 1
        near = _components_in_range(grid.obstacle_components, cx2, cy2, kind.z)
        return PriorityScore(-float(near), longest_first, robot_id)
    if name == "CS":
        near = _components_in_range(
            cs.effective_obstacles, 2 * anchor[0], 2 * anchor[1], kind.z
        )
        return PriorityScore(-float(near), longest_first, robot_id)
    if name == "LF":
        return PriorityScore(longest_first, stable_random(seed, robot_id, 2), robot_id)
    if name == "FL":
        fs = forwards_vertices(cs, anchor, tick, goal, dist, bound)
        kappa = _enclosed_original_count(grid, cs, fs)
        return PriorityScore(float(2 ** kappa), longest_first, robot_id)
    if name == "PP-R":
        fs = forwards_vertices(cs, anchor, tick, goal, dist, bound)
        value = path_prospects(cs, fs)
        return PriorityScore(float(value.prospects), stable_random(seed, robot_id, 3), robot_id)
    if name == "PP-LF":
        fs = forwards_vertices(cs, anchor, tick, goal, dist, bound)
        value = path_prospects(cs, fs)
        return PriorityScore(float(value.prospects), longest_first, robot_id)
    if name == "R":
        return PriorityScore(stable_random(seed, robot_id, 1), 0.0, robot_id)
    raise AssertionError(name)
