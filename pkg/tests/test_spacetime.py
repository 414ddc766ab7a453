import random

import pytest

from prospect_mapf import (
    ConfigSpace,
    GridMap,
    Plan,
    ReservationTable,
    footprints_overlap,
    format_plan,
    parse_plan,
    plan_path,
    transition_conflicts,
)

from oracles import bfs_distance, move_conflicts, spacetime_bfs_arrival


def _empty_cs(w=6, h=6, rho=1):
    return ConfigSpace(GridMap(w, h), rho)


def test_plan_shape_validation():
    with pytest.raises(ValueError):
        Plan(0, (), 1)
    with pytest.raises(ValueError):
        Plan(0, ((0, 0), (1, 1)), 1)  # diagonal step
    plan = Plan(2, ((0, 0), (0, 1), (0, 1)), 1)
    assert plan.end_tick == 4
    assert plan.position(0) == (0, 0)   # clamped before start
    assert plan.position(3) == (0, 1)
    assert plan.position(99) == (0, 1)  # goal hold


def test_reserve_replace_semantics():
    table = ReservationTable()
    table.reserve(7, Plan(0, ((1, 1),), 1))
    assert table.occupied((1, 1), 5, 1)
    table.reserve(7, Plan(0, ((3, 3),), 1))
    assert not table.occupied((1, 1), 5, 1)
    assert table.occupied((3, 3), 0, 1)
    assert len(table) == 1


def test_footprint_overlap_arithmetic():
    # rho=2 at (3,3) covers cells 3..4; rho=1 at (4,4) overlaps it
    assert footprints_overlap((3, 3), 2, (4, 4), 1)
    assert not footprints_overlap((3, 3), 2, (5, 4), 1)
    table = ReservationTable()
    table.reserve(0, Plan(5, ((3, 3),), 2))
    assert not table.is_transition_free((4, 4), (4, 4), 5, 1)
    assert table.is_transition_free((5, 5), (5, 5), 5, 1)


def test_swap_conflict_detected():
    entry = Plan(0, ((1, 0), (0, 0)), 1)
    # we move (0,0)->(1,0) while the entry moves (1,0)->(0,0)
    assert transition_conflicts((0, 0), (1, 0), 0, 1, entry)


def test_same_anchor_same_tick_conflicts():
    entry = Plan(0, ((2, 2),), 3)
    assert transition_conflicts((2, 2), (2, 2), 0, 3, entry)


def test_disjoint_rows_never_conflict():
    entry = Plan(0, tuple((x, 0) for x in range(5)), 1)
    for t in range(6):
        assert not transition_conflicts((0, 3), (1, 3), t, 1, entry)


def test_plan_path_empty_table_is_shortest():
    cs = _empty_cs()
    plan = plan_path(cs, (0, 0), 0, (5, 5), ReservationTable(), t_max=100)
    assert plan is not None
    assert plan.end_tick == 10 == bfs_distance(cs.grid, 1, (0, 0), (5, 5))
    assert len(set(plan.anchors)) == len(plan.anchors)  # no waits needed


def test_plan_path_unreachable_goal_fails():
    gm = GridMap(5, 5, [(2, y) for y in range(5)])
    cs = ConfigSpace(gm, 1)
    assert plan_path(cs, (0, 0), 0, (4, 4), ReservationTable(), t_max=200) is None


def test_plan_path_waits_out_a_corridor_crossing():
    # single-cell corridor at y=1 with one passing bay at (3,2); a
    # higher-priority robot sweeps the corridor westward and parks on our
    # vacated start, so we must duck into the bay and follow behind it
    gm = GridMap(
        7, 3,
        [(x, 0) for x in range(7)] + [(x, 2) for x in range(7) if x not in (3,)],
    )
    cs = ConfigSpace(gm, 1)
    table = ReservationTable()
    table.reserve(
        1,
        Plan(4, ((6, 1), (5, 1), (4, 1), (3, 1), (2, 1), (1, 1), (0, 1)), 1),
    )
    plan = plan_path(cs, (0, 1), 0, (6, 1), table, t_max=100)
    assert plan is not None
    oracle = spacetime_bfs_arrival(gm, 1, (0, 1), 0, (6, 1), table.plans(), 100)
    assert plan.end_tick == oracle
    for t in range(plan.start_tick, plan.end_tick):
        for entry in table.plans():
            assert not move_conflicts(plan.position(t), plan.position(t + 1), t, 1, entry)


def test_plan_path_holds_goal_safely():
    # entry parks on (2,0) forever; our goal (2,2) must still be holdable
    cs = _empty_cs(3, 3)
    table = ReservationTable()
    table.reserve(0, Plan(0, ((2, 1), (2, 0)), 1))
    plan = plan_path(cs, (0, 0), 0, (2, 2), table, t_max=60)
    assert plan is not None
    assert plan.anchors[-1] == (2, 2)


def test_plan_path_goal_parked_on_forever_fails():
    cs = _empty_cs(4, 4)
    table = ReservationTable()
    table.reserve(0, Plan(0, ((3, 2), (3, 3)), 1))  # parks on our goal
    assert plan_path(cs, (0, 0), 0, (3, 3), table, t_max=80) is None


def test_plan_path_respects_t_max():
    cs = _empty_cs(6, 6)
    assert plan_path(cs, (0, 0), 0, (5, 5), ReservationTable(), t_max=9) is None
    assert plan_path(cs, (0, 0), 0, (5, 5), ReservationTable(), t_max=10) is not None


def _random_instance(rng):
    while True:
        w = rng.randint(5, 15)
        h = rng.randint(5, 15)
        cells = {
            (rng.randrange(w), rng.randrange(h))
            for _ in range(rng.randint(0, (w * h) // 5))
        }
        gm = GridMap(w, h, cells)
        rho = rng.choice((1, 1, 2))
        if rho > min(w, h):
            continue
        cs = ConfigSpace(gm, rho)
        valid = sorted(cs.iter_valid())
        if len(valid) < 4:
            continue
        start, goal = rng.sample(valid, 2)
        field = cs.distance_field(goal)
        if field[start] is None:
            continue
        table = ReservationTable()
        entries = rng.randint(0, 4)
        placed = 0
        for owner in range(entries):
            a = valid[rng.randrange(len(valid))]
            if footprints_overlap(a, rho, start, rho):
                continue
            steps = [a]
            for _ in range(rng.randint(0, 12)):
                x, y = steps[-1]
                options = [(x, y)] + [
                    nb for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))
                    if cs.is_valid(*nb)
                ]
                steps.append(options[rng.randrange(len(options))])
            erho = rng.choice((1, rho))
            entry = Plan(rng.randint(0, 3), tuple(steps), erho)
            # entry anchors must be valid for its own rho
            if all(
                0 <= ax <= cs.grid.width - erho and 0 <= ay <= cs.grid.height - erho
                and all(
                    cs.grid.is_free(cx, cy)
                    for cx in range(ax, ax + erho)
                    for cy in range(ay, ay + erho)
                )
                for ax, ay in entry.anchors
            ):
                if not footprints_overlap(entry.position(0), erho, start, rho):
                    table.reserve(owner, entry)
                    placed += 1
        return cs, start, goal, table


def test_plan_path_matches_spacetime_bfs_on_random_instances():
    rng = random.Random(2024)
    checked = 0
    for _ in range(80):
        cs, start, goal, table = _random_instance(rng)
        t_max = 60
        oracle = spacetime_bfs_arrival(
            cs.grid, cs.rho, start, 0, goal, table.plans(), t_max
        )
        plan = plan_path(cs, start, 0, goal, table, t_max)
        if oracle is None:
            assert plan is None
            continue
        checked += 1
        assert plan is not None, f"planner failed where oracle found {oracle}"
        assert plan.end_tick == oracle
        # safety: every transition clears every entry (independent checker)
        for t in range(plan.start_tick, plan.end_tick + 1):
            for entry in table.plans():
                assert not move_conflicts(
                    plan.position(t), plan.position(t + 1), t, cs.rho, entry
                )
        # ticks-monotone: each step waits or moves to a 4-neighbor
        for a, b in zip(plan.anchors, plan.anchors[1:]):
            assert abs(a[0] - b[0]) + abs(a[1] - b[1]) <= 1
    assert checked >= 30


def test_plan_record_round_trip():
    plan = Plan(4, ((1, 2), (1, 3), (2, 3)), 2)
    line = format_plan(9, plan)
    assert line == "robot 9 rho 2 t0 4 : (1,2) (1,3) (2,3)"
    owner, parsed = parse_plan(line)
    assert owner == "9"
    assert parsed == plan
