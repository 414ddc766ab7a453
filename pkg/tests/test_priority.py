import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prospect_mapf import (
    ConfigSpace,
    GridMap,
    HeuristicKind,
    PriorityScore,
    compare,
    compute_priority,
    forwards_vertices,
    parse_heuristic,
    path_prospects,
)

from layouts import box_map, gap_pair


def _ctx(grid, rho, start, goal):
    cs = ConfigSpace(grid, rho)
    dist = cs.distance_field(goal)
    return dict(grid=grid, cs=cs, dist=dist, anchor=start, tick=0, goal=goal,
                bound=dist[start] + 6)


def test_heuristic_kind_validation():
    with pytest.raises(ValueError):
        HeuristicKind("XX")
    with pytest.raises(ValueError):
        HeuristicKind("NS", z=-1)
    assert parse_heuristic(" PP-LF ").name == "PP-LF"


def test_compare_examples():
    assert compare(PriorityScore(2, 5, 1), PriorityScore(8, 0, 2)) == "a_higher"
    assert compare(PriorityScore(4, -12, 1), PriorityScore(4, -7, 2)) == "a_higher"
    assert compare(PriorityScore(4, -9, 1), PriorityScore(4, -9, 2)) == "a_higher"
    with pytest.raises(ValueError):
        compare(PriorityScore(1, 1, 3), PriorityScore(2, 2, 3))


@settings(max_examples=100, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(-5, 5), st.integers(-5, 5)),
        min_size=2,
        max_size=8,
    )
)
def test_compare_total_order(vals):
    scores = [PriorityScore(p, t, i) for i, (p, t) in enumerate(vals)]
    # antisymmetry and totality
    for a in scores:
        for b in scores:
            if a.robot_id == b.robot_id:
                continue
            assert a.precedes(b) != b.precedes(a)
    # sorting by key yields a strict chain
    ordered = sorted(scores, key=PriorityScore.sort_key)
    for x, y in zip(ordered, ordered[1:]):
        assert x.precedes(y)


def test_pp_direction_fewer_prospects_wins():
    grid, s1, g1, s2, g2 = gap_pair()
    a = compute_priority(HeuristicKind("PP-LF"), robot_id=1, seed=0,
                         **_ctx(grid, 2, s2, g2))
    b = compute_priority(HeuristicKind("PP-LF"), robot_id=2, seed=0,
                         **_ctx(grid, 1, s1, g1))
    assert a.primary == 2.0 and b.primary == 4.0
    assert compare(a, b) == "a_higher"


def test_pp_lf_tiebreak_prefers_longer_remaining():
    # same prospects (open map), distances 12 vs 7
    grid = GridMap(16, 16)
    a = compute_priority(HeuristicKind("PP-LF"), robot_id=1, seed=0,
                         **_ctx(grid, 1, (0, 0), (12, 0)))
    b = compute_priority(HeuristicKind("PP-LF"), robot_id=2, seed=0,
                         **_ctx(grid, 1, (0, 2), (7, 2)))
    assert a.primary == b.primary == 1.0
    assert a.tiebreak == -12.0 and b.tiebreak == -7.0
    assert compare(a, b) == "a_higher"


def test_random_kind_is_deterministic():
    grid = GridMap(10, 10)
    ctx = _ctx(grid, 1, (0, 0), (9, 9))
    a = compute_priority(HeuristicKind("R"), robot_id=3, seed=42, **ctx)
    b = compute_priority(HeuristicKind("R"), robot_id=3, seed=42, **ctx)
    assert a == b
    c = compute_priority(HeuristicKind("R"), robot_id=3, seed=43, **ctx)
    assert a != c


def test_ns_counts_components_within_range():
    # two obstacle components: one adjacent, one far outside range z=2
    grid = GridMap(20, 9, [(3, 3), (3, 4), (15, 4)])
    score = compute_priority(HeuristicKind("NS", z=2), robot_id=0, seed=0,
                             **_ctx(grid, 1, (2, 4), (10, 8)))
    assert score.primary == -1.0
    wide = compute_priority(HeuristicKind("NS", z=30), robot_id=0, seed=0,
                            **_ctx(grid, 1, (2, 4), (10, 8)))
    assert wide.primary == -2.0


def test_cs_counts_effective_components():
    # two cells one apart: rho=1 sees two effective obstacles, rho=2 one
    grid = GridMap(12, 9, [(4, 3), (4, 5)])
    small = compute_priority(HeuristicKind("CS", z=4), robot_id=0, seed=0,
                             **_ctx(grid, 1, (2, 4), (10, 4)))
    big = compute_priority(HeuristicKind("CS", z=4), robot_id=0, seed=0,
                           **_ctx(grid, 2, (1, 3), (9, 3)))
    assert small.primary == -2.0
    assert big.primary == -1.0


def test_fl_counts_original_components_in_forward_area():
    # gap pair: the rho=2 robot merges them into one effective obstacle, but
    # FL still counts the two original components enclosed by its area
    grid, s1, g1, s2, g2 = gap_pair()
    fl = compute_priority(HeuristicKind("FL"), robot_id=0, seed=0,
                          **_ctx(grid, 2, s2, g2))
    pp = compute_priority(HeuristicKind("PP-LF"), robot_id=0, seed=0,
                          **_ctx(grid, 2, s2, g2))
    assert fl.primary == 4.0   # 2**2 original components
    assert pp.primary == 2.0   # 2**1 effective obstacle


def test_fl_equals_pp_for_unit_footprint():
    grid, s, g = gap_pair()[0], (1, 4), (7, 4)
    fl = compute_priority(HeuristicKind("FL"), robot_id=0, seed=0,
                          **_ctx(grid, 1, s, g))
    pp = compute_priority(HeuristicKind("PP-LF"), robot_id=0, seed=0,
                          **_ctx(grid, 1, s, g))
    assert fl.primary == pp.primary == 4.0


def test_lf_depends_only_on_position():
    grid = box_map(12, 12)
    ctx1 = _ctx(grid, 1, (1, 1), (10, 10))
    a = compute_priority(HeuristicKind("LF"), robot_id=5, seed=7, **ctx1)
    ctx2 = dict(ctx1, tick=9, bound=99)
    b = compute_priority(HeuristicKind("LF"), robot_id=5, seed=7, **ctx2)
    assert a == b
    ctx3 = dict(ctx1, anchor=(2, 1))
    c = compute_priority(HeuristicKind("LF"), robot_id=5, seed=7, **ctx3)
    assert c.primary == a.primary + 1  # one step closer


def test_pp_primary_matches_prospects_module():
    grid, s, g = gap_pair()[0], (1, 4), (7, 4)
    cs = ConfigSpace(grid, 1)
    dist = cs.distance_field(g)
    bound = dist[s] + 6
    fs = forwards_vertices(cs, s, 0, g, dist, bound)
    direct = path_prospects(cs, fs).prospects
    score = compute_priority(HeuristicKind("PP-R"), robot_id=0, seed=0,
                             grid=grid, cs=cs, dist=dist, anchor=s, tick=0,
                             goal=g, bound=bound)
    assert score.primary == float(direct)


def test_errors_on_bad_robot_state():
    grid = GridMap(6, 6, [(2, 2)])
    cs = ConfigSpace(grid, 1)
    dist = cs.distance_field((5, 5))
    with pytest.raises(ValueError):
        compute_priority(HeuristicKind("LF"), grid=grid, cs=cs, dist=dist,
                         anchor=(2, 2), tick=0, goal=(5, 5), bound=20,
                         robot_id=0, seed=0)
