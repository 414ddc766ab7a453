import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prospect_mapf import (
    ConfigSpace,
    Footprint,
    GridMap,
    MapFormatError,
    build_config_space,
    load_map,
    true_distance_field,
)

from oracles import bfs_distance, naive_valid


def test_load_empty_3x3():
    gm = load_map("...\n...\n...")
    assert gm.width == 3 and gm.height == 3
    assert gm.obstacle_count == 0
    assert gm.obstacle_components == ()


def test_load_single_center_obstacle():
    gm = load_map("...\n.#.\n...")
    assert gm.obstacle_count == 1
    assert gm.obstacle_components == (frozenset({(1, 1)}),)


def test_diagonal_cells_are_one_component():
    gm = load_map("#..\n.#.\n...")
    assert len(gm.obstacle_components) == 1


def test_components_partition_obstacles():
    rng = random.Random(5)
    for _ in range(25):
        w, h = rng.randint(2, 12), rng.randint(2, 12)
        cells = {
            (rng.randrange(w), rng.randrange(h)) for _ in range(rng.randint(0, w * h // 2))
        }
        gm = GridMap(w, h, cells)
        comps = gm.obstacle_components
        union = set()
        for c in comps:
            assert not (union & c)  # pairwise disjoint
            union |= c
        assert union == cells


@pytest.mark.parametrize(
    "text",
    ["", "...\n..", "..x\n...", "\n\n"],
)
def test_load_rejects_bad_input(text):
    with pytest.raises(MapFormatError):
        load_map(text)


def test_header_round_trip():
    gm = load_map("..#\n...\n#..")
    text = gm.to_text()
    assert text.startswith("# grid 3 3\n")
    again = load_map(text)
    assert again.to_text() == text


def test_header_dimension_mismatch():
    with pytest.raises(MapFormatError):
        load_map("# grid 4 2\n...\n...")


def test_footprint_validation():
    with pytest.raises(ValueError):
        Footprint(0)


def test_config_space_empty_5x5_rho2():
    gm = GridMap(5, 5)
    cs = build_config_space(gm, Footprint(2))
    assert (cs.anchor_width, cs.anchor_height) == (4, 4)
    assert cs.valid_count() == 16


def test_config_space_blocked_anchors_around_obstacle():
    gm = GridMap(5, 5, [(2, 2)])
    cs = build_config_space(gm, 2)
    blocked = {a for a in ((x, y) for x in range(4) for y in range(4)) if not cs.is_valid(*a)}
    assert blocked == {(1, 1), (1, 2), (2, 1), (2, 2)}
    assert cs.valid_count() == 12


def test_validity_matches_naive_window_check():
    rng = random.Random(11)
    for _ in range(20):
        w, h = rng.randint(3, 10), rng.randint(3, 10)
        cells = {(rng.randrange(w), rng.randrange(h)) for _ in range(rng.randint(0, 12))}
        gm = GridMap(w, h, cells)
        for rho in (1, 2, 3):
            if rho > min(w, h):
                continue
            cs = ConfigSpace(gm, rho)
            for ax in range(-1, cs.anchor_width + 1):
                for ay in range(-1, cs.anchor_height + 1):
                    assert cs.is_valid(ax, ay) == naive_valid(gm, rho, (ax, ay))


def test_effective_obstacles_merge_under_inflation():
    # two blocks one cell apart: separate for rho=1, merged for rho=2
    gm = GridMap(9, 7, [(3, 2), (3, 4)])
    cs1 = ConfigSpace(gm, 1)
    cs2 = ConfigSpace(gm, 2)
    assert len(cs1.effective_obstacles) == 2
    assert len(cs2.effective_obstacles) == 1


def test_footprint_too_large():
    gm = GridMap(4, 4)
    with pytest.raises(ValueError):
        build_config_space(gm, 5)


def test_monotone_merging_and_erosion():
    rng = random.Random(23)
    for _ in range(15):
        w, h = rng.randint(6, 14), rng.randint(6, 14)
        cells = {(rng.randrange(w), rng.randrange(h)) for _ in range(rng.randint(0, 20))}
        gm = GridMap(w, h, cells)
        spaces = [ConfigSpace(gm, rho) for rho in range(1, min(w, h, 5) + 1)]
        for small, big in zip(spaces, spaces[1:]):
            assert len(big.effective_obstacles) <= len(small.effective_obstacles)
            for (x, y) in big.iter_valid():
                assert small.is_valid(x, y)  # erosion consistency


def test_true_distance_empty_map():
    gm = GridMap(3, 3)
    cs = ConfigSpace(gm, 1)
    field = true_distance_field(cs, (2, 2))
    assert field[(2, 2)] == 0
    assert field[(0, 0)] == 4


def test_true_distance_goal_blocked():
    gm = GridMap(3, 3, [(1, 1)])
    cs = ConfigSpace(gm, 1)
    with pytest.raises(ValueError):
        true_distance_field(cs, (1, 1))


def test_true_distance_detour_matches_bfs_oracle():
    gm = load_map(
        "........\n"
        ".######.\n"
        ".#....#.\n"
        ".#.##.#.\n"
        "...##...\n"
        "........"
    )
    cs = ConfigSpace(gm, 1)
    goal = (4, 2)
    field = true_distance_field(cs, goal)
    for ax in range(cs.anchor_width):
        for ay in range(cs.anchor_height):
            if cs.is_valid(ax, ay):
                assert field[(ax, ay)] == bfs_distance(gm, 1, (ax, ay), goal)


def test_distance_field_local_consistency():
    rng = random.Random(3)
    for _ in range(10):
        w, h = rng.randint(5, 12), rng.randint(5, 12)
        cells = {(rng.randrange(w), rng.randrange(h)) for _ in range(rng.randint(0, 15))}
        gm = GridMap(w, h, cells)
        cs = ConfigSpace(gm, 1)
        valid = list(cs.iter_valid())
        if not valid:
            continue
        goal = valid[rng.randrange(len(valid))]
        field = true_distance_field(cs, goal)
        for (x, y) in valid:
            if field[(x, y)] is None:
                continue
            for nb in cs.neighbors4((x, y)):
                if field[nb] is not None:
                    assert abs(field[(x, y)] - field[nb]) <= 1


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 8),
    st.integers(2, 8),
    st.sets(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=20),
)
def test_component_extraction_idempotent(w, h, cells):
    cells = {(x, y) for (x, y) in cells if x < w and y < h}
    gm = GridMap(w, h, cells)
    first = gm.obstacle_components
    again = GridMap(w, h, cells).obstacle_components
    assert first == again
    union = set().union(*first) if first else set()
    assert union == cells
