"""
Tests for the tiling search, periodic search and CNF export
"""
import itertools
import random

import pytest

from utils.core import Patch, WangTile, WangTileSet, check_wang
from utils.errors import (
    InconsistentBoundaryError,
    ResourceLimitError,
    SpecFormatError,
    TilingError,
)
from utils.solver import (
    LIMIT,
    SAT,
    UNSAT,
    BoundaryConstraint,
    decode_model,
    export_cnf,
    find_periodic,
    parse_dimacs,
    solve_cnf,
    tile_region,
)

# T0 and T1 must alternate along a row; rows are independent
ALTERNATING = WangTileSet(2, (WangTile(0, 1, 0, 0), WangTile(0, 0, 0, 1)))


def _respects(tiles, tiling, bc):
    w, h = tiling.width, tiling.height
    ts = tiles.tiles

    def ok(spec, color):
        if spec is None:
            return True
        return color == spec if isinstance(spec, int) else color in spec

    for x in range(w):
        if bc.north and not ok(bc.north[x], ts[tiling.at(x, 0)].north):
            return False
        if bc.south and not ok(bc.south[x], ts[tiling.at(x, h - 1)].south):
            return False
    for y in range(h):
        if bc.west and not ok(bc.west[y], ts[tiling.at(0, y)].west):
            return False
        if bc.east and not ok(bc.east[y], ts[tiling.at(w - 1, y)].east):
            return False
    return True


def test_single_tile_tiles_everything():
    tiles = WangTileSet(1, (WangTile(0, 0, 0, 0),))
    result = tile_region(tiles, 3, 2, count=None)
    assert result.status == SAT
    assert len(result.tilings) == 1
    assert result.stats.complete


def test_enumeration_counts_alternating_rows():
    result = tile_region(ALTERNATING, 3, 2, count=None)
    assert result.status == SAT
    assert len(result.tilings) == 4
    for tiling in result.tilings:
        assert check_wang(ALTERNATING, tiling) == []


def test_unsat_is_exhaustive():
    only_t0 = WangTileSet(2, (WangTile(0, 1, 0, 0),))
    result = tile_region(only_t0, 2, 1)
    assert result.status == UNSAT
    assert result.witness is None
    assert result.stats.complete


def test_isolated_cell_without_candidates_is_unsat():
    """A lone cell emptied by its side colors has no neighbors to propagate to"""
    tiles = WangTileSet(2, (WangTile(0, 0, 0, 0),))
    result = tile_region(tiles, 1, 1, BoundaryConstraint(north=(1,)))
    assert result.status == UNSAT
    assert result.tilings == []

    wide = tile_region(tiles, 3, 1, BoundaryConstraint(north=(0, 1, 0)), count=None)
    assert wide.status == UNSAT


def test_side_colors_and_fixed_cells():
    result = tile_region(ALTERNATING, 3, 1, BoundaryConstraint(west=(1,)))
    assert result.witness.cells == (1, 0, 1)

    result = tile_region(ALTERNATING, 3, 1, BoundaryConstraint(fixed=(((1, 0), 1),)))
    assert result.witness.cells == (0, 1, 0)

    result = tile_region(ALTERNATING, 2, 1, BoundaryConstraint(east=(frozenset({0, 1}),), west=(1,)))
    assert result.witness.cells == (1, 0)


def test_inconsistent_fixed_cells_raise():
    with pytest.raises(InconsistentBoundaryError):
        tile_region(ALTERNATING, 2, 1, BoundaryConstraint(fixed=(((0, 0), 0), ((1, 0), 0))))
    with pytest.raises(InconsistentBoundaryError):
        tile_region(ALTERNATING, 2, 1, BoundaryConstraint(west=(1,), fixed=(((0, 0), 0),)))
    with pytest.raises(InconsistentBoundaryError):
        tile_region(ALTERNATING, 2, 1, BoundaryConstraint(north=(0,)))


def test_bad_region_and_budget():
    with pytest.raises(SpecFormatError):
        tile_region(ALTERNATING, 0, 2)
    with pytest.raises(SpecFormatError):
        tile_region(ALTERNATING, 2, 2, limit=-1)
    assert tile_region(ALTERNATING, 4, 4, limit=0).status == LIMIT


def test_empty_tile_set_is_unsat():
    assert tile_region(WangTileSet(1, ()), 1, 1).status == UNSAT


def test_boundary_json_round_trip():
    bc = BoundaryConstraint(north=(frozenset({0, 2}), None), west=(1,), fixed=(((0, 0), 1),))
    assert BoundaryConstraint.from_dict(bc.to_dict()) == bc
    assert BoundaryConstraint.from_dict(None) == BoundaryConstraint()


def test_find_periodic_smallest_torus():
    found = find_periodic(ALTERNATING, 3)
    assert found.period == (2, 1)
    assert check_wang(ALTERNATING, found.tiling, wrap=True) == []

    only_t0 = WangTileSet(2, (WangTile(0, 1, 0, 0),))
    assert find_periodic(only_t0, 3) is None
    with pytest.raises(SpecFormatError):
        find_periodic(ALTERNATING, 0)


def test_export_cnf_header():
    text = export_cnf(ALTERNATING, 2, 1)
    nvars, clauses = parse_dimacs(text)
    assert text.startswith("p cnf 4 ")
    assert nvars == 4
    assert len(clauses) == int(text.split("\n")[0].split()[3])


def test_parse_dimacs_errors():
    with pytest.raises(SpecFormatError):
        parse_dimacs("1 -2 0\n")
    with pytest.raises(SpecFormatError):
        parse_dimacs("p dnf 2 1\n1 0\n")
    assert parse_dimacs("c comment\np cnf 2 2\n1 -2 0\n2\n") == (2, [[1, -2], [2]])


def test_solve_cnf_limits_and_backends():
    text = export_cnf(ALTERNATING, 3, 1)
    with pytest.raises(ResourceLimitError):
        solve_cnf(text, var_cap=2)
    with pytest.raises(SpecFormatError):
        solve_cnf(text, backend="minisat")
    model = solve_cnf(text, var_cap=6)
    assert check_wang(ALTERNATING, decode_model(model, 2, 3, 1)) == []


def test_decode_model_needs_exactly_one_tile():
    with pytest.raises(TilingError):
        decode_model([1, 2], 2, 1, 1)


def _random_instance(rng):
    ntiles = rng.randint(1, 3)
    tiles = rng.sample(list(itertools.product(range(2), repeat=4)), ntiles)
    tileset = WangTileSet(2, tuple(WangTile(*t) for t in tiles))
    w, h = rng.choice([(w, h) for w in range(1, 5) for h in range(1, 5) if w * h * ntiles <= 12])
    bc = BoundaryConstraint(
        west=tuple(rng.choice([None, 0, 1]) for _ in range(h)) if rng.random() < 0.5 else None,
        south=tuple(rng.choice([None, 0, 1]) for _ in range(w)) if rng.random() < 0.5 else None,
    )
    return tileset, w, h, bc


def test_cnf_agrees_with_search():
    """The brute-force CNF verdict matches the search on random small instances"""
    rng = random.Random(2024)
    for _ in range(50):
        tiles, w, h, bc = _random_instance(rng)
        result = tile_region(tiles, w, h, bc)
        model = solve_cnf(export_cnf(tiles, w, h, bc), var_cap=12)
        assert (model is not None) == (result.status == SAT)
        if model is not None:
            tiling = decode_model(model, len(tiles), w, h)
            assert check_wang(tiles, tiling) == []
            assert _respects(tiles, tiling, bc)


def test_cnf_agrees_with_search_pycosat():
    pycosat = pytest.importorskip("pycosat")
    assert pycosat
    rng = random.Random(99)
    for _ in range(20):
        tiles, w, h, bc = _random_instance(rng)
        model = solve_cnf(export_cnf(tiles, w, h, bc), backend="pycosat")
        assert (model is not None) == (tile_region(tiles, w, h, bc).status == SAT)
