"""
Tests for alphabets, patches, local rules and the rule -> Wang reduction
"""
import itertools

import pytest

from utils.core import (
    BITS,
    Alphabet,
    LocalRule,
    Patch,
    ProjectionMap,
    WangTile,
    WangTileSet,
    check_local_rule,
    check_wang,
    embed,
    forbidden_vertical_pairs,
    project,
    rule_to_wang,
    vertical_constancy_rule,
    wang_to_patch,
)
from utils.errors import (
    AlphabetMismatchError,
    IndexOutOfRangeError,
    NonConstantColumnError,
    SpecFormatError,
)
from utils.solver import SAT, tile_region

ALL_ONES = LocalRule(2, BITS, (Patch(2, 2, (1, 1, 1, 1)),))


def _valid_patches(rule, w, h):
    return [
        cells
        for cells in itertools.product(range(rule.alphabet.size), repeat=w * h)
        if not check_local_rule(rule, Patch(w, h, cells))
    ]


def test_alphabet_rejects_duplicates_and_empty():
    with pytest.raises(SpecFormatError):
        Alphabet(("a", "a"))
    with pytest.raises(SpecFormatError):
        Alphabet(())
    assert BITS.index("1") == 1
    with pytest.raises(IndexOutOfRangeError):
        BITS.index("2")


def test_patch_shape_is_checked():
    with pytest.raises(SpecFormatError):
        Patch(2, 2, (0, 1, 0))
    p = Patch.from_rows([[0, 1], [1, 0]])
    assert p.at(1, 0) == 1
    assert p.rows() == [(0, 1), (1, 0)]
    assert Patch.from_dict(p.to_dict()) == p


def test_local_rule_rejects_wrong_pattern_size():
    with pytest.raises(SpecFormatError):
        LocalRule(2, BITS, (Patch(1, 1, (0,)),))
    with pytest.raises(AlphabetMismatchError):
        LocalRule(1, BITS, (Patch(1, 1, (2,)),))


def test_check_local_rule_lists_every_window():
    patch = Patch.from_rows([[1, 1, 1], [1, 1, 0]])
    found = check_local_rule(ALL_ONES, patch)
    assert [v.position for v in found] == [(0, 0)]

    patch = Patch.from_rows([[1, 1, 1], [1, 1, 1], [0, 1, 1]])
    assert [v.position for v in check_local_rule(ALL_ONES, patch)] == [(0, 0), (1, 0), (1, 1)]


def test_check_local_rule_small_patch_has_no_windows():
    assert check_local_rule(ALL_ONES, Patch(1, 5, (1,) * 5)) == []


def test_check_local_rule_alphabet_mismatch():
    with pytest.raises(AlphabetMismatchError):
        check_local_rule(ALL_ONES, Patch(2, 2, (0, 0, 0, 0)), Alphabet(("a", "b", "c")))
    with pytest.raises(AlphabetMismatchError):
        check_local_rule(ALL_ONES, Patch(2, 2, (0, 0, 0, 3)))


def test_wang_tile_set_rejects_duplicates_and_bad_colors():
    t = WangTile(0, 0, 0, 0)
    with pytest.raises(SpecFormatError):
        WangTileSet(1, (t, t))
    with pytest.raises(IndexOutOfRangeError):
        WangTileSet(1, (WangTile(0, 1, 0, 0),))
    with pytest.raises(SpecFormatError):
        WangTileSet.from_dict({"colors": 1, "tiles": []})


def test_check_wang_reports_mismatches():
    tiles = WangTileSet(2, (WangTile(0, 1, 0, 0), WangTile(0, 0, 1, 1)))
    good = Patch(2, 1, (0, 1))
    assert check_wang(tiles, good) == []

    bad = Patch(1, 2, (1, 1))
    found = check_wang(tiles, bad)
    assert len(found) == 1
    assert found[0].side == "S"
    assert found[0].colors == (1, 0)

    # on the torus the row closes cleanly but tile 1 meets itself vertically
    wrapped = check_wang(tiles, good, wrap=True)
    assert [(v.cell, v.side) for v in wrapped] == [((1, 0), "S")]


def test_check_wang_rejects_unknown_tile():
    tiles = WangTileSet(1, (WangTile(0, 0, 0, 0),))
    with pytest.raises(IndexOutOfRangeError):
        check_wang(tiles, Patch(1, 1, (3,)))


def test_project_and_embed():
    word = (0, 1, 1, 0)
    patch = embed(word, 3)
    assert patch.height == 3
    assert project(patch, ProjectionMap.identity(BITS)) == word


def test_project_rejects_non_constant_column():
    patch = Patch.from_rows([[0, 1], [0, 0]])
    with pytest.raises(NonConstantColumnError) as info:
        project(patch, ProjectionMap.identity(BITS))
    assert info.value.column == 1


def test_projection_through_larger_alphabet():
    abc = Alphabet(("a", "b", "c"))
    pi = ProjectionMap((0, 1, 1), BITS)
    patch = Patch.from_rows([[0, 1], [0, 2]])
    assert project(patch, pi) == (0, 1)
    with pytest.raises(IndexOutOfRangeError):
        ProjectionMap((0, 2, 1), BITS)
    assert abc.size == 3


def test_vertical_constancy_rule():
    rule = vertical_constancy_rule(BITS, ProjectionMap.identity(BITS))
    assert check_local_rule(rule, embed((0, 1, 1, 0, 1), 4)) == []
    assert check_local_rule(rule, Patch.from_rows([[0, 1], [0, 0]]))
    assert forbidden_vertical_pairs(rule) == {(0, 1), (1, 0)}
    assert forbidden_vertical_pairs(ALL_ONES) == set()


AB = Alphabet(("a", "b"))


def _rule_family():
    """Every rule over {a, b} with M <= 2 and at most two forbidden blocks"""
    rules = []
    for m in (1, 2):
        blocks = [Patch(m, m, cells) for cells in itertools.product(range(2), repeat=m * m)]
        for r in range(3):
            rules.extend(LocalRule(m, AB, chosen) for chosen in itertools.combinations(blocks, r))
    return rules


RULE_FAMILY = _rule_family()


def _rule_id(rule):
    return f"M{rule.M}-" + ("-".join("".join(map(str, p.cells)) for p in rule.forbidden) or "none")


def _has_valid_patch(rule, w, h):
    """Row-by-row reachability over w-letter rows, for h >= 2"""
    rows = list(itertools.product(range(2), repeat=w))
    fits = {(a, b) for a in rows for b in rows if not check_local_rule(rule, Patch.from_rows([a, b]))}
    reachable = set(rows)
    for _ in range(h - 1):
        reachable = {b for a in reachable for b in rows if (a, b) in fits}
    return bool(reachable)


def test_rule_family_size():
    assert len(RULE_FAMILY) == (1 + 2 + 1) + (1 + 16 + 120)


@pytest.mark.parametrize("rule", RULE_FAMILY, ids=_rule_id)
def test_rule_to_wang_matches_rule(rule):
    """Block tilings correspond one to one with legal letter patches up to 3x3"""
    reduction = rule_to_wang(rule)
    m = rule.M
    for w in range(m, 4):
        for h in range(m, 4):
            tilings = tile_region(reduction.tiles, w - m + 1, h - m + 1, count=None).tilings
            patches = {wang_to_patch(t, reduction, m).cells for t in tilings}
            assert patches == set(_valid_patches(rule, w, h)), (w, h)
            assert len(patches) == len(tilings)


@pytest.mark.slow
@pytest.mark.parametrize("rule", RULE_FAMILY, ids=_rule_id)
def test_rule_to_wang_decides_patches_up_to_four(rule):
    """Tileability agrees with the letter rule on every region up to 4x4"""
    reduction = rule_to_wang(rule)
    m = rule.M
    for w in range(2, 5):
        for h in range(2, 5):
            expected = _has_valid_patch(rule, w, h)
            result = tile_region(reduction.tiles, w - m + 1, h - m + 1)
            assert (result.status == SAT) == expected, (w, h)
            if result.witness is not None:
                patch = wang_to_patch(result.witness, reduction, m)
                assert (patch.width, patch.height) == (w, h)
                assert check_local_rule(rule, patch) == []


def test_rule_to_wang_drops_forbidden_blocks():
    reduction = rule_to_wang(ALL_ONES)
    assert len(reduction.tiles) == 15
    assert all(b.cells != (1, 1, 1, 1) for b in reduction.blocks)
    assert reduction.letter_of == tuple(b.cells[0] for b in reduction.blocks)


def test_rule_to_wang_everything_forbidden():
    rule = LocalRule(1, BITS, (Patch(1, 1, (0,)), Patch(1, 1, (1,))))
    reduction = rule_to_wang(rule)
    assert len(reduction.tiles) == 0
    assert tile_region(reduction.tiles, 2, 2).status == "UNSAT"
