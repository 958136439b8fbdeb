"""
Tests for macro-tile layouts, ground-truth assemblies and the constraint catalogue
"""
from dataclasses import replace
from itertools import product

import pytest

from utils.errors import AssemblyError, SpecFormatError
from utils.hierarchy import (
    CATALOGUE,
    Assembly,
    Layout,
    MacroTileState,
    build_assembly,
    check_assembly,
    find_counterexamples,
)
from utils.schedule import ZoomSchedule, canonical_alignments
from utils.subshift import SubshiftSpec

C1 = ZoomSchedule.doubling(1)
GOLDEN = SubshiftSpec.builtin("golden_mean")


def test_catalogue_names():
    assert CATALOGUE == ("C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8")


def test_layout_geometry():
    lay = Layout(C1, 1, (0, 1), 3)
    assert lay.span == (-1, 3)
    assert lay.height == 8
    assert len(lay.sites[1]) == 8
    assert len(lay.sites[0]) == 32
    assert lay.tile_count() == 40


def test_layout_rejects_empty_ground_and_bad_alignment():
    with pytest.raises(AssemblyError):
        Layout(C1, 1, (0, 0), 0)
    with pytest.raises(AssemblyError):
        Layout(C1, 2, (0, 1, 0), 4)
    with pytest.raises(AssemblyError):
        build_assembly("", 1, C1)


def test_build_assembly_rejects_non_bits():
    with pytest.raises(SpecFormatError):
        build_assembly("01a", 1, C1)


def test_top_level_tiles_have_no_father():
    a = build_assembly("0101", 2, C1)
    top = a.tile(2, 0, 9)
    assert top.level == 2
    assert top.father_coords is None and top.groups is None
    assert top.own_group.bits == "10"
    assert top.delegated_bit is None


def test_level_zero_tiles_read_the_ground():
    a = build_assembly("0110", 2, C1)
    assert a.tile(0, 2, 0).delegated_bit == (2, 1)
    assert a.tile(0, 3, 0).delegated_bit == (3, 0)
    assert a.tile(0, 2, 1).delegated_bit is None
    # padding columns read as 0
    assert a.tile(0, 6, 0).delegated_bit == (6, 0)


@pytest.mark.parametrize("ground", ["0", "0100", "10101", "001001"])
@pytest.mark.parametrize("K", [1, 2])
def test_ground_truth_assembly_passes(ground, K):
    a = build_assembly(ground, K, C1)
    report = check_assembly(a, GOLDEN)
    assert report.ok, report.to_jsonl()
    assert a.tile_count() == a.layout.tile_count()


def test_ground_truth_assembly_passes_every_alignment():
    for alignment in canonical_alignments(C1, 2):
        a = build_assembly("1001", 2, C1, alignment)
        assert check_assembly(a, GOLDEN).ok


def test_forbidden_factor_inside_a_group_is_caught():
    a = build_assembly("0110", 2, C1, (0, 0, 0))
    report = check_assembly(a, GOLDEN)
    assert report.constraints() == {"C8"}
    assert any("11 at column 1" in e.description for e in report.by_constraint("C8"))


def test_budget_caps_pattern_checks():
    a = build_assembly("0110", 2, C1)
    assert check_assembly(a, GOLDEN, budget=0).ok


def test_flipped_ground_bit_breaks_c3():
    a = build_assembly("0100", 2, C1)
    st = a.tile(0, 2, 0)
    broken = a.replace_tile(0, (2, 0), replace(st, delegated_bit=(2, 1)))
    report = check_assembly(broken, GOLDEN)
    assert "C3" in report.constraints()
    assert check_assembly(a, GOLDEN).ok


def test_flipped_father_bit_breaks_brothers():
    a = build_assembly("0100", 2, C1)
    st = a.tile(0, 2, 0)
    assert st.father_bit == (2, 0)
    broken = a.replace_tile(0, (2, 0), replace(st, father_bit=(2, 1)))
    report = check_assembly(broken, GOLDEN)
    assert {"C2", "C4"} <= report.constraints()


def test_wrong_position_breaks_structure():
    a = build_assembly("0100", 1, C1)
    st = a.tile(0, 1, 0)
    broken = a.replace_tile(0, (1, 0), replace(st, pos_in_father=(0, 1)))
    assert "C1" in check_assembly(broken, GOLDEN).constraints()


def test_missing_tile_is_reported():
    a = build_assembly("01", 1, C1)
    level0 = dict(a.levels[0])
    del level0[(0, 0)]
    broken = replace(a, levels=(level0,) + a.levels[1:])
    report = check_assembly(broken, GOLDEN)
    assert [e.description for e in report.by_constraint("C1")] == ["tile missing"]


def test_check_assembly_schedule_mismatch():
    a = build_assembly("01", 1, C1)
    with pytest.raises(AssemblyError):
        check_assembly(a, GOLDEN, ZoomSchedule.doubling(2))


def test_assembly_json_round_trip():
    a = build_assembly("0100", 1, C1, (0, 1))
    again = Assembly.from_dict(a.to_dict())
    assert again == a
    assert check_assembly(again, GOLDEN).ok
    with pytest.raises(SpecFormatError):
        Assembly.from_dict({"ground": "01"})
    with pytest.raises(SpecFormatError):
        MacroTileState.from_dict({"level": 0})


def test_violation_report_jsonl():
    a = build_assembly("0110", 2, C1)
    report = check_assembly(a, GOLDEN)
    lines = report.to_jsonl().splitlines()
    assert len(lines) == len(report)
    assert '"constraint": "C8"' in lines[0]


@pytest.mark.parametrize("K", [1, 2])
@pytest.mark.parametrize("width", [1, 2, 3, 4])
def test_delegation_has_no_counterexamples(K, width):
    for alignment in canonical_alignments(C1, K):
        assert find_counterexamples(C1, K, width, alignment) == []


@pytest.mark.slow
@pytest.mark.parametrize("K", [1, 2])
@pytest.mark.parametrize("width", range(5, 17))
def test_delegation_has_no_counterexamples_up_to_width_16(K, width):
    for alignment in canonical_alignments(C1, K):
        assert find_counterexamples(C1, K, width, alignment) == []


def test_short_zoom_factor_leaves_bits_unanchored():
    # N(1) = 2 < L(1) = 3: a level-2 bit at offset 2 has no son to confirm it
    s = ZoomSchedule.custom([3, 2, 8])
    found = find_counterexamples(s, 2, 6)
    assert any(c.level == 2 and c.field == "d" and c.reason == "unanchored" for c in found)


@pytest.mark.parametrize("width", [2, 4, 8])
def test_recorded_groups_match_the_ground(width):
    for alignment in canonical_alignments(C1, 2)[:3]:
        assert find_counterexamples(C1, 2, width, alignment, scope="groups") == []


def test_unknown_counterexample_scope():
    with pytest.raises(AssemblyError):
        find_counterexamples(C1, 1, 2, scope="everything")


DELEGATION_CHECKS = {"C1", "C2", "C3", "C4", "C5"}


def _bit_fields(a):
    """(field, level, key, column) for every delegated and father bit of an assembly"""
    fields = []
    for k, states in enumerate(a.levels):
        for key, st in sorted(states.items()):
            if st.delegated_bit is not None:
                fields.append(("d", k, key, st.delegated_bit[0]))
            if st.father_bit is not None:
                fields.append(("f", k, key, st.father_bit[0]))
    return fields


def _with_bits(a, fields, values):
    levels = [dict(states) for states in a.levels]
    for (name, k, key, col), v in zip(fields, values):
        st = levels[k][key]
        if name == "d":
            levels[k][key] = replace(st, delegated_bit=(col, v))
        else:
            levels[k][key] = replace(st, father_bit=(col, v))
    return replace(a, levels=tuple(levels))


def _brute_force_counterexamples(s, width, alignment):
    """Fields that some assembly passing C1..C5 sets apart from the ground"""
    spec = SubshiftSpec.finite([])
    found = set()
    for ground in ("".join(bits) for bits in product("01", repeat=width)):
        a = build_assembly(ground, 1, s, alignment)
        lo, hi = a.layout.span
        fields = _bit_fields(a)
        assert len(fields) <= 16
        for values in product((0, 1), repeat=len(fields)):
            candidate = _with_bits(a, fields, values)
            if check_assembly(candidate, spec).constraints() & DELEGATION_CHECKS:
                continue
            for (name, k, key, col), v in zip(fields, values):
                truth = int(ground[col]) if 0 <= col < width else 0
                if lo <= col < hi and v != truth:
                    found.add((k, key, name))
    return found


@pytest.mark.slow
@pytest.mark.parametrize("width,alignment", [(1, (0, 0)), (1, (0, 1)), (2, (0, 0))])
def test_union_find_search_matches_brute_force(width, alignment):
    """Every bit assignment is checked directly on a two-level schedule"""
    s = ZoomSchedule.custom([2, 2])
    expected = _brute_force_counterexamples(s, width, alignment)
    found = {(c.level, c.position, c.field) for c in find_counterexamples(s, 1, width, alignment)}
    assert found == expected


def test_flipping_every_bit_is_caught():
    s = ZoomSchedule.custom([2, 2])
    a = build_assembly("1", 1, s, (0, 0))
    fields = _bit_fields(a)
    truth = [int(a.ground[col]) if 0 <= col < 1 else 0 for *_, col in fields]
    flipped = _with_bits(a, fields, [1 - v for v in truth])
    assert "C3" in check_assembly(flipped, SubshiftSpec.finite([])).constraints()
    assert not check_assembly(_with_bits(a, fields, truth), SubshiftSpec.finite([])).constraints() & DELEGATION_CHECKS
