"""
Tests for zoom schedules, block arithmetic and margin validation
"""
import pytest

from utils.errors import AssemblyError, ScheduleError
from utils.schedule import (
    GroupSlot,
    Margins,
    ZoomSchedule,
    block_of,
    block_start,
    canonical_alignments,
    covering_block,
    delegated_bit_index,
    extended_zone,
    group_assignment,
    group_length,
    side_L,
    validate_alignment,
    validate_schedule,
    window_coverage,
    zoom_N,
)

C1 = ZoomSchedule.doubling(1)
EVEN = ZoomSchedule.custom([2, 4, 16], [0, 1, 5])


def test_doubling_schedule_values():
    assert [zoom_N(C1, k) for k in range(4)] == [2, 4, 16, 256]
    assert [side_L(C1, k) for k in range(4)] == [1, 2, 8, 128]
    assert [group_length(C1, k) for k in range(4)] == [0, 1, 2, 3]


def test_doubling_schedule_exact_at_high_levels():
    s = ZoomSchedule.doubling(16)
    for k in range(9):
        assert zoom_N(s, k) == 2 ** 16 * side_L(s, k)
    assert zoom_N(s, 8).bit_length() == 16 * 256 + 1


def test_custom_schedule():
    assert EVEN.max_level == 2
    assert [side_L(EVEN, k) for k in range(3)] == [1, 2, 8]
    assert group_length(EVEN, 2) == 5
    with pytest.raises(ScheduleError):
        zoom_N(EVEN, 3)
    assert EVEN.knows(2) and not EVEN.knows(3)


@pytest.mark.parametrize(
    "factors,lengths",
    [([], None), ([2, 1], None), ([2, 2], [0]), ([2, 2], [1, 1]), ([2, 2], [0, -1])],
)
def test_custom_schedule_rejects_bad_lists(factors, lengths):
    with pytest.raises(ScheduleError):
        ZoomSchedule.custom(factors, lengths)


def test_doubling_schedule_rejects_bad_constant():
    with pytest.raises(ScheduleError):
        ZoomSchedule.doubling(0)
    with pytest.raises(ScheduleError):
        ZoomSchedule(C=1, mode="doubling", group_lengths=(0, 1))
    with pytest.raises(ScheduleError):
        ZoomSchedule.from_dict({"mode": "fractal"})


def test_schedule_json_round_trip():
    for s in (C1, EVEN, ZoomSchedule.custom([3, 3])):
        assert ZoomSchedule.from_dict(s.to_dict()) == s
    assert ZoomSchedule.from_dict({"mode": "custom", "N": [2, 2]}).group_lengths is None


def test_delegated_bit_index():
    assert delegated_bit_index(C1, 2, 0) == 0
    assert delegated_bit_index(C1, 2, 7) == 7
    assert delegated_bit_index(C1, 2, 8) is None
    assert delegated_bit_index(C1, 1, 1) == 1
    with pytest.raises(ScheduleError):
        delegated_bit_index(C1, 1, 4)


def test_group_assignment():
    assert group_assignment(C1, 2, 3) == GroupSlot(3, 2)
    assert group_assignment(C1, 2, 15) == GroupSlot(15, 2)
    assert group_assignment(ZoomSchedule.custom([2, 4], [0, 7]), 1, 0) is None
    with pytest.raises(ScheduleError):
        group_assignment(C1, 2, 16)
    assert group_assignment(C1, 1, 3) == GroupSlot(3, 1)


def test_block_arithmetic():
    assert block_start(C1, 2, 1, 3) == 11
    assert block_of(C1, 2, 10, 3) == 0
    assert block_of(C1, 2, 2, 3) == -1
    assert extended_zone(C1, 2, 1, 3) == (3, 27)


def test_covering_block():
    # level 1 blocks of width 2 at offset 0: extended zone of block b is [2b-2, 2b+4)
    assert covering_block(C1, 1, (3, 7), 0) == 2
    assert covering_block(C1, 1, (1, 7), 0) is None
    assert covering_block(C1, 0, (4, 5), 0) == 5


def test_window_coverage():
    assert window_coverage(C1, 2, (3, 7), (0, 0, 0)) == 1
    assert window_coverage(C1, 2, (0, 9), (0, 0, 0)) == 2
    assert window_coverage(C1, 2, (0, 30), (0, 0, 0)) is None
    with pytest.raises(AssemblyError):
        window_coverage(C1, 2, (0, 1), (0, 0))


def test_coverage_exhaustive_small_doubling():
    """Any window of length 2L(k)+1 fits some level-k extended zone, for every alignment"""
    for k in range(4):
        L = side_L(C1, k)
        for offset in range(L):
            for lo in range(-L, 2 * L):
                assert covering_block(C1, k, (lo, lo + 2 * L + 1), offset) is not None


def test_validate_alignment():
    assert validate_alignment(C1, 2, (1, 1, 5)) == (1, 1, 5)
    with pytest.raises(AssemblyError):
        validate_alignment(C1, 2, (0, 1, 0))
    with pytest.raises(AssemblyError):
        validate_alignment(C1, 2, (0, 0))


def test_canonical_alignments():
    grids = canonical_alignments(C1, 2)
    assert len(grids) == 8
    assert grids[5] == (0, 1, 5)
    for grid in grids:
        validate_alignment(C1, 2, grid)


def test_validate_schedule_c16_passes_everything():
    report = validate_schedule(ZoomSchedule.doubling(16), 6, Margins())
    assert report.ok
    assert report.threshold == 0
    assert report.check(0, "a").status == "n/a"
    assert report.check(3, "b").status == "pass"


def test_validate_schedule_c2_capacity_threshold():
    report = validate_schedule(ZoomSchedule.doubling(2), 6, Margins())
    assert report.structural_ok
    assert not report.capacity_ok
    assert report.check(1, "a").status == "fail"
    assert report.check(1, "a").lhs == 260
    assert report.check(3, "a").status == "fail"
    assert report.check(4, "a").status == "pass"
    assert report.check(2, "c").status == "fail"
    assert report.check(3, "c").status == "pass"
    assert report.threshold == 4
    assert {f.kind for f in report.failures()} == {"capacity"}


def test_validate_schedule_custom_levels():
    report = validate_schedule(EVEN, 2, Margins())
    assert report.check(1, "a").status == "n/a"
    assert report.check(2, "c").status == "n/a"
    assert report.check(1, "b").status == "pass"
    assert report.check(1, "c").status == "fail"
    assert report.check(2, "d").status == "fail"
    assert not report.structural_ok


def test_validate_schedule_report_json():
    data = validate_schedule(ZoomSchedule.doubling(16), 2, Margins()).to_dict()
    entry = data["entries"][1]
    assert entry["check"] == "b"
    assert entry["lhs"] == "2"
    assert entry["rhs"] == str(2 ** 16)
    with pytest.raises(ScheduleError):
        validate_schedule(C1, -1)
