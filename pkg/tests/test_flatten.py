"""
Tests for the explicit flat tile set of tiny schedules
"""
import itertools

import pytest

from utils.compiler import compile_system
from utils.errors import FlattenBoundError, SpecFormatError
from utils.flatten import FlattenBounds, flatten_system, recheck
from utils.hierarchy import build_assembly, check_assembly
from utils.schedule import ZoomSchedule
from utils.solver import SAT, tile_region
from utils.subshift import SubshiftSpec

GOLDEN = SubshiftSpec.builtin("golden_mean")
TINY = ZoomSchedule.custom([2, 2])


@pytest.fixture(scope="module")
def flat():
    return flatten_system(GOLDEN, TINY, 1, FlattenBounds(100_000))


def test_flat_region_size(flat):
    assert (flat.width, flat.height) == (4, 4)
    assert flat.ground_width == 4
    assert len(flat.tiles) == len(flat.records)
    assert len(flat.tiles) > 0


WORDS_4 = ["".join(bits) for bits in itertools.product("01", repeat=4)]


def _accepted(word, schedule):
    return check_assembly(build_assembly(word, 1, schedule), GOLDEN).ok


@pytest.mark.parametrize("word", WORDS_4)
def test_flat_tiling_decodes_to_a_valid_assembly(flat, word):
    result = tile_region(flat.tiles, flat.width, flat.height, flat.ground_boundary(word))
    assert (result.status == SAT) == _accepted(word, TINY)
    assert result.status == SAT
    assembly = flat.decode(result.witness)
    assert assembly.ground == word
    assert recheck(flat, result.witness).ok


@pytest.mark.slow
def test_flat_and_symbolic_agree_on_every_word():
    """Two-bit groups at level 1 cover every adjacent pair of a width-4 ground"""
    s = ZoomSchedule.custom([2, 2], [0, 2])
    wide = flatten_system(GOLDEN, s, 1, FlattenBounds(100_000))
    verdicts = {}
    for word in WORDS_4:
        result = tile_region(wide.tiles, wide.width, wide.height, wide.ground_boundary(word))
        verdicts[word] = result.status == SAT
        assert verdicts[word] == _accepted(word, s), word
        if result.witness is not None:
            assert recheck(wide, result.witness).ok
    assert verdicts == {word: "11" not in word for word in WORDS_4}


def test_ground_boundary_checks_width(flat):
    with pytest.raises(SpecFormatError):
        flat.ground_boundary("01")
    with pytest.raises(SpecFormatError):
        flat.ground_boundary("01x1")


def test_decode_checks_size(flat):
    result = tile_region(flat.tiles, flat.width, flat.height, flat.ground_boundary("0101"))
    from utils.core import Patch

    with pytest.raises(SpecFormatError):
        flat.decode(Patch(1, 1, (result.witness.cells[0],)))


def test_flatten_bound_is_enforced():
    with pytest.raises(FlattenBoundError):
        flatten_system(GOLDEN, ZoomSchedule.doubling(1), 2, FlattenBounds(100_000))
    with pytest.raises(FlattenBoundError):
        flatten_system(GOLDEN, TINY, 1, FlattenBounds(10))


def test_compile_with_flatten():
    cs = compile_system(GOLDEN, TINY, 1, flatten=FlattenBounds(100_000), force=True)
    assert cs.flat is not None
    assert cs.to_dict()["flat"]["tiles"] == len(cs.flat.tiles)


def test_bounds_json_round_trip():
    bounds = FlattenBounds(500, 4, (0, 1))
    assert FlattenBounds.from_dict(bounds.to_dict()) == bounds
