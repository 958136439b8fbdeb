"""
Explicit Wang tile set for tiny schedules.

Each tile is a cell record: the cell's ground bit, its position, and the
states of the level-0..K tiles containing it. Checks that involve a single
tile (C4, C6, C8) or a tile and its storage son (C3, C5) are applied when
records are enumerated; the rest travel on the edges. Per level, an edge
between two cells carries the whole state when both cells lie in one tile,
the brother data (C2) when the tiles share a father, and the uncle groups
(C7) across horizontal father boundaries.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from utils.core import Patch, WangTile, WangTileSet
from utils.errors import FlattenBoundError, SpecFormatError
from utils.hierarchy import (
    Assembly,
    BitGroup,
    GroupTriple,
    Key,
    Layout,
    MacroTileState,
    TileSite,
    ViolationReport,
    check_assembly,
    layout,
)
from utils.schedule import ZoomSchedule, block_of, group_assignment, group_length, side_L
from utils.solver import BoundaryConstraint
from utils.subshift import SubshiftSpec, enum_step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlattenBounds:
    bound: int
    width: Optional[int] = None
    alignment: Optional[Tuple[int, ...]] = None

    def to_dict(self) -> Dict:
        return {
            "bound": self.bound,
            "width": self.width,
            "alignment": None if self.alignment is None else list(self.alignment),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "FlattenBounds":
        alignment = data.get("alignment")
        return cls(int(data["bound"]), data.get("width"), None if alignment is None else tuple(alignment))


@dataclass(frozen=True)
class CellRecord:
    bit: int
    x: int
    row: int
    states: Tuple[MacroTileState, ...]


@dataclass
class FlatSystem:
    spec: SubshiftSpec
    schedule: ZoomSchedule
    K: int
    bounds: FlattenBounds
    ground_width: int
    layout: Layout
    tiles: WangTileSet
    records: Tuple[CellRecord, ...]

    @property
    def width(self) -> int:
        lo, hi = self.layout.span
        return hi - lo

    @property
    def height(self) -> int:
        return self.layout.height

    def ground_boundary(self, word: str) -> BoundaryConstraint:
        """South side pinned to the colors that carry the given ground bits"""
        if len(word) != self.ground_width or set(word) - {"0", "1"}:
            raise SpecFormatError(f"Ground must be a bit string of width {self.ground_width}")
        lo = self.layout.span[0]
        south = []
        for x in range(self.width):
            col = lo + x
            bit = int(word[col]) if 0 <= col < len(word) else 0
            south.append(frozenset(
                self.tiles.tiles[i].south
                for i, rec in enumerate(self.records)
                if rec.x == x and rec.row == 0 and rec.bit == bit
            ))
        return BoundaryConstraint(south=tuple(south))

    def decode(self, tiling: Patch) -> Assembly:
        """Turn a tiling of the width x height region back into an assembly"""
        if (tiling.width, tiling.height) != (self.width, self.height):
            raise SpecFormatError(f"Flat tilings are {self.width}x{self.height}, got {tiling.width}x{tiling.height}")
        lay, s = self.layout, self.schedule
        levels: List[Dict[Key, MacroTileState]] = [{} for _ in range(self.K + 1)]
        bits = {}
        for y in range(self.height):
            for x in range(self.width):
                rec = self.records[tiling.at(x, y)]
                col = lay.span[0] + rec.x
                if rec.row == 0:
                    bits[col] = rec.bit
                for k, state in enumerate(rec.states):
                    key = (block_of(s, k, col, lay.alignment[k]), rec.row // side_L(s, k))
                    levels[k][key] = state
        ground = "".join(str(bits.get(col, 0)) for col in range(self.ground_width))
        return Assembly(ground, self.K, s, lay.alignment, tuple(levels))


def _free_columns(lay: Layout, zone: int, start: int, length: int) -> List[Optional[int]]:
    """Columns of a group's bits; None where the bit lies outside the assembly and reads 0"""
    lo, hi = lay.span
    return [c if lo <= c < hi else None for c in range(zone + start, zone + start + length)]


def _group_choices(cols: List[Optional[int]], start: int) -> List[BitGroup]:
    free = [i for i, c in enumerate(cols) if c is not None]
    out = []
    for values in itertools.product("01", repeat=len(free)):
        bits = ["0"] * len(cols)
        for i, v in zip(free, values):
            bits[i] = v
        out.append(BitGroup(start, "".join(bits)))
    return out


class _Enumerator:
    """Candidate states per tile site, filtered by the single-tile checks"""

    def __init__(self, spec: SubshiftSpec, lay: Layout):
        self.spec = spec
        self.lay = lay
        self.s = lay.schedule
        self._cache: Dict[Tuple[int, Key], List[MacroTileState]] = {}

    def _groups_of(self, k: int, site: TileSite):
        lay, s = self.lay, self.s
        own = [None]
        if site.own_slot is not None:
            cols = _free_columns(lay, lay.zone_start(k, site.block), site.own_slot.start, site.own_slot.length)
            own = _group_choices(cols, site.own_slot.start)
        triples = [None]
        if site.father is not None:
            fsite = lay.sites[k + 1][site.father]
            slot = group_assignment(s, k + 1, fsite.vpos)
            if slot is None:
                triples = [GroupTriple(None, None, None)]
            else:
                Lf = side_L(s, k + 1)
                zones = (fsite.start - Lf, fsite.start - 2 * Lf, fsite.start)
                options = [_group_choices(_free_columns(lay, z, slot.start, slot.length), slot.start) for z in zones]
                triples = [GroupTriple(*combo) for combo in itertools.product(*options)]
        return own, triples

    def free_bits(self, k: int, site: TileSite) -> int:
        lay, s = self.lay, self.s
        n = int(site.delegated_col is not None)
        if site.own_slot is not None:
            cols = _free_columns(lay, lay.zone_start(k, site.block), site.own_slot.start, site.own_slot.length)
            n += sum(c is not None for c in cols)
        if site.father is not None:
            fsite = lay.sites[k + 1][site.father]
            n += int(fsite.delegated_col is not None)
            slot = group_assignment(s, k + 1, fsite.vpos)
            if slot is not None:
                Lf = side_L(s, k + 1)
                for z in (fsite.start - Lf, fsite.start - 2 * Lf, fsite.start):
                    n += sum(c is not None for c in _free_columns(lay, z, slot.start, slot.length))
        return n

    def states(self, k: int, key: Key) -> List[MacroTileState]:
        if (k, key) in self._cache:
            return self._cache[(k, key)]
        lay = self.lay
        site = lay.sites[k][key]
        fsite = None if site.father is None else lay.sites[k + 1][site.father]
        own_choices, triples = self._groups_of(k, site)
        delegated = [None] if site.delegated_col is None else [(site.delegated_col, v) for v in (0, 1)]
        fbits = [None]
        if fsite is not None and fsite.delegated_col is not None:
            fbits = [(fsite.delegated_col, v) for v in (0, 1)]
        forbidden = enum_step(self.spec, group_length(self.s, k)) if site.own_slot is not None else set()

        out = []
        for d, fb, own, groups in itertools.product(delegated, fbits, own_choices, triples):
            state = MacroTileState(
                k, site.pos, d,
                None if fsite is None else fsite.pos,
                fb, groups, own,
            )
            if self._single_tile_ok(k, site, state, forbidden):
                out.append(state)
        self._cache[(k, key)] = out
        return out

    def _single_tile_ok(self, k: int, site: TileSite, st: MacroTileState, forbidden) -> bool:
        d, fb = st.delegated_bit, st.father_bit
        if d is not None and fb is not None and d[0] == fb[0] and d[1] != fb[1]:
            return False
        lay, s = self.lay, self.s
        if d is not None:
            zones = []
            if st.own_group is not None:
                zones.append((st.own_group, lay.zone_start(k, site.block)))
            if st.groups is not None and site.father is not None:
                fstart = lay.sites[k + 1][site.father].start
                Lf = side_L(s, k + 1)
                for g, z in zip((st.groups.father, st.groups.left_uncle, st.groups.right_uncle),
                                (fstart - Lf, fstart - 2 * Lf, fstart)):
                    if g is not None:
                        zones.append((g, z))
            for g, z in zones:
                p = d[0] - z - g.start
                if 0 <= p < len(g.bits) and g.bits[p] != str(d[1]):
                    return False
        if st.own_group is not None and forbidden:
            base = lay.zone_start(k, site.block) + st.own_group.start
            width = lay.width
            for word in forbidden:
                pos = st.own_group.bits.find(word)
                while pos >= 0:
                    if base + pos >= 0 and base + pos + len(word) <= width:
                        return False
                    pos = st.own_group.bits.find(word, pos + 1)
        return True


def _edge(lay: Layout, k: int, a: MacroTileState, same_tile: bool, same_father: bool, horizontal: bool, side: str):
    if same_tile:
        return ("in", a)
    if k == lay.K:
        return ("top",)
    if same_father:
        return ("bro", a.father_coords, a.father_bit, a.groups)
    if not horizontal:
        return ("vert",)
    g = a.groups or GroupTriple(None, None, None)
    # east side of the left tile meets west side of the right tile
    return ("cousin", g.father, g.right_uncle) if side == "east" else ("cousin", g.left_uncle, g.father)


def flatten_system(spec: SubshiftSpec, schedule: ZoomSchedule, K: int, bounds: FlattenBounds) -> FlatSystem:
    s = schedule
    width = bounds.width if bounds.width is not None else 2 * side_L(s, K)
    alignment = bounds.alignment if bounds.alignment is not None else (0,) * (K + 1)
    lay = layout(s, K, tuple(alignment), width)
    enum = _Enumerator(spec, lay)
    lo, hi = lay.span

    def sites_at(col: int, row: int) -> List[Tuple[Key, TileSite]]:
        out = []
        for k in range(K + 1):
            key = (block_of(s, k, col, lay.alignment[k]), row // side_L(s, k))
            out.append((key, lay.sites[k][key]))
        return out

    estimate = 0
    for col in range(lo, hi):
        for row in range(lay.height):
            estimate += 2 ** (1 + sum(enum.free_bits(k, site) for k, (_, site) in enumerate(sites_at(col, row))))
            if estimate > bounds.bound:
                raise FlattenBoundError(
                    f"Flat tile set needs more than {bounds.bound} candidate records; raise the bound or shrink the schedule"
                )
    logger.info("flattening %s K=%d width=%d: estimate %d records", s.describe(), K, width, estimate)

    # storage son of each father site, keyed by the son
    storage: Dict[Tuple[int, Key], Key] = {}
    for k in range(1, K + 1):
        for fkey, fsite in lay.sites[k].items():
            storage[(k - 1, lay.storage_son(fsite, fsite.delegated_col))] = fkey

    records: List[CellRecord] = []
    for col in range(lo, hi):
        bits = (0, 1) if 0 <= col < width else (0,)
        for row in range(lay.height):
            sites = sites_at(col, row)
            options = [enum.states(k, key) for k, (key, _) in enumerate(sites)]
            for combo in itertools.product(*options):
                if not _chain_ok(combo, sites, storage):
                    continue
                d0 = combo[0].delegated_bit
                for bit in bits:
                    if d0 is not None and d0[1] != bit:
                        continue
                    records.append(CellRecord(bit, col - lo, row, combo))

    tiles, kept = _tiles_for(lay, records)
    logger.info("flat tile set: %d tiles over %d colors", len(tiles), tiles.colors)
    return FlatSystem(spec, s, K, bounds, width, lay, tiles, kept)


def _chain_ok(combo: Sequence[MacroTileState], sites, storage) -> bool:
    """C5 between a tile and its father when the tile is the father's storage son"""
    for k in range(len(combo) - 1):
        key = sites[k][0]
        if storage.get((k, key)) != sites[k + 1][0]:
            continue
        son, father = combo[k], combo[k + 1]
        if son.father_coords != father.pos_in_father or son.father_bit != father.delegated_bit:
            return False
        if son.groups is not None and son.groups.father != father.own_group:
            return False
    return True


def _tiles_for(lay: Layout, records: List[CellRecord]) -> Tuple[WangTileSet, Tuple[CellRecord, ...]]:
    s, K = lay.schedule, lay.K
    lo = lay.span[0]
    width = lay.span[1] - lo

    def relation(col_a: int, row_a: int, col_b: int, row_b: int, k: int) -> Tuple[bool, bool]:
        L = side_L(s, k)
        ka = (block_of(s, k, col_a, lay.alignment[k]), row_a // L)
        kb = (block_of(s, k, col_b, lay.alignment[k]), row_b // L)
        if ka == kb:
            return True, True
        fa, fb = lay.sites[k][ka].father, lay.sites[k][kb].father
        return False, fa is not None and fa == fb

    colors: Dict = {}

    def color(key) -> int:
        return colors.setdefault(key, len(colors))

    seen = set()
    tiles, kept = [], []
    for rec in records:
        col, row = lo + rec.x, rec.row
        east = [("pos", rec.x + 1, row)]
        west = [("pos", rec.x, row)]
        north = [("pos", rec.x, row + 1), rec.bit]
        south = [("pos", rec.x, row), rec.bit]
        for k, st in enumerate(rec.states):
            if rec.x + 1 < width:
                same, bro = relation(col, row, col + 1, row, k)
                east.append(_edge(lay, k, st, same, bro, True, "east"))
            if rec.x > 0:
                same, bro = relation(col - 1, row, col, row, k)
                west.append(_edge(lay, k, st, same, bro, True, "west"))
            if row + 1 < lay.height:
                same, bro = relation(col, row, col, row + 1, k)
                north.append(_edge(lay, k, st, same, bro, False, "north"))
            if row > 0:
                same, bro = relation(col, row - 1, col, row, k)
                south.append(_edge(lay, k, st, same, bro, False, "south"))
        tile = WangTile(color(tuple(north)), color(tuple(east)), color(tuple(south)), color(tuple(west)))
        if tile in seen:
            continue
        seen.add(tile)
        tiles.append(tile)
        kept.append(rec)
    return WangTileSet(max(len(colors), 1), tuple(tiles)), tuple(kept)


def recheck(flat: FlatSystem, tiling: Patch) -> ViolationReport:
    """Decode a flat tiling and run the symbolic catalogue on it"""
    return check_assembly(flat.decode(tiling), flat.spec)
