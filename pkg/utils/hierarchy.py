"""
Macro-tile states, hierarchical assemblies and the local constraint catalogue.

An assembly over a ground word of width W covers every whole level-K block
that meets columns [0, W) and is N(K)*L(K) rows tall, so each level-k tile
below K has its full N(k) x N(k) grid of sons. Rows count from the bottom.
Ground bits outside [0, W) read as 0.

Catalogue:
    C1  structure and level information agree with the geometry
    C2  brothers agree on father coordinates, father bit and groups
    C3  level-0 delegated bits equal the ground
    C4  a delegated bit equals the father bit when both name one column
    C5  the storage son confirms its father's fields
    C6  delegated bits agree with recorded groups covering their column
    C7  neighbors with different fathers agree on the shared uncle groups
    C8  no enumerated forbidden word inside an own group
"""
import json
import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from utils.errors import AssemblyError, SpecFormatError
from utils.schedule import (
    GroupSlot,
    ZoomSchedule,
    block_of,
    block_start,
    delegated_bit_index,
    group_assignment,
    group_length,
    side_L,
    validate_alignment,
    zoom_N,
)
from utils.subshift import SubshiftSpec, enum_step

logger = logging.getLogger(__name__)

CATALOGUE = ("C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8")

Key = Tuple[int, int]
BitRef = Tuple[int, int]


@dataclass(frozen=True, slots=True)
class BitGroup:
    start: int
    bits: str

    def to_dict(self) -> Dict:
        return {"start": self.start, "bits": self.bits}

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> Optional["BitGroup"]:
        return None if data is None else cls(int(data["start"]), str(data["bits"]))


@dataclass(frozen=True, slots=True)
class GroupTriple:
    father: Optional[BitGroup]
    left_uncle: Optional[BitGroup]
    right_uncle: Optional[BitGroup]

    def named(self) -> Iterator[Tuple[str, Optional[BitGroup]]]:
        yield "father", self.father
        yield "left_uncle", self.left_uncle
        yield "right_uncle", self.right_uncle

    def to_dict(self) -> Dict:
        return {name: None if g is None else g.to_dict() for name, g in self.named()}

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> Optional["GroupTriple"]:
        if data is None:
            return None
        return cls(
            BitGroup.from_dict(data.get("father")),
            BitGroup.from_dict(data.get("left_uncle")),
            BitGroup.from_dict(data.get("right_uncle")),
        )


def _pair(value) -> Optional[Tuple[int, int]]:
    return None if value is None else (int(value[0]), int(value[1]))


@dataclass(frozen=True, slots=True)
class MacroTileState:
    """What one level-k macro-tile knows about itself and its father"""

    level: int
    pos_in_father: Key
    delegated_bit: Optional[BitRef] = None
    father_coords: Optional[Key] = None
    father_bit: Optional[BitRef] = None
    groups: Optional[GroupTriple] = None
    own_group: Optional[BitGroup] = None

    def to_dict(self) -> Dict:
        return {
            "level": self.level,
            "pos": list(self.pos_in_father),
            "delegated": None if self.delegated_bit is None else list(self.delegated_bit),
            "father_coords": None if self.father_coords is None else list(self.father_coords),
            "father_bit": None if self.father_bit is None else list(self.father_bit),
            "groups": None if self.groups is None else self.groups.to_dict(),
            "own_group": None if self.own_group is None else self.own_group.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "MacroTileState":
        try:
            return cls(
                level=int(data["level"]),
                pos_in_father=_pair(data["pos"]),
                delegated_bit=_pair(data.get("delegated")),
                father_coords=_pair(data.get("father_coords")),
                father_bit=_pair(data.get("father_bit")),
                groups=GroupTriple.from_dict(data.get("groups")),
                own_group=BitGroup.from_dict(data.get("own_group")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SpecFormatError(f"Malformed macro-tile state: {e}") from e


class TileSite(NamedTuple):
    """Geometry of one tile slot, independent of the ground"""

    level: int
    block: int
    row: int
    start: int
    pos: Key
    father: Optional[Key]
    delegated_col: Optional[int]
    own_slot: Optional[GroupSlot]

    @property
    def key(self) -> Key:
        return self.block, self.row

    @property
    def vpos(self) -> int:
        return self.pos[1]


class Layout:
    """Tile sites of every level over a ground of `width` columns"""

    def __init__(self, schedule: ZoomSchedule, K: int, alignment: Sequence[int], width: int):
        if K < 0:
            raise AssemblyError(f"Top level must be non-negative, got {K}")
        if width < 1:
            raise AssemblyError("Region too narrow: the ground word is empty")
        self.schedule = schedule
        self.K = K
        self.alignment = validate_alignment(schedule, K, alignment)
        self.width = width

        top = self.alignment[K]
        first, last = block_of(schedule, K, 0, top), block_of(schedule, K, width - 1, top)
        self.span = (block_start(schedule, K, first, top), block_start(schedule, K, last + 1, top))
        self.height = zoom_N(schedule, K) * side_L(schedule, K)
        self.sites: List[Dict[Key, TileSite]] = [self._level_sites(k) for k in range(K + 1)]

    def _level_sites(self, k: int) -> Dict[Key, TileSite]:
        s, a = self.schedule, self.alignment
        L, N = side_L(s, k), zoom_N(s, k)
        blocks = range(block_of(s, k, self.span[0], a[k]), block_of(s, k, self.span[1] - 1, a[k]) + 1)
        sites = {}
        for b in blocks:
            start = block_start(s, k, b, a[k])
            if k < self.K:
                fb = block_of(s, k + 1, start, a[k + 1])
                i = (start - block_start(s, k + 1, fb, a[k + 1])) // L
            for row in range(self.height // L):
                if k < self.K:
                    pos, father = (i, row % N), (fb, row // N)
                else:
                    pos, father = (b % N, row), None
                offset = delegated_bit_index(s, k, pos[1])
                sites[(b, row)] = TileSite(
                    k, b, row, start, pos, father,
                    None if offset is None else start + offset,
                    group_assignment(s, k, pos[1]),
                )
        return sites

    def zone_start(self, k: int, block: int) -> int:
        """Left edge of the extended zone of a level-k block"""
        return block_start(self.schedule, k, block - 1, self.alignment[k])

    def storage_son(self, father: TileSite, delegated_col: Optional[int]) -> Key:
        """Key of the level-(k-1) son that stores the father's delegated bit"""
        s, k = self.schedule, father.level - 1
        L, N = side_L(s, k), zoom_N(s, k)
        i = j = 0
        offset = None if delegated_col is None else delegated_col - father.start
        if offset is not None and 0 <= offset < side_L(s, k + 1) and offset % L < N:
            i, j = offset // L, offset % L
        first = block_of(s, k, father.start, self.alignment[k])
        return first + i, father.row * N + j

    def tile_count(self) -> int:
        return sum(len(level) for level in self.sites)


@lru_cache(maxsize=64)
def layout(schedule: ZoomSchedule, K: int, alignment: Tuple[int, ...], width: int) -> Layout:
    return Layout(schedule, K, alignment, width)


def _ground_bit(ground: str, col: int) -> int:
    return int(ground[col]) if 0 <= col < len(ground) else 0


def _ground_bits(ground: str, lo: int, n: int) -> str:
    return "".join(str(_ground_bit(ground, c)) for c in range(lo, lo + n))


@dataclass(frozen=True)
class Assembly:
    """Macro-tile states of levels 0..K over a ground word"""

    ground: str
    K: int
    schedule: ZoomSchedule
    alignment: Tuple[int, ...]
    levels: Tuple[Dict[Key, MacroTileState], ...] = field(compare=True, hash=False)

    @property
    def region(self) -> Tuple[int, int]:
        return 0, len(self.ground)

    @property
    def layout(self) -> Layout:
        return layout(self.schedule, self.K, self.alignment, len(self.ground))

    def tile(self, k: int, block: int, row: int) -> MacroTileState:
        return self.levels[k][(block, row)]

    def tile_count(self) -> int:
        return sum(len(level) for level in self.levels)

    def replace_tile(self, k: int, key: Key, state: MacroTileState) -> "Assembly":
        """Copy with one state swapped, for mutation experiments"""
        levels = list(self.levels)
        levels[k] = {**levels[k], key: state}
        return replace(self, levels=tuple(levels))

    def to_dict(self) -> Dict:
        return {
            "ground": self.ground,
            "K": self.K,
            "schedule": self.schedule.to_dict(),
            "alignment": list(self.alignment),
            "levels": [
                [{"b": b, "row": row, "state": st.to_dict()} for (b, row), st in sorted(level.items())]
                for level in self.levels
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Assembly":
        try:
            levels = tuple(
                {(int(e["b"]), int(e["row"])): MacroTileState.from_dict(e["state"]) for e in level}
                for level in data["levels"]
            )
            return cls(
                ground=str(data["ground"]),
                K=int(data["K"]),
                schedule=ZoomSchedule.from_dict(data["schedule"]),
                alignment=tuple(int(a) for a in data["alignment"]),
                levels=levels,
            )
        except (KeyError, TypeError) as e:
            raise SpecFormatError(f"Malformed assembly JSON: {e}") from e


def build_assembly(
    ground: str, K: int, s: ZoomSchedule, alignment: Optional[Sequence[int]] = None
) -> Assembly:
    """Ground-truth assembly: every field read off the ground word"""
    if set(ground) - {"0", "1"}:
        raise SpecFormatError(f"Ground must be a bit string, got {ground!r}")
    alignment = tuple(alignment) if alignment is not None else (0,) * (K + 1)
    lay = layout(s, K, alignment, len(ground))

    own_groups: Dict[Tuple[int, int, int], Optional[BitGroup]] = {}

    def own_group(k: int, block: int, vpos: int) -> Optional[BitGroup]:
        key = (k, block, vpos)
        if key not in own_groups:
            slot = group_assignment(s, k, vpos)
            own_groups[key] = None if slot is None else BitGroup(
                slot.start, _ground_bits(ground, lay.zone_start(k, block) + slot.start, slot.length)
            )
        return own_groups[key]

    def delegated(site: TileSite) -> Optional[BitRef]:
        col = site.delegated_col
        return None if col is None else (col, _ground_bit(ground, col))

    levels: List[Dict[Key, MacroTileState]] = [{} for _ in range(K + 1)]
    for site in lay.sites[K].values():
        levels[K][site.key] = MacroTileState(
            K, site.pos, delegated(site), own_group=own_group(K, site.block, site.vpos)
        )

    for k in range(K - 1, -1, -1):
        triples: Dict[Key, GroupTriple] = {}
        for site in lay.sites[k].values():
            fkey = site.father
            father = levels[k + 1][fkey]
            if fkey not in triples:
                fvpos = father.pos_in_father[1]
                triples[fkey] = GroupTriple(
                    father.own_group,
                    own_group(k + 1, fkey[0] - 1, fvpos),
                    own_group(k + 1, fkey[0] + 1, fvpos),
                )
            levels[k][site.key] = MacroTileState(
                level=k,
                pos_in_father=site.pos,
                delegated_bit=delegated(site),
                father_coords=father.pos_in_father,
                father_bit=father.delegated_bit,
                groups=triples[fkey],
                own_group=own_group(k, site.block, site.vpos),
            )

    logger.debug("built assembly ground=%s K=%d alignment=%s tiles=%d", ground, K, alignment, lay.tile_count())
    return Assembly(ground, K, s, alignment, tuple(levels))


class ViolationEntry(NamedTuple):
    level: int
    position: Key
    constraint: str
    description: str

    def to_dict(self) -> Dict:
        return {
            "level": self.level,
            "position": list(self.position),
            "constraint": self.constraint,
            "description": self.description,
        }


@dataclass
class ViolationReport:
    entries: List[ViolationEntry] = field(default_factory=list)

    def add(self, level: int, position: Key, constraint: str, description: str) -> None:
        self.entries.append(ViolationEntry(level, position, constraint, description))

    @property
    def ok(self) -> bool:
        return not self.entries

    def constraints(self) -> set:
        return {e.constraint for e in self.entries}

    def by_constraint(self, constraint: str) -> List[ViolationEntry]:
        return [e for e in self.entries if e.constraint == constraint]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict()) + "\n" for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def _group_ok(group: Optional[BitGroup], slot: Optional[GroupSlot]) -> bool:
    if slot is None:
        return group is None
    return (
        group is not None
        and group.start == slot.start
        and len(group.bits) == slot.length
        and not set(group.bits) - {"0", "1"}
    )


def _check_structure(a: Assembly, lay: Layout, report: ViolationReport) -> None:
    s = a.schedule
    for k, sites in enumerate(lay.sites):
        states = a.levels[k] if k < len(a.levels) else {}
        for key in sites.keys() - states.keys():
            report.add(k, key, "C1", "tile missing")
        for key in states.keys() - sites.keys():
            report.add(k, key, "C1", "tile outside the assembly grid")

        for key, site in sites.items():
            st = states.get(key)
            if st is None:
                continue
            problems = []
            if st.level != k:
                problems.append(f"level field {st.level}")
            if st.pos_in_father != site.pos:
                problems.append(f"pos_in_father {st.pos_in_father} != {site.pos}")
            col = None if st.delegated_bit is None else st.delegated_bit[0]
            if col != site.delegated_col or (st.delegated_bit is not None and st.delegated_bit[1] not in (0, 1)):
                problems.append(f"delegated bit {st.delegated_bit} where column {site.delegated_col} expected")
            if not _group_ok(st.own_group, site.own_slot):
                problems.append("own group does not match its assignment")

            if site.father is None:
                if st.father_coords is not None or st.father_bit is not None or st.groups is not None:
                    problems.append("top-level tile carries father data")
            else:
                fsite = lay.sites[k + 1][site.father]
                if st.father_coords != fsite.pos:
                    problems.append(f"father_coords {st.father_coords} != {fsite.pos}")
                fcol = None if st.father_bit is None else st.father_bit[0]
                if fcol != fsite.delegated_col:
                    problems.append(f"father bit column {fcol} != {fsite.delegated_col}")
                slot = group_assignment(s, k + 1, fsite.vpos)
                if st.groups is None or not all(_group_ok(g, slot) for _, g in st.groups.named()):
                    problems.append("father/uncle groups do not match the father's assignment")
            for problem in problems:
                report.add(k, key, "C1", problem)


def _check_brothers(a: Assembly, lay: Layout, report: ViolationReport) -> None:
    for k in range(a.K):
        sites, states = lay.sites[k], a.levels[k]
        for (b, row), site in sites.items():
            st = states.get((b, row))
            if st is None:
                continue
            for nkey in ((b + 1, row), (b, row + 1)):
                nsite, other = sites.get(nkey), states.get(nkey)
                if nsite is None or other is None or nsite.father != site.father:
                    continue
                if st.father_coords != other.father_coords:
                    report.add(k, nkey, "C2", f"father_coords {other.father_coords} != brother's {st.father_coords}")
                if st.father_bit != other.father_bit:
                    report.add(k, nkey, "C2", f"father_bit {other.father_bit} != brother's {st.father_bit}")
                if st.groups != other.groups:
                    report.add(k, nkey, "C2", "groups differ from brother's")


def _check_ground(a: Assembly, report: ViolationReport) -> None:
    for key, st in a.levels[0].items():
        if st.delegated_bit is None:
            continue
        col, val = st.delegated_bit
        if val != _ground_bit(a.ground, col):
            report.add(0, key, "C3", f"delegated bit {val} at column {col} but ground has {_ground_bit(a.ground, col)}")


def _check_same_bit(a: Assembly, report: ViolationReport) -> None:
    for k in range(a.K):
        for key, st in a.levels[k].items():
            d, f = st.delegated_bit, st.father_bit
            if d is not None and f is not None and d[0] == f[0] and d[1] != f[1]:
                report.add(k, key, "C4", f"column {d[0]}: own bit {d[1]} but father bit {f[1]}")


def _check_storage(a: Assembly, lay: Layout, report: ViolationReport) -> None:
    for k in range(1, a.K + 1):
        for key, fsite in lay.sites[k].items():
            father = a.levels[k].get(key)
            if father is None:
                continue
            dcol = None if father.delegated_bit is None else father.delegated_bit[0]
            skey = lay.storage_son(fsite, dcol)
            son = a.levels[k - 1].get(skey)
            if son is None:
                continue
            if son.father_coords != father.pos_in_father:
                report.add(k - 1, skey, "C5", f"father_coords {son.father_coords} but father is at {father.pos_in_father}")
            if son.father_bit != father.delegated_bit:
                report.add(k - 1, skey, "C5", f"father_bit {son.father_bit} but father keeps {father.delegated_bit}")
            if son.groups is not None and son.groups.father != father.own_group:
                report.add(k - 1, skey, "C5", "father group differs from the father's own group")


def _recorded_groups(a: Assembly, lay: Layout, k: int, site: TileSite, st: MacroTileState):
    """(name, group, extended zone start) for every group the tile records"""
    s = a.schedule
    if st.own_group is not None:
        yield "own", st.own_group, lay.zone_start(k, site.block)
    if st.groups is not None and site.father is not None:
        fstart = block_start(s, k + 1, site.father[0], lay.alignment[k + 1])
        Lf = side_L(s, k + 1)
        zones = {"father": fstart - Lf, "left_uncle": fstart - 2 * Lf, "right_uncle": fstart}
        for name, g in st.groups.named():
            if g is not None:
                yield name, g, zones[name]


def _check_overlap(a: Assembly, lay: Layout, report: ViolationReport) -> None:
    for k, sites in enumerate(lay.sites):
        for key, site in sites.items():
            st = a.levels[k].get(key)
            if st is None or st.delegated_bit is None:
                continue
            col, val = st.delegated_bit
            for name, g, zone in _recorded_groups(a, lay, k, site, st):
                p = col - zone - g.start
                if 0 <= p < len(g.bits) and g.bits[p] != str(val):
                    report.add(k, key, "C6", f"{name} group has {g.bits[p]} at column {col}, delegated bit is {val}")


def _check_cousins(a: Assembly, lay: Layout, report: ViolationReport) -> None:
    for k in range(a.K):
        sites, states = lay.sites[k], a.levels[k]
        for (b, row), site in sites.items():
            nkey = (b + 1, row)
            nsite = sites.get(nkey)
            left, right = states.get((b, row)), states.get(nkey)
            if nsite is None or left is None or right is None or nsite.father == site.father:
                continue
            if left.groups is None or right.groups is None:
                continue
            if left.groups.father != right.groups.left_uncle:
                report.add(k, nkey, "C7", "left uncle group differs from the left neighbor's father group")
            if left.groups.right_uncle != right.groups.father:
                report.add(k, nkey, "C7", "father group differs from the left neighbor's right uncle group")


def _occurrences(bits: str, word: str) -> Iterator[int]:
    pos = bits.find(word)
    while pos >= 0:
        yield pos
        pos = bits.find(word, pos + 1)


def _check_patterns(
    a: Assembly, lay: Layout, spec: SubshiftSpec, budget: Optional[int], report: ViolationReport
) -> None:
    width = len(a.ground)
    for k, sites in enumerate(lay.sites):
        steps = group_length(a.schedule, k)
        if budget is not None:
            steps = min(steps, budget)
        forbidden = sorted(enum_step(spec, steps), key=lambda w: (len(w), w))
        if not forbidden:
            continue
        found: Dict[Tuple[int, str], List[Tuple[str, int]]] = {}
        for key, site in sites.items():
            st = a.levels[k].get(key)
            if st is None or st.own_group is None:
                continue
            base = lay.zone_start(k, site.block) + st.own_group.start
            bits = st.own_group.bits
            if (base, bits) not in found:
                found[(base, bits)] = [
                    (word, base + pos)
                    for word in forbidden
                    for pos in _occurrences(bits, word)
                    if base + pos >= 0 and base + pos + len(word) <= width
                ]
            for word, col in found[(base, bits)]:
                report.add(k, key, "C8", f"forbidden word {word} at column {col}")


def check_assembly(
    a: Assembly, spec: SubshiftSpec, s: Optional[ZoomSchedule] = None, budget: Optional[int] = None
) -> ViolationReport:
    """
    Evaluate C1..C8 over every tile.

    `budget` caps the enumeration steps of C8 at min(l(k), budget).
    """
    if s is not None and s != a.schedule:
        raise AssemblyError("Assembly was built for a different schedule")
    lay = a.layout
    report = ViolationReport()
    _check_structure(a, lay, report)
    if len(a.levels) != a.K + 1:
        return report
    _check_brothers(a, lay, report)
    _check_ground(a, report)
    _check_same_bit(a, report)
    _check_storage(a, lay, report)
    _check_overlap(a, lay, report)
    _check_cousins(a, lay, report)
    _check_patterns(a, lay, spec, budget, report)
    if report.entries:
        logger.debug("assembly over %s: %d violations (%s)", a.ground, len(report), sorted(report.constraints()))
    return report


class Counterexample(NamedTuple):
    level: int
    position: Key
    field: str
    column: int
    reason: str


class _UnionFind:
    def __init__(self):
        self.parent: Dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[rx] = ry


def find_counterexamples(
    s: ZoomSchedule,
    K: int,
    width: int,
    alignment: Optional[Sequence[int]] = None,
    scope: str = "delegation",
) -> List[Counterexample]:
    """
    Exhaustive search for assemblies that pass the local checks yet disagree
    with the ground.

    With the structure pinned by C1, every remaining catalogue entry is an
    equality between bit-valued fields (or a field and a ground column), so
    the fields split into union-find classes. A field can take a value other
    than its ground bit, for some ground word, exactly when its class lacks
    the ground anchor of its own column or holds anchors of two columns.
    Scope "delegation" covers delegated and father bits under C1..C5; scope
    "groups" adds every recorded group bit under C1..C7. Group bits at
    columns outside the assembly are unconstrained and skipped.
    """
    if scope not in ("delegation", "groups"):
        raise AssemblyError(f"Unknown counterexample scope {scope!r}")
    alignment = tuple(alignment) if alignment is not None else (0,) * (K + 1)
    lay = layout(s, K, alignment, width)
    uf = _UnionFind()
    columns: Dict[Tuple, int] = {}
    with_groups = scope == "groups"

    def slot(name: Tuple, col: int) -> Tuple:
        columns[name] = col
        return name

    def group_slots(k: int, key: Key, site: TileSite) -> Dict[str, List[Tuple]]:
        out = {}
        if site.own_slot is not None:
            zone = lay.zone_start(k, site.block) + site.own_slot.start
            out["own"] = [slot(("o", k, key, i), zone + i) for i in range(site.own_slot.length)]
        if site.father is not None:
            fsite = lay.sites[k + 1][site.father]
            fslot = group_assignment(s, k + 1, fsite.vpos)
            if fslot is not None:
                fstart, Lf = fsite.start, side_L(s, k + 1)
                zones = {"father": fstart - Lf, "left_uncle": fstart - 2 * Lf, "right_uncle": fstart}
                for name, zone in zones.items():
                    out[name] = [slot(("g", k, key, name, i), zone + fslot.start + i) for i in range(fslot.length)]
        return out

    deleg: Dict[Tuple[int, Key], Tuple] = {}
    fbit: Dict[Tuple[int, Key], Tuple] = {}
    groups: Dict[Tuple[int, Key], Dict[str, List[Tuple]]] = {}
    for k, sites in enumerate(lay.sites):
        for key, site in sites.items():
            if site.delegated_col is not None:
                deleg[(k, key)] = slot(("d", k, key), site.delegated_col)
            if site.father is not None:
                fcol = lay.sites[k + 1][site.father].delegated_col
                if fcol is not None:
                    fbit[(k, key)] = slot(("f", k, key), fcol)
            if with_groups:
                groups[(k, key)] = group_slots(k, key, site)

    def union_lists(xs: List[Tuple], ys: List[Tuple]) -> None:
        for x, y in zip(xs, ys):
            uf.union(x, y)

    for k, sites in enumerate(lay.sites):
        for key, site in sites.items():
            d = deleg.get((k, key))
            if k == 0 and d is not None:
                uf.union(d, ("ground", site.delegated_col))  # C3
            f = fbit.get((k, key))
            if d is not None and f is not None and columns[d] == columns[f]:
                uf.union(d, f)  # C4
            if with_groups and d is not None:
                for bits in groups[(k, key)].values():  # C6
                    for b in bits:
                        if columns[b] == columns[d]:
                            uf.union(b, d)
            if site.father is None:
                continue
            b, row = key
            for nkey in ((b + 1, row), (b, row + 1)):
                nsite = sites.get(nkey)
                if nsite is None:
                    continue
                if nsite.father == site.father:  # C2
                    if f is not None:
                        uf.union(f, fbit[(k, nkey)])
                    if with_groups:
                        mine, theirs = groups[(k, key)], groups[(k, nkey)]
                        for name in ("father", "left_uncle", "right_uncle"):
                            union_lists(mine.get(name, []), theirs.get(name, []))
                elif with_groups and nkey == (b + 1, row):  # C7
                    mine, theirs = groups[(k, key)], groups[(k, nkey)]
                    union_lists(mine.get("father", []), theirs.get("left_uncle", []))
                    union_lists(mine.get("right_uncle", []), theirs.get("father", []))

    for k in range(1, K + 1):  # C5
        for key, fsite in lay.sites[k].items():
            skey = lay.storage_son(fsite, fsite.delegated_col)
            if skey not in lay.sites[k - 1]:
                continue
            if (k, key) in deleg and (k - 1, skey) in fbit:
                uf.union(deleg[(k, key)], fbit[(k - 1, skey)])
            if with_groups:
                union_lists(groups[(k - 1, skey)].get("father", []), groups[(k, key)].get("own", []))

    anchors: Dict[Tuple, set] = {}
    for col in range(*lay.span):
        anchors.setdefault(uf.find(("ground", col)), set()).add(col)

    lo, hi = lay.span
    found = []
    for name, col in columns.items():
        if not lo <= col < hi:
            continue
        cls_anchors = anchors.get(uf.find(name), set())
        if cls_anchors == {col}:
            continue
        reason = "unanchored" if not cls_anchors else f"tied to ground columns {sorted(cls_anchors)}"
        found.append(Counterexample(name[1], name[2], name[0] if name[0] != "g" else f"g:{name[3]}", col, reason))
    found.sort()
    logger.info(
        "counterexample search %s K=%d width=%d alignment=%s scope=%s: %d fields, %d counterexamples",
        s.describe(), K, width, alignment, scope, len(columns), len(found),
    )
    return found
