"""
Zoom schedules and the level arithmetic of the hierarchy.

All quantities are Python ints, so N(k) = 2^(C*2^k) stays exact at any level.
Columns are absolute integers; a level-k block b under alignment a covers
[a + b*L(k), a + (b+1)*L(k)).
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from utils.config import get_settings
from utils.errors import AssemblyError, ScheduleError

logger = logging.getLogger(__name__)

DOUBLING = "doubling"
CUSTOM = "custom"

Interval = Tuple[int, int]


@dataclass(frozen=True)
class ZoomSchedule:
    """Zoom factors N(k) and group lengths l(k) per level"""

    C: int = 1
    mode: str = DOUBLING
    factors: Tuple[int, ...] = ()
    group_lengths: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.mode == DOUBLING:
            if self.C < 1:
                raise ScheduleError(f"C must be positive, got {self.C}")
            if self.group_lengths is not None:
                raise ScheduleError("Doubling schedules fix l(k) = k")
        elif self.mode == CUSTOM:
            if not self.factors:
                raise ScheduleError("Custom schedule needs at least one zoom factor")
            if any(n < 2 for n in self.factors):
                raise ScheduleError(f"Zoom factors must be >= 2, got {list(self.factors)}")
        else:
            raise ScheduleError(f"Unknown schedule mode {self.mode!r}")
        if self.group_lengths is not None:
            if self.mode == CUSTOM and len(self.group_lengths) != len(self.factors):
                raise ScheduleError("Group length list must match the zoom factor list")
            if any(v < 0 for v in self.group_lengths):
                raise ScheduleError("Group lengths must be non-negative")
            if self.group_lengths[0] != 0:
                raise ScheduleError("Level-0 tiles span one column, so l(0) must be 0")

    @classmethod
    def doubling(cls, C: int) -> "ZoomSchedule":
        return cls(C=C, mode=DOUBLING)

    @classmethod
    def custom(cls, factors: Sequence[int], group_lengths: Optional[Sequence[int]] = None) -> "ZoomSchedule":
        lengths = None if group_lengths is None else tuple(int(v) for v in group_lengths)
        return cls(C=1, mode=CUSTOM, factors=tuple(int(n) for n in factors), group_lengths=lengths)

    @property
    def max_level(self) -> Optional[int]:
        """Highest level with a known N(k); None when unbounded"""
        return None if self.mode == DOUBLING else len(self.factors) - 1

    def knows(self, k: int) -> bool:
        return k >= 0 and (self.max_level is None or k <= self.max_level)

    def to_dict(self) -> Dict:
        if self.mode == DOUBLING:
            return {"mode": DOUBLING, "C": self.C}
        data = {"mode": CUSTOM, "N": list(self.factors)}
        if self.group_lengths is not None:
            data["l"] = list(self.group_lengths)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "ZoomSchedule":
        mode = data.get("mode", DOUBLING)
        if mode == DOUBLING:
            return cls.doubling(int(data.get("C", 1)))
        if mode == CUSTOM:
            if "N" not in data:
                raise ScheduleError("Custom schedule JSON needs an 'N' list")
            return cls.custom(data["N"], data.get("l"))
        raise ScheduleError(f"Unknown schedule mode {mode!r}")

    def describe(self) -> str:
        if self.mode == DOUBLING:
            return f"doubling C={self.C}"
        return f"custom N={list(self.factors)}" + (f" l={list(self.group_lengths)}" if self.group_lengths else "")


def zoom_N(s: ZoomSchedule, k: int) -> int:
    if k < 0:
        raise ScheduleError(f"Level must be non-negative, got {k}")
    if s.mode == DOUBLING:
        return 1 << (s.C << k)
    if k > s.max_level:
        raise ScheduleError(f"Custom schedule lists {len(s.factors)} levels, asked for N({k})")
    return s.factors[k]


@lru_cache(maxsize=None)
def side_L(s: ZoomSchedule, k: int) -> int:
    """L(k) = N(0) * ... * N(k-1)"""
    if k < 0:
        raise ScheduleError(f"Level must be non-negative, got {k}")
    return math.prod(zoom_N(s, i) for i in range(k))


def group_length(s: ZoomSchedule, k: int) -> int:
    if k < 0:
        raise ScheduleError(f"Level must be non-negative, got {k}")
    if s.group_lengths is None:
        return k
    if k >= len(s.group_lengths):
        raise ScheduleError(f"Schedule lists {len(s.group_lengths)} group lengths, asked for l({k})")
    return s.group_lengths[k]


def _check_vpos(s: ZoomSchedule, k: int, vpos: int) -> None:
    if not 0 <= vpos < zoom_N(s, k):
        raise ScheduleError(f"Vertical position {vpos} outside 0..N({k})-1")


def delegated_bit_index(s: ZoomSchedule, k: int, vpos: int) -> Optional[int]:
    """Offset in the own zone of the bit a level-k tile at `vpos` keeps, if any"""
    _check_vpos(s, k, vpos)
    return vpos if vpos < side_L(s, k) else None


class GroupSlot(NamedTuple):
    start: int
    length: int


def group_assignment(s: ZoomSchedule, k: int, vpos: int) -> Optional[GroupSlot]:
    """Group start measured from the left edge of the extended zone; None if it does not fit"""
    _check_vpos(s, k, vpos)
    length = group_length(s, k)
    if vpos + length > 3 * side_L(s, k):
        return None
    return GroupSlot(vpos, length)


def block_start(s: ZoomSchedule, k: int, block: int, alignment: int) -> int:
    return alignment + block * side_L(s, k)


def block_of(s: ZoomSchedule, k: int, column: int, alignment: int) -> int:
    return (column - alignment) // side_L(s, k)


def extended_zone(s: ZoomSchedule, k: int, block_index: int, alignment: int) -> Interval:
    L = side_L(s, k)
    return alignment + (block_index - 1) * L, alignment + (block_index + 2) * L


def covering_block(s: ZoomSchedule, k: int, window: Interval, alignment: int) -> Optional[int]:
    """Block whose extended zone holds the window, choosing the leftmost-starting fit"""
    lo, hi = window
    b = block_of(s, k, lo, alignment) + 1
    zlo, zhi = extended_zone(s, k, b, alignment)
    return b if zlo <= lo and hi <= zhi else None


def covering_levels(s: ZoomSchedule, K: int, window: Interval, alignments: Sequence[int]) -> List[int]:
    _check_alignment_length(K, alignments)
    return [k for k in range(K + 1) if covering_block(s, k, window, alignments[k]) is not None]


def window_coverage(s: ZoomSchedule, K: int, window: Interval, alignments: Sequence[int]) -> Optional[int]:
    """Smallest level k <= K with an extended zone containing the window"""
    levels = covering_levels(s, K, window, alignments)
    return levels[0] if levels else None


def _check_alignment_length(K: int, alignment: Sequence[int]) -> None:
    if len(alignment) != K + 1:
        raise AssemblyError(f"Alignment needs {K + 1} offsets (levels 0..{K}), got {len(alignment)}")


def validate_alignment(s: ZoomSchedule, K: int, alignment: Sequence[int]) -> Tuple[int, ...]:
    """Check that each level's grid refines the next one"""
    _check_alignment_length(K, alignment)
    for k in range(K):
        if (alignment[k + 1] - alignment[k]) % side_L(s, k):
            raise AssemblyError(
                f"Inconsistent alignments: a[{k + 1}]={alignment[k + 1]} and a[{k}]={alignment[k]} "
                f"differ by a non-multiple of L({k})={side_L(s, k)}"
            )
    return tuple(int(a) for a in alignment)


def canonical_alignments(s: ZoomSchedule, K: int) -> List[Tuple[int, ...]]:
    """Every distinct grid up to shift: a[K] in 0..L(K)-1 and a[k] = a[K] mod L(k)"""
    return [tuple(top % side_L(s, k) for k in range(K + 1)) for top in range(side_L(s, K))]


class Margins(NamedTuple):
    log: int = 10
    son: int = 2
    grp: int = 4

    @classmethod
    def from_settings(cls) -> "Margins":
        settings = get_settings()
        return cls(settings.margin_log, settings.margin_son, settings.margin_grp)


STRUCTURAL = "structural"
CAPACITY = "capacity"
CHECK_KINDS = {"a": CAPACITY, "b": STRUCTURAL, "c": CAPACITY, "d": STRUCTURAL}
CHECK_TEXT = {
    "a": "m_log*(bitlen N(k+1) + bitlen N(k+2)) <= N(k-1)",
    "b": "N(k) >= m_son*L(k)",
    "c": "m_grp*(l(k) + 3*l(k+1)) <= N(k-1)",
    "d": "l(k) <= N(k-1)",
}


@dataclass(frozen=True)
class LevelCheck:
    level: int
    check: str
    status: str
    lhs: Optional[int] = None
    rhs: Optional[int] = None

    @property
    def kind(self) -> str:
        return CHECK_KINDS[self.check]

    def to_dict(self) -> Dict:
        # big ints go out as strings so JSON readers keep them exact
        return {
            "level": self.level,
            "check": self.check,
            "kind": self.kind,
            "status": self.status,
            "lhs": None if self.lhs is None else str(self.lhs),
            "rhs": None if self.rhs is None else str(self.rhs),
            "inequality": CHECK_TEXT[self.check],
        }


@dataclass
class ScheduleReport:
    """Outcome of validate_schedule, one entry per (level, check)"""

    schedule: ZoomSchedule
    kmax: int
    margins: Margins
    entries: List[LevelCheck] = field(default_factory=list)

    def failures(self, kind: Optional[str] = None) -> List[LevelCheck]:
        return [e for e in self.entries if e.status == "fail" and (kind is None or e.kind == kind)]

    def check(self, level: int, check: str) -> LevelCheck:
        for entry in self.entries:
            if entry.level == level and entry.check == check:
                return entry
        raise KeyError((level, check))

    @property
    def ok(self) -> bool:
        return not self.failures()

    @property
    def structural_ok(self) -> bool:
        return not self.failures(STRUCTURAL)

    @property
    def capacity_ok(self) -> bool:
        return not self.failures(CAPACITY)

    @property
    def threshold(self) -> Optional[int]:
        """Smallest level from which every applicable check passes up to kmax"""
        failed = [e.level for e in self.failures()]
        if not failed:
            return 0
        start = max(failed) + 1
        return start if start <= self.kmax else None

    def to_dict(self) -> Dict:
        return {
            "schedule": self.schedule.to_dict(),
            "kmax": self.kmax,
            "margins": self.margins._asdict(),
            "ok": self.ok,
            "structural_ok": self.structural_ok,
            "capacity_ok": self.capacity_ok,
            "threshold": self.threshold,
            "entries": [e.to_dict() for e in self.entries],
        }


def _compare(level: int, check: str, lhs: int, rhs: int) -> LevelCheck:
    return LevelCheck(level, check, "pass" if lhs <= rhs else "fail", lhs, rhs)


def validate_schedule(s: ZoomSchedule, kmax: int, margins: Optional[Margins] = None) -> ScheduleReport:
    """
    Evaluate the four margin inequalities at every level 0..kmax.

    Checks that need N(k-1) are not applicable at k = 0; checks that need a
    level beyond a custom list are not applicable either. Failures are
    report entries, never exceptions.
    """
    if kmax < 0:
        raise ScheduleError(f"kmax must be non-negative, got {kmax}")
    margins = margins or Margins.from_settings()
    report = ScheduleReport(s, kmax, margins)

    def known(*levels: int) -> bool:
        return all(s.knows(j) and (s.group_lengths is None or j < len(s.group_lengths)) for j in levels)

    for k in range(kmax + 1):
        if k >= 1 and known(k - 1, k + 1, k + 2):
            lhs = margins.log * (zoom_N(s, k + 1).bit_length() + zoom_N(s, k + 2).bit_length())
            report.entries.append(_compare(k, "a", lhs, zoom_N(s, k - 1)))
        else:
            report.entries.append(LevelCheck(k, "a", "n/a"))

        if known(k):
            report.entries.append(_compare(k, "b", margins.son * side_L(s, k), zoom_N(s, k)))
        else:
            report.entries.append(LevelCheck(k, "b", "n/a"))

        if k >= 1 and known(k - 1, k, k + 1):
            lhs = margins.grp * (group_length(s, k) + 3 * group_length(s, k + 1))
            report.entries.append(_compare(k, "c", lhs, zoom_N(s, k - 1)))
        else:
            report.entries.append(LevelCheck(k, "c", "n/a"))

        if k >= 1 and known(k - 1, k):
            report.entries.append(_compare(k, "d", group_length(s, k), zoom_N(s, k - 1)))
        else:
            report.entries.append(LevelCheck(k, "d", "n/a"))

    for failure in report.failures():
        logger.debug("schedule %s level %d check %s failed", s.describe(), failure.level, failure.check)
    return report
