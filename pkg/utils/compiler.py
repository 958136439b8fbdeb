"""
Lowering of a subshift spec plus a zoom schedule to the two-layer system,
and the desk-scale verifiers that exercise it.

Layer 1 is the vertical-constancy rule over bits. Layer 2 is the hierarchy
constraint catalogue evaluated on assemblies. A patch of height h carries
only the levels k <= K with L(k) <= h, so soundness claims are qualified by
the budgets of those levels.
"""
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from utils.config import get_settings
from utils.core import BITS, LocalRule, ProjectionMap, vertical_constancy_rule
from utils.errors import ResourceLimitError, ScheduleError, SpecFormatError
from utils.flatten import FlatSystem, FlattenBounds, flatten_system
from utils.hierarchy import CATALOGUE, ViolationEntry, build_assembly, check_assembly
from utils.schedule import (
    ScheduleReport,
    ZoomSchedule,
    canonical_alignments,
    covering_block,
    group_length,
    side_L,
    validate_alignment,
    validate_schedule,
)
from utils.subshift import SubshiftSpec, legal_words, releases

logger = logging.getLogger(__name__)

SOUNDNESS = "soundness"
COMPLETENESS = "completeness"
EXTENDABILITY = "extendability"

AlignmentLike = Union[int, Sequence[int]]


@dataclass
class CompiledSystem:
    spec: SubshiftSpec
    schedule: ZoomSchedule
    K: int
    layer1: LocalRule
    schedule_report: ScheduleReport
    flat: Optional[FlatSystem] = None
    forced: bool = False

    @property
    def layer2(self) -> Dict:
        """Parameters of the hierarchy catalogue: C8 runs l(k) enumeration steps at level k"""
        return {
            "catalogue": list(CATALOGUE),
            "levels": self.K,
            "group_lengths": [group_length(self.schedule, k) for k in range(self.K + 1)],
            "sides": [str(side_L(self.schedule, k)) for k in range(self.K + 1)],
        }

    def to_dict(self) -> Dict:
        data = {
            "spec": self.spec.to_dict(),
            "schedule": self.schedule.to_dict(),
            "K": self.K,
            "forced": self.forced,
            "layer1": self.layer1.to_dict(),
            "layer2": self.layer2,
            "schedule_ok": self.schedule_report.ok,
        }
        if self.flat is not None:
            data["flat"] = self.flat.bounds.to_dict() | {"tiles": len(self.flat.tiles)}
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "CompiledSystem":
        try:
            flat = data.get("flat")
            return compile_system(
                SubshiftSpec.from_dict(data["spec"]),
                ZoomSchedule.from_dict(data["schedule"]),
                int(data["K"]),
                flatten=None if flat is None else FlattenBounds.from_dict(flat),
                force=bool(data.get("forced", False)),
            )
        except KeyError as e:
            raise SpecFormatError(f"Compiled system JSON missing field {e}") from e


def compile_system(
    spec: SubshiftSpec,
    schedule: ZoomSchedule,
    K: int,
    flatten: Optional[FlattenBounds] = None,
    force: bool = False,
    strict: bool = False,
) -> CompiledSystem:
    """
    Assemble both layers after checking the schedule up to K + 2.

    Structural failures need `force`; capacity failures only warn unless
    `strict` is set.
    """
    if K < 0:
        raise ScheduleError(f"K must be non-negative, got {K}")
    if schedule.max_level is not None and K > schedule.max_level:
        raise ScheduleError(f"Custom schedule defines levels 0..{schedule.max_level}, asked for K={K}")

    report = validate_schedule(schedule, K + 2)
    structural = report.failures("structural")
    capacity = report.failures("capacity")
    if structural and not force:
        raise ScheduleError(
            "Schedule fails structural checks at "
            + ", ".join(f"k={e.level} ({e.check})" for e in structural)
            + "; pass force=True to compile anyway"
        )
    if capacity:
        if strict and not force:
            raise ScheduleError(f"Schedule fails {len(capacity)} capacity checks and strict mode is on")
        logger.warning(
            "schedule %s misses capacity margins at levels %s",
            schedule.describe(),
            sorted({e.level for e in capacity}),
        )

    layer1 = vertical_constancy_rule(BITS, ProjectionMap.identity(BITS))
    flat = None if flatten is None else flatten_system(spec, schedule, K, flatten)
    cs = CompiledSystem(spec, schedule, K, layer1, report, flat, forced=force and bool(structural))
    logger.info("compiled %s with %s, K=%d", spec.name, schedule.describe(), K)
    return cs


def effective_level(cs: CompiledSystem, height: int) -> int:
    """Highest level k <= K whose tiles fit in `height` rows"""
    if height < 1:
        raise ResourceLimitError(f"Height must be at least 1, got {height}")
    return max(k for k in range(cs.K + 1) if side_L(cs.schedule, k) <= height)


def normalize_alignment(s: ZoomSchedule, K: int, alignment: AlignmentLike) -> Tuple[int, ...]:
    """An int is the top-level offset; lower levels follow it"""
    if isinstance(alignment, int):
        return tuple(alignment % side_L(s, k) for k in range(K + 1))
    return validate_alignment(s, K, alignment)


def _alignments(cs: CompiledSystem, K: int, alignments: Optional[Iterable[AlignmentLike]]) -> List[Tuple[int, ...]]:
    if alignments is None:
        return canonical_alignments(cs.schedule, K)
    return [normalize_alignment(cs.schedule, K, a) for a in alignments]


@dataclass(frozen=True)
class CatchableFactor:
    word: str
    offset: int
    step: int
    level: int


def catchable_factors(
    cs: CompiledSystem, ground: str, budget: int, K: int, alignment: Sequence[int]
) -> List[CatchableFactor]:
    """
    Forbidden factors of `ground` that the levels up to K must catch: released
    within `budget` steps and inside the extended zone of a level whose group
    length covers both the release step and the factor.
    """
    found = []
    for step, word in releases(cs.spec, budget):
        start = ground.find(word)
        while start >= 0:
            window = (start, start + len(word))
            for k in range(K + 1):
                if group_length(cs.schedule, k) < max(step, len(word)):
                    continue
                if covering_block(cs.schedule, k, window, alignment[k]) is not None:
                    found.append(CatchableFactor(word, start, step, k))
                    break
            start = ground.find(word, start + 1)
    return found


@dataclass
class VerificationFailure:
    """One failing instance, with everything needed to replay it"""

    word: str
    alignment: Tuple[int, ...]
    reason: str
    details: List[str] = field(default_factory=list)
    replay: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "word": self.word,
            "alignment": list(self.alignment),
            "reason": self.reason,
            "details": self.details,
            "replay": self.replay,
        }


@dataclass
class VerificationReport:
    mode: str
    instances: int = 0
    failures: List[VerificationFailure] = field(default_factory=list)
    accepted: List[str] = field(default_factory=list)
    params: Dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict:
        return {
            "mode": self.mode,
            "ok": self.ok,
            "instances": self.instances,
            "params": self.params,
            "accepted": self.accepted,
            "failures": [f.to_dict() for f in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _check_width(w: int) -> None:
    cap = get_settings().verify_width_cap
    if w < 0:
        raise SpecFormatError(f"Width must be non-negative, got {w}")
    if w > cap:
        raise ResourceLimitError(f"Verification width is capped at {cap}, asked for {w}")


def _describe(entries: Sequence[ViolationEntry]) -> List[str]:
    return [f"{e.constraint} level {e.level} at {tuple(e.position)}: {e.description}" for e in entries[:10]]


def _sweep(items: List, fn, threads: Optional[int]) -> List:
    threads = threads or get_settings().threads
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def verify_soundness(
    cs: CompiledSystem,
    w: int,
    h: int,
    t: int,
    alignments: Optional[Iterable[AlignmentLike]] = None,
    threads: Optional[int] = None,
) -> VerificationReport:
    """No accepted assembly of width w may keep a factor its levels must catch"""
    _check_width(w)
    K = effective_level(cs, h)
    sweep = _alignments(cs, K, alignments)
    words = ["".join(bits) for bits in itertools.product("01", repeat=w)] if w else []

    def run(word: str) -> Tuple[bool, List[VerificationFailure]]:
        accepted, failures = False, []
        for alignment in sweep:
            report = check_assembly(build_assembly(word, K, cs.schedule, alignment), cs.spec, budget=t)
            if not report.ok:
                continue
            accepted = True
            missed = catchable_factors(cs, word, t, K, alignment)
            if missed:
                failures.append(VerificationFailure(
                    word, alignment, "accepted assembly keeps a catchable forbidden factor",
                    [f"{m.word} at {m.offset} (step {m.step}, level {m.level})" for m in missed],
                    {"word": word, "alignment": list(alignment), "K": K, "budget": t, "height": h},
                ))
        return accepted, failures

    report = VerificationReport(SOUNDNESS, params={"width": w, "height": h, "budget": t, "levels": K})
    for word, (accepted, failures) in zip(words, _sweep(words, run, threads)):
        report.instances += len(sweep)
        if accepted:
            report.accepted.append(word)
        report.failures.extend(failures)
        logger.debug("soundness %s: accepted=%s failures=%d", word, accepted, len(failures))
    logger.info("soundness w=%d t=%d: %d instances, %d failures", w, t, report.instances, len(report.failures))
    return report


def verify_completeness(
    cs: CompiledSystem,
    w: int,
    t: int,
    alignments: Optional[Iterable[AlignmentLike]] = None,
    threads: Optional[int] = None,
) -> VerificationReport:
    """Every word legal at budget t must be realized under every swept alignment"""
    _check_width(w)
    report = VerificationReport(COMPLETENESS, params={"width": w, "budget": t, "levels": cs.K})
    if w == 0:
        return report
    sweep = _alignments(cs, cs.K, alignments)
    words = legal_words(cs.spec, w, t)

    def run(word: str) -> List[VerificationFailure]:
        failures = []
        for alignment in sweep:
            result = check_assembly(build_assembly(word, cs.K, cs.schedule, alignment), cs.spec, budget=t)
            if not result.ok:
                failures.append(VerificationFailure(
                    word, alignment, "legal word rejected", _describe(result.entries),
                    {"word": word, "alignment": list(alignment), "K": cs.K, "budget": t},
                ))
        return failures

    for word, failures in zip(words, _sweep(words, run, threads)):
        report.instances += len(sweep)
        if not failures:
            report.accepted.append(word)
        report.failures.extend(failures)
    logger.info("completeness w=%d t=%d: %d of %d words realized", w, t, len(report.accepted), len(words))
    return report


def extendable(cs: CompiledSystem, word: str, h: int) -> bool:
    """Whether some patch of height h over the word passes every check"""
    if not word:
        return True
    _check_width(len(word))
    K = effective_level(cs, h)
    return any(
        check_assembly(build_assembly(word, K, cs.schedule, alignment), cs.spec).ok
        for alignment in canonical_alignments(cs.schedule, K)
    )


def check_extendability(cs: CompiledSystem, words: Sequence[str], h: int) -> VerificationReport:
    """Extendability of several words as a report; non-extendable words are failures"""
    report = VerificationReport(EXTENDABILITY, params={"height": h, "levels": effective_level(cs, h)})
    for word in words:
        report.instances += 1
        if extendable(cs, word, h):
            report.accepted.append(word)
        else:
            report.failures.append(VerificationFailure(word, (), "not extendable", replay={"word": word, "height": h}))
    return report
