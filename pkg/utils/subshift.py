"""
Binary subshifts given by step-indexed forbidden-word enumerators.

An enumerator is a generator that yields once per step: either the word
released at that step or None for a step that released nothing. The front
after t steps is the set of words among the first t yields, so fronts are
monotone in t and empty at t = 0.
"""
import itertools
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional, Set, Tuple

from utils.config import get_settings
from utils.errors import ResourceLimitError, SpecFormatError

logger = logging.getLogger(__name__)

Enumerator = Callable[[Dict], Iterator[Optional[str]]]
_BUILTINS: Dict[str, Enumerator] = {}


def register_builtin(name: str):
    """Add a named enumerator; machine-backed enumerators plug in here"""

    def wrap(fn: Enumerator) -> Enumerator:
        _BUILTINS[name] = fn
        return fn

    return wrap


def builtin_names() -> List[str]:
    return sorted(_BUILTINS)


def _check_word(word: str, where: str) -> str:
    if not word or set(word) - {"0", "1"}:
        raise SpecFormatError(f"{where}: forbidden words must be non-empty bit strings, got {word!r}")
    return word


@register_builtin("finite_list")
def _finite_list(params: Dict) -> Iterator[Optional[str]]:
    """Word i is released at step i + 1"""
    for i, word in enumerate(params.get("words", [])):
        yield _check_word(word, f"finite_list word {i}")
    while True:
        yield None


@register_builtin("golden_mean")
def _golden_mean(params: Dict) -> Iterator[Optional[str]]:
    """"11" at step 1"""
    yield "11"
    while True:
        yield None


@register_builtin("even_shift")
def _even_shift(params: Dict) -> Iterator[Optional[str]]:
    """1 0^(2k+1) 1 at step k + 1"""
    for k in itertools.count():
        yield "1" + "0" * (2 * k + 1) + "1"


@register_builtin("no_run")
def _no_run(params: Dict) -> Iterator[Optional[str]]:
    """Runs longer than r: 0^(r+1) at step 1, 1^(r+1) at step 2"""
    r = int(params.get("r", 1))
    if r < 1:
        raise SpecFormatError("no_run needs r >= 1")
    yield "0" * (r + 1)
    yield "1" * (r + 1)
    while True:
        yield None


@register_builtin("program")
def _program(params: Dict) -> Iterator[Optional[str]]:
    """
    Word-generator table.

    Each row is {"prefix", "unit", "suffix", "max_repeat"?}. Step s serves
    row (s-1) mod R with repeat count (s-1) div R and releases
    prefix + unit*count + suffix; a row past its max_repeat spends the step
    without releasing.
    """
    rows = params.get("rows") or []
    if not rows:
        raise SpecFormatError("program builtin needs at least one row")
    table = []
    for i, row in enumerate(rows):
        prefix, unit, suffix = row.get("prefix", ""), row.get("unit", ""), row.get("suffix", "")
        for part in (prefix, unit, suffix):
            if set(part) - {"0", "1"}:
                raise SpecFormatError(f"program row {i} has a non-bit part {part!r}")
        if not (prefix or unit or suffix):
            raise SpecFormatError(f"program row {i} generates the empty word")
        cap = row.get("max_repeat")
        table.append((prefix, unit, suffix, None if cap is None else int(cap)))

    for step in itertools.count():
        prefix, unit, suffix, cap = table[step % len(table)]
        repeat = step // len(table)
        if cap is not None and repeat > cap:
            yield None
            continue
        word = prefix + unit * repeat + suffix
        yield word if word else None


@dataclass(frozen=True, eq=False)
class SubshiftSpec:
    """A binary subshift given by its forbidden-word enumerator"""

    kind: str
    name: str
    params: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("finite", "builtin"):
            raise SpecFormatError(f"Unknown subshift kind {self.kind!r}")
        if self.name not in _BUILTINS:
            raise SpecFormatError(f"Unknown builtin {self.name!r}; known: {', '.join(builtin_names())}")

    @property
    def key(self) -> str:
        return json.dumps([self.kind, self.name, self.params], sort_keys=True)

    def __eq__(self, other) -> bool:
        return isinstance(other, SubshiftSpec) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def steps(self) -> Iterator[Optional[str]]:
        return _BUILTINS[self.name](self.params)

    @classmethod
    def finite(cls, words) -> "SubshiftSpec":
        spec = cls("finite", "finite_list", {"words": list(words)})
        releases(spec, len(spec.params["words"]))
        return spec

    @classmethod
    def builtin(cls, name: str, **params) -> "SubshiftSpec":
        spec = cls("builtin", name, params)
        releases(spec, 1)
        return spec

    def to_dict(self) -> Dict:
        if self.kind == "finite":
            return {"kind": "finite", "words": list(self.params.get("words", []))}
        data = {"kind": "builtin", "name": self.name}
        if self.params:
            data["params"] = dict(self.params)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "SubshiftSpec":
        kind = data.get("kind")
        if kind == "finite":
            if not isinstance(data.get("words"), list):
                raise SpecFormatError("Finite subshift JSON needs a 'words' list")
            return cls.finite(data["words"])
        if kind == "builtin":
            if "name" not in data:
                raise SpecFormatError("Builtin subshift JSON needs a 'name'")
            return cls.builtin(data["name"], **(data.get("params") or {}))
        raise SpecFormatError(f"Unknown subshift kind {kind!r}")


@lru_cache(maxsize=64)
def _release_store(key: str) -> List[Optional[str]]:
    """Per-spec prefix of enumerator yields, grown in place"""
    return []


def _prefix(spec: SubshiftSpec, t: int) -> List[Optional[str]]:
    known = _release_store(spec.key)
    if len(known) < t:
        known[:] = itertools.islice(spec.steps(), t)
    return known[:t]


def releases(spec: SubshiftSpec, t: int) -> List[Tuple[int, str]]:
    """(step, word) pairs released within t steps, in release order"""
    if t < 0:
        raise SpecFormatError("Step budget must be non-negative")
    return [(i + 1, w) for i, w in enumerate(_prefix(spec, t)) if w is not None]


def enum_step(spec: SubshiftSpec, t: int) -> Set[str]:
    """Forbidden words enumerated within exactly t steps"""
    return {w for _, w in releases(spec, t)}


def release_step(spec: SubshiftSpec, word: str, horizon: int) -> Optional[int]:
    """First step (up to horizon) at which `word` is released"""
    for step, w in releases(spec, horizon):
        if w == word:
            return step
    return None


class Offender(NamedTuple):
    word: str
    offset: int


class LegalityCheck(NamedTuple):
    legal: bool
    offender: Optional[Offender]


def first_offender(word: str, forbidden: Set[str]) -> Optional[Offender]:
    """Leftmost occurrence of a forbidden factor, shortest first on ties"""
    best = None
    for f in forbidden:
        pos = word.find(f)
        if pos >= 0 and (best is None or (pos, len(f), f) < (best.offset, len(best.word), best.word)):
            best = Offender(f, pos)
    return best


def is_legal_window(spec: SubshiftSpec, word: str, t: int) -> LegalityCheck:
    _check_bits(word)
    offender = first_offender(word, enum_step(spec, t))
    return LegalityCheck(offender is None, offender)


def legal_words(spec: SubshiftSpec, n: int, t: int, cap: Optional[int] = None) -> List[str]:
    """All length-n bit words with no factor in enum_step(spec, t), lexicographic"""
    if n < 0 or t < 0:
        raise SpecFormatError("Word length and budget must be non-negative")
    cap = get_settings().legal_words_cap if cap is None else cap
    if n > cap:
        raise ResourceLimitError(f"legal_words is capped at n={cap}, asked for n={n}")

    forbidden = enum_step(spec, t)
    words = ("".join(bits) for bits in itertools.product("01", repeat=n))
    legal = [w for w in words if first_offender(w, forbidden) is None]
    logger.debug("legal_words n=%d t=%d: %d of %d", n, t, len(legal), 2 ** n)
    return legal


def _check_bits(word: str) -> None:
    if set(word) - {"0", "1"}:
        raise SpecFormatError(f"Words are bit strings, got {word!r}")
