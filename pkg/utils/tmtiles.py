"""
Deterministic Turing machines on a fixed tape window and their space-time
Wang tile encoding.

Row y of an h-row region (top row y = 0) holds the configuration at time
h-1-y. A tile's south color is its cell at that time and its north color is
the cell one step later; head moves travel sideways as signals. Once the
accept state is reached it is copied upward marked "final", and the top side
admits only unmarked cells and final accept cells, so a tiling exists iff
the machine accepts within h-1 steps without leaving the window.
"""
import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, List, Tuple

from utils.core import Patch, WangTile, WangTileSet
from utils.errors import MalformedMachineError, SpecFormatError
from utils.solver import BoundaryConstraint

logger = logging.getLogger(__name__)

MOVES = {"L": -1, "R": 1, "S": 0}
ACCEPTED = "accepted"
RUNNING = "running"
OUT_OF_BOUNDS = "out-of-bounds"
SILENT = 0

Rule = Tuple[str, str, str]  # (next state, written symbol, move)


@dataclass(frozen=True)
class TMSpec:
    """A deterministic machine; `delta` maps (state, symbol) to (state, symbol, move)"""

    states: Tuple[str, ...]
    start: str
    accept: str
    blank: str
    delta: Dict[Tuple[str, str], Rule] = field(hash=False)
    symbols: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.symbols:
            found = {self.blank} | {a for _, a in self.delta} | {r[1] for r in self.delta.values()}
            object.__setattr__(self, "symbols", tuple(sorted(found)))
        self.validate()

    def validate(self) -> None:
        states, symbols = set(self.states), set(self.symbols)
        if len(states) != len(self.states) or len(symbols) != len(self.symbols):
            raise MalformedMachineError("Duplicate states or symbols")
        if self.start not in states or self.accept not in states:
            raise MalformedMachineError("Start and accept states must be listed in 'states'")
        if self.blank not in symbols:
            raise MalformedMachineError(f"Blank {self.blank!r} is not a tape symbol")
        if any(len(a) != 1 for a in self.symbols):
            raise MalformedMachineError("Tape symbols must be single characters")
        for (q, a), (q2, a2, m) in self.delta.items():
            if q not in states or q2 not in states:
                raise MalformedMachineError(f"Transition ({q}, {a}) uses an unknown state")
            if a not in symbols or a2 not in symbols:
                raise MalformedMachineError(f"Transition ({q}, {a}) uses an unknown symbol")
            if m not in MOVES:
                raise MalformedMachineError(f"Transition ({q}, {a}) has move {m!r}, expected L, R or S")
            if q == self.accept:
                raise MalformedMachineError("The accept state has no outgoing transitions")
        for q in self.states:
            if q == self.accept:
                continue
            missing = [a for a in self.symbols if (q, a) not in self.delta]
            if missing:
                raise MalformedMachineError(f"No transition for state {q} on {missing}")

    def to_dict(self) -> Dict:
        return {
            "states": list(self.states),
            "start": self.start,
            "accept": self.accept,
            "blank": self.blank,
            "symbols": list(self.symbols),
            "delta": [
                {"q": q, "a": a, "q2": q2, "a2": a2, "m": m}
                for (q, a), (q2, a2, m) in sorted(self.delta.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "TMSpec":
        try:
            delta = {}
            for entry in data["delta"]:
                key = (entry["q"], entry["a"])
                if key in delta:
                    raise MalformedMachineError(f"Two transitions for {key}")
                delta[key] = (entry["q2"], entry["a2"], entry["m"])
            return cls(
                states=tuple(data["states"]),
                start=data["start"],
                accept=data["accept"],
                blank=data["blank"],
                delta=delta,
                symbols=tuple(data.get("symbols", ())),
            )
        except (KeyError, TypeError) as e:
            raise MalformedMachineError(f"Malformed machine JSON: {e}") from e


# --- fixture machines ---

UNARY_ERASE_RULES = {
    ("q0", "1"): ("q0", "_", "R"),
    ("q0", "_"): ("acc", "_", "S"),
}

RIGHT_MOVER_RULES = {
    ("q0", "1"): ("q0", "1", "R"),
    ("q0", "_"): ("q0", "_", "R"),
}

SELF_LOOP_RULES = {
    ("q0", "1"): ("q0", "1", "S"),
    ("q0", "_"): ("q0", "_", "S"),
}


def _fixture(rules: Dict[Tuple[str, str], Rule]) -> TMSpec:
    return TMSpec(states=("q0", "acc"), start="q0", accept="acc", blank="_", delta=dict(rules), symbols=("_", "1"))


FIXTURE_MACHINES = {
    "unary_erase": lambda: _fixture(UNARY_ERASE_RULES),
    "right_mover": lambda: _fixture(RIGHT_MOVER_RULES),
    "self_loop": lambda: _fixture(SELF_LOOP_RULES),
}


@dataclass(frozen=True)
class Configuration:
    tape: str
    head: int
    state: str

    def to_dict(self) -> Dict:
        return {"tape": self.tape, "head": self.head, "state": self.state}


@dataclass
class Transcript:
    configs: List[Configuration]
    verdict: str
    steps: int

    @property
    def accepted(self) -> bool:
        return self.verdict == ACCEPTED

    def to_dict(self) -> Dict:
        return {"verdict": self.verdict, "steps": self.steps, "configs": [c.to_dict() for c in self.configs]}


def _check_input(tm: TMSpec, word: str, tape_width: int) -> None:
    if len(word) > tape_width:
        raise SpecFormatError(f"Input of length {len(word)} does not fit a tape of width {tape_width}")
    unknown = set(word) - set(tm.symbols)
    if unknown:
        raise SpecFormatError(f"Input uses symbols outside the tape alphabet: {sorted(unknown)}")


def run_tm(tm: TMSpec, word: str, max_steps: int, tape_width: int) -> Transcript:
    """Simulate on a window of `tape_width` cells, head starting on cell 0"""
    _check_input(tm, word, tape_width)
    tape = list(word.ljust(tape_width, tm.blank))
    head, state = 0, tm.start
    configs = [Configuration("".join(tape), head, state)]
    steps = 0
    while state != tm.accept:
        if steps == max_steps:
            return Transcript(configs, RUNNING, steps)
        state, tape[head], move = tm.delta[(state, tape[head])]
        head += MOVES[move]
        steps += 1
        if not 0 <= head < tape_width:
            logger.debug("head left the window at step %d", steps)
            return Transcript(configs, OUT_OF_BOUNDS, steps)
        configs.append(Configuration("".join(tape), head, state))
    return Transcript(configs, ACCEPTED, steps)


@dataclass
class TMEncoding:
    """Tile set for a w x h window plus the color keys behind each index"""

    tm: TMSpec
    w: int
    h: int
    tiles: WangTileSet
    keys: Tuple = ()

    def color(self, key) -> int:
        return self.keys.index(key)

    def bottom_colors(self, word: str) -> Tuple[int, ...]:
        _check_input(self.tm, word, self.w)
        tape = word.ljust(self.w, self.tm.blank)
        return tuple(self.color((a, self.tm.start if x == 0 else None)) for x, a in enumerate(tape))

    @property
    def top_allowed(self) -> frozenset:
        allowed = [(a, None) for a in self.tm.symbols] + [(a, self.tm.accept, "final") for a in self.tm.symbols]
        return frozenset(self.color(key) for key in allowed)

    def boundary(self, word: str) -> BoundaryConstraint:
        return BoundaryConstraint(
            north=(self.top_allowed,) * self.w,
            south=self.bottom_colors(word),
            west=(SILENT,) * self.h,
            east=(SILENT,) * self.h,
        )

    def decode_witness(self, tiling: Patch) -> Transcript:
        """Read the configurations back from the south colors, bottom row first"""
        configs = []
        for y in range(self.h - 1, -1, -1):
            cells = [self.keys[self.tiles.tiles[tiling.at(x, y)].south] for x in range(self.w)]
            heads = [(x, key[1]) for x, key in enumerate(cells) if key[1] is not None]
            if len(heads) != 1:
                raise SpecFormatError(f"Row {y} of the witness has {len(heads)} heads")
            head, state = heads[0]
            configs.append(Configuration("".join(key[0] for key in cells), head, state))
            if state == self.tm.accept:
                return Transcript(configs, ACCEPTED, len(configs) - 1)
        return Transcript(configs, RUNNING, len(configs) - 1)


def tm_to_wang(tm: TMSpec, w: int, h: int) -> TMEncoding:
    if w < 1 or h < 1:
        raise SpecFormatError("Window must be at least 1 x 1")
    keys: List = [SILENT]

    def color(key) -> int:
        if key not in keys:
            keys.append(key)
        return keys.index(key)

    for a in tm.symbols:
        color((a, None))
        for q in tm.states:
            color((a, q))
        color((a, tm.accept, "final"))

    tiles: List[WangTile] = []

    def add(north, east, south, west, label: str) -> None:
        tiles.append(WangTile(color(north), color(east), color(south), color(west), label))

    for a in tm.symbols:
        add((a, None), SILENT, (a, None), SILENT, f"plain:{a}")
        for q in tm.states:
            add((a, q), SILENT, (a, None), ("signal", "R", q), f"from-left:{q}:{a}")
            add((a, q), ("signal", "L", q), (a, None), SILENT, f"from-right:{q}:{a}")
        for start in ((a, tm.accept), (a, tm.accept, "final")):
            add((a, tm.accept, "final"), SILENT, start, SILENT, f"halt:{a}:{len(start)}")

    for (q, a), (q2, a2, m) in sorted(tm.delta.items()):
        if m == "S":
            add((a2, q2), SILENT, (a, q), SILENT, f"step:{q}:{a}")
        elif m == "R":
            add((a2, None), ("signal", "R", q2), (a, q), SILENT, f"step:{q}:{a}")
        else:
            add((a2, None), SILENT, (a, q), ("signal", "L", q2), f"step:{q}:{a}")

    logger.debug("machine encoded as %d tiles over %d colors for a %dx%d window", len(tiles), len(keys), w, h)
    return TMEncoding(tm, w, h, WangTileSet(len(keys), tuple(tiles)), tuple(keys))


def inputs_up_to(tm: TMSpec, length: int) -> Iterable[str]:
    """Every tape word of length 0..length, shortest first"""
    for n in range(length + 1):
        for letters in product(tm.symbols, repeat=n):
            yield "".join(letters)
