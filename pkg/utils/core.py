"""
Grids, alphabets, local rules and Wang tiles.

Letters and colors are dense integer indices; names live in the Alphabet.
Patches are row-major with row 0 on top, so "a above b" means a at (x, y)
and b at (x, y + 1).
"""
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

from utils.errors import (
    AlphabetMismatchError,
    IndexOutOfRangeError,
    NonConstantColumnError,
    SpecFormatError,
)


@dataclass(frozen=True)
class Alphabet:
    """Finite ordered set of letters"""

    letters: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(str(a) for a in self.letters))
        if not self.letters:
            raise SpecFormatError("Alphabet must not be empty")
        if len(set(self.letters)) != len(self.letters):
            raise SpecFormatError(f"Alphabet has duplicate letters: {self.letters}")

    @property
    def size(self) -> int:
        return len(self.letters)

    def index(self, letter: str) -> int:
        try:
            return self.letters.index(letter)
        except ValueError as e:
            raise IndexOutOfRangeError(f"Letter {letter!r} not in alphabet") from e

    def to_dict(self) -> Dict:
        return {"letters": list(self.letters)}

    @classmethod
    def from_dict(cls, data: Dict) -> "Alphabet":
        if "letters" not in data:
            raise SpecFormatError("Alphabet JSON needs 'letters'")
        return cls(tuple(data["letters"]))


BITS = Alphabet(("0", "1"))


@dataclass(frozen=True)
class Patch:
    """Finite rectangular grid of indices (letters or tiles)"""

    width: int
    height: int
    cells: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        if self.width < 0 or self.height < 0:
            raise SpecFormatError("Patch dimensions must be non-negative")
        if len(self.cells) != self.width * self.height:
            raise SpecFormatError(
                f"Patch {self.width}x{self.height} needs {self.width * self.height} "
                f"cells, got {len(self.cells)}"
            )

    def at(self, x: int, y: int) -> int:
        return self.cells[y * self.width + x]

    def rows(self) -> List[Tuple[int, ...]]:
        w = self.width
        return [self.cells[y * w:(y + 1) * w] for y in range(self.height)]

    def window(self, x: int, y: int, mw: int, mh: int) -> Tuple[int, ...]:
        """Row-major contents of the mw x mh window with top-left (x, y)"""
        w = self.width
        out = []
        for dy in range(mh):
            start = (y + dy) * w + x
            out.extend(self.cells[start:start + mw])
        return tuple(out)

    def max_index(self) -> int:
        return max(self.cells, default=-1)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "Patch":
        rows = [tuple(r) for r in rows]
        width = len(rows[0]) if rows else 0
        if any(len(r) != width for r in rows):
            raise SpecFormatError("Patch rows have different lengths")
        return cls(width, len(rows), tuple(itertools.chain.from_iterable(rows)))

    def to_dict(self) -> Dict:
        return {"w": self.width, "h": self.height, "cells": list(self.cells)}

    @classmethod
    def from_dict(cls, data: Dict) -> "Patch":
        try:
            return cls(int(data["w"]), int(data["h"]), tuple(data["cells"]))
        except KeyError as e:
            raise SpecFormatError(f"Patch JSON missing field {e}") from e


@dataclass(frozen=True)
class LocalRule:
    """Forbidden M x M patterns over an alphabet"""

    M: int
    alphabet: Alphabet
    forbidden: Tuple[Patch, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "forbidden", tuple(self.forbidden))
        if self.M < 1:
            raise SpecFormatError("Local rule window side M must be at least 1")
        for p in self.forbidden:
            if p.width != self.M or p.height != self.M:
                raise SpecFormatError(
                    f"Forbidden pattern is {p.width}x{p.height}, rule needs {self.M}x{self.M}"
                )
            if p.max_index() >= self.alphabet.size:
                raise AlphabetMismatchError("Forbidden pattern uses a letter outside the alphabet")

    def to_dict(self) -> Dict:
        return {
            "M": self.M,
            "alphabet": self.alphabet.to_dict(),
            "forbidden": [list(p.cells) for p in self.forbidden],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "LocalRule":
        try:
            m = int(data["M"])
            alphabet = Alphabet.from_dict(data["alphabet"])
            forbidden = tuple(Patch(m, m, tuple(cells)) for cells in data.get("forbidden", []))
        except KeyError as e:
            raise SpecFormatError(f"Rule JSON missing field {e}") from e
        return cls(m, alphabet, forbidden)


@dataclass(frozen=True)
class WangTile:
    north: int
    east: int
    south: int
    west: int
    label: Union[int, str, None] = None

    def to_dict(self) -> Dict:
        data = {"n": self.north, "e": self.east, "s": self.south, "w": self.west}
        if self.label is not None:
            data["label"] = self.label
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "WangTile":
        try:
            return cls(int(data["n"]), int(data["e"]), int(data["s"]), int(data["w"]), data.get("label"))
        except KeyError as e:
            raise SpecFormatError(f"Tile JSON missing field {e}") from e


@dataclass(frozen=True)
class WangTileSet:
    """
    Ordered Wang tiles over `colors` edge colors.

    An empty tile list is accepted here because reductions may forbid every
    block; JSON input must name at least one tile.
    """

    colors: int
    tiles: Tuple[WangTile, ...]

    def __post_init__(self):
        object.__setattr__(self, "tiles", tuple(self.tiles))
        if len(set(self.tiles)) != len(self.tiles):
            raise SpecFormatError("Tile set contains duplicate tiles")
        for t in self.tiles:
            if max(t.north, t.east, t.south, t.west) >= self.colors or min(
                t.north, t.east, t.south, t.west
            ) < 0:
                raise IndexOutOfRangeError(f"Tile {t} uses a color outside 0..{self.colors - 1}")

    def __len__(self) -> int:
        return len(self.tiles)

    def to_dict(self) -> Dict:
        return {"colors": self.colors, "tiles": [t.to_dict() for t in self.tiles]}

    @classmethod
    def from_dict(cls, data: Dict) -> "WangTileSet":
        try:
            tiles = tuple(WangTile.from_dict(t) for t in data["tiles"])
            colors = int(data["colors"])
        except KeyError as e:
            raise SpecFormatError(f"Tile set JSON missing field {e}") from e
        if not tiles:
            raise SpecFormatError("Tile set must contain at least one tile")
        return cls(colors, tiles)


@dataclass(frozen=True)
class ProjectionMap:
    """Total letter map pi: A -> B"""

    pi: Tuple[int, ...]
    target: Alphabet = BITS

    def __post_init__(self):
        object.__setattr__(self, "pi", tuple(int(b) for b in self.pi))
        for b in self.pi:
            if not 0 <= b < self.target.size:
                raise IndexOutOfRangeError(f"Projection value {b} outside target alphabet")

    def __call__(self, letter: int) -> int:
        try:
            return self.pi[letter]
        except IndexError as e:
            raise IndexOutOfRangeError(f"Letter {letter} has no projection") from e

    @classmethod
    def identity(cls, alphabet: Alphabet) -> "ProjectionMap":
        return cls(tuple(range(alphabet.size)), alphabet)


@dataclass(frozen=True, order=True)
class Violation:
    """Forbidden pattern occurrence at a top-left position (x, y)"""

    position: Tuple[int, int]
    pattern: int

    def to_dict(self) -> Dict:
        return {"position": list(self.position), "pattern": self.pattern}


@dataclass(frozen=True, order=True)
class EdgeViolation:
    """Mismatched colors between a cell and its east or south neighbor"""

    cell: Tuple[int, int]
    neighbor: Tuple[int, int]
    side: str
    colors: Tuple[int, int] = field(compare=False)

    def to_dict(self) -> Dict:
        return {
            "cell": list(self.cell),
            "neighbor": list(self.neighbor),
            "side": self.side,
            "colors": list(self.colors),
        }


def check_local_rule(rule: LocalRule, patch: Patch, alphabet: Optional[Alphabet] = None) -> List[Violation]:
    """Every fully contained window matching a forbidden pattern"""
    if alphabet is not None and alphabet != rule.alphabet:
        raise AlphabetMismatchError(f"Patch alphabet {alphabet.letters} differs from rule alphabet {rule.alphabet.letters}")
    if patch.max_index() >= rule.alphabet.size:
        raise AlphabetMismatchError("Patch uses a letter outside the rule alphabet")

    lookup: Dict[Tuple[int, ...], int] = {}
    for i, p in enumerate(rule.forbidden):
        lookup.setdefault(p.cells, i)

    m = rule.M
    found = []
    for y in range(patch.height - m + 1):
        for x in range(patch.width - m + 1):
            pid = lookup.get(patch.window(x, y, m, m))
            if pid is not None:
                found.append(Violation((x, y), pid))
    return sorted(found, key=lambda v: (v.position[1], v.position[0], v.pattern))


def check_wang(tiles: WangTileSet, tiling: Patch, wrap: bool = False) -> List[EdgeViolation]:
    """Every adjacent pair with mismatched colors; `wrap` treats the grid as a torus"""
    n = len(tiles)
    for t in tiling.cells:
        if not 0 <= t < n:
            raise IndexOutOfRangeError(f"Tile index {t} outside 0..{n - 1}")

    w, h = tiling.width, tiling.height
    ts = tiles.tiles
    found = []
    for y in range(h):
        for x in range(w):
            here = ts[tiling.at(x, y)]
            if x + 1 < w or (wrap and w > 0):
                nx = (x + 1) % w
                right = ts[tiling.at(nx, y)]
                if here.east != right.west:
                    found.append(EdgeViolation((x, y), (nx, y), "E", (here.east, right.west)))
            if y + 1 < h or (wrap and h > 0):
                ny = (y + 1) % h
                below = ts[tiling.at(x, ny)]
                if here.south != below.north:
                    found.append(EdgeViolation((x, y), (x, ny), "S", (here.south, below.north)))
    return sorted(found)


class RuleReduction(NamedTuple):
    tiles: WangTileSet
    letter_of: Tuple[int, ...]
    blocks: Tuple[Patch, ...]


def rule_to_wang(rule: LocalRule) -> RuleReduction:
    """
    Block encoding of a local rule.

    Tiles are the allowed M x M blocks in lexicographic order. East/west
    colors name the overlapping M-1 wide column strips and north/south
    colors the overlapping M-1 high row strips, so two blocks can sit side
    by side exactly when they overlap consistently.
    """
    m = rule.M
    forbidden = {p.cells for p in rule.forbidden}
    color_ids: Dict[Tuple, int] = {}

    def color(key: Tuple) -> int:
        return color_ids.setdefault(key, len(color_ids))

    tiles, letters, blocks = [], [], []
    for cells in itertools.product(range(rule.alphabet.size), repeat=m * m):
        if cells in forbidden:
            continue
        block = Patch(m, m, cells)
        if m == 1:
            tile = WangTile(0, 0, 0, 0, label=cells[0])
        else:
            tile = WangTile(
                north=color(("v", block.window(0, 0, m, m - 1))),
                east=color(("h", block.window(1, 0, m - 1, m))),
                south=color(("v", block.window(0, 1, m, m - 1))),
                west=color(("h", block.window(0, 0, m - 1, m))),
            )
        tiles.append(tile)
        letters.append(cells[0])
        blocks.append(block)

    colors = 1 if m == 1 else max(len(color_ids), 1)
    return RuleReduction(WangTileSet(colors, tuple(tiles)), tuple(letters), tuple(blocks))


def wang_to_patch(tiling: Patch, reduction: RuleReduction, M: int) -> Patch:
    """Letter patch of size (w+M-1) x (h+M-1) described by a block tiling"""
    gw, gh = tiling.width, tiling.height
    w, h = gw + M - 1, gh + M - 1
    cells = []
    for y in range(h):
        by = min(y, gh - 1)
        for x in range(w):
            bx = min(x, gw - 1)
            block = reduction.blocks[tiling.at(bx, by)]
            cells.append(block.at(x - bx, y - by))
    return Patch(w, h, tuple(cells))


def project(patch: Patch, pi: ProjectionMap) -> Tuple[int, ...]:
    """Per-column projected letters; every column must be constant under pi"""
    word = []
    for x in range(patch.width):
        images = {pi(patch.at(x, y)) for y in range(patch.height)}
        if len(images) > 1:
            raise NonConstantColumnError(x)
        word.append(images.pop() if images else 0)
    return tuple(word)


def embed(word: Sequence[int], height: int) -> Patch:
    """Constant-column patch whose every row is `word`"""
    return Patch(len(word), height, tuple(word) * height)


def vertical_constancy_rule(alphabet: Alphabet, pi: ProjectionMap) -> LocalRule:
    """2x2 rule forbidding vertical neighbors with different projections"""
    forbidden = []
    for cells in itertools.product(range(alphabet.size), repeat=4):
        top_left, top_right, bottom_left, bottom_right = cells
        if pi(top_left) != pi(bottom_left) or pi(top_right) != pi(bottom_right):
            forbidden.append(Patch(2, 2, cells))
    return LocalRule(2, alphabet, tuple(forbidden))


def forbidden_vertical_pairs(rule: LocalRule) -> Set[Tuple[int, int]]:
    """Pairs (top, bottom) that no allowed 2x2 block holds in a column"""
    if rule.M != 2:
        return set()
    banned = {p.cells for p in rule.forbidden}
    size = rule.alphabet.size
    pairs = set()
    for top, bottom in itertools.product(range(size), repeat=2):
        as_left = all((top, b, bottom, d) in banned for b, d in itertools.product(range(size), repeat=2))
        as_right = all((a, top, c, bottom) in banned for a, c in itertools.product(range(size), repeat=2))
        if as_left and as_right:
            pairs.add((top, bottom))
    return pairs
