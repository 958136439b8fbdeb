"""
Finite-region Wang tiling search, periodic search and DIMACS export.

The search keeps one bitmask domain per cell, prunes it by arc consistency
against neighbor colors, and branches on the cell with the fewest
candidates (lowest index on ties), trying tiles in increasing index order.
"""
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from utils.config import get_settings
from utils.core import Patch, WangTileSet, check_wang
from utils.errors import (
    InconsistentBoundaryError,
    IndexOutOfRangeError,
    ResourceLimitError,
    SpecFormatError,
    TilingError,
)

logger = logging.getLogger(__name__)

SAT = "SAT"
UNSAT = "UNSAT"
LIMIT = "LIMIT"

ColorSpec = Union[None, int, FrozenSet[int]]


def _color_ok(spec: ColorSpec, color: int) -> bool:
    if spec is None:
        return True
    if isinstance(spec, int):
        return color == spec
    return color in spec


def _spec_to_json(spec: ColorSpec):
    if spec is None or isinstance(spec, int):
        return spec
    return sorted(spec)


def _spec_from_json(value) -> ColorSpec:
    if value is None or isinstance(value, int):
        return value
    return frozenset(int(c) for c in value)


@dataclass(frozen=True)
class BoundaryConstraint:
    """
    Optional side colors and fixed cells for a w x h region.

    `north`/`south` run left to right along the top/bottom row, `west`/`east`
    run top to bottom along the first/last column. Each entry is None (free),
    a color, or a frozenset of allowed colors.
    """

    north: Optional[Tuple[ColorSpec, ...]] = None
    south: Optional[Tuple[ColorSpec, ...]] = None
    west: Optional[Tuple[ColorSpec, ...]] = None
    east: Optional[Tuple[ColorSpec, ...]] = None
    fixed: Tuple[Tuple[Tuple[int, int], int], ...] = ()

    def validate(self, w: int, h: int, ntiles: int) -> None:
        for name, expected in (("north", w), ("south", w), ("west", h), ("east", h)):
            side = getattr(self, name)
            if side is not None and len(side) != expected:
                raise InconsistentBoundaryError(f"{name} side has {len(side)} entries, region needs {expected}")
        seen = {}
        for (x, y), t in self.fixed:
            if not (0 <= x < w and 0 <= y < h):
                raise InconsistentBoundaryError(f"Fixed cell ({x}, {y}) lies outside the {w}x{h} region")
            if not 0 <= t < ntiles:
                raise IndexOutOfRangeError(f"Fixed tile index {t} outside 0..{ntiles - 1}")
            if seen.get((x, y), t) != t:
                raise InconsistentBoundaryError(f"Cell ({x}, {y}) fixed to two different tiles")
            seen[(x, y)] = t

    def to_dict(self) -> Dict:
        data = {}
        for name in ("north", "south", "west", "east"):
            side = getattr(self, name)
            if side is not None:
                data[name] = [_spec_to_json(s) for s in side]
        if self.fixed:
            data["fixed"] = [[x, y, t] for (x, y), t in self.fixed]
        return data

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "BoundaryConstraint":
        if not data:
            return cls()
        sides = {}
        for name in ("north", "south", "west", "east"):
            if data.get(name) is not None:
                sides[name] = tuple(_spec_from_json(v) for v in data[name])
        try:
            fixed = tuple(((int(x), int(y)), int(t)) for x, y, t in data.get("fixed", []))
        except (TypeError, ValueError) as e:
            raise SpecFormatError(f"Bad fixed-cell entry: {e}") from e
        return cls(fixed=fixed, **sides)


@dataclass
class SearchStats:
    nodes: int = 0
    propagations: int = 0
    complete: bool = True

    def to_dict(self) -> Dict:
        return {"nodes": self.nodes, "propagations": self.propagations, "complete": self.complete}


@dataclass
class SolveResult:
    status: str
    tilings: List[Patch] = field(default_factory=list)
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def witness(self) -> Optional[Patch]:
        return self.tilings[0] if self.tilings else None

    def to_dict(self) -> Dict:
        return {
            "status": self.status,
            "count": len(self.tilings),
            "witness": self.witness.to_dict() if self.witness else None,
            "stats": self.stats.to_dict(),
        }


class _BudgetExhausted(Exception):
    pass


class TilingSearch:
    """Arc-consistent backtracking search over one region"""

    def __init__(self, tiles: WangTileSet, w: int, h: int, wrap: bool = False):
        self.tiles = tiles
        self.w, self.h, self.wrap = w, h, wrap
        self.full = (1 << len(tiles)) - 1

        by_west, by_east, by_north, by_south = (defaultdict(int) for _ in range(4))
        for i, t in enumerate(tiles.tiles):
            bit = 1 << i
            by_west[t.west] |= bit
            by_east[t.east] |= bit
            by_north[t.north] |= bit
            by_south[t.south] |= bit

        # support tables: tiles allowed on each side of tile i
        self.right_of = [by_west[t.east] for t in tiles.tiles]
        self.left_of = [by_east[t.west] for t in tiles.tiles]
        self.below = [by_north[t.south] for t in tiles.tiles]
        self.above = [by_south[t.north] for t in tiles.tiles]
        self._cache: Dict[Tuple[int, int], int] = {}

        self.links: List[List[Tuple[int, int, List[int]]]] = [[] for _ in range(w * h)]
        for y in range(h):
            for x in range(w):
                c = y * w + x
                if x + 1 < w or wrap:
                    d = y * w + (x + 1) % w
                    self.links[c].append((d, 0, self.right_of))
                    self.links[d].append((c, 1, self.left_of))
                if y + 1 < h or wrap:
                    d = ((y + 1) % h) * w + x
                    self.links[c].append((d, 2, self.below))
                    self.links[d].append((c, 3, self.above))

    def _support(self, dom: int, side: int, table: List[int]) -> int:
        key = (side, dom)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        allowed, rest = 0, dom
        while rest:
            low = rest & -rest
            allowed |= table[low.bit_length() - 1]
            rest ^= low
        self._cache[key] = allowed
        return allowed

    def _propagate(self, doms: List[int], queue: deque, stats: SearchStats) -> bool:
        queued = set(queue)
        while queue:
            c = queue.popleft()
            queued.discard(c)
            for d, side, table in self.links[c]:
                narrowed = doms[d] & self._support(doms[c], side, table)
                if narrowed != doms[d]:
                    if not narrowed:
                        return False
                    doms[d] = narrowed
                    stats.propagations += 1
                    if d not in queued:
                        queue.append(d)
                        queued.add(d)
        return True

    def initial_domains(self, bc: BoundaryConstraint) -> List[int]:
        w, h = self.w, self.h
        bc.validate(w, h, len(self.tiles))
        doms = [self.full] * (w * h)
        if not self.wrap:
            for i, t in enumerate(self.tiles.tiles):
                bit = 1 << i
                for x in range(w):
                    if bc.north is not None and not _color_ok(bc.north[x], t.north):
                        doms[x] &= ~bit
                    if bc.south is not None and not _color_ok(bc.south[x], t.south):
                        doms[(h - 1) * w + x] &= ~bit
                for y in range(h):
                    if bc.west is not None and not _color_ok(bc.west[y], t.west):
                        doms[y * w] &= ~bit
                    if bc.east is not None and not _color_ok(bc.east[y], t.east):
                        doms[y * w + w - 1] &= ~bit

        fixed = dict(bc.fixed)
        for (x, y), t in fixed.items():
            c = y * w + x
            if not doms[c] >> t & 1:
                raise InconsistentBoundaryError(f"Fixed tile {t} at ({x}, {y}) violates the side colors")
            doms[c] = 1 << t
        for (x, y), t in fixed.items():
            for d, side, table in self.links[y * w + x]:
                dx, dy = d % w, d // w
                if (dx, dy) in fixed and not table[t] >> fixed[(dx, dy)] & 1:
                    raise InconsistentBoundaryError(f"Fixed tiles at ({x}, {y}) and ({dx}, {dy}) do not match")
        return doms

    def solve(self, bc: BoundaryConstraint, limit: Optional[int], count: Optional[int]) -> SolveResult:
        stats = SearchStats()
        doms = self.initial_domains(bc)
        found: List[Tuple[int, ...]] = []

        def pick(doms: List[int]) -> Optional[int]:
            best, best_size = None, 0
            for i, d in enumerate(doms):
                size = d.bit_count()
                if size > 1 and (best is None or size < best_size):
                    best, best_size = i, size
            return best

        def dfs(doms: List[int]) -> bool:
            if limit is not None and stats.nodes >= limit:
                raise _BudgetExhausted
            stats.nodes += 1
            if not all(doms):
                return False
            cell = pick(doms)
            if cell is None:
                found.append(tuple(d.bit_length() - 1 for d in doms))
                return count is not None and len(found) >= count
            rest = doms[cell]
            while rest:
                low = rest & -rest
                rest ^= low
                child = doms.copy()
                child[cell] = low
                if self._propagate(child, deque([cell]), stats) and dfs(child):
                    return True
            return False

        status = UNSAT
        try:
            if self._propagate(doms, deque(range(len(doms))), stats) and dfs(doms):
                stats.complete = False
        except _BudgetExhausted:
            stats.complete = False
            status = LIMIT

        tilings = [Patch(self.w, self.h, cells) for cells in sorted(set(found))]
        for tiling in tilings:
            if check_wang(self.tiles, tiling, wrap=self.wrap):
                raise TilingError(f"Search produced an invalid tiling: {tiling.cells}")
        if tilings:
            status = SAT
        logger.debug(
            "search %dx%d wrap=%s: %s, %d tilings, %d nodes, %d propagations",
            self.w, self.h, self.wrap, status, len(tilings), stats.nodes, stats.propagations,
        )
        return SolveResult(status, tilings, stats)


def tile_region(
    tiles: WangTileSet,
    w: int,
    h: int,
    bc: Optional[BoundaryConstraint] = None,
    limit: Optional[int] = None,
    count: Optional[int] = 1,
    wrap: bool = False,
) -> SolveResult:
    """
    Decide tileability of a w x h region and collect up to `count` tilings.

    count=None enumerates every tiling and returns them in lexicographic
    row-major order. A finite count keeps the first tilings the search meets,
    sorted, which need not be the smallest ones. UNSAT is only reported after the
    whole search space was exhausted; LIMIT means the node budget ran out
    before any tiling was found.
    """
    if w < 1 or h < 1:
        raise SpecFormatError("Region dimensions must be at least 1")
    if limit is not None and limit < 0:
        raise SpecFormatError("Node budget must be non-negative")
    if limit is None:
        limit = get_settings().solver_limit
    if not len(tiles):
        return SolveResult(UNSAT)
    return TilingSearch(tiles, w, h, wrap).solve(bc or BoundaryConstraint(), limit, count)


@dataclass(frozen=True)
class PeriodicTiling:
    period: Tuple[int, int]
    tiling: Patch

    def to_dict(self) -> Dict:
        return {"period": list(self.period), "tiling": self.tiling.to_dict()}


def find_periodic(tiles: WangTileSet, pmax: int, limit: Optional[int] = None) -> Optional[PeriodicTiling]:
    """Smallest-area torus tiling with both periods at most pmax"""
    if pmax < 1:
        raise SpecFormatError("pmax must be at least 1")
    sizes = sorted(
        ((p, q) for p in range(1, pmax + 1) for q in range(1, pmax + 1)),
        key=lambda pq: (pq[0] * pq[1], pq[0], pq[1]),
    )
    for p, q in sizes:
        result = tile_region(tiles, p, q, limit=limit, count=1, wrap=True)
        if result.status == SAT:
            logger.info("periodic tiling with period (%d, %d)", p, q)
            return PeriodicTiling((p, q), result.witness)
    return None


def cnf_variable(cell: int, tile: int, ntiles: int) -> int:
    return 1 + cell * ntiles + tile


def cnf_clauses(tiles: WangTileSet, w: int, h: int, bc: Optional[BoundaryConstraint] = None) -> List[List[int]]:
    bc = bc or BoundaryConstraint()
    n = len(tiles)
    bc.validate(w, h, n)
    ts = tiles.tiles
    var = lambda c, t: cnf_variable(c, t, n)  # noqa: E731

    clauses: List[List[int]] = []
    for c in range(w * h):
        clauses.append([var(c, t) for t in range(n)])
        for t in range(n):
            for u in range(t + 1, n):
                clauses.append([-var(c, t), -var(c, u)])

    for y in range(h):
        for x in range(w):
            c = y * w + x
            if x + 1 < w:
                d = c + 1
                for t in range(n):
                    for u in range(n):
                        if ts[t].east != ts[u].west:
                            clauses.append([-var(c, t), -var(d, u)])
            if y + 1 < h:
                d = c + w
                for t in range(n):
                    for u in range(n):
                        if ts[t].south != ts[u].north:
                            clauses.append([-var(c, t), -var(d, u)])

    for t, tile in enumerate(ts):
        for x in range(w):
            if bc.north is not None and not _color_ok(bc.north[x], tile.north):
                clauses.append([-var(x, t)])
            if bc.south is not None and not _color_ok(bc.south[x], tile.south):
                clauses.append([-var((h - 1) * w + x, t)])
        for y in range(h):
            if bc.west is not None and not _color_ok(bc.west[y], tile.west):
                clauses.append([-var(y * w, t)])
            if bc.east is not None and not _color_ok(bc.east[y], tile.east):
                clauses.append([-var(y * w + w - 1, t)])
    for (x, y), t in bc.fixed:
        clauses.append([var(y * w + x, t)])
    return clauses


def export_cnf(tiles: WangTileSet, w: int, h: int, bc: Optional[BoundaryConstraint] = None) -> str:
    """DIMACS text for the tileability of a w x h region"""
    if w < 1 or h < 1:
        raise SpecFormatError("Region dimensions must be at least 1")
    clauses = cnf_clauses(tiles, w, h, bc)
    lines = [f"p cnf {w * h * len(tiles)} {len(clauses)}"]
    lines.extend(" ".join(str(lit) for lit in clause) + " 0" for clause in clauses)
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> Tuple[int, List[List[int]]]:
    nvars, clauses, current = None, [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise SpecFormatError(f"Bad DIMACS header: {line!r}")
            nvars = int(parts[2])
            continue
        for token in line.split():
            lit = int(token)
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                current.append(lit)
    if nvars is None:
        raise SpecFormatError("DIMACS text has no 'p cnf' header")
    if current:
        clauses.append(current)
    return nvars, clauses


def _brute_force(nvars: int, clauses: List[List[int]]) -> Optional[List[int]]:
    """Exhaustive assignment enumeration, pruning clauses once fully assigned"""
    ready: Dict[int, List[List[int]]] = defaultdict(list)
    for clause in clauses:
        if not clause:
            return None
        ready[max(abs(lit) for lit in clause)].append(clause)

    values = [False] * (nvars + 1)

    def satisfied(clause: List[int]) -> bool:
        return any(values[lit] if lit > 0 else not values[-lit] for lit in clause)

    def assign(v: int) -> bool:
        if v > nvars:
            return True
        for choice in (False, True):
            values[v] = choice
            if all(satisfied(c) for c in ready[v]) and assign(v + 1):
                return True
        return False

    if not assign(1):
        return None
    return [v if values[v] else -v for v in range(1, nvars + 1)]


def solve_cnf(text: str, backend: str = "brute", var_cap: Optional[int] = None) -> Optional[List[int]]:
    """Model of a DIMACS formula, or None when it is unsatisfiable"""
    nvars, clauses = parse_dimacs(text)
    if backend == "pycosat":
        import pycosat

        solution = pycosat.solve(clauses)
        return None if solution == "UNSAT" else list(solution)
    if backend != "brute":
        raise SpecFormatError(f"Unknown CNF backend {backend!r}")
    cap = get_settings().cnf_var_cap if var_cap is None else var_cap
    if nvars > cap:
        raise ResourceLimitError(f"Brute-force CNF evaluation is capped at {cap} variables, got {nvars}")
    return _brute_force(nvars, clauses)


def decode_model(model: Sequence[int], ntiles: int, w: int, h: int) -> Patch:
    """Tiling named by a satisfying assignment"""
    chosen = {lit for lit in model if lit > 0}
    cells = []
    for c in range(w * h):
        picks = [t for t in range(ntiles) if cnf_variable(c, t, ntiles) in chosen]
        if len(picks) != 1:
            raise TilingError(f"Model assigns {len(picks)} tiles to cell {c}")
        cells.append(picks[0])
    return Patch(w, h, tuple(cells))
