"""Field data model: weed-probability grids, blocked cells, target selection.

A field is a uniform row-major grid. Cell ``c`` sits at row ``c // width``,
column ``c % width``; row 0 is the first data row of the file. Adjacency is
4-connected (no diagonals).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable


class FieldError(Exception):
    """Base class for field/map errors."""


class MalformedHeader(FieldError):
    pass


class MalformedValue(FieldError):
    pass


class DimensionMismatch(FieldError):
    pass


class ProbabilityOutOfRange(FieldError):
    def __init__(self, cell: int, value: float):
        super().__init__(f"probability {value!r} at cell {cell} outside [0, 1]")
        self.cell = cell
        self.value = value


class MapFormat(Enum):
    GRID_CSV = "csv"
    GRID_JSON = "json"


_HEADER_FIELDS = ("width", "height", "cell_size", "origin_e", "origin_n")


@dataclass(frozen=True)
class WeedMap:
    """Per-cell weed probabilities on a uniform grid.

    ``probs`` is row-major, length ``width * height``; ``origin`` is the
    (easting, northing) of the corner of cell (0, 0) in meters.
    """

    width: int
    height: int
    cell_size: float
    origin: tuple[float, float]
    probs: tuple[float, ...]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise MalformedHeader(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if not self.cell_size > 0:
            raise MalformedHeader(f"cell_size must be > 0, got {self.cell_size}")
        if len(self.probs) != self.width * self.height:
            raise DimensionMismatch(
                f"expected {self.width * self.height} probabilities, got {len(self.probs)}"
            )
        for c, p in enumerate(self.probs):
            if not (0.0 <= p <= 1.0):
                raise ProbabilityOutOfRange(c, p)

    @property
    def size(self) -> int:
        return self.width * self.height


class RowAxis(Enum):
    BY_ROW = "by_row"
    BY_COLUMN = "by_column"


@dataclass(frozen=True)
class FieldModel:
    """A weed map plus the mission geometry the planner needs."""

    map: WeedMap
    row_axis: RowAxis = RowAxis.BY_ROW
    blocked: frozenset[int] = field(default_factory=frozenset)
    home: int = 0

    def __post_init__(self):
        n = self.map.size
        for c in self.blocked:
            if not 0 <= c < n:
                raise FieldError(f"blocked cell {c} outside grid of {n} cells")
        if not 0 <= self.home < n:
            raise FieldError(f"home cell {self.home} outside grid of {n} cells")
        if self.home in self.blocked:
            raise FieldError(f"home cell {self.home} is blocked")

    def neighbors(self, c: int) -> list[int]:
        """In-bounds 4-neighbors of ``c`` (blocked cells included)."""
        w, h = self.map.width, self.map.height
        row, col = divmod(c, w)
        out = []
        if row > 0:
            out.append(c - w)
        if col > 0:
            out.append(c - 1)
        if col < w - 1:
            out.append(c + 1)
        if row < h - 1:
            out.append(c + w)
        return out

    def passable_neighbors(self, c: int) -> list[int]:
        return [n for n in self.neighbors(c) if n not in self.blocked]

    def reachable_from_home(self) -> frozenset[int]:
        """Cells connected to home through non-blocked 4-neighbor moves."""
        seen = {self.home}
        stack = [self.home]
        while stack:
            cur = stack.pop()
            for nxt in self.passable_neighbors(cur):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return frozenset(seen)


@dataclass(frozen=True)
class TargetSet:
    """Cells selected for weeding, ordered by ascending index."""

    threshold: float
    targets: tuple[int, ...]


def _text_of(source: str | bytes | IO) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _parse_prob(token: str, cell: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MalformedValue(f"cell {cell}: not a number: {token!r}") from None
    if not (0.0 <= value <= 1.0):
        raise ProbabilityOutOfRange(cell, value)
    return value


def _load_csv(text: str) -> WeedMap:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MalformedHeader("empty input")
    head = [t.strip() for t in lines[0].split(",")]
    if len(head) != 5:
        raise MalformedHeader(f"header must have 5 fields {_HEADER_FIELDS}, got {len(head)}")
    try:
        width, height = int(head[0]), int(head[1])
        cell_size, origin_e, origin_n = float(head[2]), float(head[3]), float(head[4])
    except ValueError as exc:
        raise MalformedHeader(f"bad header value: {exc}") from None
    if width < 1 or height < 1 or not cell_size > 0:
        raise MalformedHeader(f"bad header dimensions {head[:3]}")
    rows = lines[1:]
    if len(rows) != height:
        raise DimensionMismatch(f"expected {height} data rows, got {len(rows)}")
    probs: list[float] = []
    for r, row in enumerate(rows):
        toks = [t.strip() for t in row.split(",")]
        if len(toks) != width:
            raise DimensionMismatch(f"row {r}: expected {width} values, got {len(toks)}")
        for k, tok in enumerate(toks):
            probs.append(_parse_prob(tok, r * width + k))
    return WeedMap(width, height, cell_size, (origin_e, origin_n), tuple(probs))


def _load_json(text: str) -> WeedMap:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedHeader(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedHeader("top-level JSON value must be an object")
    missing = [k for k in (*_HEADER_FIELDS, "probs") if k not in doc]
    if missing:
        raise MalformedHeader(f"missing fields: {missing}")
    try:
        width, height = int(doc["width"]), int(doc["height"])
        cell_size = float(doc["cell_size"])
        origin = (float(doc["origin_e"]), float(doc["origin_n"]))
    except (TypeError, ValueError) as exc:
        raise MalformedHeader(f"bad header value: {exc}") from None
    if width < 1 or height < 1 or not cell_size > 0:
        raise MalformedHeader("bad header dimensions")
    raw = doc["probs"]
    if not isinstance(raw, list):
        raise MalformedHeader("probs must be an array")
    if len(raw) != width * height:
        raise DimensionMismatch(f"expected {width * height} probabilities, got {len(raw)}")
    probs = []
    for c, v in enumerate(raw):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise MalformedValue(f"cell {c}: not a number: {v!r}")
        if not (0.0 <= v <= 1.0):
            raise ProbabilityOutOfRange(c, float(v))
        probs.append(float(v))
    return WeedMap(width, height, cell_size, origin, tuple(probs))


def load_weed_map(source: str | bytes | IO, format: MapFormat = MapFormat.GRID_CSV) -> WeedMap:
    """Parse a weed map from CSV or JSON text (dot decimal separator only)."""
    text = _text_of(source)
    if format is MapFormat.GRID_CSV:
        return _load_csv(text)
    return _load_json(text)


def _fmt(x: float) -> str:
    # repr round-trips floats exactly; ints render without trailing ".0"
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def save_weed_map(map: WeedMap, format: MapFormat = MapFormat.GRID_CSV) -> str:
    """Render a weed map so that ``load_weed_map(save_weed_map(m)) == m``."""
    if format is MapFormat.GRID_CSV:
        out = io.StringIO()
        out.write(
            f"{map.width},{map.height},{_fmt(map.cell_size)},"
            f"{_fmt(map.origin[0])},{_fmt(map.origin[1])}\n"
        )
        for r in range(map.height):
            row = map.probs[r * map.width : (r + 1) * map.width]
            out.write(",".join(_fmt(p) for p in row) + "\n")
        return out.getvalue()
    doc = {
        "width": map.width,
        "height": map.height,
        "cell_size": map.cell_size,
        "origin_e": map.origin[0],
        "origin_n": map.origin[1],
        "probs": list(map.probs),
    }
    return json.dumps(doc)


def detect_format(path: str) -> MapFormat:
    return MapFormat.GRID_JSON if path.endswith(".json") else MapFormat.GRID_CSV


def select_targets(field: FieldModel, threshold: float) -> TargetSet:
    """Cells with probability >= threshold, minus blocked, ascending order."""
    if not 0.0 <= threshold <= 1.0:
        raise FieldError(f"threshold {threshold} outside [0, 1]")
    targets = tuple(
        c
        for c, p in enumerate(field.map.probs)
        if p >= threshold and c not in field.blocked
    )
    return TargetSet(threshold, targets)


def cells_from_spec(spec: str | Iterable[int]) -> frozenset[int]:
    """Parse a cell list like ``"3,4,11"`` (used by CLI flags and payloads)."""
    if isinstance(spec, str):
        items = [s for s in spec.replace(";", ",").split(",") if s.strip()]
        return frozenset(int(s) for s in items)
    return frozenset(int(c) for c in spec)
