"""Rank-one cutting-and-stacking transformations in exact arithmetic.

A stage-``n`` tower has ``h_n`` levels, each an interval of width ``w_n``.
From stage ``n`` to ``n + 1`` the tower is cut into ``c`` equal columns,
column ``j`` receives ``s_{n,j}`` spacer levels on top, and the columns are
stacked left to right.  ``T`` moves every level to the one above it; the top
level only gets an image once the tower is refined.

Horizontal positions of points are 64-bit dyadic numerators, so point
dynamics is pure integer arithmetic.  Sets are finite unions of
``(level, [lo, hi))`` boxes with rational endpoints.
"""

from __future__ import annotations

import bisect
import re
import threading
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from math import ceil, lcm
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Sequence

from .errors import OrbitEscape, StageCapExceeded

FRAC_BITS = 64
ONE = 1 << FRAC_BITS

SpacerRule = Callable[[int, int], Sequence[int]]


@dataclass(frozen=True)
class CutAndStackSpec:
    """Parameters of a cutting-and-stacking construction.

    ``spacer_rule(n, h_n)`` returns the spacer counts placed above each of
    the ``cuts`` columns when passing from stage ``n`` to ``n + 1``.
    """

    cuts: int
    spacer_rule: SpacerRule
    base_width: Fraction = Fraction(1)
    max_stage: int = 40
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "base_width", Fraction(self.base_width))
        if self.cuts < 2:
            raise ValueError(f"need at least 2 cuts per stage, got {self.cuts}")
        if self.base_width <= 0:
            raise ValueError("base_width must be positive")
        if self.max_stage < 1:
            raise ValueError("max_stage must be >= 1")


def chacon_infinite_spacers(n: int, h: int) -> tuple[int, ...]:
    return (0, 1, 3 * h + 1)


def chacon_finite_spacers(n: int, h: int) -> tuple[int, ...]:
    return (0, 1, 0)


class AffineSpacerRule:
    """Spacer rule whose counts are affine in the stage ``n`` and height ``h``.

    >>> AffineSpacerRule.parse("0, 1, 3h+1")(2, 8)
    (0, 1, 25)
    """

    _TERM = re.compile(r"([+-])?(\d+)?(\*)?([hn])?")

    def __init__(self, coefficients: Sequence[tuple[int, int, int]], text: str = ""):
        # each entry is (const, coef_n, coef_h)
        self.coefficients = tuple(tuple(c) for c in coefficients)
        self.text = text

    @classmethod
    def parse(cls, text: str) -> "AffineSpacerRule":
        parts = [p.strip() for p in text.split(",")]
        if not parts or any(not p for p in parts):
            raise ValueError(f"bad spacer rule {text!r}")
        return cls([cls._parse_affine(p) for p in parts], text)

    @classmethod
    def _parse_affine(cls, expr: str) -> tuple[int, int, int]:
        s = expr.replace(" ", "")
        coef = {"": 0, "n": 0, "h": 0}
        pos = 0
        while pos < len(s):
            m = cls._TERM.match(s, pos)
            sign, num, star, var = m.groups()
            if m.end() == pos or (num is None and var is None):
                raise ValueError(f"cannot parse spacer expression {expr!r}")
            if star and (num is None or var is None):
                raise ValueError(f"cannot parse spacer expression {expr!r}")
            if pos > 0 and sign is None:
                raise ValueError(f"cannot parse spacer expression {expr!r}")
            value = int(num) if num is not None else 1
            coef[var or ""] += -value if sign == "-" else value
            pos = m.end()
        return coef[""], coef["n"], coef["h"]

    def __call__(self, n: int, h: int) -> tuple[int, ...]:
        return tuple(a + b * n + c * h for a, b, c in self.coefficients)

    def __repr__(self):
        return f"AffineSpacerRule.parse({self.text!r})"


PRESETS = {
    "chacon_infinite": CutAndStackSpec(3, chacon_infinite_spacers, name="chacon_infinite"),
    "chacon_finite": CutAndStackSpec(3, chacon_finite_spacers, name="chacon_finite"),
}


def preset(name: str, **overrides) -> CutAndStackSpec:
    """Look up a named construction; keyword arguments replace its fields."""
    if name == "custom":
        if "cuts" not in overrides or "spacer_rule" not in overrides:
            raise ValueError("a custom spec needs 'cuts' and 'spacer_rule'")
        return CutAndStackSpec(**overrides)
    try:
        spec = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; known: {sorted(PRESETS)} or 'custom'") from None
    return replace(spec, **overrides) if overrides else spec


class Point(NamedTuple):
    """A point of X given by its stage-``stage`` tower coordinates.

    ``frac`` is the horizontal position as a numerator over ``2**64``.  The
    same point has one representation per stage >= its lowest one; the
    machine keeps points in their lowest (canonical) form so that tuple
    equality is point equality.
    """

    stage: int
    level: int
    frac: int

    @property
    def x(self) -> Fraction:
        return Fraction(self.frac, ONE)


Box = tuple[int, Fraction, Fraction]


@dataclass(frozen=True)
class LevelBoxSet:
    """Finite union of boxes ``level x [lo, hi)`` at one stage.

    Boxes are merged and sorted on construction, so two sets at the same
    stage are equal iff they describe the same subset.
    """

    stage: int
    boxes: tuple[Box, ...] = ()

    def __post_init__(self):
        if self.stage < 1:
            raise ValueError("stage must be >= 1")
        cleaned = []
        for level, lo, hi in self.boxes:
            lo, hi = Fraction(lo), Fraction(hi)
            if level < 0 or lo < 0 or hi > 1:
                raise ValueError(f"box ({level}, {lo}, {hi}) outside the unit level")
            if lo < hi:
                cleaned.append((int(level), lo, hi))
        cleaned.sort()
        merged: list[Box] = []
        for level, lo, hi in cleaned:
            if merged and merged[-1][0] == level and lo <= merged[-1][2]:
                prev = merged[-1]
                merged[-1] = (level, prev[1], max(prev[2], hi))
            else:
                merged.append((level, lo, hi))
        object.__setattr__(self, "boxes", tuple(merged))

    @classmethod
    def levels(cls, stage: int, levels: Iterable[int], lo=0, hi=1) -> "LevelBoxSet":
        return cls(stage, tuple((lv, Fraction(lo), Fraction(hi)) for lv in levels))

    def __iter__(self) -> Iterator[Box]:
        return iter(self.boxes)

    def __len__(self):
        return len(self.boxes)

    def __bool__(self):
        return bool(self.boxes)

    def __hash__(self):
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.stage, self.boxes))

    @cached_property
    def width_sum(self) -> Fraction:
        return sum((hi - lo for _, lo, hi in self.boxes), Fraction(0))

    @cached_property
    def _index(self) -> dict[int, list[tuple[int, int, Fraction, Fraction]]]:
        index: dict[int, list] = {}
        for level, lo, hi in self.boxes:
            index.setdefault(level, []).append((ceil(lo * ONE), ceil(hi * ONE), lo, hi))
        return index

    @cached_property
    def _sampler(self) -> tuple[list[int], int, list[tuple[int, int]]]:
        # cumulative integer widths on a common denominator, plus 64-bit bounds
        denom = lcm(*((hi - lo).denominator for _, lo, hi in self.boxes)) if self.boxes else 1
        cumulative = []
        total = 0
        for _, lo, hi in self.boxes:
            total += int((hi - lo) * denom)
            cumulative.append(total)
        bounds = [(ceil(lo * ONE), ceil(hi * ONE)) for _, lo, hi in self.boxes]
        return cumulative, total, bounds


class RankOneMachine:
    """Lazily realized tower system defining ``(X, mu, T)``.

    Stages are numbered from 1; stage 1 is a single level of width
    ``base_width``.  Stage realization is append-only and guarded by a lock,
    everything else is read-only.
    """

    def __init__(self, spec: CutAndStackSpec, horizon: Optional[int] = None):
        self.spec = spec
        self.cuts = spec.cuts
        self.max_stage = spec.max_stage
        self.horizon = horizon
        self._heights = [1]
        self._spacers: list[tuple[int, ...]] = []
        self._offsets: list[tuple[int, ...]] = []
        self._lock = threading.Lock()
        self._images: dict[tuple[LevelBoxSet, int], LevelBoxSet] = {}
        # memo for derived sets (covers, shifted boxes) keyed by callers
        self.memo: dict = {}

    def __repr__(self):
        return f"RankOneMachine({self.spec.name!r}, realized={len(self._heights)})"

    # -- tower data ---------------------------------------------------------

    def _realize(self, stage: int) -> None:
        if stage > self.max_stage:
            raise StageCapExceeded(f"stage {stage} exceeds max_stage {self.max_stage}")
        if stage <= len(self._heights):
            return
        with self._lock:
            while len(self._heights) < stage:
                n = len(self._heights)
                h = self._heights[-1]
                spacers = tuple(int(s) for s in self.spec.spacer_rule(n, h))
                if len(spacers) != self.cuts or min(spacers) < 0:
                    raise ValueError(f"spacer rule gave {spacers} at stage {n}")
                offsets = []
                top = 0
                for s in spacers:
                    offsets.append(top)
                    top += h + s
                self._spacers.append(spacers)
                self._offsets.append(tuple(offsets))
                # heights last: readers key on len(self._heights)
                self._heights.append(top)

    def height(self, stage: int) -> int:
        self._realize(stage)
        return self._heights[stage - 1]

    def width(self, stage: int) -> Fraction:
        return self.spec.base_width / self.cuts ** (stage - 1)

    def spacers(self, stage: int) -> tuple[int, ...]:
        """Spacer counts used to build stage ``stage + 1``."""
        self._realize(stage + 1)
        return self._spacers[stage - 1]

    def offsets(self, stage: int) -> tuple[int, ...]:
        """Level of the bottom of each stage-``stage`` column inside stage ``stage + 1``."""
        self._realize(stage + 1)
        return self._offsets[stage - 1]

    def tower_measure(self, stage: int) -> Fraction:
        return self.height(stage) * self.width(stage)

    def tower(self, stage: int, first: int = 0, stop: Optional[int] = None) -> LevelBoxSet:
        """Full-width levels ``first <= level < stop`` of the stage tower."""
        h = self.height(stage)
        stop = h if stop is None else stop
        if not 0 <= first <= stop <= h:
            raise ValueError(f"levels [{first}, {stop}) not inside a tower of height {h}")
        return LevelBoxSet.levels(stage, range(first, stop))

    def _check_shift(self, k: int) -> None:
        if self.horizon is not None and abs(k) > self.horizon:
            raise ValueError(f"|k| = {abs(k)} exceeds horizon {self.horizon}")

    # -- points ------------------------------------------------------------

    def _up(self, stage: int, level: int, frac: int) -> tuple[int, int, int]:
        if stage >= self.max_stage:
            raise StageCapExceeded(f"cannot refine past stage {self.max_stage}")
        scaled = self.cuts * frac
        j = scaled >> FRAC_BITS
        return stage + 1, level + self.offsets(stage)[j], scaled - (j << FRAC_BITS)

    def _column_of(self, stage: int, level: int) -> Optional[tuple[int, int]]:
        """Column ``j`` and stage-(stage-1) level containing ``level``, if any."""
        offs = self.offsets(stage - 1)
        j = bisect.bisect_right(offs, level) - 1
        below = level - offs[j]
        if below < self.height(stage - 1):
            return j, below
        return None

    def refine(self, p: Point, target_stage: int) -> Point:
        if target_stage < p.stage:
            raise ValueError(f"cannot refine stage {p.stage} point to stage {target_stage}")
        if target_stage > self.max_stage:
            raise StageCapExceeded(f"stage {target_stage} exceeds max_stage {self.max_stage}")
        stage, level, frac = p
        while stage < target_stage:
            stage, level, frac = self._up(stage, level, frac)
        return Point(stage, level, frac)

    def lower(self, p: Point) -> Optional[Point]:
        """The same point one stage down, if it is representable there."""
        if p.stage == 1:
            return None
        found = self._column_of(p.stage, p.level)
        if found is None:
            return None
        j, below = found
        num = p.frac + (j << FRAC_BITS)
        if num % self.cuts:
            return None
        return Point(p.stage - 1, below, num // self.cuts)

    def canonical(self, p: Point) -> Point:
        while True:
            q = self.lower(p)
            if q is None:
                return p
            p = q

    def locate(self, p: Point, stage: int) -> Optional[tuple[int, Fraction]]:
        """Exact (level, horizontal position) of ``p`` in the stage tower, or None."""
        if p.stage <= stage:
            q = self.refine(p, stage)
            return q.level, q.x
        level, x = p.level, p.x
        for n in range(p.stage, stage, -1):
            found = self._column_of(n, level)
            if found is None:
                return None
            j, level = found
            x = (x + j) / self.cuts
        return level, x

    def apply(self, p: Point, k: int) -> Point:
        """``T^k p`` in canonical form."""
        self._check_shift(k)
        if k == 0:
            return p
        stage, level, frac = p
        while not 0 <= level + k < self.height(stage):
            if stage >= self.max_stage:
                raise OrbitEscape(f"T^{k} of {p} undefined below stage {self.max_stage}")
            stage, level, frac = self._up(stage, level, frac)
        return self.canonical(Point(stage, level + k, frac))

    def contains(self, s: LevelBoxSet, p: Point) -> bool:
        if p.stage <= s.stage:
            q = self.refine(p, s.stage)
            for lo_i, hi_i, _, _ in s._index.get(q.level, ()):
                if lo_i <= q.frac < hi_i:
                    return True
            return False
        loc = self.locate(p, s.stage)
        if loc is None:
            return False
        level, x = loc
        return any(lo <= x < hi for _, _, lo, hi in s._index.get(level, ()))

    # -- sets --------------------------------------------------------------

    def measure_of(self, s: LevelBoxSet) -> Fraction:
        return s.width_sum * self.width(s.stage)

    def _refine_boxes(self, stage: int, boxes: Iterable[Box]) -> list[Box]:
        c = self.cuts
        offs = self.offsets(stage)
        out = []
        for level, lo, hi in boxes:
            for j in range(c):
                a = max(c * lo - j, Fraction(0))
                b = min(c * hi - j, Fraction(1))
                if a < b:
                    out.append((level + offs[j], a, b))
        return out

    def refine_set(self, s: LevelBoxSet, target_stage: int) -> LevelBoxSet:
        if target_stage < s.stage:
            raise ValueError(f"cannot refine stage {s.stage} set to stage {target_stage}")
        if target_stage > self.max_stage:
            raise StageCapExceeded(f"stage {target_stage} exceeds max_stage {self.max_stage}")
        boxes: list[Box] = list(s.boxes)
        for n in range(s.stage, target_stage):
            boxes = self._refine_boxes(n, boxes)
        return LevelBoxSet(target_stage, tuple(boxes))

    def _common(self, *sets: LevelBoxSet) -> list[LevelBoxSet]:
        top = max(s.stage for s in sets)
        return [self.refine_set(s, top) for s in sets]

    def union(self, *sets: LevelBoxSet) -> LevelBoxSet:
        sets = self._common(*sets)
        return LevelBoxSet(sets[0].stage, tuple(b for s in sets for b in s.boxes))

    def intersect(self, a: LevelBoxSet, b: LevelBoxSet) -> LevelBoxSet:
        a, b = self._common(a, b)
        out = []
        by_level: dict[int, list[Box]] = {}
        for box in b.boxes:
            by_level.setdefault(box[0], []).append(box)
        for level, lo, hi in a.boxes:
            for _, lo2, hi2 in by_level.get(level, ()):
                if max(lo, lo2) < min(hi, hi2):
                    out.append((level, max(lo, lo2), min(hi, hi2)))
        return LevelBoxSet(a.stage, tuple(out))

    def is_subset(self, a: LevelBoxSet, b: LevelBoxSet) -> bool:
        return self.measure_of(self.intersect(a, b)) == self.measure_of(a)

    def same_set(self, a: LevelBoxSet, b: LevelBoxSet) -> bool:
        a, b = self._common(a, b)
        return a.boxes == b.boxes

    def pushforward_set(self, s: LevelBoxSet, k: int) -> LevelBoxSet:
        """Exact image ``T^k(s)``, expressed at the lowest stage that suffices."""
        self._check_shift(k)
        if k == 0 or not s:
            return s
        cached = self._images.get((s, k))
        if cached is None:
            cached = self._images[(s, k)] = self._pushforward_set(s, k)
        return cached

    def _pushforward_set(self, s: LevelBoxSet, k: int) -> LevelBoxSet:
        done: list[tuple[int, Box]] = []
        work = [(s.stage, box) for box in s.boxes]
        while work:
            stage, (level, lo, hi) = work.pop()
            if 0 <= level + k < self.height(stage):
                done.append((stage, (level + k, lo, hi)))
                continue
            if stage >= self.max_stage:
                raise OrbitEscape(f"T^{k} of box {(level, lo, hi)} not representable by stage {self.max_stage}")
            work.extend((stage + 1, b) for b in self._refine_boxes(stage, [(level, lo, hi)]))
        top = max(stage for stage, _ in done)
        boxes = []
        for stage, box in done:
            boxes.extend(self.refine_set(LevelBoxSet(stage, (box,)), top).boxes)
        return LevelBoxSet(top, tuple(boxes))


def build_machine(spec: CutAndStackSpec, horizon: Optional[int] = None) -> RankOneMachine:
    return RankOneMachine(spec, horizon=horizon)
