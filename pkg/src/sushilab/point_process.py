"""Simple point configurations on tower windows and their generators.

Configurations are immutable.  Sampling takes an explicit seed stream; the
helpers ``replicate_stream`` and ``child_stream`` derive independent streams
from ``(master seed, replicate, component)`` so that replicates can run in
any order.
"""

from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .engine import ONE, LevelBoxSet, OrbitEscape, Point, RankOneMachine
from .errors import CollisionDetected, WindowTooSmall

Stream = Union[np.random.SeedSequence, np.random.Generator, int]
Tag = tuple[int, int]


def replicate_stream(seed: int, replicate: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(replicate,))


def child_stream(stream: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(stream.entropy, spawn_key=tuple(stream.spawn_key) + tuple(key))


def as_generator(stream: Stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return np.random.default_rng(stream)


def _as_seed_sequence(stream: Stream) -> np.random.SeedSequence:
    if isinstance(stream, np.random.SeedSequence):
        return stream
    if isinstance(stream, np.random.Generator):
        return np.random.SeedSequence(int(stream.integers(0, 2**63)))
    return np.random.SeedSequence(stream)


def uniform_below(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in ``[0, n)`` for arbitrarily large ``n``."""
    if n <= 0:
        raise ValueError("empty range")
    if n <= 1 << 63:
        return int(rng.integers(0, n))
    nbits = n.bit_length()
    nwords = -(-nbits // 32)
    while True:
        words = rng.integers(0, 1 << 32, size=nwords, dtype=np.uint64)
        value = 0
        for w in words:
            value = (value << 32) | int(w)
        value >>= nwords * 32 - nbits
        if value < n:
            return value


@dataclass(frozen=True)
class PointConfiguration:
    """Finite simple counting measure on ``window``.

    ``provenance`` optionally maps a point to ``(component, shift)``, used by
    oracle tests to replay how a configuration was built.
    """

    window: LevelBoxSet
    points: tuple[Point, ...] = ()
    provenance: Optional[Mapping[Point, Tag]] = field(default=None, compare=False)

    def __post_init__(self):
        pts = tuple(sorted(self.points))
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise CollisionDetected(f"point {a} appears twice")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p):
        return p in self._set

    @cached_property
    def _set(self) -> frozenset:
        return frozenset(self.points)

    def tag(self, p: Point) -> Optional[Tag]:
        return None if self.provenance is None else self.provenance.get(p)


@dataclass
class EscapeReport:
    """Bookkeeping for points lost when configurations are shifted."""

    original: int = 0
    retained: int = 0
    left_window: Counter = field(default_factory=Counter)
    orbit_escape: Counter = field(default_factory=Counter)

    @property
    def censored(self) -> int:
        return sum(self.left_window.values()) + sum(self.orbit_escape.values())

    def merge(self, other: "EscapeReport") -> None:
        self.original += other.original
        self.retained += other.retained
        self.left_window.update(other.left_window)
        self.orbit_escape.update(other.orbit_escape)


@dataclass(frozen=True)
class SushiSpec:
    """Components ``(alpha_i, J_i)`` of a superposition of shifted Poisson processes."""

    components: tuple[tuple[Fraction, frozenset], ...]
    canonical: bool = False

    def __post_init__(self):
        comps = tuple((Fraction(a), frozenset(int(j) for j in js)) for a, js in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("a SuShi needs at least one component")
        for alpha, js in comps:
            if alpha <= 0:
                raise ValueError(f"intensity multipliers must be positive, got {alpha}")
            if not js:
                raise ValueError("every component needs a nonempty shift set")
        if self.canonical:
            sets = [js for _, js in comps]
            if len(set(sets)) != len(sets):
                raise ValueError("canonical components must have distinct shift sets")
            if any(min(js) != 0 for js in sets):
                raise ValueError("canonical shift sets must have minimum 0")

    @classmethod
    def of(cls, *components, canonical: bool = False) -> "SushiSpec":
        """``SushiSpec.of((1, {0, 1}), (2, {0}))``"""
        return cls(tuple(components), canonical=canonical)

    @property
    def total_intensity(self) -> Fraction:
        return sum((a * len(js) for a, js in self.components), Fraction(0))

    @property
    def shifts(self) -> frozenset:
        return frozenset().union(*(js for _, js in self.components))

    def canonical_form(self) -> "SushiSpec":
        """Shift every ``J_i`` to start at 0 and merge equal sets."""
        merged: dict[frozenset, Fraction] = {}
        for alpha, js in self.components:
            m = min(js)
            key = frozenset(j - m for j in js)
            merged[key] = merged.get(key, Fraction(0)) + alpha
        comps = tuple(sorted(((a, js) for js, a in merged.items()), key=lambda c: sorted(c[1])))
        return SushiSpec(comps, canonical=True)


def sample_poisson(machine: RankOneMachine, window: LevelBoxSet, alpha, stream: Stream,
                   tag: Optional[Tag] = None) -> PointConfiguration:
    """Poisson process of intensity ``alpha * mu`` restricted to ``window``.

    The total count is drawn from numpy's Poisson sampler; each point picks
    a box with probability proportional to its exact width and gets a
    uniform 64-bit horizontal position inside it.
    """
    alpha = Fraction(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    rng = as_generator(stream)
    if not window:
        return PointConfiguration(window, (), {} if tag is not None else None)
    mean = alpha * machine.measure_of(window)
    n = int(rng.poisson(float(mean)))
    boxes = window.boxes
    cumulative, total, bounds = window._sampler
    if total <= 1 << 63:
        picks = np.searchsorted(cumulative, rng.integers(0, total, size=n), side="right")
    else:
        picks = [bisect.bisect_right(cumulative, uniform_below(rng, total)) for _ in range(n)]
    full = all(b - a == ONE for a, b in bounds)
    if full:
        raw = rng.integers(0, ONE, size=n, dtype=np.uint64)
    points = []
    for t, i in enumerate(picks):
        a, b = bounds[i]
        frac = int(raw[t]) if full else a + uniform_below(rng, b - a)
        points.append(machine.canonical(Point(window.stage, boxes[i][0], frac)))
    provenance = {p: tag for p in points} if tag is not None else None
    return PointConfiguration(window, tuple(points), provenance)


def count(machine: RankOneMachine, config: PointConfiguration, s: LevelBoxSet) -> int:
    if not s:
        return 0
    return sum(1 for p in config.points if machine.contains(s, p))


def restrict(machine: RankOneMachine, config: PointConfiguration, window: LevelBoxSet) -> PointConfiguration:
    pts = tuple(p for p in config.points if machine.contains(window, p))
    prov = None if config.provenance is None else {p: config.provenance[p] for p in pts if p in config.provenance}
    return PointConfiguration(window, pts, prov)


def pushforward_points(machine: RankOneMachine, config: PointConfiguration, k: int,
                       window: Optional[LevelBoxSet] = None) -> tuple[PointConfiguration, EscapeReport]:
    """Apply ``T^k`` to every point; points leaving the window go to the report."""
    window = config.window if window is None else window
    report = EscapeReport(original=len(config))
    kept = []
    prov = None if config.provenance is None else {}
    for p in config.points:
        try:
            q = machine.apply(p, k)
        except OrbitEscape:
            report.orbit_escape[k] += 1
            continue
        if not machine.contains(window, q):
            report.left_window[k] += 1
            continue
        kept.append(q)
        if prov is not None and p in config.provenance:
            prov[q] = config.provenance[p]
    report.retained = len(kept)
    return PointConfiguration(window, tuple(kept), prov), report


def superpose(configs: Sequence[PointConfiguration]) -> PointConfiguration:
    """Union of configurations on a common window; coincident points raise."""
    if not configs:
        raise ValueError("nothing to superpose")
    window = configs[0].window
    if any(c.window != window for c in configs):
        raise ValueError("superposed configurations must share a window")
    points = [p for c in configs for p in c.points]
    if len(set(points)) != len(points):
        raise CollisionDetected("superposed configurations share a point")
    prov = None
    if any(c.provenance is not None for c in configs):
        prov = {}
        for c in configs:
            prov.update(c.provenance or {})
    return PointConfiguration(window, tuple(points), prov)


def shifted_cover(machine: RankOneMachine, window: LevelBoxSet, shifts: Iterable[int]) -> LevelBoxSet:
    """Union of ``T^{-j}(window)``: where a point must lie to be shifted into the window."""
    shifts = frozenset(shifts)
    key = ("cover", window, shifts)
    if key not in machine.memo:
        try:
            parts = [machine.pushforward_set(window, -j) for j in sorted(shifts)]
        except OrbitEscape as exc:
            raise WindowTooSmall(f"cannot cover shifts of {window}: {exc}") from exc
        machine.memo[key] = machine.union(*parts)
    return machine.memo[key]


def build_sushi(machine: RankOneMachine, spec: SushiSpec, window: LevelBoxSet,
                stream: Stream) -> tuple[PointConfiguration, list[PointConfiguration]]:
    """Sample a SuShi on ``window``.

    Returns the superposition and the hidden Poisson components, each
    sampled on the exact region whose shifts reach the window.  Points of
    the output are tagged with ``(component index, shift)``.
    """
    ss = _as_seed_sequence(stream)
    components = []
    shifted = []
    for i, (alpha, js) in enumerate(spec.components):
        cover = shifted_cover(machine, window, js)
        comp = sample_poisson(machine, cover, alpha, child_stream(ss, i), tag=(i, 0))
        components.append(comp)
        for j in sorted(js):
            pts = []
            for p in comp.points:
                q = machine.apply(p, j)
                if machine.contains(window, q):
                    pts.append(q)
            shifted.append(PointConfiguration(window, tuple(pts), {q: (i, j) for q in pts}))
    return superpose(shifted), components


@dataclass
class PoissonGenerator:
    """Callable ``stream -> PointConfiguration`` for Poisson(alpha * mu) on a window."""

    machine: RankOneMachine
    window: LevelBoxSet
    alpha: Fraction = Fraction(1)

    def __call__(self, stream: Stream) -> PointConfiguration:
        return sample_poisson(self.machine, self.window, self.alpha, stream)

    @property
    def intensity(self) -> Fraction:
        return Fraction(self.alpha)


@dataclass
class SushiGenerator:
    machine: RankOneMachine
    spec: SushiSpec
    window: LevelBoxSet

    def __call__(self, stream: Stream) -> PointConfiguration:
        return build_sushi(self.machine, self.spec, self.window, stream)[0]

    @property
    def intensity(self) -> Fraction:
        return self.spec.total_intensity


@dataclass
class EmptyGenerator:
    machine: RankOneMachine
    window: LevelBoxSet

    def __call__(self, stream: Stream) -> PointConfiguration:
        return PointConfiguration(self.window)

    @property
    def intensity(self) -> Fraction:
        return Fraction(0)
