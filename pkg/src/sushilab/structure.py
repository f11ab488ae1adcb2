"""Orbit-pattern decomposition, Poisson joinings and the marked suspension.

Every orbit statement is quantified within a horizon ``K``: a point whose
shifts ``T^k x``, ``|k| <= K``, leave the window is censored, and censored
orbit clusters are set aside in a residue instead of being guessed.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .checks import mean_and_se
from .engine import ONE, LevelBoxSet, OrbitEscape, Point, RankOneMachine
from .errors import CollisionDetected
from .point_process import (
    PointConfiguration,
    Stream,
    _as_seed_sequence,
    as_generator,
    child_stream,
    pushforward_points,
    replicate_stream,
    restrict,
    sample_poisson,
    shifted_cover,
    superpose,
)


@dataclass(frozen=True)
class Pattern:
    """Shifts ``F`` (with ``min F == 0``) at which an orbit carries points."""

    shifts: tuple[int, ...]
    censored: bool = False

    def __post_init__(self):
        if not self.shifts or self.shifts[0] != 0:
            raise ValueError(f"pattern must start at 0: {self.shifts}")

    def __str__(self):
        return "{" + ",".join(map(str, self.shifts)) + "}" + ("*" if self.censored else "")


def orbit_pattern(machine: RankOneMachine, config: PointConfiguration, x: Point, K: int) -> Pattern:
    if x not in config:
        raise ValueError(f"{x} is not a point of the configuration")
    present = [0]
    censored = False
    for k in range(-K, K + 1):
        if k == 0:
            continue
        try:
            y = machine.apply(x, k)
        except OrbitEscape:
            censored = True
            continue
        if not machine.contains(config.window, y):
            censored = True
        elif y in config:
            present.append(k)
    base = min(present)
    return Pattern(tuple(sorted(k - base for k in present)), censored)


@dataclass(frozen=True)
class PatternDecomposition:
    """Components ``N_F`` holding the lowest point of each orbit cluster with pattern ``F``."""

    window: LevelBoxSet
    horizon: int
    components: Mapping[tuple[int, ...], PointConfiguration]
    residue: PointConfiguration

    @property
    def patterns(self) -> set[tuple[int, ...]]:
        return {F for F, comp in self.components.items() if len(comp)}


def _clusters(machine: RankOneMachine, config: PointConfiguration, K: int):
    """Orbit clusters of ``config`` as ``(offsets, censored)`` pairs.

    ``offsets`` maps each member to ``k`` with ``member = T^k(root)``.
    """
    censored = set()
    links: dict[Point, list[tuple[Point, int]]] = {p: [] for p in config.points}
    for x in config.points:
        for k in range(-K, K + 1):
            if k == 0:
                continue
            try:
                y = machine.apply(x, k)
            except OrbitEscape:
                censored.add(x)
                continue
            if not machine.contains(config.window, y):
                censored.add(x)
            elif k > 0 and y in config:
                links[x].append((y, k))
                links[y].append((x, -k))
    seen = set()
    for root in config.points:
        if root in seen:
            continue
        offsets = {root: 0}
        queue = deque([root])
        seen.add(root)
        while queue:
            x = queue.popleft()
            for y, k in links[x]:
                if y not in seen:
                    seen.add(y)
                    offsets[y] = offsets[x] + k
                    queue.append(y)
        yield offsets, any(p in censored for p in offsets)


def decompose(machine: RankOneMachine, config: PointConfiguration, K: int) -> PatternDecomposition:
    """Split a configuration into free, mutually dissociated pattern components.

    Clusters are the connected components of "``T^k x = y`` for some
    ``0 < k <= K``".  A cluster with a censored member goes to the residue
    whole, so ``reconstruct`` is exact.
    """
    parts: dict[tuple[int, ...], list[Point]] = {}
    residue: list[Point] = []
    for offsets, censored in _clusters(machine, config, K):
        if censored:
            residue.extend(offsets)
            continue
        lowest = min(offsets, key=offsets.get)
        base = offsets[lowest]
        F = tuple(sorted(k - base for k in offsets.values()))
        parts.setdefault(F, []).append(lowest)
    components = {F: PointConfiguration(config.window, tuple(pts)) for F, pts in sorted(parts.items())}
    return PatternDecomposition(config.window, K, components,
                                PointConfiguration(config.window, tuple(residue)))


def reconstruct(machine: RankOneMachine, decomposition: PatternDecomposition) -> PointConfiguration:
    points = list(decomposition.residue.points)
    for F, comp in decomposition.components.items():
        for x in comp.points:
            points.extend(machine.apply(x, k) for k in F)
    if len(set(points)) != len(points):
        raise CollisionDetected("decomposition components overlap")
    return PointConfiguration(decomposition.window, tuple(points))


def pattern_counts(machine: RankOneMachine, config: PointConfiguration, region: LevelBoxSet,
                   K: int) -> tuple[Counter, int]:
    """Uncensored patterns of the points in ``region``, and the number censored."""
    counts: Counter = Counter()
    censored = 0
    for x in config.points:
        if machine.contains(region, x):
            pat = orbit_pattern(machine, config, x, K)
            if pat.censored:
                censored += 1
            else:
                counts[pat.shifts] += 1
    return counts, censored


@dataclass(frozen=True)
class PatternShift:
    pattern: tuple[int, ...]
    original: float
    shifted: float
    difference: float
    std_error: float


def pattern_stationarity(generator, region: LevelBoxSet, K: int, replicates: int,
                         seed: int = 0, shift: int = 1) -> list[PatternShift]:
    """Compare pattern counts in ``region`` for ``N`` and ``T_*^shift N``, paired per replicate."""
    machine = generator.machine
    rows_orig, rows_shift = [], []
    for r in range(replicates):
        cfg = generator(replicate_stream(seed, r))
        moved, _ = pushforward_points(machine, cfg, shift)
        rows_orig.append(pattern_counts(machine, cfg, region, K)[0])
        rows_shift.append(pattern_counts(machine, moved, region, K)[0])
    patterns = sorted(set().union(*rows_orig, *rows_shift))
    out = []
    for F in patterns:
        a = np.array([c[F] for c in rows_orig], dtype=float)
        b = np.array([c[F] for c in rows_shift], dtype=float)
        diff, se = mean_and_se(b - a)
        out.append(PatternShift(F, float(a.mean()), float(b.mean()), diff, se))
    return out


@dataclass(frozen=True)
class ComponentIntensity:
    pattern: tuple[int, ...]
    intensity: float
    std_error: float
    mean_size: float
    censored: int


def component_intensities(generator, K: int, region: LevelBoxSet, replicates: int,
                          seed: int = 0) -> tuple[list[ComponentIntensity], set, int]:
    """Estimate the intensity of every recovered ``N_F`` from its count in ``region``.

    Also returns the set of patterns seen anywhere and the number of
    reconstruction failures (always expected to be 0).
    """
    machine = generator.machine
    mu = float(machine.measure_of(region))
    per_rep: list[Counter] = []
    censored = 0
    seen: set = set()
    failures = 0
    for r in range(replicates):
        cfg = generator(replicate_stream(seed, r))
        dec = decompose(machine, cfg, K)
        if reconstruct(machine, dec) != cfg:
            failures += 1
        seen |= dec.patterns
        row = Counter()
        for F, comp in dec.components.items():
            row[F] = sum(1 for x in comp.points if machine.contains(region, x))
        censored += sum(1 for x in dec.residue.points if machine.contains(region, x))
        per_rep.append(row)
    out = []
    for F in sorted(seen):
        counts = np.array([row[F] for row in per_rep], dtype=float)
        value, se = mean_and_se(counts / mu)
        out.append(ComponentIntensity(F, value, se, float(counts.mean()), censored))
    return out, seen, failures


@dataclass(frozen=True)
class JoiningSpec:
    """Graph mixture ``sum_k a_k Delta_{T^k}`` plus the two marginal intensities."""

    weights: tuple[tuple[int, Fraction], ...]
    intensities: tuple[Fraction, Fraction] = (Fraction(1), Fraction(1))

    def __post_init__(self):
        weights = dict()
        for k, a in (self.weights.items() if isinstance(self.weights, Mapping) else self.weights):
            a = Fraction(a)
            if a < 0:
                raise ValueError(f"joining weight a_{k} = {a} is negative")
            weights[int(k)] = weights.get(int(k), Fraction(0)) + a
        object.__setattr__(self, "weights", tuple(sorted(weights.items())))
        object.__setattr__(self, "intensities", tuple(Fraction(b) for b in self.intensities))
        if self.total > min(self.intensities):
            raise ValueError(f"sum of weights {self.total} exceeds a marginal intensity")

    @classmethod
    def of(cls, weights: Mapping[int, object], intensities=(1, 1)) -> "JoiningSpec":
        return cls(tuple(weights.items()), tuple(intensities))

    @property
    def total(self) -> Fraction:
        return sum((a for _, a in self.weights), Fraction(0))


def sample_poisson_joining(machine: RankOneMachine, jspec: JoiningSpec, window: LevelBoxSet,
                           stream: Stream) -> tuple[PointConfiguration, PointConfiguration]:
    """Sample the Poisson joining of the graph mixture ``jspec`` on ``window``.

    Each ``C_k`` (intensity ``a_k mu``) feeds ``N1`` unshifted and ``N2``
    through ``T^k``; independent top-ups bring each side to its marginal
    intensity.
    """
    ss = _as_seed_sequence(stream)
    left, right = [], []
    for idx, (k, a) in enumerate(jspec.weights):
        if a == 0:
            continue
        cover = shifted_cover(machine, window, {0, k})
        c = sample_poisson(machine, cover, a, child_stream(ss, 0, idx))
        left.append(restrict(machine, c, window))
        right.append(pushforward_points(machine, c, k, window)[0])
    for side, (out, beta) in enumerate(zip((left, right), jspec.intensities)):
        rest = beta - jspec.total
        if rest > 0:
            out.append(sample_poisson(machine, window, rest, child_stream(ss, 1, side)))
    empty = PointConfiguration(window)
    return superpose(left or [empty]), superpose(right or [empty])


def joining_covariance(machine: RankOneMachine, jspec: JoiningSpec, a: LevelBoxSet, b: LevelBoxSet) -> Fraction:
    """``Cov(N1(A), N2(B)) = sum_k a_k mu(A & T^{-k} B)``."""
    total = Fraction(0)
    for k, w in jspec.weights:
        shifted = machine.pushforward_set(b, -k) if k else b
        total += w * machine.measure_of(machine.intersect(a, shifted))
    return total


@dataclass
class JoiningGenerator:
    """Callable returning the pair ``(N1, N2)``."""

    machine: RankOneMachine
    spec: JoiningSpec
    window: LevelBoxSet

    def __call__(self, stream):
        return sample_poisson_joining(self.machine, self.spec, self.window, stream)


@dataclass(frozen=True)
class MarkedConfiguration:
    """Points of X with marks in ``[0, mark_range)``.

    ``marks[i]`` is a numerator over ``2**64`` of ``mark_range``.
    """

    window: LevelBoxSet
    mark_range: Fraction
    points: tuple[Point, ...]
    marks: tuple[int, ...]

    def mark(self, i: int) -> Fraction:
        return self.mark_range * Fraction(self.marks[i], ONE)

    def ground(self) -> PointConfiguration:
        return PointConfiguration(self.window, self.points)

    def slice(self, lo, hi) -> PointConfiguration:
        """Points whose mark lies in ``[lo, hi)``, forgetting the marks."""
        lo, hi = Fraction(lo) * ONE, Fraction(hi) * ONE
        pts = tuple(p for p, m in zip(self.points, self.marks) if lo <= self.mark_range * m < hi)
        return PointConfiguration(self.window, pts)


def _is_dyadic(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


def sample_marked(machine: RankOneMachine, window: LevelBoxSet, mark_range, alpha_per_unit,
                  stream: Stream) -> MarkedConfiguration:
    """Poisson process of intensity ``alpha_per_unit * mu x Lebesgue`` on ``window x [0, mark_range)``."""
    mark_range = Fraction(mark_range)
    if mark_range <= 0:
        raise ValueError("mark range must be positive")
    rng = as_generator(stream)
    ground = sample_poisson(machine, window, Fraction(alpha_per_unit) * mark_range, rng)
    marks = rng.integers(0, ONE, size=len(ground), dtype=np.uint64)
    return MarkedConfiguration(window, mark_range, ground.points, tuple(int(m) for m in marks))


def universal_sample(machine: RankOneMachine, mark_intervals: Sequence[tuple], alpha_per_unit,
                     window: LevelBoxSet, stream: Stream) -> list[PointConfiguration]:
    """Slices of one marked Poisson configuration along disjoint mark intervals.

    Slice ``i`` is a Poisson process of intensity ``alpha_per_unit * |J_i| * mu``
    and the slices are independent.
    """
    intervals = [(Fraction(lo), Fraction(hi)) for lo, hi in mark_intervals]
    if not intervals:
        return []
    for lo, hi in intervals:
        if not 0 <= lo < hi:
            raise ValueError(f"bad mark interval [{lo}, {hi})")
        if not (_is_dyadic(lo) and _is_dyadic(hi)):
            raise ValueError(f"mark interval endpoints must be dyadic: [{lo}, {hi})")
    ordered = sorted(intervals)
    for (_, hi), (lo, _) in zip(ordered, ordered[1:]):
        if lo < hi:
            raise ValueError("mark intervals overlap")
    marked = sample_marked(machine, window, max(hi for _, hi in intervals), alpha_per_unit, stream)
    return [marked.slice(lo, hi) for lo, hi in intervals]
