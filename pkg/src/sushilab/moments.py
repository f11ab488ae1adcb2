"""Moment measures: Monte-Carlo estimators, exact oracles, orbit detectors.

Exact oracles are built from the partition measures

    m_pi^kappa(A_1 x ... x A_n) = prod over blocks P of mu( cap_{i in P} T^{-k_i} A_i ),

evaluated with the engine's exact set arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .checks import agrees, mean_and_se
from .engine import LevelBoxSet, OrbitEscape, RankOneMachine
from .point_process import PointConfiguration, SushiSpec, count, replicate_stream

Partition = tuple[tuple[int, ...], ...]
MAX_ORDER = 4


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    std_error: float
    replicates: int
    boxes: tuple[LevelBoxSet, ...]
    order: int

    def agrees(self, target, nsigma: float = 5) -> bool:
        return agrees(self.value, target, self.std_error, nsigma)


@dataclass
class CensoredCount:
    hits: int = 0
    censored: int = 0

    def __add__(self, other: "CensoredCount") -> "CensoredCount":
        return CensoredCount(self.hits + other.hits, self.censored + other.censored)


@dataclass(frozen=True)
class PartitionMoment:
    partition: Partition
    kappa: tuple[int, ...]
    value: Fraction


def set_partitions(n: int) -> Iterator[Partition]:
    """All partitions of ``{0, ..., n-1}``, blocks sorted by their minimum."""
    if n == 0:
        yield ()
        return
    for rest in set_partitions(n - 1):
        yield rest + ((n - 1,),)
        for i in range(len(rest)):
            yield rest[:i] + (rest[i] + (n - 1,),) + rest[i + 1:]


def compatible_shifts(partition: Partition, kappa: Sequence[int]) -> tuple[int, ...]:
    """Shift ``kappa`` within each block so the block's smallest index gets 0."""
    out = list(kappa)
    for block in partition:
        base = kappa[min(block)]
        for i in block:
            out[i] = kappa[i] - base
    return tuple(out)


def _shifted(machine: RankOneMachine, box: LevelBoxSet, k: int) -> LevelBoxSet:
    return machine.pushforward_set(box, -k) if k else box


def partition_moment(machine: RankOneMachine, partition: Partition, boxes: Sequence[LevelBoxSet],
                     kappa: Optional[Sequence[int]] = None) -> PartitionMoment:
    """Exact ``m_pi^kappa`` on a product of boxes."""
    n = len(boxes)
    kappa = tuple(kappa) if kappa is not None else (0,) * n
    kappa = compatible_shifts(partition, kappa)
    value = Fraction(1)
    for block in partition:
        inter = None
        for i in block:
            part = _shifted(machine, boxes[i], kappa[i])
            inter = part if inter is None else machine.intersect(inter, part)
        value *= machine.measure_of(inter)
    return PartitionMoment(partition, kappa, value)


def analytic_poisson_moment(machine: RankOneMachine, alpha, boxes: Sequence[LevelBoxSet],
                            shifts: Optional[Sequence[int]] = None) -> Fraction:
    """``E[prod N(T^{-k_i} A_i)]`` for a Poisson process of intensity ``alpha * mu``.

    Sum over set partitions of ``alpha**(#blocks) * m_pi``.
    """
    alpha = Fraction(alpha)
    if not 1 <= len(boxes) <= MAX_ORDER:
        raise ValueError(f"moment order must be in 1..{MAX_ORDER}")
    if shifts is not None:
        boxes = [_shifted(machine, b, k) for b, k in zip(boxes, shifts)]
    return sum((alpha ** len(pi) * partition_moment(machine, pi, boxes).value
                for pi in set_partitions(len(boxes))), Fraction(0))


def analytic_sushi_m2(machine: RankOneMachine, spec: SushiSpec, a: LevelBoxSet, b: LevelBoxSet) -> Fraction:
    """Second moment ``E[N(A) N(B)]`` of a SuShi.

    Same-component pairs contribute ``alpha_i * mu(T^{-j}A & T^{-j'}B)``; the
    remaining part is the square of the total intensity times ``mu(A)mu(B)``.
    """
    diagonal = Fraction(0)
    for alpha, js in spec.components:
        for j in js:
            for jp in js:
                inter = machine.intersect(_shifted(machine, a, j), _shifted(machine, b, jp))
                diagonal += alpha * machine.measure_of(inter)
    return diagonal + spec.total_intensity ** 2 * machine.measure_of(a) * machine.measure_of(b)


Generator = Callable[[np.random.SeedSequence], PointConfiguration]


def _configs(generator: Generator, replicates: int, seed: int) -> Iterator[PointConfiguration]:
    if replicates < 1:
        raise ValueError("need at least one replicate")
    for r in range(replicates):
        yield generator(replicate_stream(seed, r))


def count_table(generator, boxes: Sequence[LevelBoxSet], replicates: int, seed: int = 0) -> np.ndarray:
    """Counts ``N(A_i)`` per replicate, shape ``(replicates, len(boxes))``."""
    machine = generator.machine
    rows = [[count(machine, cfg, b) for b in boxes] for cfg in _configs(generator, replicates, seed)]
    return np.asarray(rows, dtype=np.int64).reshape(replicates, len(boxes))


def empirical_moment(generator, boxes: Sequence[LevelBoxSet], replicates: int, seed: int = 0) -> MomentEstimate:
    """Mean and standard error of ``prod_i N(A_i)`` over independent replicates."""
    if not 1 <= len(boxes) <= MAX_ORDER:
        raise ValueError(f"moment order must be in 1..{MAX_ORDER}")
    table = count_table(generator, boxes, replicates, seed)
    value, se = mean_and_se(table.prod(axis=1))
    return MomentEstimate(value, se, replicates, tuple(boxes), len(boxes))


def shared_orbit_count(machine: RankOneMachine, config1: PointConfiguration, config2: PointConfiguration,
                       k: int, region: LevelBoxSet) -> CensoredCount:
    """Points ``x`` of ``config1`` in ``region`` with ``T^k x`` in ``config2``.

    Checks whose image leaves ``config2``'s window (or escapes) are censored.
    """
    out = CensoredCount()
    for x in config1.points:
        if not machine.contains(region, x):
            continue
        try:
            y = machine.apply(x, k)
        except OrbitEscape:
            out.censored += 1
            continue
        if not machine.contains(config2.window, y):
            out.censored += 1
        elif y in config2:
            out.hits += 1
    return out


def freeness_report(generator, k_range: Iterable[int], region: LevelBoxSet, replicates: int,
                    seed: int = 0) -> dict[int, CensoredCount]:
    """Per-shift totals of self shared-orbit hits; all zero means free."""
    ks = list(k_range)
    if 0 in ks:
        raise ValueError("k = 0 is not a shift")
    totals = {k: CensoredCount() for k in ks}
    for cfg in _configs(generator, replicates, seed):
        for k in ks:
            totals[k] = totals[k] + shared_orbit_count(generator.machine, cfg, cfg, k, region)
    return totals


def is_free(report: dict[int, CensoredCount]) -> bool:
    return all(c.hits == 0 for c in report.values())


@dataclass
class CesaroTrace:
    """Running averages ``(1/l) sum_{k<=l}`` of a shifted product moment."""

    values: list[float]
    std_errors: list[float]
    replicates: int
    requested: int
    truncated: bool = False

    @property
    def length(self) -> int:
        return len(self.values)


def shift_correlation(generator, boxes: Sequence[LevelBoxSet], fixed: Iterable[int], L: int,
                      replicates: int, seed: int = 0) -> CesaroTrace:
    """Cesaro averages over ``k = 1..L`` of ``E[prod_{i in fixed} N(A_i) prod_{i not in fixed} N(T^{-k} A_i)]``.

    Stops early (``truncated``) at the first shift whose boxes leave the
    generator's window or cannot be represented.
    """
    machine = generator.machine
    fixed = set(fixed)
    shifted_sets = []
    for k in range(1, L + 1):
        try:
            sets = [b if i in fixed else machine.pushforward_set(b, -k) for i, b in enumerate(boxes)]
        except OrbitEscape:
            break
        if not all(machine.is_subset(s, generator.window) for s in sets):
            break
        shifted_sets.append(sets)
    if not shifted_sets:
        return CesaroTrace([], [], replicates, L, truncated=True)
    products = np.empty((replicates, len(shifted_sets)))
    for r, cfg in enumerate(_configs(generator, replicates, seed)):
        for k, sets in enumerate(shifted_sets):
            products[r, k] = prod(count(machine, cfg, s) for s in sets)
    running = np.cumsum(products, axis=1) / np.arange(1, len(shifted_sets) + 1)
    values, errors = [], []
    for col in running.T:
        v, se = mean_and_se(col)
        values.append(v)
        errors.append(se)
    return CesaroTrace(values, errors, replicates, L, truncated=len(shifted_sets) < L)


def dyadic_cells(region: LevelBoxSet, depth: int) -> list[LevelBoxSet]:
    """Split every box of ``region`` horizontally into ``2**depth`` equal cells."""
    parts = 1 << depth
    cells = []
    for level, lo, hi in region.boxes:
        step = (hi - lo) / parts
        for i in range(parts):
            cells.append(LevelBoxSet(region.stage, ((level, lo + i * step, lo + (i + 1) * step),)))
    return cells


@dataclass(frozen=True)
class DiagonalEstimate:
    """Estimates of ``sum_i N(A_i)^2`` and of its off-diagonal part ``sum_i N(A_i)(N(A_i)-1)``."""

    depth: int
    cells: int
    second: float
    second_se: float
    offdiag: float
    offdiag_se: float
    oracle_second: Optional[Fraction] = None
    oracle_offdiag: Optional[Fraction] = None


def diagonal_statistic(generator, region: LevelBoxSet, depth: int, replicates: int, seed: int = 0,
                       alpha=None) -> DiagonalEstimate:
    """Diagonal statistic over the depth-``depth`` dyadic partition of ``region``.

    With ``alpha`` given, the Poisson oracle values are attached.
    """
    cells = dyadic_cells(region, depth)
    table = count_table(generator, cells, replicates, seed)
    second, second_se = mean_and_se((table ** 2).sum(axis=1))
    off, off_se = mean_and_se((table * (table - 1)).sum(axis=1))
    oracle_second = oracle_off = None
    if alpha is not None:
        machine = generator.machine
        alpha = Fraction(alpha)
        oracle_off = sum((alpha * machine.measure_of(c)) ** 2 for c in cells)
        oracle_second = alpha * machine.measure_of(region) + oracle_off
    return DiagonalEstimate(depth, len(cells), second, second_se, off, off_se, oracle_second, oracle_off)
