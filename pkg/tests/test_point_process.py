from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sushilab.checks import ALPHA, NSIGMA, agrees, correlation, correlation_bound, mean_and_se, poisson_chisquare, \
    two_sample_chisquare
from sushilab.engine import LevelBoxSet, Point, build_machine, preset
from sushilab.errors import CollisionDetected, WindowTooSmall
from sushilab.moments import count_table
from sushilab.point_process import (
    EscapeReport,
    PointConfiguration,
    PoissonGenerator,
    SushiGenerator,
    SushiSpec,
    build_sushi,
    count,
    pushforward_points,
    replicate_stream,
    restrict,
    sample_poisson,
    shifted_cover,
    superpose,
)

R = 2000


@pytest.fixture(scope="module")
def m():
    return build_machine(preset("chacon_infinite"))


def test_poisson_mean_on_stage2_tower(m):
    window = m.tower(2)
    counts = count_table(PoissonGenerator(m, window, 3), [window], 10_000, seed=5)[:, 0]
    assert abs(counts.mean() - 8) <= 4 * np.sqrt(8 / 10_000)


def test_disjoint_counts_uncorrelated_and_poisson(m):
    a, b = m.tower(3, 0, 20), m.tower(3, 20, 50)
    table = count_table(PoissonGenerator(m, m.tower(3)), [a, b], R, seed=11)
    assert abs(correlation(table[:, 0], table[:, 1])) <= correlation_bound(R)
    assert poisson_chisquare(table[:, 0], float(m.measure_of(a))) >= ALPHA
    assert poisson_chisquare(table[:, 1], float(m.measure_of(b))) >= ALPHA


def test_points_uniform_within_box(m):
    from sushilab.checks import ks_uniform
    box = LevelBoxSet(3, ((7, Fraction(1, 4), Fraction(3, 4)),))
    xs = []
    for r in range(300):
        cfg = sample_poisson(m, box, 20, replicate_stream(1, r))
        xs.extend(float(m.locate(p, 3)[1]) for p in cfg.points)
    assert ks_uniform(xs, 0.25, 0.75) >= ALPHA


def test_seed_determinism(m):
    a = sample_poisson(m, m.tower(3), 1, replicate_stream(9, 4))
    b = sample_poisson(m, m.tower(3), 1, replicate_stream(9, 4))
    c = sample_poisson(m, m.tower(3), 1, replicate_stream(9, 5))
    assert a == b and a != c


def test_sample_rejects_nonpositive_alpha(m):
    with pytest.raises(ValueError):
        sample_poisson(m, m.tower(2), 0, replicate_stream(0, 0))


def test_empty_window(m):
    cfg = sample_poisson(m, LevelBoxSet(3), 1, replicate_stream(0, 0))
    assert len(cfg) == 0 and count(m, cfg, m.tower(3)) == 0


def test_configuration_is_simple_and_sorted(m):
    p = m.canonical(Point(3, 5, 1 << 40))
    with pytest.raises(CollisionDetected):
        PointConfiguration(m.tower(3), (p, p))
    q = m.canonical(Point(3, 2, 7))
    cfg = PointConfiguration(m.tower(3), (p, q))
    assert list(cfg.points) == sorted([p, q])
    assert p in cfg


def test_count_additivity(m):
    cfg = sample_poisson(m, m.tower(3), 2, replicate_stream(3, 0))
    assert count(m, cfg, m.tower(3)) == len(cfg)
    assert count(m, cfg, m.tower(3, 0, 17)) + count(m, cfg, m.tower(3, 17, 50)) == len(cfg)
    assert count(m, PointConfiguration(m.tower(3)), m.tower(3)) == 0


def test_pushforward_identity_and_interior_shift(m):
    window = m.tower(3)
    cfg = sample_poisson(m, m.tower(3, 5, 30), 2, replicate_stream(2, 0))
    cfg = PointConfiguration(window, cfg.points)
    same, report = pushforward_points(m, cfg, 0)
    assert same == cfg and report.censored == 0
    moved, report = pushforward_points(m, cfg, 1)
    assert report.retained == len(cfg) and report.censored == 0
    assert sorted(m.refine(p, 3).level for p in moved.points) == sorted(m.refine(p, 3).level + 1 for p in cfg.points)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), k=st.integers(-15, 15))
def test_pushforward_roundtrip_and_report_balance(m, seed, k):
    window = m.tower(3, 2, 48)
    cfg = sample_poisson(m, window, 1, replicate_stream(seed, 0))
    moved, report = pushforward_points(m, cfg, k)
    assert report.censored + report.retained == report.original == len(cfg)
    back, _ = pushforward_points(m, moved, -k)
    assert set(back.points) <= set(cfg.points)
    assert len(back) == len(moved)


def test_escape_report_merge():
    a = EscapeReport(original=3, retained=2)
    a.left_window[1] += 1
    b = EscapeReport(original=2, retained=1)
    b.orbit_escape[-1] += 1
    a.merge(b)
    assert (a.original, a.retained, a.censored) == (5, 3, 2)


def test_superpose(m):
    w = m.tower(3)
    a = sample_poisson(m, w, 1, replicate_stream(1, 0))
    assert superpose([a]) == a
    assert superpose([PointConfiguration(w), a]) == a
    with pytest.raises(CollisionDetected):
        superpose([a, a])
    with pytest.raises(ValueError):
        superpose([a, PointConfiguration(m.tower(2))])


def test_superposition_of_poissons_is_poisson(m):
    w = m.tower(2)
    alpha, beta = Fraction(1, 2), Fraction(3, 2)
    counts = []
    for r in range(R):
        a = sample_poisson(m, w, alpha, np.random.SeedSequence(21, spawn_key=(r, 0)))
        b = sample_poisson(m, w, beta, np.random.SeedSequence(21, spawn_key=(r, 1)))
        counts.append(len(superpose([a, b])))
    assert poisson_chisquare(counts, float((alpha + beta) * m.measure_of(w))) >= ALPHA


def test_sushi_spec_validation_and_canonical_form():
    spec = SushiSpec.of((1, {2, 3}), (Fraction(1, 2), {0, 1}), (2, {5}))
    assert spec.total_intensity == 1 * 2 + Fraction(1, 2) * 2 + 2
    canon = spec.canonical_form()
    assert canon.canonical
    assert {frozenset(js) for _, js in canon.components} == {frozenset({0, 1}), frozenset({0})}
    assert dict((frozenset(js), a) for a, js in canon.components)[frozenset({0, 1})] == Fraction(3, 2)
    with pytest.raises(ValueError):
        SushiSpec.of((0, {0}))
    with pytest.raises(ValueError):
        SushiSpec.of((1, set()))
    with pytest.raises(ValueError):
        SushiSpec.of((1, {1, 2}), canonical=True)


def test_single_unshifted_sushi_matches_poisson(m):
    w = m.tower(3, 1, 49)
    sushi = count_table(SushiGenerator(m, SushiSpec.of((1, {0})), w), [w], R, seed=1)[:, 0]
    poisson = count_table(PoissonGenerator(m, w), [w], R, seed=2)[:, 0]
    assert two_sample_chisquare(sushi, poisson) >= ALPHA


def test_sushi_partners_present(m):
    w = m.tower(3, 1, 49)
    spec = SushiSpec.of((1, {0, 1}))
    for r in range(50):
        cfg, comps = build_sushi(m, spec, w, replicate_stream(4, r))
        for p in cfg.points:
            i, j = cfg.tag(p)
            if j == 0:
                q = m.apply(p, 1)
                if m.contains(w, q):
                    assert q in cfg and cfg.tag(q) == (0, 1)


def test_sushi_intensity(m):
    w = m.tower(3, 2, 48)
    spec = SushiSpec.of((1, {0, 2}), (2, {0}))
    counts = count_table(SushiGenerator(m, spec, w), [w], R, seed=8)[:, 0]
    value, se = mean_and_se(counts)
    target = 4 * m.measure_of(w)
    assert abs(value - float(target)) <= 4 * se
    assert agrees(value, target, se, NSIGMA)


def test_window_too_small(m):
    with pytest.raises(WindowTooSmall):
        shifted_cover(m, m.tower(3), {0, 1})


def test_restrict_keeps_provenance(m):
    w = m.tower(3, 1, 49)
    cfg, _ = build_sushi(m, SushiSpec.of((1, {0, 1})), w, replicate_stream(0, 0))
    sub = restrict(m, cfg, m.tower(3, 10, 20))
    assert all(sub.tag(p) == cfg.tag(p) for p in sub.points)
