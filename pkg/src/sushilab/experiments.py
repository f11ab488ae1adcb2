"""Named experiments: generators, oracles and detectors bound into reproducible runs.

Each experiment returns check rows (estimate, oracle, standard error,
verdict) plus CSV tables.  Verdicts use only the thresholds in
``sushilab.checks``.  A run is a pure function of its ``ExperimentConfig``;
timing and version stamps go to ``run.json`` so the CSV files of two runs
with the same config are byte-identical.
"""

from __future__ import annotations

import configparser
import json
import platform
import time
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy

from . import __version__
from .checks import (
    ALPHA,
    NSIGMA,
    agrees,
    correlation,
    correlation_bound,
    mean_and_se,
    poisson_chisquare,
    two_sample_chisquare,
)
from .engine import AffineSpacerRule, LevelBoxSet, Point, RankOneMachine, build_machine, preset
from .errors import ConfigError, OrbitEscape
from .io import describe_set, dumps_configuration, parse_rational, table_text
from .moments import (
    analytic_poisson_moment,
    count_table,
    diagonal_statistic,
    empirical_moment,
    freeness_report,
    shared_orbit_count,
    shift_correlation,
)
from .point_process import (
    EmptyGenerator,
    PoissonGenerator,
    SushiGenerator,
    SushiSpec,
    child_stream,
    count,
    replicate_stream,
    superpose,
)
from .structure import (
    JoiningSpec,
    component_intensities,
    joining_covariance,
    pattern_stationarity,
    sample_poisson_joining,
    universal_sample,
)

EXPERIMENTS = ("sample", "moments", "freeness", "decompose", "joining", "universal")
MAX_SEED = 1 << 64
REPORT_COLUMNS = ("experiment", "check", "estimate", "oracle", "std_error", "replicates", "verdict", "note")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    replicates: int
    experiment: str = "all"
    preset: str = "chacon_infinite"
    cuts: Optional[int] = None
    spacers: Optional[str] = None
    base_width: Optional[Fraction] = None
    max_stage: Optional[int] = None
    horizon: int = 10
    window_stage: int = 3
    alpha: Fraction = Fraction(1)
    out: Path = Path("sushilab-out")

    def __post_init__(self):
        if self.seed is None or self.replicates is None:
            raise ConfigError("seed and replicates are mandatory")
        if not 0 <= int(self.seed) < MAX_SEED:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if int(self.replicates) < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if self.experiment not in EXPERIMENTS + ("all",):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if int(self.horizon) < 1:
            raise ConfigError("horizon must be >= 1")
        if int(self.window_stage) < 2:
            raise ConfigError("window_stage must be >= 2")
        if Fraction(self.alpha) <= 0:
            raise ConfigError("alpha must be positive")
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "out", Path(self.out))

    def spec(self):
        overrides = {}
        if self.cuts is not None:
            overrides["cuts"] = int(self.cuts)
        if self.spacers is not None:
            overrides["spacer_rule"] = AffineSpacerRule.parse(self.spacers)
        if self.base_width is not None:
            overrides["base_width"] = Fraction(self.base_width)
        if self.max_stage is not None:
            overrides["max_stage"] = int(self.max_stage)
        try:
            return preset(self.preset, **overrides)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def machine(self) -> RankOneMachine:
        return build_machine(self.spec())

    def with_overrides(self, **values) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in values.items() if v is not None})

    def describe(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        return {k: (str(v) if isinstance(v, (Fraction, Path)) else v) for k, v in out.items()}


# keys allowed in each section of the config file, with their parsers
_SECTIONS: dict[str, dict[str, Callable]] = {
    "run": {
        "seed": int, "replicates": int, "experiment": str, "horizon": int,
        "window_stage": int, "alpha": parse_rational, "out": Path,
    },
    "machine": {
        "preset": str, "cuts": int, "spacers": str, "base_width": parse_rational, "max_stage": int,
    },
}


def read_config_file(path) -> dict:
    """Parse an INI config file into ``ExperimentConfig`` keyword values."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}] in {path}")
        for key, text in parser[section].items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                values[key] = _SECTIONS[section][key](text.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
    return values


def load_config(path=None, **overrides) -> ExperimentConfig:
    values = read_config_file(path) if path is not None else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in values or "replicates" not in values:
        raise ConfigError("seed and replicates are mandatory")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class CheckRow:
    check: str
    estimate: object
    oracle: object
    std_error: object
    verdict: bool
    replicates: int = 0
    note: str = ""


@dataclass
class ExperimentResult:
    name: str
    statement: str
    rows: list[CheckRow] = field(default_factory=list)
    tables: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.verdict for r in self.rows)


@dataclass
class RunReport:
    config: ExperimentConfig
    results: list[ExperimentResult]
    stamp: dict
    wall_time: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def rows(self) -> list[tuple[str, CheckRow]]:
        return [(res.name, row) for res in self.results for row in res.rows]

    def report_text(self) -> str:
        return table_text(REPORT_COLUMNS, (
            {"experiment": name, **asdict(row)} for name, row in self.rows))

    def write(self, out: Path) -> list[Path]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "report.csv"]
        written[0].write_text(self.report_text())
        statements = table_text(("experiment", "statement", "verdict"), (
            {"experiment": r.name, "statement": r.statement, "verdict": r.passed} for r in self.results))
        (out / "experiments.csv").write_text(statements)
        written.append(out / "experiments.csv")
        for res in self.results:
            for name, text in res.tables.items():
                path = out / name
                path.write_text(text)
                written.append(path)
        meta = {"stamp": self.stamp, "wall_time_seconds": round(self.wall_time, 3), "passed": self.passed}
        (out / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        written.append(out / "run.json")
        return written


class Context:
    """Machine, windows and seeds shared by the experiment bodies."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.machine = config.machine()
        self.R = int(config.replicates)
        self.seed = int(config.seed)
        self.K = int(config.horizon)
        self.stage = int(config.window_stage)
        self.alpha = config.alpha

    @property
    def height(self) -> int:
        return self.machine.height(self.stage)

    def window(self) -> LevelBoxSet:
        return self.machine.tower(self.stage)

    def interior(self, margin: int, stage: Optional[int] = None) -> LevelBoxSet:
        stage = self.stage if stage is None else stage
        h = self.machine.height(stage)
        if 2 * margin >= h:
            raise ConfigError(f"stage {stage} (height {h}) has no levels at distance {margin} from its ends; "
                              f"raise window_stage or lower horizon")
        return self.machine.tower(stage, margin, h - margin)

    def thirds(self, window: LevelBoxSet) -> list[LevelBoxSet]:
        levels = sorted({level for level, _, _ in window.boxes})
        n = len(levels)
        if n < 3:
            raise ConfigError("window needs at least 3 levels")
        cuts = [0, n // 3, 2 * n // 3, n]
        return [LevelBoxSet.levels(window.stage, levels[a:b]) for a, b in zip(cuts, cuts[1:])]

    def aux_rng(self, key: int) -> np.random.Generator:
        # keys of length 2 never collide with the replicate keys (r,)
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(1 << 32, key)))


def _agree(name: str, value: float, oracle, se: float, replicates: int, note: str = "") -> CheckRow:
    return CheckRow(name, value, oracle, se, agrees(value, oracle, se, NSIGMA), replicates, note)


def _exact(name: str, value, oracle, replicates: int = 0, note: str = "") -> CheckRow:
    return CheckRow(name, value, oracle, 0, value == oracle, replicates, note)


def _pvalue(name: str, p: float, replicates: int, note: str = "") -> CheckRow:
    return CheckRow(name, p, f">={ALPHA}", "", p >= ALPHA, replicates, note or "chi-square p-value")


def _corr(name: str, r: float, replicates: int) -> CheckRow:
    bound = correlation_bound(replicates)
    return CheckRow(name, r, 0, "", abs(r) <= bound, replicates, f"|corr| <= {bound:.4g}")


def poisson_law_rows(ctx: Context, prefix: str, table: np.ndarray, boxes, alpha) -> list[CheckRow]:
    """Chi-square, mean and pairwise independence rows for a count table."""
    rows = []
    R = len(table)
    for i, box in enumerate(boxes):
        mean = alpha * ctx.machine.measure_of(box)
        rows.append(_pvalue(f"{prefix}chisq[{describe_set(box)}]", poisson_chisquare(table[:, i], mean), R))
        value, se = mean_and_se(table[:, i])
        rows.append(_agree(f"{prefix}mean[{describe_set(box)}]", value, mean, se, R))
    for i, j in combinations(range(len(boxes)), 2):
        rows.append(_corr(f"{prefix}corr[{i},{j}]", correlation(table[:, i], table[:, j]), R))
    return rows


# -- experiments ------------------------------------------------------------

def _height_violations(machine: RankOneMachine, stages: int) -> int:
    bad = 0
    for n in range(1, stages + 1):
        expected = machine.cuts * machine.height(n) + sum(machine.spacers(n))
        bad += machine.height(n + 1) != expected
    return bad


def _random_point(machine: RankOneMachine, stage: int, rng) -> Point:
    level = int(rng.integers(0, machine.height(stage)))
    frac = int(rng.integers(0, 1 << 64, dtype=np.uint64))
    return machine.canonical(Point(stage, level, frac))


def _random_box_set(machine: RankOneMachine, stage: int, first: int, rng) -> LevelBoxSet:
    # endpoints stay off 0 and 1 so no box touches the spines at the tower edges
    boxes = []
    for _ in range(int(rng.integers(1, 5))):
        level = int(rng.integers(first, machine.height(stage)))
        a, b = sorted(rng.choice(np.arange(1, 256), size=2, replace=False))
        boxes.append((level, Fraction(int(a), 256), Fraction(int(b), 256)))
    return LevelBoxSet(stage, tuple(boxes))


def exp_sample(ctx: Context) -> ExperimentResult:
    res = ExperimentResult("sample", "The Poisson T-point process of intensity alpha*mu has independent "
                                     "Poisson(alpha*mu(A_i)) counts on disjoint sets; T is invertible and "
                                     "measure preserving on the tower.")
    m = ctx.machine
    shifts = 20
    for name, machine in (("configured", m), ("chacon_infinite", build_machine(preset("chacon_infinite"))),
                          ("chacon_finite", build_machine(preset("chacon_finite")))):
        res.rows.append(_exact(f"height_recurrence[{name}]", _height_violations(machine, 8), 0,
                               note="stages violating h_{n+1} = c*h_n + sum of spacers"))
    rng = ctx.aux_rng(0)
    failures = escaped = 0
    n_points = ctx.R
    for _ in range(n_points):
        p = _random_point(m, ctx.stage, rng)
        k = int(rng.integers(-shifts, shifts + 1))
        try:
            q = m.apply(p, k)
        except OrbitEscape:
            escaped += 1
            continue
        failures += m.apply(q, -k) != p
    res.rows.append(_exact("apply_roundtrip", failures, 0, n_points,
                           note=f"|k| <= {shifts}; {escaped} orbit escapes excluded"))
    set_stage = max(ctx.stage, 3)
    measure_failures = 0
    for _ in range(100):
        s = _random_box_set(m, set_stage, shifts, rng)
        k = int(rng.integers(-shifts, shifts + 1))
        image = m.pushforward_set(s, k)
        back = m.pushforward_set(image, -k)
        measure_failures += m.measure_of(image) != m.measure_of(s) or not m.same_set(back, s)
    res.rows.append(_exact("pushforward_measure", measure_failures, 0, 100,
                           note="random box sets whose image changed measure or failed to invert"))

    window = ctx.window()
    boxes = ctx.thirds(window)
    gen = PoissonGenerator(m, window, ctx.alpha)
    table = count_table(gen, boxes, ctx.R, ctx.seed)
    res.rows.extend(poisson_law_rows(ctx, "poisson_", table, boxes, ctx.alpha))

    sushi = SushiSpec.of((1, {0, 2}), (2, {0}))
    inner = ctx.interior(2)
    est = empirical_moment(SushiGenerator(m, sushi, inner), [inner], ctx.R, ctx.seed)
    target = sushi.total_intensity * m.measure_of(inner)
    res.rows.append(_agree("sushi_intensity", est.value, target, est.std_error, ctx.R,
                           note="spec (1,{0,2}) + (2,{0}): mean count = 4 mu(window)"))
    res.tables["configuration.csv"] = dumps_configuration(gen(replicate_stream(ctx.seed, 0)))
    return res


def exp_moments(ctx: Context) -> ExperimentResult:
    res = ExperimentResult("moments", "Poisson moment measures are sums over set partitions of "
                                      "alpha^#blocks * m_pi; in particular M2(A x B) = alpha*mu(A & B) + "
                                      "alpha^2*mu(A)mu(B), and the diagonal carries weight alpha.")
    m = ctx.machine
    gen = PoissonGenerator(m, ctx.window(), ctx.alpha)
    A = LevelBoxSet.levels(2, [0])
    B = LevelBoxSet.levels(2, [0, 1])
    C = LevelBoxSet.levels(2, [1, 2])
    table_rows = []
    for name, boxes in (("M1", [A]), ("M2", [A, B]), ("M3", [A, B, C]), ("M3", [A, A, A])):
        est = empirical_moment(gen, boxes, ctx.R, ctx.seed)
        oracle = analytic_poisson_moment(m, ctx.alpha, boxes)
        label = " x ".join(describe_set(b) for b in boxes)
        row = _agree(f"{name}[{label}]", est.value, oracle, est.std_error, ctx.R)
        res.rows.append(row)
        table_rows.append({"estimator": name, "boxes": label, "k": len(boxes), "value": est.value,
                           "oracle": oracle, "SE": est.std_error, "replicates": ctx.R, "verdict": row.verdict})

    region = m.tower(2)
    shallow, deep = (diagonal_statistic(gen, region, d, ctx.R, ctx.seed, alpha=ctx.alpha) for d in (1, 4))
    for d in (shallow, deep):
        res.rows.append(_agree(f"offdiag[depth={d.depth}]", d.offdiag, d.oracle_offdiag, d.offdiag_se, ctx.R))
        table_rows.append({"estimator": "offdiag", "boxes": f"{describe_set(region)}/2^{d.depth}", "k": 2,
                           "value": d.offdiag, "oracle": d.oracle_offdiag, "SE": d.offdiag_se,
                           "replicates": ctx.R, "verdict": res.rows[-1].verdict})
    ratio = shallow.offdiag / deep.offdiag if deep.offdiag else float("inf")
    res.rows.append(CheckRow("offdiag_ratio", ratio, float(shallow.oracle_offdiag / deep.oracle_offdiag), "",
                             ratio >= 2, ctx.R, "off-diagonal part must fall by >= 2x from depth 1 to 4"))
    diag_weight = ctx.alpha * m.measure_of(region)
    gap = [abs(d.second - float(diag_weight)) for d in (shallow, deep)]
    res.rows.append(CheckRow("diagonal_limit", gap[1], 0, "", gap[1] < gap[0], ctx.R,
                             f"|sum N(A_i)^2 - alpha mu(A)| shrinks with depth (was {gap[0]:.4g})"))

    stage = next(s for s in range(ctx.stage + 1, m.max_stage) if m.height(s) >= 120)
    a_level = m.height(stage) // 3
    A2 = LevelBoxSet.levels(stage, [a_level])
    B2 = LevelBoxSet.levels(stage, [a_level + 10])
    L = 50
    trace = shift_correlation(PoissonGenerator(m, m.tower(stage), ctx.alpha), [A2, B2], {0}, L, ctx.R, ctx.seed)
    target = ctx.alpha ** 2 * m.measure_of(A2) * m.measure_of(B2)
    if trace.truncated:
        res.rows.append(CheckRow("cesaro", "", target, "", False, ctx.R, f"truncated at L={trace.length}"))
    else:
        res.rows.append(_agree(f"cesaro[L={L}]", trace.values[-1], target, trace.std_errors[-1], ctx.R,
                               "(1/L) sum_k E[N(A)N(T^-k B)] -> alpha^2 mu(A)mu(B)"))
        for l in range(len(trace.values)):
            table_rows.append({"estimator": "cesaro", "boxes": f"{describe_set(A2)} x {describe_set(B2)}",
                               "k": l + 1, "value": trace.values[l], "oracle": target,
                               "SE": trace.std_errors[l], "replicates": ctx.R,
                               "verdict": agrees(trace.values[l], target, trace.std_errors[l])})
    res.tables["moments.csv"] = table_text(
        ("estimator", "boxes", "k", "value", "oracle", "SE", "replicates", "verdict"), table_rows)
    return res


def exp_freeness(ctx: Context) -> ExperimentResult:
    res = ExperimentResult("freeness", "A Poisson T-point process is free: N and T_*^k N share no point for "
                                       "k != 0; a SuShi with a shifted component is not.")
    m, K = ctx.machine, ctx.K
    ks = [k for k in range(-K, K + 1) if k]
    table_rows = []

    def record(label, report):
        for k, c in sorted(report.items()):
            table_rows.append({"generator": label, "k": k, "hits": c.hits, "censored": c.censored})
        return sum(c.hits for c in report.values()), sum(c.censored for c in report.values())

    region = ctx.interior(K)
    hits, censored = record("poisson", freeness_report(PoissonGenerator(m, ctx.window(), ctx.alpha),
                                                       ks, region, ctx.R, ctx.seed))
    res.rows.append(_exact("poisson_free", hits, 0, ctx.R, f"shared-orbit hits over |k| <= {K}; "
                                                           f"{censored} censored"))
    hits, censored = record("empty", freeness_report(EmptyGenerator(m, ctx.window()), ks, region, ctx.R, ctx.seed))
    res.rows.append(_exact("empty_free", hits, 0, ctx.R))

    lag = 3
    window = ctx.interior(lag)
    region = ctx.interior(lag + K)
    gen = SushiGenerator(m, SushiSpec.of((ctx.alpha, {0, lag})), window)
    per_k = {k: [] for k in ks}
    for r in range(ctx.R):
        cfg = gen(replicate_stream(ctx.seed, r))
        for k in ks:
            per_k[k].append(shared_orbit_count(m, cfg, cfg, k, region).hits)
    for k in ks:
        table_rows.append({"generator": f"sushi{{0,{lag}}}", "k": k, "hits": sum(per_k[k]), "censored": 0})
    target = ctx.alpha * m.measure_of(region)
    for k in (lag, -lag):
        value, se = mean_and_se(per_k[k])
        res.rows.append(_agree(f"sushi_hits[k={k}]", value, target, se, ctx.R, "mean hits per replicate"))
    stray = sum(sum(v) for k, v in per_k.items() if abs(k) != lag)
    res.rows.append(_exact("sushi_other_shifts", stray, 0, ctx.R, f"hits at k != +-{lag}"))
    res.tables["freeness.csv"] = table_text(("generator", "k", "hits", "censored"), table_rows)
    return res


def exp_decompose(ctx: Context) -> ExperimentResult:
    res = ExperimentResult("decompose", "A T-point process with finite orbit clusters splits into free, "
                                        "mutually dissociated components N_F indexed by orbit patterns F; "
                                        "for a SuShi these are the Poisson components, and pattern "
                                        "frequencies are invariant under T_*.")
    m, K = ctx.machine, ctx.K
    spec = SushiSpec.of((1, {0, 1}), (2, {0}))
    window = ctx.interior(1)
    region = ctx.interior(1 + K)
    comps, seen, failures = component_intensities(SushiGenerator(m, spec, window), K, region, ctx.R, ctx.seed)
    expected = {(0, 1): Fraction(1), (0,): Fraction(2)}
    res.rows.append(_exact("reconstruct_failures", failures, 0, ctx.R))
    res.rows.append(_exact("spurious_patterns", len(seen - set(expected)), 0, ctx.R,
                           "patterns: " + " ".join("{" + ",".join(map(str, F)) + "}" for F in sorted(seen))))
    table_rows = []
    for c in comps:
        oracle = expected.get(c.pattern, Fraction(0))
        row = _agree(f"intensity[{{{','.join(map(str, c.pattern))}}}]", c.intensity, oracle, c.std_error, ctx.R)
        res.rows.append(row)
        table_rows.append({"pattern": "{" + ",".join(map(str, c.pattern)) + "}", "component_size": c.mean_size,
                           "intensity": c.intensity, "SE": c.std_error, "oracle": oracle,
                           "censored": c.censored, "verdict": row.verdict})
    for F in sorted(set(expected) - seen):
        res.rows.append(CheckRow(f"intensity[{F}]", 0, expected[F], "", False, ctx.R, "pattern never seen"))

    spec2 = SushiSpec.of((1, {0, 1}), (1, {0, 2}), (1, {0}))
    window2 = ctx.interior(2)
    region2 = ctx.interior(3 + K)
    for s in pattern_stationarity(SushiGenerator(m, spec2, window2), region2, K, ctx.R, ctx.seed):
        res.rows.append(_agree(f"stationarity[{{{','.join(map(str, s.pattern))}}}]", s.difference, 0,
                               s.std_error, ctx.R, f"counts {s.original:.4g} -> {s.shifted:.4g} under T_*"))
    res.tables["decomposition.csv"] = table_text(
        ("pattern", "component_size", "intensity", "SE", "oracle", "censored", "verdict"), table_rows)
    return res


def _covariance(x, y) -> tuple[float, float]:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return mean_and_se((x - x.mean()) * (y - y.mean()))


def exp_joining(ctx: Context) -> ExperimentResult:
    res = ExperimentResult("joining", "The Poisson joining built on sum_k a_k Delta_{T^k} has Poisson marginals "
                                      "and Cov(N1(A), N2(B)) = sum_k a_k mu(A & T^-k B).")
    m = ctx.machine
    window = ctx.interior(2)
    a_level = ctx.height // 2 - 5
    A = LevelBoxSet.levels(ctx.stage, [a_level])
    B = LevelBoxSet.levels(ctx.stage, [a_level + 1])
    boxes = ctx.thirds(window)
    table_rows = []
    cases = (("product", {}), ("graph", {0: 1}), ("mixed", {1: Fraction(1, 2)}))
    for case, weights in cases:
        jspec = JoiningSpec.of(weights)
        xs, ys, mismatches = [], [], 0
        sides = np.zeros((2, ctx.R, len(boxes)), dtype=np.int64)
        for r in range(ctx.R):
            n1, n2 = sample_poisson_joining(m, jspec, window, replicate_stream(ctx.seed, r))
            mismatches += n1.points != n2.points
            xs.append(count(m, n1, A))
            ys.append(count(m, n2, B))
            for side, cfg in enumerate((n1, n2)):
                sides[side, r] = [count(m, cfg, b) for b in boxes]
        cov, se = _covariance(xs, ys)
        oracle = joining_covariance(m, jspec, A, B)
        if case == "product":
            row = _corr("product_corr", correlation(xs, ys), ctx.R)
        elif case == "graph":
            row = _exact("graph_identical", mismatches, 0, ctx.R, "replicates with N1 != N2")
        else:
            row = _agree("mixed_covariance", cov, oracle, se, ctx.R)
        res.rows.append(row)
        for side in (0, 1):
            res.rows.extend(r for r in poisson_law_rows(ctx, f"{case}_N{side + 1}_", sides[side], boxes, 1)
                            if "corr" not in r.check)
        table_rows.append({"case": case, "A": describe_set(A), "B": describe_set(B), "covariance": cov,
                           "SE": se, "oracle": oracle, "verdict": row.verdict})
    res.tables["joining.csv"] = table_text(("case", "A", "B", "covariance", "SE", "oracle", "verdict"),
                                           table_rows)
    return res


def exp_universal(ctx: Context) -> ExperimentResult:
    res = ExperimentResult("universal", "Slices of the Poisson process on X x R+ (intensity mu x Lebesgue) along "
                                        "disjoint mark intervals are independent Poisson T-point processes.")
    m = ctx.machine
    window = ctx.window()
    boxes = ctx.thirds(window)
    intervals = [(0, 1), (1, 2)]
    tables = [np.zeros((ctx.R, len(boxes)), dtype=np.int64) for _ in intervals]
    summed, merged = [], []
    for r in range(ctx.R):
        stream = replicate_stream(ctx.seed, r)
        slices = universal_sample(m, intervals, ctx.alpha, window, child_stream(stream, 0))
        for t, s in zip(tables, slices):
            t[r] = [count(m, s, b) for b in boxes]
        summed.append(len(superpose(slices)))
        merged.append(len(universal_sample(m, [(0, 2)], ctx.alpha, window, child_stream(stream, 1))[0]))
    table_rows = []
    for i, t in enumerate(tables):
        rows = poisson_law_rows(ctx, f"slice{i}_", t, boxes, ctx.alpha)
        res.rows.extend(rows)
        for row in rows:
            table_rows.append({"slice": f"[{intervals[i][0]},{intervals[i][1]})", "check": row.check,
                               "value": row.estimate, "oracle": row.oracle, "verdict": row.verdict})
    for j, box in enumerate(boxes):
        res.rows.append(_corr(f"slices_corr[{describe_set(box)}]", correlation(tables[0][:, j], tables[1][:, j]),
                              ctx.R))
    res.rows.append(_pvalue("merged_vs_superposed", two_sample_chisquare(summed, merged), ctx.R,
                            "two-sample chi-square of window counts"))
    res.tables["universal.csv"] = table_text(("slice", "check", "value", "oracle", "verdict"), table_rows)
    return res


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    statement: str
    body: Callable[[Context], ExperimentResult]


CATALOG = {e.name: e for e in (
    Experiment("sample", "Poisson sampling law, SuShi intensity and engine exactness checks",
               "Poisson process: independent Poisson counts on disjoint sets", exp_sample),
    Experiment("moments", "Second/third moment oracles, diagonal weight and Cesaro shift correlations",
               "Poisson moment measures as partition sums", exp_moments),
    Experiment("freeness", "Shared-orbit detector on Poisson, empty and shifted-SuShi generators",
               "A Poisson T-point process is free", exp_freeness),
    Experiment("decompose", "Orbit-pattern decomposition of a SuShi and pattern stationarity",
               "Decomposition into free dissociated pattern components", exp_decompose),
    Experiment("joining", "Poisson joinings of graph mixtures: product, graph and mixed cases",
               "Poisson joining covariance sum_k a_k mu(A & T^-k B)", exp_joining),
    Experiment("universal", "Mark-interval slices of the marked Poisson suspension",
               "Slices of the X x R+ Poisson process are independent Poisson processes", exp_universal),
)}


def list_experiments() -> list[tuple[str, str, str]]:
    return [(e.name, e.description, e.statement) for e in CATALOG.values()]


def _stamp(config: ExperimentConfig) -> dict:
    return {"config": config.describe(), "sushilab": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def run(config: ExperimentConfig, write: bool = True) -> RunReport:
    names = EXPERIMENTS if config.experiment == "all" else (config.experiment,)
    start = time.perf_counter()
    ctx = Context(config)
    results = [CATALOG[name].body(ctx) for name in names]
    report = RunReport(config, results, _stamp(config), time.perf_counter() - start)
    if write:
        report.write(config.out)
    return report
