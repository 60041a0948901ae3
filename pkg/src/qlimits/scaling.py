"""Experiment harness: excess-risk sweeps, power-law fits, runtime benchmarks.

Sweeps evaluate a solver over a grid of training sizes, many seeded trials
per size, and aggregate excess risk by median and interquartile range.
All per-cell randomness is derived from the master seed and the cell's
(n, trial) coordinates, so results are bit-identical across reruns and
independent of serial vs parallel execution. Paired experiments (noisy vs
exact solver) share dataset, evaluation, and noise-direction streams per
cell so that ratios isolate the injected error.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field, replace

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None

from .errors import ConfigError, QlimitsError
from .qmodel import NoiseModel, quantum_ls_pipeline
from .risk import expected_risk_mc
from .rng import derive_seed
from .solvers import (
    LINEAR_KERNEL,
    Kernel,
    SolverConfig,
    divide_and_conquer,
    early_stopping_gd,
    exact_ls,
    krr,
    nystrom,
    predict_batch,
)
from .synth import SyntheticProblem, make_problem, sample_dataset

SOLVER_IDS = ("exact_ls", "krr", "early_stopping_gd", "divide_and_conquer", "nystrom")

GAMMA_RULE_KINDS = ("constant", "matched")
M_RULE_KINDS = ("fixed", "sqrt_n", "fourth_root_n", "linear_n")

# Acceptance thresholds shared by the CLI summaries and the test suite.
RATE_EXPONENT_RANGE = (-0.8, -0.3)
RATE_R2_MIN = 0.9
MATCHED_RATIO_MAX = 2.0
CONSTANT_RATIO_MIN = 5.0
BUDGET_RATIO_MAX = 2.0
DEGRADED_EXPONENT_MIN = -0.35
KRR_TRAIN_EXPONENT_RANGE = (2.3, 3.5)
NYSTROM_EXPONENT_GAP_MIN = 0.7
PRIMAL_TEST_EXPONENT_RANGE = (-0.2, 0.2)

SCHEMA_VERSION = 1
DESK_SCALE_CAP = 8192


@dataclass(frozen=True)
class ProblemSpec:
    """Recipe for a synthetic problem (kept JSON-friendly for configs)."""

    dimension: int = 10
    noise_std: float = 0.5
    input_law: str = "unit_sphere_uniform"
    seed: int = 0

    def build(self) -> SyntheticProblem:
        return make_problem(self.dimension, self.noise_std, self.input_law, self.seed)


@dataclass(frozen=True)
class NoiseSchedule:
    """How the noise model scales with the training size n.

    gamma rules: ``constant`` uses gamma_value directly; ``matched`` uses
    gamma_value * n^(-1/2). m rules: ``fixed`` (m_value), ``sqrt_n``
    (ceil(sqrt(n))), ``fourth_root_n`` (ceil(n^(1/4))), ``linear_n`` (n).
    """

    regime: str = "exact"
    gamma_kind: str = "constant"
    gamma_value: float = 0.0
    m_kind: str = "fixed"
    m_value: int = 1
    precision_scale: float = 1.0

    def __post_init__(self):
        if self.gamma_kind not in GAMMA_RULE_KINDS:
            raise ConfigError(f"unknown gamma rule {self.gamma_kind!r}")
        if self.m_kind not in M_RULE_KINDS:
            raise ConfigError(f"unknown m rule {self.m_kind!r}")
        if not (np.isfinite(self.gamma_value) and self.gamma_value >= 0):
            raise ConfigError(f"gamma_value must be >= 0, got {self.gamma_value}")
        if self.m_value < 1:
            raise ConfigError(f"m_value must be >= 1, got {self.m_value}")

    def gamma_at(self, n: int) -> float:
        if self.gamma_kind == "constant":
            return self.gamma_value
        return self.gamma_value * float(n) ** -0.5

    def m_at(self, n: int) -> int:
        if self.m_kind == "fixed":
            return self.m_value
        if self.m_kind == "sqrt_n":
            return math.isqrt(n - 1) + 1
        if self.m_kind == "fourth_root_n":
            return math.isqrt(math.isqrt(n - 1)) + 1 if n > 1 else 1
        return n

    def noise_for(self, n: int, seed: int) -> NoiseModel:
        return NoiseModel(
            solver_error=self.gamma_at(n),
            regime=self.regime,
            measurements=self.m_at(n),
            precision_scale=self.precision_scale,
            seed=seed,
        )


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one excess-risk sweep."""

    n_grid: tuple[int, ...]
    trials: int = 20
    solver: str = "exact_ls"
    solver_config: SolverConfig = field(default_factory=SolverConfig)
    kernel: Kernel = LINEAR_KERNEL
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    noise: NoiseSchedule | None = None
    n_eval: int = 100_000
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) < 3:
            raise ConfigError(f"n_grid needs at least 3 sizes, got {len(grid)}")
        if any(n < 1 for n in grid):
            raise ConfigError("n_grid entries must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"n_grid must be strictly increasing, got {grid}")
        object.__setattr__(self, "n_grid", grid)
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.solver not in SOLVER_IDS:
            raise ConfigError(f"unknown solver {self.solver!r}, expected one of {SOLVER_IDS}")
        if self.n_eval < 2:
            raise ConfigError(f"n_eval must be >= 2, got {self.n_eval}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.noise is not None and self.solver != "exact_ls":
            raise ConfigError("the noisy pipeline composes with exact_ls only")


@dataclass(frozen=True)
class SweepRow:
    n: int
    median_excess: float
    iqr_excess: float
    median_std_error: float
    trials_ok: int
    trials_failed: int


@dataclass(frozen=True)
class SweepTable:
    label: str
    rows: tuple[SweepRow, ...]

    def medians(self) -> list[tuple[int, float]]:
        return [(r.n, r.median_excess) for r in self.rows if r.trials_ok > 0]


def _fit_predictor(config: SweepConfig, dataset, noise_model: NoiseModel | None):
    cfg = config.solver_config
    if noise_model is not None:
        return quantum_ls_pipeline(dataset, cfg.lam, noise_model)
    if config.solver == "exact_ls":
        return exact_ls(dataset, cfg.lam)
    if config.solver == "krr":
        return krr(dataset, config.kernel, cfg.lam)
    if config.solver == "early_stopping_gd":
        return early_stopping_gd(dataset, config.kernel, cfg)
    if config.solver == "divide_and_conquer":
        return divide_and_conquer(dataset, config.kernel, cfg)
    return nystrom(dataset, config.kernel, cfg)


def _sweep_cell(task: tuple[SweepConfig, int, int]):
    """One (n, trial) cell; returns (ok, excess, std_error, message)."""
    config, n, trial = task
    try:
        problem = config.problem.build()
        dataset = sample_dataset(
            problem, n, derive_seed(config.master_seed, "data", n, trial)
        )
        noise_model = None
        if config.noise is not None:
            noise_model = config.noise.noise_for(
                n, seed=derive_seed(config.master_seed, "noise", n, trial)
            )
        predictor = _fit_predictor(config, dataset, noise_model)
        estimate = expected_risk_mc(
            predictor, problem, config.n_eval,
            seed=derive_seed(config.master_seed, "eval", n, trial),
        )
        return True, estimate.value - problem.bayes_risk, estimate.std_error, ""
    except QlimitsError as exc:
        return False, float("nan"), float("nan"), f"{type(exc).__name__}: {exc}"


def sweep_excess_risk(config: SweepConfig, label: str = "sweep") -> SweepTable:
    """Median/IQR excess risk per grid size; failed cells flagged, not fatal."""
    tasks = [(config, n, t) for n in config.n_grid for t in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_sweep_cell, tasks, chunksize=4))
    else:
        outcomes = [_sweep_cell(t) for t in tasks]

    rows = []
    per_n = {n: [] for n in config.n_grid}
    for (_, n, _t), outcome in zip(tasks, outcomes):
        per_n[n].append(outcome)
    for n in config.n_grid:
        ok = [(v, se) for good, v, se, _ in per_n[n] if good]
        failed = config.trials - len(ok)
        if ok:
            values = np.array([v for v, _ in ok])
            errors = np.array([se for _, se in ok])
            rows.append(
                SweepRow(
                    n=n,
                    median_excess=float(np.median(values)),
                    iqr_excess=float(np.percentile(values, 75) - np.percentile(values, 25)),
                    median_std_error=float(np.median(errors)),
                    trials_ok=len(ok),
                    trials_failed=failed,
                )
            )
        else:
            rows.append(SweepRow(n, float("nan"), float("nan"), float("nan"), 0, failed))
    return SweepTable(label=label, rows=tuple(rows))


# ---------------------------------------------------------------------------
# power-law fitting

@dataclass(frozen=True)
class ScalingFit:
    """OLS fit of log2(value) against log2(n)."""

    exponent: float
    intercept: float
    r_squared: float
    stderr_exponent: float

    def to_json(self) -> dict:
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "stderr_exponent": self.stderr_exponent,
        }


def fit_scaling(pairs) -> ScalingFit:
    """Fit value ~ n^exponent by ordinary least squares on log-log pairs."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ConfigError(f"fit needs >= 3 (n, value) pairs, got {len(pairs)}")
    for n, v in pairs:
        if not (np.isfinite(v) and v > 0):
            raise ConfigError(f"fit requires positive finite values; got {v} at n={n}")
    x = np.log2([float(n) for n, _ in pairs])
    y = np.log2([float(v) for _, v in pairs])
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx <= 0:
        raise ConfigError("fit requires at least two distinct n values")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    # constant inputs only vary by float jitter; that is a perfect flat fit
    noise_floor = len(pairs) * (1e-12 * max(1.0, float(np.max(np.abs(y))))) ** 2
    if ss_tot <= noise_floor:
        r_squared = 1.0 if ss_res <= noise_floor else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    dof = len(pairs) - 2
    stderr = float(np.sqrt(ss_res / dof / sxx)) if dof > 0 else 0.0
    return ScalingFit(
        exponent=slope, intercept=intercept, r_squared=r_squared, stderr_exponent=stderr
    )


# ---------------------------------------------------------------------------
# paired experiments

def _ratio(noisy: float, exact: float) -> float:
    if noisy == exact:
        return 1.0  # covers the degenerate zero-injection arm exactly
    return noisy / exact


@dataclass(frozen=True)
class MatchingReport:
    """Excess risk of gamma-matched and constant-gamma pipelines vs exact."""

    exact: SweepTable
    matched: SweepTable
    constant: SweepTable
    matched_c0: float
    constant_gamma: float

    def arm_tables(self) -> dict[str, SweepTable]:
        return {"exact": self.exact, "matched": self.matched, "constant": self.constant}

    def ratios(self, arm: str) -> list[tuple[int, float]]:
        table = self.arm_tables()[arm]
        return [
            (er.n, _ratio(ar.median_excess, er.median_excess))
            for er, ar in zip(self.exact.rows, table.rows)
        ]


def matching_experiment(
    config: SweepConfig, matched_c0: float = 0.1, constant_gamma: float = 0.3
) -> MatchingReport:
    """Paired sweeps: exact solve vs solver-error schedules gamma = c0 * n^(-1/2)
    and gamma = constant, all sharing per-cell data/eval/direction streams."""
    base = replace(config, noise=None, solver="exact_ls")
    matched_schedule = NoiseSchedule(
        regime="exact", gamma_kind="matched", gamma_value=matched_c0
    )
    constant_schedule = NoiseSchedule(
        regime="exact", gamma_kind="constant", gamma_value=constant_gamma
    )
    return MatchingReport(
        exact=sweep_excess_risk(base, "exact"),
        matched=sweep_excess_risk(replace(base, noise=matched_schedule), "matched"),
        constant=sweep_excess_risk(replace(base, noise=constant_schedule), "constant"),
        matched_c0=matched_c0,
        constant_gamma=constant_gamma,
    )


@dataclass(frozen=True)
class MeasurementReport:
    """Excess risk under measurement budgets m(n) vs the exact solve."""

    exact: SweepTable
    budget: SweepTable
    degraded: SweepTable
    regime: str

    def arm_tables(self) -> dict[str, SweepTable]:
        return {"exact": self.exact, "budget": self.budget, "degraded": self.degraded}

    def ratios(self, arm: str) -> list[tuple[int, float]]:
        table = self.arm_tables()[arm]
        return [
            (er.n, _ratio(ar.median_excess, er.median_excess))
            for er, ar in zip(self.exact.rows, table.rows)
        ]

    def arm_fit(self, arm: str) -> ScalingFit:
        return fit_scaling(self.arm_tables()[arm].medians())


def measurement_experiment(
    config: SweepConfig,
    regime: str = "heisenberg",
    budget_rule: str = "sqrt_n",
    degraded_rule: str = "fourth_root_n",
) -> MeasurementReport:
    """Paired sweeps: exact solve vs tomography readout with m set by two rules."""
    if regime not in ("heisenberg", "shot_noise"):
        raise ConfigError(f"measurement experiment needs a noisy regime, got {regime!r}")
    base = replace(config, noise=None, solver="exact_ls")
    budget = NoiseSchedule(regime=regime, gamma_kind="constant", gamma_value=0.0, m_kind=budget_rule)
    degraded = NoiseSchedule(
        regime=regime, gamma_kind="constant", gamma_value=0.0, m_kind=degraded_rule
    )
    return MeasurementReport(
        exact=sweep_excess_risk(base, "exact"),
        budget=sweep_excess_risk(replace(base, noise=budget), f"m_{budget_rule}"),
        degraded=sweep_excess_risk(replace(base, noise=degraded), f"m_{degraded_rule}"),
        regime=regime,
    )


# ---------------------------------------------------------------------------
# wall-clock benchmark

@dataclass(frozen=True)
class BenchRow:
    solver: str
    n: int
    train_seconds: float
    test_seconds_per_point: float
    timed_out: bool


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    train_fits: dict
    test_fits: dict
    reps: int

    @property
    def any_timed_out(self) -> bool:
        return any(r.timed_out for r in self.rows)


BENCH_TIMER_WINDOW = 0.2  # seconds; long enough to average over scheduler bursts


def _timed_call(fn, min_time: float = BENCH_TIMER_WINDOW):
    """One timing sample: loop the call until the window reaches min_time.

    Short calls are averaged over a geometrically grown loop count so that a
    single sample spans at least ``min_time`` of wall clock, which smooths
    out scheduler and throttling noise on small inputs.
    """
    loops = 1
    while True:
        start = time.perf_counter()
        for _ in range(loops):
            result = fn()
        elapsed = time.perf_counter() - start
        if elapsed >= min_time or loops >= 1024:
            return elapsed / loops, result
        per_call = max(elapsed / loops, 1e-9)
        loops = min(1024, max(loops * 2, int(min_time / per_call) + 1))


def runtime_benchmark(
    solver_ids=("exact_ls", "krr", "nystrom"),
    n_grid=(256, 512, 1024, 2048, 4096),
    reps: int = 5,
    dimension: int = 10,
    noise_std: float = 0.5,
    kernel: Kernel = LINEAR_KERNEL,
    test_points: int = 1000,
    timeout_s: float = 120.0,
    master_seed: int = 0,
    lam: float | None = None,
    timer_window: float = BENCH_TIMER_WINDOW,
) -> BenchReport:
    """Median wall-clock train/test times and fitted growth exponents.

    Runs strictly serially in a single execution lane: one cell at a time,
    with BLAS thread pools pinned to one thread, so timings are not skewed
    by contention or thread spin-up. The per-cell timeout is enforced
    between repetitions, not preemptively: a cell whose budget is exhausted
    is flagged and excluded from the fits.
    """
    ids = tuple(solver_ids)
    for sid in ids:
        if sid not in SOLVER_IDS:
            raise ConfigError(f"unknown solver {sid!r}, expected one of {SOLVER_IDS}")
    grid = tuple(int(n) for n in n_grid)
    if len(grid) < 3 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"n_grid must be >= 3 strictly increasing sizes, got {grid}")
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    problem = make_problem(dimension, noise_std, seed=master_seed)
    test_x = sample_dataset(
        problem, test_points, derive_seed(master_seed, "bench-test")
    ).features

    def make_fit(sid, dataset):
        cfg = SolverConfig(lam=lam)
        if sid == "exact_ls":
            return lambda: exact_ls(dataset, cfg.lam)
        if sid == "krr":
            return lambda: krr(dataset, kernel, cfg.lam)
        if sid == "early_stopping_gd":
            return lambda: early_stopping_gd(dataset, kernel, cfg)
        if sid == "divide_and_conquer":
            return lambda: divide_and_conquer(dataset, kernel, cfg)
        return lambda: nystrom(dataset, kernel, cfg)

    rows = []
    single_lane = threadpool_limits(limits=1) if threadpool_limits is not None else nullcontext()
    with single_lane:
        for sid in ids:
            for n in grid:
                rows.append(
                    _bench_cell(sid, n, make_fit, problem, test_x, reps, timeout_s,
                                master_seed, test_points, timer_window)
                )

    train_fits, test_fits = {}, {}
    for sid in ids:
        good = [r for r in rows if r.solver == sid and not r.timed_out]
        if len(good) >= 3:
            train_fits[sid] = fit_scaling([(r.n, r.train_seconds) for r in good])
            test_fits[sid] = fit_scaling([(r.n, r.test_seconds_per_point) for r in good])
    return BenchReport(rows=tuple(rows), train_fits=train_fits, test_fits=test_fits, reps=reps)


def _bench_cell(sid, n, make_fit, problem, test_x, reps, timeout_s, master_seed,
                test_points, timer_window) -> BenchRow:
    dataset = sample_dataset(problem, n, derive_seed(master_seed, "bench-data", n))
    fit_fn = make_fit(sid, dataset)
    cell_start = time.perf_counter()
    try:
        _, predictor = _timed_call(fit_fn, timer_window)  # warm-up, discarded
    except QlimitsError:
        return BenchRow(sid, n, float("nan"), float("nan"), True)
    train_times, timed_out = [], False
    for _ in range(reps):
        if time.perf_counter() - cell_start > timeout_s:
            timed_out = True
            break
        elapsed, predictor = _timed_call(fit_fn, timer_window)
        train_times.append(elapsed)
    if timed_out or not train_times:
        return BenchRow(sid, n, float("nan"), float("nan"), True)
    test_times = []
    for _ in range(reps):
        elapsed, _ = _timed_call(lambda: predict_batch(predictor, test_x), timer_window)
        test_times.append(elapsed)
    return BenchRow(
        solver=sid,
        n=n,
        train_seconds=float(np.median(train_times)),
        test_seconds_per_point=float(np.median(test_times)) / test_points,
        timed_out=False,
    )


# ---------------------------------------------------------------------------
# summaries against the pinned thresholds

def rate_summary(table: SweepTable) -> dict:
    fit = fit_scaling(table.medians())
    lo, hi = RATE_EXPONENT_RANGE
    return {
        "fit": fit.to_json(),
        "rate_ok": bool(lo <= fit.exponent <= hi and fit.r_squared >= RATE_R2_MIN),
        "exponent_range": [lo, hi],
        "r_squared_min": RATE_R2_MIN,
        "failed_cells": int(sum(r.trials_failed for r in table.rows)),
    }


def matching_summary(report: MatchingReport) -> dict:
    matched = report.ratios("matched")
    constant = report.ratios("constant")
    return {
        "matched_c0": report.matched_c0,
        "constant_gamma": report.constant_gamma,
        "max_ratio_matched": max(r for _, r in matched),
        "ratio_constant_at_n_max": constant[-1][1],
        "matched_ok": bool(all(r <= MATCHED_RATIO_MAX for _, r in matched)),
        "constant_ok": bool(constant[-1][1] >= CONSTANT_RATIO_MIN),
        "matched_ratio_max": MATCHED_RATIO_MAX,
        "constant_ratio_min": CONSTANT_RATIO_MIN,
    }


def measurement_summary(report: MeasurementReport) -> dict:
    budget = report.ratios("budget")
    degraded_fit = report.arm_fit("degraded")
    return {
        "regime": report.regime,
        "max_ratio_budget": max(r for _, r in budget),
        "degraded_exponent": degraded_fit.exponent,
        "budget_ok": bool(all(r <= BUDGET_RATIO_MAX for _, r in budget)),
        "degraded_ok": bool(degraded_fit.exponent >= DEGRADED_EXPONENT_MIN),
        "budget_ratio_max": BUDGET_RATIO_MAX,
        "degraded_exponent_min": DEGRADED_EXPONENT_MIN,
    }


def bench_summary(report: BenchReport) -> dict:
    train = {sid: fit.exponent for sid, fit in report.train_fits.items()}
    test = {sid: fit.exponent for sid, fit in report.test_fits.items()}
    out = {
        "train_exponents": train,
        "test_exponents": test,
        "timed_out": report.any_timed_out,
    }
    if "krr" in train:
        lo, hi = KRR_TRAIN_EXPONENT_RANGE
        out["krr_train_ok"] = bool(lo <= train["krr"] <= hi)
    if "krr" in train and "nystrom" in train:
        out["nystrom_gap"] = train["krr"] - train["nystrom"]
        out["nystrom_gap_ok"] = bool(out["nystrom_gap"] >= NYSTROM_EXPONENT_GAP_MIN)
    if "exact_ls" in test:
        lo, hi = PRIMAL_TEST_EXPONENT_RANGE
        out["primal_test_ok"] = bool(lo <= test["exact_ls"] <= hi)
    return out


# ---------------------------------------------------------------------------
# report files

def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def sweep_csv_rows(tables) -> list[tuple]:
    rows = []
    for table in tables:
        for r in table.rows:
            rows.append((table.label, r.n, "median_excess_risk", r.median_excess))
            rows.append((table.label, r.n, "iqr_excess_risk", r.iqr_excess))
            rows.append((table.label, r.n, "median_std_error", r.median_std_error))
            rows.append((table.label, r.n, "trials_ok", r.trials_ok))
            rows.append((table.label, r.n, "trials_failed", r.trials_failed))
    return rows


def write_sweep_csv(path, tables) -> None:
    write_csv(path, ("solver", "n", "statistic", "value"), sweep_csv_rows(tables))


def bench_csv_rows(report: BenchReport) -> list[tuple]:
    rows = []
    for r in report.rows:
        rows.append((r.solver, r.n, "train_seconds", r.train_seconds))
        rows.append((r.solver, r.n, "test_seconds_per_point", r.test_seconds_per_point))
        rows.append((r.solver, r.n, "timed_out", r.timed_out))
    return rows


def write_bench_csv(path, report: BenchReport) -> None:
    write_csv(path, ("solver", "n", "statistic", "value"), bench_csv_rows(report))
