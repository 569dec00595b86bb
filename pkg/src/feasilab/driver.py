"""The general fixed-point loop: iterate an operator, monitor, stop, record.

The loop mirrors the usual pattern

    n = 0, monitor > tol
    while monitor > tol and n < n_max:
        u <- T u; update monitor

with two monitor choices: the norm of the difference of consecutive shadows
(``shadow``), or the absolute difference of consecutive gap values (``gap``).
The initial monitor is conceptually infinite, so the loop always runs at
least one iteration.  A non-finite iterate aborts the run with the
NUMERICAL_DIVERGENCE stop reason; the amplitude projector's division can
inject Inf under floating point and this guard keeps such runs inspectable.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .constraints import FeasibilityProblem, project_sym
from .fields import norm
from .metrics import gap as gap_fn
from .metrics import truth_error
from .operators import CyclicProjections, ProductRelaxedDR

__all__ = [
    "MONITOR_SHADOW",
    "MONITOR_GAP",
    "STOP_TOL",
    "STOP_NMAX",
    "STOP_DIVERGED",
    "StopRule",
    "TraceRow",
    "RunTrace",
    "ChainResult",
    "random_start",
    "run",
    "warm_start_chain",
]

MONITOR_SHADOW = "shadow"
MONITOR_GAP = "gap"

STOP_TOL = "TOL_REACHED"
STOP_NMAX = "N_MAX"
STOP_DIVERGED = "NUMERICAL_DIVERGENCE"


@dataclass(frozen=True)
class StopRule:
    """Tolerance, iteration cap, and which monitor the tolerance applies to."""

    tol: float
    n_max: int
    monitor: str = MONITOR_SHADOW

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.monitor not in (MONITOR_SHADOW, MONITOR_GAP):
            raise ValueError(f"unknown monitor kind {self.monitor!r}")


@dataclass(frozen=True)
class TraceRow:
    n: int
    monitor1: float
    monitor2: float
    gap: float
    error: float


@dataclass
class RunTrace:
    """Per-iteration monitor/gap/error rows plus the final state of a run."""

    rows: list
    final_state: np.ndarray
    final_shadow: np.ndarray
    final_gap: float
    final_gap_parts: tuple | None
    final_error: float
    stop_reason: str
    iterations_used: int
    wall_time: float
    monitor_kind: str
    shadows: list | None = field(default=None, repr=False)


@dataclass
class ChainResult:
    """Paired traces of a warm-start chain: cyclic projections, then product DR."""

    seed: int
    cp_trace: RunTrace
    dr_trace: RunTrace

    @property
    def cp_gap(self) -> float:
        return self.cp_trace.final_gap

    @property
    def dr_gap(self) -> float:
        return self.dr_trace.final_gap


def random_start(dims, seed: int, symmetrize: bool = False) -> np.ndarray:
    """Random complex field with i.i.d. standard normal real and imaginary parts."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(dims) + 1j * rng.standard_normal(dims)
    if symmetrize:
        u = project_sym(u)
    return u


def _finite(a: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(a)))


def run(op, problem: FeasibilityProblem, u0: np.ndarray, rule: StopRule, *,
        gap_stride: int = 1, keep_shadows: bool = False) -> RunTrace:
    """Iterate ``op`` from ``u0`` until the monitor drops to tol or n_max hits.

    ``u0`` is always a plain field; the operator lifts it to its own state
    space (replication onto the product space for the product DR).  Gap and
    error are computed every iteration by default; ``gap_stride`` thins them
    out for long runs (the gap monitor forces stride 1).  The returned trace
    always carries a freshly computed final gap and error.
    """
    u0 = np.asarray(u0, dtype=np.complex128)
    if u0.shape != problem.dims:
        raise ValueError(f"start shape {u0.shape} does not match problem dims {problem.dims}")
    if gap_stride < 1:
        raise ValueError("gap_stride must be at least 1")
    if rule.monitor == MONITOR_GAP:
        gap_stride = 1

    state = op.lift(u0)
    shadow_prev = op.shadow(state)
    gap_prev = gap_fn(shadow_prev, problem).total
    truth = problem.truth

    rows = []
    shadows = [shadow_prev] if keep_shadows else None
    stop_reason = STOP_NMAX
    n = 0
    t0 = time.perf_counter()
    for n in range(1, rule.n_max + 1):
        state = op.apply(state)
        if not _finite(state):
            rows.append(TraceRow(n, math.nan, math.nan, math.nan, math.nan))
            stop_reason = STOP_DIVERGED
            break
        sh = op.shadow(state)
        m1 = norm(sh - shadow_prev)
        if n % gap_stride == 0:
            g = gap_fn(sh, problem).total
            m2 = abs(g - gap_prev)
            gap_prev = g
        else:
            g = math.nan
            m2 = math.nan
        err = math.nan
        if truth is not None and not math.isnan(g):
            err = truth_error(sh, truth)
        rows.append(TraceRow(n, m1, m2, g, err))
        if keep_shadows:
            shadows.append(sh)
        shadow_prev = sh
        monitor_value = m1 if rule.monitor == MONITOR_SHADOW else m2
        if monitor_value <= rule.tol:
            stop_reason = STOP_TOL
            break
    wall = time.perf_counter() - t0

    if stop_reason == STOP_DIVERGED:
        final_shadow = op.shadow(state)
        final_gap = math.nan
        final_parts = None
        final_err = math.nan
    else:
        final_shadow = shadow_prev
        breakdown = gap_fn(final_shadow, problem)
        final_gap = breakdown.total
        final_parts = breakdown.parts
        final_err = truth_error(final_shadow, truth) if truth is not None else math.nan

    return RunTrace(
        rows=rows,
        final_state=state,
        final_shadow=final_shadow,
        final_gap=final_gap,
        final_gap_parts=final_parts,
        final_error=final_err,
        stop_reason=stop_reason,
        iterations_used=n,
        wall_time=wall,
        monitor_kind=rule.monitor,
        shadows=shadows,
    )


def warm_start_chain(problem: FeasibilityProblem, rule_cp: StopRule,
                     rule_dr: StopRule, lam: float, seeds, *,
                     symmetrize_start: bool = False, gap_stride: int = 1,
                     diagonal_variant: str = "standard") -> list:
    """Run cyclic projections per seed, then product DR from each CP endpoint.

    The CP final iterate (a plain field) is lifted by replication to start the
    product-space run, pairing each seed's two traces for comparison.
    """
    cp_op = CyclicProjections(problem.sets)
    dr_op = ProductRelaxedDR(problem.sets, lam, diagonal_variant)
    results = []
    for seed in seeds:
        u0 = random_start(problem.dims, seed, symmetrize=symmetrize_start)
        cp_trace = run(cp_op, problem, u0, rule_cp, gap_stride=gap_stride)
        dr_trace = run(dr_op, problem, cp_trace.final_state, rule_dr,
                       gap_stride=gap_stride)
        results.append(ChainResult(int(seed), cp_trace, dr_trace))
    return results
