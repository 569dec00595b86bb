"""Batch experiment harness: random-restart campaigns over one instance,
warm-start chains, 1D gap clustering, and CSV/JSON table emission.

Every algorithm in a campaign sees the same list of seeds, hence the same
starting fields, so per-seed comparisons across algorithms are paired.  Cells
(algorithm x seed) are independent; with ``jobs > 1`` they run on a thread
pool and results are re-sorted into deterministic order, so serial and
parallel campaigns emit identical files.
"""

import csv
import hashlib
import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .driver import (
    MONITOR_SHADOW,
    StopRule,
    random_start,
    run,
    warm_start_chain,
)
from .instances import ProblemInstance, load_instance
from .operators import make_operator

__all__ = [
    "AlgoSpec",
    "CampaignConfig",
    "RunRecord",
    "AlgoStats",
    "ClusterResult",
    "CampaignSummary",
    "run_campaign",
    "run_chain_campaign",
    "cluster_gaps",
    "spearman",
    "emit_tables",
    "emit_chain_table",
]

TRACES_HEADER = ["run_id", "algo", "lambda", "n", "monitor1", "monitor2", "gap", "error"]
FINALS_HEADER = ["run_id", "algo", "lambda", "final_gap", "final_error", "iters",
                 "stop_reason", "cluster"]
CHAIN_HEADER = ["seed", "cp_gap", "dr_gap"]


@dataclass(frozen=True)
class AlgoSpec:
    """One algorithm column of a campaign: operator kind, lambda, stop rule."""

    kind: str
    rule: StopRule
    lam: float = 0.5
    diagonal_variant: str = "standard"
    gap_stride: int = 1
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("cp", "cdrl", "drl", "identity"):
            raise ValueError(f"unknown algorithm kind {self.kind!r}")
        if not self.label:
            name = self.kind if self.kind in ("cp", "identity") else f"{self.kind}{self.lam:g}"
            object.__setattr__(self, "label", name)


@dataclass(frozen=True)
class CampaignConfig:
    """A batch of (algorithm, seed) cells over one problem instance."""

    instance_path: str
    algorithms: tuple
    n_restarts: int
    base_seed: int = 0
    cluster_k: int = 8
    out_dir: str | None = None
    jobs: int = 1
    symmetrize_start: bool = False

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be at least 1")
        if self.cluster_k < 1:
            raise ValueError("cluster count must be at least 1")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise ValueError("algorithm labels must be unique")

    @property
    def seeds(self) -> list:
        return [self.base_seed + i for i in range(self.n_restarts)]


@dataclass
class RunRecord:
    run_id: str
    algo: str
    kind: str
    lam: float
    seed: int
    final_gap: float
    final_error: float
    iterations: int
    stop_reason: str
    u0_hash: str
    cluster: int = -1
    trace: object = field(default=None, repr=False)


@dataclass
class AlgoStats:
    label: str
    kind: str
    lam: float
    n_runs: int
    gap_median: float
    gap_mean: float
    gap_var: float
    gap_min: float
    gap_max: float
    iters_mean: float
    best_cluster_rate: float
    spearman_gap_error: float
    n_diverged: int
    histogram: list


@dataclass
class ClusterResult:
    labels: np.ndarray
    counts: np.ndarray
    centers: np.ndarray


@dataclass
class CampaignSummary:
    records: list
    per_algo: dict
    cluster_centers: list
    cluster_k: int

    def to_dict(self) -> dict:
        return {
            "cluster_k": self.cluster_k,
            "cluster_centers": self.cluster_centers,
            "per_algo": {
                label: {
                    "kind": s.kind,
                    "lambda": s.lam,
                    "n_runs": s.n_runs,
                    "gap_median": _jsonf(s.gap_median),
                    "gap_mean": _jsonf(s.gap_mean),
                    "gap_var": _jsonf(s.gap_var),
                    "gap_min": _jsonf(s.gap_min),
                    "gap_max": _jsonf(s.gap_max),
                    "iters_mean": _jsonf(s.iters_mean),
                    "best_cluster_rate": _jsonf(s.best_cluster_rate),
                    "spearman_gap_error": _jsonf(s.spearman_gap_error),
                    "n_diverged": s.n_diverged,
                    "histogram": s.histogram,
                }
                for label, s in self.per_algo.items()
            },
            "runs": [
                {
                    "run_id": r.run_id,
                    "algo": r.algo,
                    "lambda": r.lam,
                    "seed": r.seed,
                    "final_gap": _jsonf(r.final_gap),
                    "final_error": _jsonf(r.final_error),
                    "iters": r.iterations,
                    "stop_reason": r.stop_reason,
                    "cluster": r.cluster,
                    "u0_hash": r.u0_hash,
                }
                for r in self.records
            ],
        }


def _jsonf(x: float):
    """JSON has no NaN/Inf literal; map them to null."""
    x = float(x)
    return x if math.isfinite(x) else None


def _hash_bytes(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()


def _run_cell(problem, algo: AlgoSpec, seed: int, symmetrize: bool) -> RunRecord:
    u0 = random_start(problem.dims, seed, symmetrize=symmetrize)
    op = make_operator(algo.kind, problem.sets, algo.lam, algo.diagonal_variant)
    trace = run(op, problem, u0, algo.rule, gap_stride=algo.gap_stride)
    return RunRecord(
        run_id=f"{algo.label}_{seed:06d}",
        algo=algo.label,
        kind=algo.kind,
        lam=algo.lam,
        seed=seed,
        final_gap=trace.final_gap,
        final_error=trace.final_error,
        iterations=trace.iterations_used,
        stop_reason=trace.stop_reason,
        u0_hash=_hash_bytes(u0),
        trace=trace,
    )


def run_campaign(cfg: CampaignConfig, instance: ProblemInstance | None = None,
                 keep_traces: bool = True) -> CampaignSummary:
    """Execute every (algorithm, seed) cell and aggregate the results.

    Divergent runs are recorded with NaN gap and excluded from clustering
    and statistics; only configuration and I/O problems abort a campaign.
    """
    if instance is None:
        instance = load_instance(cfg.instance_path)
    problem = instance.problem()
    cells = [(algo, seed) for algo in cfg.algorithms for seed in cfg.seeds]

    def cell(args):
        algo, seed = args
        return _run_cell(problem, algo, seed, cfg.symmetrize_start)

    if cfg.jobs == 1:
        records = [cell(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(cell, cells))

    gaps = np.array([r.final_gap for r in records], dtype=float)
    finite = np.isfinite(gaps)
    clusters = cluster_gaps(gaps[finite], cfg.cluster_k)
    labels_all = np.full(len(records), -1, dtype=int)
    labels_all[finite] = clusters.labels
    for r, lab in zip(records, labels_all):
        r.cluster = int(lab)

    per_algo = {}
    for algo in cfg.algorithms:
        rs = [r for r in records if r.algo == algo.label]
        per_algo[algo.label] = _algo_stats(algo, rs, cfg.cluster_k)

    if not keep_traces:
        for r in records:
            r.trace = None

    summary = CampaignSummary(
        records=records,
        per_algo=per_algo,
        cluster_centers=[float(c) for c in clusters.centers],
        cluster_k=cfg.cluster_k,
    )
    if cfg.out_dir is not None:
        emit_tables(summary, cfg.out_dir)
    return summary


def _algo_stats(algo: AlgoSpec, rs: list, k: int) -> AlgoStats:
    ok = [r for r in rs if math.isfinite(r.final_gap)]
    gaps = [r.final_gap for r in ok]
    errors = [r.final_error for r in ok]
    hist = [0] * k
    for r in ok:
        if 0 <= r.cluster < k:
            hist[r.cluster] += 1
    if gaps:
        stats = AlgoStats(
            label=algo.label,
            kind=algo.kind,
            lam=algo.lam,
            n_runs=len(rs),
            gap_median=statistics.median(gaps),
            gap_mean=statistics.fmean(gaps),
            gap_var=statistics.pvariance(gaps) if len(gaps) > 1 else 0.0,
            gap_min=min(gaps),
            gap_max=max(gaps),
            iters_mean=statistics.fmean(r.iterations for r in ok),
            best_cluster_rate=hist[0] / len(ok),
            spearman_gap_error=spearman(gaps, errors),
            n_diverged=len(rs) - len(ok),
            histogram=hist,
        )
    else:
        nan = math.nan
        stats = AlgoStats(algo.label, algo.kind, algo.lam, len(rs), nan, nan, nan,
                          nan, nan, nan, nan, nan, len(rs), hist)
    return stats


def run_chain_campaign(instance, lam: float, rule_cp: StopRule,
                       rule_dr: StopRule, n_restarts: int, base_seed: int = 0, *,
                       out_dir: str | None = None, symmetrize_start: bool = False,
                       gap_stride: int = 1) -> list:
    """Warm-start chain over a seed list; optionally emit chain.csv + summary.

    ``instance`` may be a ProblemInstance or a bare FeasibilityProblem.
    """
    problem = instance.problem() if isinstance(instance, ProblemInstance) else instance
    seeds = [base_seed + i for i in range(n_restarts)]
    results = warm_start_chain(problem, rule_cp, rule_dr, lam, seeds,
                               symmetrize_start=symmetrize_start,
                               gap_stride=gap_stride)
    if out_dir is not None:
        emit_chain_table(results, out_dir, lam=lam)
    return results


# ---------------------------------------------------------------------------
# gap clustering
# ---------------------------------------------------------------------------


def cluster_gaps(gaps, k: int) -> ClusterResult:
    """1D k-means over final gap values, deterministic by construction.

    Centers start at the sorted-data quantile midpoints and Lloyd iterations
    run to a fixed point; ties in assignment go to the lower-index center.
    Clusters are relabeled in ascending center order, so cluster 0 is the
    smallest-gap ("best") cluster.  With fewer distinct values than k some
    clusters come out empty; they keep their centers and zero counts.
    """
    if k < 1:
        raise ValueError("cluster count must be at least 1")
    g = np.asarray(gaps, dtype=float)
    if g.ndim != 1:
        raise ValueError("gaps must be a flat list")
    if np.any(~np.isfinite(g)):
        raise ValueError("gaps must be finite; filter divergent runs first")
    if g.size == 0:
        return ClusterResult(labels=np.zeros(0, dtype=int),
                             counts=np.zeros(k, dtype=int),
                             centers=np.zeros(k))

    s = np.sort(g)
    centers = np.array([s[min(int((i + 0.5) / k * s.size), s.size - 1)] for i in range(k)])
    labels = np.zeros(g.size, dtype=int)
    for _ in range(200):
        dist = np.abs(g[:, None] - centers[None, :])
        new_labels = np.argmin(dist, axis=1)
        for c in range(k):
            sel = new_labels == c
            if np.any(sel):
                centers[c] = g[sel].mean()
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

    order = np.argsort(centers, kind="stable")
    remap = np.empty(k, dtype=int)
    remap[order] = np.arange(k)
    labels = remap[labels]
    centers = centers[order]
    counts = np.bincount(labels, minlength=k)
    return ClusterResult(labels=labels, counts=counts, centers=centers)


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size < 2:
        return math.nan
    rx = _avg_ranks(x)
    ry = _avg_ranks(y)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    denom = math.sqrt(float(sx @ sx) * float(sy @ sy))
    if denom == 0.0:
        return math.nan
    return float(sx @ sy) / denom


def _avg_ranks(a: np.ndarray) -> np.ndarray:
    order = np.argsort(a, kind="stable")
    s = a[order]
    ranks = np.empty(a.size, dtype=float)
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and s[j + 1] == s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


# ---------------------------------------------------------------------------
# table emission
# ---------------------------------------------------------------------------


def _cell(x) -> str:
    """CSV cell: shortest-roundtrip decimal, empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_tables(summary: CampaignSummary, out_dir) -> None:
    """Write traces.csv, finals.csv and summary.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "traces.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(TRACES_HEADER)
        for r in summary.records:
            if r.trace is None:
                continue
            for row in r.trace.rows:
                w.writerow([r.run_id, r.algo, _cell(r.lam), row.n,
                            _cell(row.monitor1), _cell(row.monitor2),
                            _cell(row.gap), _cell(row.error)])

    with open(out / "finals.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(FINALS_HEADER)
        for r in summary.records:
            w.writerow([r.run_id, r.algo, _cell(r.lam), _cell(r.final_gap),
                        _cell(r.final_error), r.iterations, r.stop_reason,
                        r.cluster])

    with open(out / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def emit_chain_table(results, out_dir, lam: float | None = None) -> None:
    """Write chain.csv (seed, cp_gap, dr_gap) and a small summary.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "chain.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(CHAIN_HEADER)
        for r in results:
            w.writerow([r.seed, _cell(r.cp_gap), _cell(r.dr_gap)])
    improved = [r for r in results
                if math.isfinite(r.dr_gap) and math.isfinite(r.cp_gap)
                and r.dr_gap <= r.cp_gap + 1e-9]
    payload = {
        "lambda": lam,
        "n_chains": len(results),
        "fraction_dr_not_worse": (len(improved) / len(results)) if results else None,
        "chains": [
            {"seed": r.seed, "cp_gap": _jsonf(r.cp_gap), "dr_gap": _jsonf(r.dr_gap),
             "cp_iters": r.cp_trace.iterations_used,
             "dr_iters": r.dr_trace.iterations_used}
            for r in results
        ],
    }
    with open(out / "summary.json", "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
