"""Command-line entry points.

    feasilab gen       --config cfg.json --out path/base
    feasilab run       --instance base --algo cp --restarts 20 --out dir
    feasilab chain     --instance base --lambda 0.53 --restarts 20 --out dir
    feasilab summarize --in dir --clusters 8

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

import argparse
import csv
import json
import math
import statistics
import sys
from pathlib import Path

from .driver import MONITOR_GAP, MONITOR_SHADOW, StopRule
from .harness import (
    FINALS_HEADER,
    AlgoSpec,
    CampaignConfig,
    cluster_gaps,
    run_campaign,
    run_chain_campaign,
    spearman,
)
from .instances import (
    InstanceConfig,
    InstanceConfigError,
    InstanceIOError,
    generate_instance,
    load_instance,
    save_instance,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feasilab")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic instance")
    gen.add_argument("--config", required=True, help="instance config JSON file")
    gen.add_argument("--out", required=True, help="output base path")
    gen.add_argument("--timestamp", action="store_true",
                     help="stamp the manifest with the creation time "
                          "(off by default so identical configs give identical files)")

    runp = sub.add_parser("run", help="random-restart campaign for one algorithm")
    runp.add_argument("--instance", required=True)
    runp.add_argument("--algo", required=True, choices=["cp", "cdrl", "drl"])
    runp.add_argument("--lambda", dest="lam", type=float, default=0.5)
    runp.add_argument("--restarts", type=int, default=1)
    runp.add_argument("--seed", type=int, default=0)
    runp.add_argument("--tol", type=float, default=None,
                      help="stop tolerance; default 1e-8 for cp/cdrl, "
                           "5e-18 for drl with lambda <= 0.5, 1e-13 above")
    runp.add_argument("--nmax", type=int, default=None,
                      help="iteration cap; default 2000 for cp/cdrl, "
                           "35000 for drl with lambda <= 0.5, 10000 above")
    runp.add_argument("--monitor", choices=[MONITOR_SHADOW, MONITOR_GAP],
                      default=MONITOR_SHADOW)
    runp.add_argument("--out", required=True)
    runp.add_argument("--jobs", type=int, default=1)
    runp.add_argument("--clusters", type=int, default=8)
    runp.add_argument("--gap-stride", type=int, default=1)
    runp.add_argument("--symmetrize-start", action="store_true")
    runp.add_argument("--diagonal-variant", choices=["standard", "projected-average"],
                      default="standard")

    chain = sub.add_parser("chain", help="cyclic projections, then warm-started product DR")
    chain.add_argument("--instance", required=True)
    chain.add_argument("--lambda", dest="lam", type=float, default=0.53)
    chain.add_argument("--restarts", type=int, default=1)
    chain.add_argument("--seed", type=int, default=0)
    chain.add_argument("--cp-tol", type=float, default=1e-8)
    chain.add_argument("--cp-nmax", type=int, default=2000)
    chain.add_argument("--dr-tol", type=float, default=1e-10)
    chain.add_argument("--dr-nmax", type=int, default=5000)
    chain.add_argument("--dr-monitor", choices=[MONITOR_SHADOW, MONITOR_GAP],
                       default=MONITOR_GAP)
    chain.add_argument("--gap-stride", type=int, default=1)
    chain.add_argument("--symmetrize-start", action="store_true")
    chain.add_argument("--out", required=True)

    summ = sub.add_parser("summarize", help="recluster finals.csv and rewrite summary.json")
    summ.add_argument("--in", dest="in_dir", required=True)
    summ.add_argument("--clusters", type=int, default=8)

    return parser


def _cmd_gen(args) -> int:
    cfg_path = Path(args.config)
    cfg = InstanceConfig.from_dict(json.loads(cfg_path.read_text(encoding="utf-8")))
    inst = generate_instance(cfg)
    if args.timestamp:
        import datetime
        from .instances import Provenance
        inst.provenance = Provenance(
            seed=inst.provenance.seed,
            created=datetime.datetime.now(datetime.timezone.utc).isoformat())
    save_instance(args.out, inst)
    print(f"wrote {args.out}.manifest.json ({len(inst.sphere_data)} data voxels, "
          f"{100.0 * inst.data_fraction:.1f}% of the grid)")
    return EXIT_OK


def _default_rule(algo: str, lam: float) -> tuple:
    if algo == "drl":
        return (5e-18, 35000) if lam <= 0.5 else (1e-13, 10000)
    return (1e-8, 2000)


def _cmd_run(args) -> int:
    tol_default, nmax_default = _default_rule(args.algo, args.lam)
    rule = StopRule(tol=args.tol if args.tol is not None else tol_default,
                    n_max=args.nmax if args.nmax is not None else nmax_default,
                    monitor=args.monitor)
    spec = AlgoSpec(kind=args.algo, rule=rule, lam=args.lam,
                    diagonal_variant=args.diagonal_variant,
                    gap_stride=args.gap_stride)
    cfg = CampaignConfig(
        instance_path=args.instance,
        algorithms=(spec,),
        n_restarts=args.restarts,
        base_seed=args.seed,
        cluster_k=args.clusters,
        out_dir=args.out,
        jobs=args.jobs,
        symmetrize_start=args.symmetrize_start,
    )
    summary = run_campaign(cfg)
    stats = summary.per_algo[spec.label]
    print(f"{spec.label}: {stats.n_runs} runs, median gap {stats.gap_median:.3e}, "
          f"mean iters {stats.iters_mean:.1f}, diverged {stats.n_diverged}")
    return EXIT_OK


def _cmd_chain(args) -> int:
    inst = load_instance(args.instance)
    rule_cp = StopRule(tol=args.cp_tol, n_max=args.cp_nmax, monitor=MONITOR_SHADOW)
    rule_dr = StopRule(tol=args.dr_tol, n_max=args.dr_nmax, monitor=args.dr_monitor)
    results = run_chain_campaign(
        inst, args.lam, rule_cp, rule_dr, args.restarts, args.seed,
        out_dir=args.out, symmetrize_start=args.symmetrize_start,
        gap_stride=args.gap_stride)
    below = sum(1 for r in results if r.dr_gap <= r.cp_gap + 1e-9)
    print(f"chain: {below}/{len(results)} seeds with DR gap <= CP gap")
    return EXIT_OK


def _cmd_summarize(args) -> int:
    in_dir = Path(args.in_dir)
    finals = in_dir / "finals.csv"
    with open(finals, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != FINALS_HEADER:
            raise InstanceConfigError(
                f"finals.csv header {header} does not match {FINALS_HEADER}")
        rows = list(reader)

    gaps = [float(r[3]) if r[3] else math.nan for r in rows]
    finite = [g for g in gaps if math.isfinite(g)]
    clusters = cluster_gaps(finite, args.clusters)
    labels = iter(clusters.labels)
    for r, g in zip(rows, gaps):
        r[7] = str(int(next(labels))) if math.isfinite(g) else "-1"

    with open(finals, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(FINALS_HEADER)
        w.writerows(rows)

    per_algo = {}
    for r, g in zip(rows, gaps):
        per_algo.setdefault(r[1], []).append((g, float(r[4]) if r[4] else math.nan,
                                              int(r[7])))
    payload = {
        "cluster_k": args.clusters,
        "cluster_centers": [float(c) for c in clusters.centers],
        "per_algo": {},
    }
    for algo, entries in sorted(per_algo.items()):
        ok = [(g, e, c) for g, e, c in entries if math.isfinite(g)]
        gs = [g for g, _, _ in ok]
        payload["per_algo"][algo] = {
            "n_runs": len(entries),
            "gap_median": statistics.median(gs) if gs else None,
            "gap_mean": sum(gs) / len(gs) if gs else None,
            "gap_min": min(gs) if gs else None,
            "gap_max": max(gs) if gs else None,
            "best_cluster_rate": (sum(1 for _, _, c in ok if c == 0) / len(ok)) if ok else None,
            "spearman_gap_error": _maybe(spearman([g for g, _, _ in ok],
                                                  [e for _, e, _ in ok])),
            "histogram": [sum(1 for _, _, c in ok if c == i) for i in range(args.clusters)],
        }
    with open(in_dir / "summary.json", "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"summarized {len(rows)} runs into {args.clusters} clusters")
    return EXIT_OK


def _maybe(x: float):
    return x if math.isfinite(x) else None


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen": _cmd_gen,
        "run": _cmd_run,
        "chain": _cmd_chain,
        "summarize": _cmd_summarize,
    }
    try:
        return handlers[args.command](args)
    except (InstanceConfigError, ValueError, KeyError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (InstanceIOError, OSError) as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
