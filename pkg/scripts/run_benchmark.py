#!/usr/bin/env python3
"""Full desk-scale benchmark: candidates vs upper envelope vs weighted
ensemble, plain and adaptive certification, with a combined table and a
radius-accuracy plot written to the output directory.

Usage: python scripts/run_benchmark.py --out results/ [--n 10000] [--seed 0]
"""

import argparse
import time
from pathlib import Path

import numpy as np

from sween.benchmark import make_benchmark_task, train_benchmark_model
from sween.ensemble import AdaptiveConfig, EnsembleWeights, SweenModel
from sween.evaluate import certify_dataset
from sween.metrics import (
    average_report,
    radius_accuracy_curve,
    save_outcomes_csv,
    save_report_csv,
    upper_envelope,
)
from sween.plotting import write_radius_accuracy_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--n", type=int, default=10_000, help="estimation samples per point")
    ap.add_argument("--n0", type=int, default=100)
    ap.add_argument("--alpha", type=float, default=0.001)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.time()
    train, weight_eval, test = make_benchmark_task(seed=args.seed)
    model = train_benchmark_model(train, weight_eval, seed=args.seed)
    print(f"trained {model.k} candidates in {time.time() - t0:.1f}s; "
          f"weights = {np.round(model.weights.w, 4)}")

    rows = []
    curves = []
    for k, cand in enumerate(model.candidates):
        single = SweenModel([cand], EnsembleWeights(np.array([1.0])), model.sigma)
        t = time.time()
        outs = certify_dataset(single, test, args.n0, args.n, args.alpha,
                               seed=args.seed + 1, jobs=args.jobs)
        rep = radius_accuracy_curve(outs)
        rows.append((f"cand-{k}", rep, float(np.mean([o.evals for o in outs]))))
        curves.append((f"cand-{k}", outs))
        save_report_csv(rep, out / f"cand{k}_report.csv")
        print(f"cand-{k}: ACR {rep.acr:.4f} ({time.time() - t:.1f}s)")

    t = time.time()
    sween_outs = certify_dataset(model, test, args.n0, args.n, args.alpha,
                                 seed=args.seed + 1, jobs=args.jobs)
    sween_rep = radius_accuracy_curve(sween_outs)
    rows.append(("SWEEN", sween_rep, float(np.mean([o.evals for o in sween_outs]))))
    curves.append(("SWEEN", sween_outs))
    save_outcomes_csv(sween_outs, out / "sween_outcomes.csv")
    save_report_csv(sween_rep, out / "sween_report.csv")
    print(f"SWEEN: ACR {sween_rep.acr:.4f} ({time.time() - t:.1f}s)")

    t = time.time()
    adaptive_outs = certify_dataset(model, test, args.n0, args.n, args.alpha,
                                    seed=args.seed + 1, jobs=args.jobs,
                                    adaptive=AdaptiveConfig(alpha=0.05, threshold=0.95,
                                                            s_local=100))
    adaptive_rep = radius_accuracy_curve(adaptive_outs)
    rows.append(("SWEEN-adaptive", adaptive_rep,
                 float(np.mean([o.evals for o in adaptive_outs]))))
    save_outcomes_csv(adaptive_outs, out / "sween_adaptive_outcomes.csv")
    save_report_csv(adaptive_rep, out / "sween_adaptive_report.csv")
    print(f"SWEEN-adaptive: ACR {adaptive_rep.acr:.4f} ({time.time() - t:.1f}s)")

    candidate_reports = [rep for name, rep, _ in rows if name.startswith("cand-")]
    ue = upper_envelope(candidate_reports)
    avg = average_report(candidate_reports)

    grid = sween_rep.radius_grid
    header = "model      " + "".join(f"{r:>7.2f}" for r in grid) + "     ACR  evals/pt"
    print("\n" + header)
    print("-" * len(header))
    for name, rep, evals in rows:
        print(f"{name:<11}" + "".join(f"{a:>7.3f}" for a in rep.aca)
              + f"  {rep.acr:6.4f}  {evals:8.0f}")
    for name, rep in (("UE", ue), ("AVG", avg)):
        print(f"{name:<11}" + "".join(f"{a:>7.3f}" for a in rep.aca) + f"  {rep.acr:6.4f}")

    write_radius_accuracy_svg(curves, out / "radius_accuracy.svg",
                              max_radius=float(grid[-1]))
    print(f"\nwrote reports and radius_accuracy.svg under {out}/")
    print(f"total {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
