"""Command-line front end.

Subcommands: gen-data, train, solve-weights, certify, report. Exit codes:
0 ok, 2 usage/validation, 3 io/format, 4 numeric failure. Every error path
prints a single line starting with `error:` to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import gen_gaussian_mixture, gen_rings, load_dataset, save_dataset, split
from .ensemble import (
    AdaptiveConfig,
    EnsembleWeights,
    SolveConfig,
    SweenModel,
    empirical_risk,
    load_weights_file,
    save_weights_file,
    solve_weights,
)
from .evaluate import certify_dataset
from .metrics import (
    DEFAULT_RADIUS_GRID,
    average_report,
    load_report_csv,
    radius_accuracy_curve,
    save_outcomes_csv,
    save_report_csv,
    upper_envelope,
)
from .models import (
    ModelFormatError,
    TrainConfig,
    TrainingDiverged,
    accuracy,
    load_model,
    save_model,
    train_with_history,
)
from .plotting import write_radius_accuracy_svg


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # single-line machine-parsable errors, exit 2
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v != ""]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def _build_parser() -> _Parser:
    parser = _Parser(prog="sween", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset (CSV + metadata)")
    p.add_argument("--kind", required=True, choices=["mixture", "rings"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--std", type=float, default=0.5)
    p.add_argument("--radii", type=_float_list, default=[1.0, 3.0])
    p.add_argument("--noise-std", type=float, default=0.1)
    p.add_argument("--split", type=_float_list, default=None, metavar="TRAIN,WEIGHTS,TEST",
                   help="also write stratified train/weights/test files")
    p.add_argument("--name", default=None, help="output file stem (default: kind)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train", help="train one candidate model with Gaussian augmentation")
    p.add_argument("--data", required=True)
    p.add_argument("--arch", type=_int_list, required=True, metavar="D,H1,...,M")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--lr-decay-epochs", type=_int_list, default=[])
    p.add_argument("--lr-decay-factor", type=float, default=0.1)
    p.add_argument("--eval-data", default=None, help="dataset for the printed clean accuracy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output model JSON path")

    p = sub.add_parser("solve-weights", help="solve ensemble weights on a held-out split")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--mode", choices=["erm", "streaming"], default="erm")
    p.add_argument("--s", type=int, default=8, help="noise samples per point (erm mode)")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output weights JSON path")

    p = sub.add_parser("certify", help="certify a test set and write outcome/report CSVs")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--weights", help="ensemble weights JSON")
    src.add_argument("--model", help="single model JSON (weight 1.0)")
    p.add_argument("--data", required=True)
    p.add_argument("--sigma", type=float, default=None,
                   help="noise level (required with --model; overrides the weights file)")
    p.add_argument("--n0", type=int, default=100)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--alpha", type=float, default=0.001)
    p.add_argument("--diameter", type=float, default=None,
                   help="radius clip ceiling (default: dataset diameter)")
    p.add_argument("--grid", type=_float_list, default=list(DEFAULT_RADIUS_GRID))
    p.add_argument("--max-points", type=int, default=None)
    p.add_argument("--adaptive", action="store_true", help="early-exit sub-ensemble certification")
    p.add_argument("--adaptive-alpha", type=float, default=0.05)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--s-local", type=int, default=100)
    p.add_argument("--svg", default=None, help="also write a radius-accuracy step plot")
    p.add_argument("--name", default="certify", help="output file stem")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("report", help="combine report CSVs with upper-envelope and average rows")
    p.add_argument("inputs", nargs="+", help="report CSVs from certify")
    p.add_argument("--labels", nargs="*", default=None)
    p.add_argument("--out", required=True, help="combined CSV path")
    return parser


def _cmd_gen_data(args) -> int:
    if args.kind == "mixture":
        ds = gen_gaussian_mixture(args.dim, args.classes, args.n, args.separation,
                                  args.std, args.seed)
    else:
        ds = gen_rings(args.n, args.radii, args.noise_std, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.name or args.kind
    if args.split is None:
        path = save_dataset(ds, out_dir / f"{stem}.csv")
        print(f"wrote {path} ({len(ds)} points, dim={ds.dim}, classes={ds.num_classes}, "
              f"diameter={ds.diameter:.6f})")
    else:
        if len(args.split) != 3:
            raise ValueError(f"--split needs three fractions, got {args.split}")
        parts = split(ds, tuple(args.split), args.seed)
        for part, suffix in zip(parts, ("train", "weights", "test")):
            path = save_dataset(part, out_dir / f"{stem}_{suffix}.csv")
            print(f"wrote {path} ({len(part)} points)")
    return 0


def _cmd_train(args) -> int:
    data = load_dataset(args.data)
    cfg = TrainConfig(sigma=args.sigma, epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.lr, lr_decay_epochs=args.lr_decay_epochs,
                      lr_decay_factor=args.lr_decay_factor, seed=args.seed)
    model, losses = train_with_history(data, args.arch, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    eval_ds = load_dataset(args.eval_data) if args.eval_data else data
    print(f"wrote {out}")
    print(f"final_train_loss={losses[-1]:.6f} clean_accuracy={accuracy(model, eval_ds):.4f}")
    return 0


def _cmd_solve_weights(args) -> int:
    data = load_dataset(args.data)
    candidates = [load_model(p) for p in args.models]
    cfg = SolveConfig(mode=args.mode, s=args.s, epochs=args.epochs,
                      learning_rate=args.lr, seed=args.seed)
    weights = solve_weights(candidates, data, args.sigma, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rel = [os.path.relpath(Path(p).resolve(), out.resolve().parent) for p in args.models]
    save_weights_file(out, args.sigma, rel, weights)
    risk = empirical_risk(candidates, weights, data, args.sigma, max(args.s, 1), args.seed)
    w_text = " ".join(f"{v:.6f}" for v in weights.w)
    print(f"wrote {out}")
    print(f"weights: {w_text} (sum={float(np.sum(weights.w)):.6f})")
    print(f"empirical_risk={risk:.6f}")
    return 0


def _cmd_certify(args) -> int:
    data = load_dataset(args.data)
    if args.model:
        sigma = args.sigma
        if sigma is None:
            raise ValueError("--sigma is required with --model")
        model = SweenModel([load_model(args.model)], EnsembleWeights(np.array([1.0])), sigma)
    else:
        sigma, cand_paths, weights = load_weights_file(args.weights)
        if args.sigma is not None:
            sigma = args.sigma
        model = SweenModel([load_model(p) for p in cand_paths], weights, sigma)

    adaptive = None
    if args.adaptive:
        adaptive = AdaptiveConfig(alpha=args.adaptive_alpha, threshold=args.threshold,
                                  s_local=args.s_local)
    outcomes = certify_dataset(model, data, args.n0, args.n, args.alpha,
                               diameter=args.diameter, seed=args.seed, jobs=args.jobs,
                               adaptive=adaptive, max_points=args.max_points)
    report = radius_accuracy_curve(outcomes, args.grid, config={
        "sigma": model.sigma, "n0": args.n0, "n": args.n, "alpha": args.alpha,
    })
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outcomes_path = save_outcomes_csv(outcomes, out_dir / f"{args.name}_outcomes.csv")
    report_path = save_report_csv(report, out_dir / f"{args.name}_report.csv")
    print(f"wrote {outcomes_path}")
    print(f"wrote {report_path}")
    if args.svg:
        svg_path = write_radius_accuracy_svg([(args.name, outcomes)], out_dir / args.svg,
                                             max_radius=max(report.radius_grid[-1], 1e-9))
        print(f"wrote {svg_path}")
    mean_evals = float(np.mean([o.evals for o in outcomes]))
    print(f"points={len(outcomes)} acr={report.acr:.6f} mean_evals={mean_evals:.1f}")
    return 0


def _cmd_report(args) -> int:
    reports = [load_report_csv(p) for p in args.inputs]
    labels = args.labels or [Path(p).stem for p in args.inputs]
    if len(labels) != len(reports):
        raise ValueError(f"{len(labels)} labels for {len(reports)} inputs")
    ue = upper_envelope(reports)
    avg = average_report(reports)
    grid = reports[0].radius_grid
    lines = ["model," + ",".join(f"{r:.2f}" for r in grid) + ",ACR"]
    for label, rep in list(zip(labels, reports)) + [("UE", ue), ("AVG", avg)]:
        row = ",".join(repr(float(a)) for a in rep.aca)
        lines.append(f"{label},{row},{repr(float(rep.acr))}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")
    return 0


_DISPATCH = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "solve-weights": _cmd_solve_weights,
    "certify": _cmd_certify,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _DISPATCH[args.command](args)
    except (ModelFormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TrainingDiverged, RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
