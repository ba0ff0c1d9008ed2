"""``fdi`` command line.

Exit status: 0 success, 2 usage or invalid input, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from .config import build_scenario, load_config
from .estimation import ar_mle_estimate, innovation_variances, wls_estimate_sequential
from .experiment import H0, ScoreTable, auc_summary, roc_from_scores, run_experiment, simulate_observations
from .grid import GridModelError, format_matrix, synthetic_matrix

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


def _fail(msg: str, code: int) -> int:
    print(f"fdi: {msg}", file=sys.stderr)
    return code


def _print_auc(aucs: dict[str, float]) -> None:
    print("detector,auc")
    for d, a in aucs.items():
        print(f"{d},{a!r}")


def cmd_gen_matrix(args) -> int:
    try:
        H = synthetic_matrix(args.rows, args.cols, args.seed)
    except GridModelError as exc:
        # dims are checked before drawing; anything else is the rank guard
        code = EXIT_USAGE if not args.rows > args.cols >= 1 else EXIT_RUNTIME
        return _fail(str(exc), code)
    Path(args.out).write_text(format_matrix(H))
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        cfg = load_config(args.config)
        sc = build_scenario(cfg, seed=args.seed)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    out = args.out or cfg.scores_path
    if out is None:
        return _fail("no output path: pass --out or set output.scores", EXIT_USAGE)
    try:
        table = run_experiment(sc, threads=args.threads)
        Path(out).write_text(table.to_csv())
    except Exception as exc:  # noqa: BLE001 - reported as runtime failure
        return _fail(f"simulation failed: {exc}", EXIT_RUNTIME)
    _print_auc(auc_summary(table))
    return EXIT_OK


def cmd_roc(args) -> int:
    try:
        table = ScoreTable.from_csv(Path(args.scores).read_text())
        curves = [roc_from_scores(table, d) for d in table.detectors]
    except (ValueError, OSError) as exc:
        return _fail(f"bad scores file: {exc}", EXIT_USAGE)
    if not curves:
        return _fail("bad scores file: no rows", EXIT_USAGE)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("detector", "threshold", "pfa", "pd"))
    for c in curves:
        for t, pf, pd in zip(c.thresholds, c.pfa, c.pd):
            w.writerow((c.detector, repr(float(t)), repr(float(pf)), repr(float(pd))))
    Path(args.out).write_text(buf.getvalue())
    _print_auc({c.detector: c.auc for c in curves})
    return EXIT_OK


def cmd_estimate(args) -> int:
    try:
        sc = build_scenario(load_config(args.config), seed=args.seed)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    try:
        X, theta, _ = simulate_observations(sc, 0, H0)
        gauss = wls_estimate_sequential(sc.mm, innovation_variances(sc.noise), X)
        ar = ar_mle_estimate(sc.mm, sc.noise, X)
    except Exception as exc:  # noqa: BLE001
        return _fail(f"estimation failed: {exc}", EXIT_RUNTIME)
    print(f"state,true,{gauss.method},{ar.method}")
    for k in range(sc.mm.K):
        print(f"{k},{theta[k]!r},{gauss.theta_hat[k]!r},{ar.theta_hat[k]!r}")
    err = {m: float(np.mean((e.theta_hat - theta) ** 2)) for m, e in
           ((gauss.method, gauss), (ar.method, ar))}
    print("# mean squared state error: " + ", ".join(f"{m}={v:.6g}" for m, v in err.items()),
          file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-matrix", help="write a seeded standard-normal matrix file")
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--cols", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_matrix)

    s = sub.add_parser("simulate", help="run the Monte-Carlo experiment, write scores CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--seed", type=int, help="override run.master_seed")
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("roc", help="turn a scores CSV into ROC curves")
    r.add_argument("--scores", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_roc)

    e = sub.add_parser("estimate", help="estimate the state of one simulated block")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_estimate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        return _fail("--threads must be >= 1", EXIT_USAGE)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
