"""Command-line interface: ``rles run|restart|apriori|transfer-curves|compare``."""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .errors import RlesError


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def cmd_run(args):
    from .config import parse_config
    from .runner import run_simulation

    overrides = {
        "sgs.model": args.model,
        "run.dt": args.dt,
        "run.n_steps": args.steps,
        "run.transient_steps": args.transient_steps,
        "run.checkpoint_every": args.checkpoint_every,
        "run.seed": args.seed,
        "run.perturbation": args.perturbation,
        "run.stabilizer_alpha": args.alpha,
    }
    config = parse_config(args.config, overrides, args.preset)
    result = run_simulation(config, args.output)
    _summarize(result)
    return 0


def cmd_restart(args):
    from .runner import restart_simulation

    result = restart_simulation(args.checkpoint, args.steps, args.output)
    _summarize(result)
    return 0


def _summarize(result):
    m = result.manifest
    line = f"{m['status']}: step {m['step']}, t = {m['t']:.6g}, samples = {m['n_samples']}"
    if "u_tau" in m:
        line += f", u_tau = {m['u_tau']:.6g}, Re_tau = {m['re_tau']:.6g}, shear residual = {m['shear_residual']:.3g}"
    print(line)
    print(f"artifacts in {result.output}")


def cmd_apriori(args):
    from .apriori import APRIORI_MODELS, apriori_report, convergence_table, observed_orders
    from .fields import SYMMETRIC_INDICES

    models = APRIORI_MODELS if args.model == "all" else (args.model,)
    vel, rows = apriori_report(args.n, args.delta_over_h, models, args.seed, args.gamma)
    os.makedirs(args.output, exist_ok=True)
    comp_names = [f"r{i + 1}{j + 1}" for i, j in SYMMETRIC_INDICES]
    table = []
    for row in rows[1:]:
        table.append([row["model"], row["norm"], rows[0]["norm"]]
                     + [row[ij] for ij in SYMMETRIC_INDICES] + [row["pooled"]])
    corr_path = os.path.join(args.output, "apriori_correlation.csv")
    _write_rows(corr_path, ["model", "model_norm", "exact_norm"] + comp_names + ["pooled"], table)

    h = vel.grid.h
    deltas = args.delta_over_h * h * 0.5 ** np.arange(args.levels)
    conv = convergence_table(vel, deltas, args.gamma)
    orders = np.concatenate([[np.nan], observed_orders(conv[:, 0], conv[:, 1])])
    conv_path = os.path.join(args.output, "apriori_convergence.csv")
    _write_rows(conv_path, ["delta", "delta_over_h", "rel_err_gradient", "order", "rel_diff_rles_gradient"],
                [(d, d / h, e, o, r) for (d, e, r), o in zip(conv, orders)])

    print(f"{'model':<12} {'pooled':>8}  " + " ".join(f"{c:>7}" for c in comp_names))
    for row in rows[1:]:
        print(f"{row['model']:<12} {row['pooled']:8.4f}  "
              + " ".join(f"{row[ij]:7.4f}" for ij in SYMMETRIC_INDICES))
    print(f"wrote {corr_path} and {conv_path}")
    return 0


def cmd_transfer_curves(args):
    from .filters import transfer_curves

    rows = transfer_curves(args.x_max, args.points)
    if args.output == "-":
        writer = csv.writer(sys.stdout)
        writer.writerow(("x", "gaussian", "taylor", "pade"))
        writer.writerows(rows.tolist())
    else:
        _write_rows(args.output, ("x", "gaussian", "taylor", "pade"), rows)
        print(f"wrote {args.output}")
    return 0


def cmd_compare(args):
    from .reference import compare_profiles, load_reference_profiles, load_run_profiles

    run_csv = os.path.join(args.run, "profiles.csv") if os.path.isdir(args.run) else args.run
    run = load_run_profiles(run_csv)
    ref = load_reference_profiles(args.ref, args.map)
    window = None
    if args.min is not None or args.max is not None:
        window = (-np.inf if args.min is None else args.min, np.inf if args.max is None else args.max)
    report = compare_profiles(run, ref, args.quantity, window)
    out = args.output or os.path.join(os.path.dirname(run_csv), f"compare_{report.quantity}.csv")
    report.write_csv(out)
    print(json.dumps({"quantity": report.quantity, "points": int(len(report.x)),
                      "rel_l2": report.rel_l2, "rel_linf": report.rel_linf}))
    print(f"wrote {out}")
    return 0


def build_parser():
    from .sgs import MODELS

    p = argparse.ArgumentParser(prog="rles", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a channel simulation")
    r.add_argument("--config", help="key = value configuration file")
    r.add_argument("--preset", choices=("re180", "re395"))
    r.add_argument("--model", choices=MODELS)
    r.add_argument("--output", default="rles_run", help="artifact directory")
    r.add_argument("--dt", type=float)
    r.add_argument("--steps", type=int, help="number of sampled steps (run.n_steps)")
    r.add_argument("--transient-steps", type=int)
    r.add_argument("--checkpoint-every", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--perturbation", type=float, help="initial rms perturbation relative to U_m")
    r.add_argument("--alpha", type=float, help="top-mode damping factor")
    r.set_defaults(func=cmd_run)

    rs = sub.add_parser("restart", help="continue a run from a checkpoint")
    rs.add_argument("--checkpoint", required=True)
    rs.add_argument("--steps", type=int, help="further steps to take (default: finish the schedule)")
    rs.add_argument("--output", help="artifact directory (default: the checkpoint's directory)")
    rs.set_defaults(func=cmd_restart)

    a = sub.add_parser("apriori", help="a-priori model test on a synthetic field")
    a.add_argument("--n", type=int, default=32)
    a.add_argument("--delta-over-h", type=float, default=4.0)
    a.add_argument("--model", choices=("all", "gradient", "rles", "smagorinsky"), default="all")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--gamma", type=float, default=6.0)
    a.add_argument("--levels", type=int, default=4, help="filter widths in the convergence table")
    a.add_argument("--output", default="apriori")
    a.set_defaults(func=cmd_apriori)

    t = sub.add_parser("transfer-curves", help="tabulate the filter transfer functions")
    t.add_argument("--x-max", type=float, default=4.0)
    t.add_argument("--points", type=int, default=201)
    t.add_argument("--output", default="transfer_curves.csv", help="CSV path or '-' for stdout")
    t.set_defaults(func=cmd_transfer_curves)

    c = sub.add_parser("compare", help="compare run profiles with reference data")
    c.add_argument("--run", required=True, help="run directory or profiles.csv")
    c.add_argument("--ref", required=True, help="whitespace-separated reference file")
    c.add_argument("--map", required=True, help="column mapping, e.g. 'yplus:2,Uplus:3'")
    c.add_argument("--quantity", default="Uplus")
    c.add_argument("--min", type=float, help="lower end of the comparison window")
    c.add_argument("--max", type=float, help="upper end of the comparison window")
    c.add_argument("--output", help="side-by-side CSV path")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (RlesError, OSError) as exc:
        print(f"rles: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
