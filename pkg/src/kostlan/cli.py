"""Command-line entry point: reproducible experiment runs.

    kostlan <subcommand> [--config FILE] [--seed N] [--n N] [--samples M]
            [--out DIR] [--threads K] [--quick]

Subcommands: sample (one polynomial + root dump), mc (Monte Carlo energy
run), constants (limiting-constants report), kacrice (density grid and
clustering fit), minimize (descent pipeline), verify (acceptance suite;
nonzero exit on any failure).  Environment overrides: KOSTLAN_OUT,
KOSTLAN_THREADS.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import acceptance, harness
from . import constants as cn
from . import energy as en
from . import kacrice as kr
from . import minimizer as mz
from . import roots as rt
from . import stats as st
from .polymodel import ComplexGaussianStream, sample_elliptic

FMT = harness.FMT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kostlan", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in harness.SUBCOMMAND_FIELDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--quick", action="store_const", const=True, default=None)
    return parser


def _prepare(args):
    flags = {
        "seed": args.seed,
        "n": args.n,
        "samples": args.samples,
        "out": args.out,
        "threads": args.threads,
        "quick": args.quick,
    }
    flags = {k: v for k, v in flags.items() if k in _fields_for(args.subcommand)}
    config, provenance = harness.parse_config(args.subcommand, args.config, flags)
    print(f"configuration for '{args.subcommand}':")
    print(harness.echo_config(config, provenance))
    out_dir = Path(config["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    return config, harness.ExperimentManifest.start(args.subcommand, config), out_dir


def _fields_for(subcommand):
    fields = dict(harness.COMMON_FIELDS)
    fields.update(harness.SUBCOMMAND_FIELDS[subcommand])
    return fields


def cmd_sample(args) -> int:
    config, manifest, out = _prepare(args)
    p = sample_elliptic(config["n"], ComplexGaussianStream(config["seed"], 0))
    rs = rt.find_roots(p)
    diag = rt.validate_roots(p, rs)
    roots_path = out / "roots.csv"
    with open(roots_path, "w") as fh:
        fh.write("index,re,im,residual,flag\n")
        for i, (z, res, fl) in enumerate(zip(rs.roots, rs.residuals, rs.condition_flags)):
            fh.write(f"{i},{FMT % z.real},{FMT % z.imag},{FMT % res},{int(fl)}\n")
    harness.write_json(
        {
            "degree": p.degree,
            "seed": config["seed"],
            "raw_coeffs": [[c.real, c.imag] for c in p.raw_coeffs],
            "max_residual": rs.max_residual,
            "sweeps": rs.sweeps,
            "validation": {
                "passed": diag.passed,
                "vieta_sum_error": diag.vieta_sum_error,
                "vieta_logprod_error": diag.vieta_logprod_error,
                "vieta_argprod_error": diag.vieta_argprod_error,
            },
        },
        out / "polynomial.json",
    )
    manifest.add_output(roots_path)
    manifest.add_output(out / "polynomial.json")
    manifest.finish(out)
    print(f"wrote {roots_path} (max residual {rs.max_residual:.2e})")
    return 0


def cmd_mc(args) -> int:
    config, manifest, out = _prepare(args)
    cfg = st.RunConfig(
        n=config["n"],
        samples=config["samples"],
        master_seed=config["seed"],
        workers=config["threads"],
        invariance_every=config["invariance_every"],
    )
    records = st.run_monte_carlo(cfg)
    results_path = out / "results.csv"
    content_digest = harness.write_records_csv(records, results_path)
    rep = cn.compute_report()
    summary = st.summarize(records, cfg.n, cstar=rep.c_star)
    summary_path = out / "summary.json"
    harness.write_json(harness.summary_payload(summary), summary_path)
    plots = harness.emit_plotdata(st.good_values(records), cfg.n, out, variance=rep.c_star)
    manifest.add_output(results_path, content_sha256=content_digest)
    manifest.add_output(summary_path)
    for path in plots:
        manifest.add_output(path)
    manifest.finish(out)
    print(
        f"n={cfg.n} M={cfg.samples}: mean={summary.mean:.3f} "
        f"(expected {en.expected_energy(cfg.n):.3f}), k2/n={summary.k2 / cfg.n:.5f} "
        f"(c*={rep.c_star:.5f}), failures={summary.failures}"
    )
    return 0


def cmd_constants(args) -> int:
    config, manifest, out = _prepare(args)
    rep = cn.compute_report(config["tol"])
    path = out / "constants.json"
    harness.write_json(rep.as_dict(), path)
    manifest.add_output(path)
    manifest.finish(out)
    print(rep.table())
    return 0


def cmd_kacrice(args) -> int:
    config, manifest, out = _prepare(args)
    n = config["n"]
    rep = kr.clustering_gap(n, n_directions=4, master_seed=config["seed"])
    grid_path = out / "density_grid.csv"
    with open(grid_path, "w") as fh:
        fh.write("re_z,im_z,re_w,im_w,d,rho2_mu,gap_mu\n")
        for d in rep.distances:
            r = d / np.sqrt(4.0 - d * d)
            fh.write(
                ",".join(
                    [FMT % 0.0, FMT % 0.0, FMT % r, FMT % 0.0, FMT % d,
                     FMT % kr.rho_2(0.0, r, n), FMT % kr.rho_2_gap(d, n)]
                )
                + "\n"
            )
    decay_path = out / "clustering_decay.csv"
    with open(decay_path, "w") as fh:
        fh.write("n,d,n_d2,gap,log_gap_over_n2\n")
        for d, nd2, g in zip(rep.distances, rep.nd2, rep.gaps):
            fh.write(
                f"{n},{FMT % d},{FMT % nd2},{FMT % g},{FMT % np.log(g / n**2)}\n"
            )
    lam = kr.rho_lmp_mc(
        kr.DensityQuery(0, 1, (1,), (), (0.3,)),
        n,
        config["mc_samples"],
        ComplexGaussianStream(config["seed"], 1),
    )
    harness.write_json(
        {
            "n": n,
            "slope": rep.slope,
            "intercept": rep.intercept,
            "family_rel_spread": rep.family_rel_spread,
            "matrix_check_rel": rep.matrix_check_rel,
            "lambda_011": {"value": lam.lam, "se": lam.lam_se},
        },
        out / "clustering_fit.json",
    )
    for path in (grid_path, decay_path, out / "clustering_fit.json"):
        manifest.add_output(path)
    manifest.finish(out)
    print(f"n={n}: clustering slope {rep.slope:.4f} over {len(rep.distances)} separations")
    return 0


def cmd_minimize(args) -> int:
    config, manifest, out = _prepare(args)
    rep = mz.pipeline(config["n"], config["seed"], max_iter=config["max_iter"])
    traj_path = out / "trajectory.csv"
    with open(traj_path, "w") as fh:
        fh.write("iteration,energy,grad_norm\n")
        for row in rep.result.trajectory:
            fh.write(f"{int(row[0])},{FMT % row[1]},{FMT % row[2]}\n")
    harness.write_json(
        {
            "n": rep.n,
            "seed": rep.seed,
            "start_energy": rep.start_energy,
            "end_energy": rep.end_energy,
            "expected_start": rep.expected_start,
            "references": rep.references,
            "iterations": rep.iterations,
            "converged": rep.converged,
        },
        out / "minimize.json",
    )
    manifest.add_output(traj_path)
    manifest.add_output(out / "minimize.json")
    manifest.finish(out)
    print(
        f"n={rep.n}: start {rep.start_energy:.2f} -> end {rep.end_energy:.2f} "
        f"(min band lower {rep.references['min_lower']:.2f})"
    )
    return 0


def cmd_verify(args) -> int:
    config, manifest, out = _prepare(args)
    results = acceptance.run_all(quick=config["quick"], workers=config["threads"])
    for res in results:
        print(res.report())
    report_path = out / "verify.txt"
    with open(report_path, "w") as fh:
        fh.write("\n".join(res.report() for res in results) + "\n")
        fh.write(f"\n{sum(r.passed for r in results)}/{len(results)} criteria passed\n")
    manifest.add_output(report_path)
    manifest.finish(out)
    failed = [r for r in results if not r.passed]
    print(f"\n{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


COMMANDS = {
    "sample": cmd_sample,
    "mc": cmd_mc,
    "constants": cmd_constants,
    "kacrice": cmd_kacrice,
    "minimize": cmd_minimize,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.subcommand](args)
    except harness.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
