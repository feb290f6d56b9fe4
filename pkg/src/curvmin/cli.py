"""Batch command-line front end.

Subcommands:

* ``mesh``   - generate or transform a mesh and write it as OBJ;
* ``run``    - execute a continuation run from a TOML configuration,
  producing OBJ snapshots, metrics.csv, report.json, and figures;
* ``verify`` - print the optimality report of a mesh as JSON.

Exit codes for ``run``: 0 when the ladder completed, 2 when the final
stage stalled in its line search, 1 on any error.  ``verify`` exits 0
exactly when the mesh passes validation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .distance import ReferenceSurface
from .energy import EnergyParams
from .errors import CurvminError
from .mesh import build_icosphere, load_obj, perturb_radial, \
    rescale_to_area, save_obj, total_area, validate
from .optimize import continuation_run
from .report import render_run_figures, render_three_value_figure, \
    run_report_dict, write_metrics_csv, write_report_json
from .verifier import three_value_report
from .weights import weight_from_dict

THREADS_ENV = "CURVMIN_NUM_THREADS"


def _apply_thread_override():
    n = os.environ.get(THREADS_ENV)
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = n


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="curvmin",
        description="Curvature sup-norm minimization on closed triangle "
                    "meshes via p-continuation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    pm = sub.add_parser("mesh", help="generate or transform a mesh")
    src = pm.add_mutually_exclusive_group(required=True)
    src.add_argument("--icosphere", type=int, metavar="SUBDIVISIONS",
                     help="generate an icosphere")
    src.add_argument("--input", metavar="OBJ", help="load an existing OBJ")
    pm.add_argument("--radius", type=float, default=1.0)
    pm.add_argument("--area", type=float, default=None,
                    help="rescale to this surface area")
    pm.add_argument("--perturb", type=float, default=0.0,
                    help="radial noise amplitude")
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("-o", "--output", required=True, metavar="OBJ")

    pr = sub.add_parser("run", help="continuation run from a config file")
    pr.add_argument("config", help="TOML run configuration")
    pr.add_argument("--output", default=None, help="override output dir")
    pr.add_argument("--seed", type=int, default=None)
    pr.add_argument("--sigma", type=float, default=None)
    pr.add_argument("--reference", default=None)
    pr.add_argument("--max-iters", type=int, default=None)
    pr.add_argument("--snapshot-every", type=int, default=None)
    pr.add_argument("--no-figures", action="store_true")

    pv = sub.add_parser("verify", help="optimality report for a mesh")
    pv.add_argument("mesh", help="OBJ path")
    pv.add_argument("--p", type=float, default=4.0)
    pv.add_argument("--epsilon", type=float, default=0.0)
    pv.add_argument("--sigma", type=float, default=0.0)
    pv.add_argument("--reference", default=None)
    pv.add_argument("--target-area", type=float, default=None,
                    help="defaults to the mesh's own area")
    pv.add_argument("--weight-kind", default="constant",
                    choices=("constant", "radial_quadratic",
                             "axis_quadratic"))
    pv.add_argument("--weight-value", type=float, default=1.0)
    pv.add_argument("--weight-coeff", type=float, default=1.0)
    pv.add_argument("--weight-center", type=float, nargs=3,
                    default=(0.0, 0.0, 0.0), metavar=("X", "Y", "Z"))
    pv.add_argument("--weight-axis", type=float, nargs=3,
                    default=(0.0, 0.0, 1.0), metavar=("X", "Y", "Z"))
    pv.add_argument("--tau", type=float, default=0.05)
    pv.add_argument("--delta-c", type=float, default=0.10)
    pv.add_argument("--figures-dir", default=None)
    return parser


def cmd_mesh(args) -> int:
    if args.icosphere is not None:
        mesh = build_icosphere(args.icosphere, args.radius)
    else:
        mesh = load_obj(args.input)
    if args.perturb > 0.0:
        mesh = perturb_radial(mesh, args.perturb, args.seed)
    if args.area is not None:
        mesh = rescale_to_area(mesh, args.area)
    report = validate(mesh)
    save_obj(mesh, args.output)
    print(f"wrote {args.output}: V={mesh.num_vertices} E={mesh.num_edges} "
          f"F={mesh.num_triangles} chi={mesh.euler_characteristic()} "
          f"area={total_area(mesh):.12g}")
    print(report)
    return 0 if report.ok else 1


def _weight_from_args(args):
    if args.weight_kind == "constant":
        record = {"kind": "constant", "value": args.weight_value}
    elif args.weight_kind == "radial_quadratic":
        record = {"kind": "radial_quadratic",
                  "center": list(args.weight_center),
                  "coeff": args.weight_coeff}
    else:
        record = {"kind": "axis_quadratic", "axis": list(args.weight_axis),
                  "coeff": args.weight_coeff}
    return weight_from_dict(record)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output is not None:
        cfg.output_directory = args.output
    if args.seed is not None:
        cfg.seed = args.seed
    if args.sigma is not None:
        cfg.sigma = args.sigma
    if args.reference is not None:
        cfg.reference_path = args.reference
        if not os.path.exists(cfg.reference_path):
            raise ConfigError(f"reference does not exist: "
                              f"{cfg.reference_path}")
    if args.max_iters is not None:
        from dataclasses import replace
        cfg.schedule = replace(cfg.schedule,
                               max_iters_per_stage=args.max_iters)
    if args.snapshot_every is not None:
        cfg.snapshot_every = args.snapshot_every
    if args.no_figures:
        cfg.figures = False

    params = cfg.build_params()
    mesh = cfg.build_mesh()
    out = cfg.output_directory
    os.makedirs(out, exist_ok=True)
    save_obj(mesh, os.path.join(out, "start.obj"))

    def on_iteration(stage, iteration, current):
        if cfg.snapshot_every > 0 and iteration > 0 \
                and iteration % cfg.snapshot_every == 0:
            save_obj(current, os.path.join(
                out, f"stage{stage:02d}_iter{iteration:05d}.obj"))

    def on_stage(stage, p, current):
        save_obj(current, os.path.join(out, f"stage{stage:02d}_p{p:g}.obj"))

    result = continuation_run(mesh, params, cfg.schedule,
                              iteration_callback=on_iteration,
                              stage_callback=on_stage)
    if not result.start_low_energy_ok:
        print(f"warning: start mesh violates the low-energy gate "
              f"({result.start_low_energy_value:.4f} >= "
              f"{math.sqrt(8 * math.pi):.4f}); "
              "topology control is off warranty", file=sys.stderr)

    save_obj(result.final_mesh, os.path.join(out, "final.obj"))
    write_metrics_csv(result.rows, os.path.join(out, "metrics.csv"))
    write_report_json(run_report_dict(result, cfg.to_dict()),
                      os.path.join(out, "report.json"))
    if cfg.figures:
        render_run_figures(result, params.weight, out)

    for i, s in enumerate(result.stages):
        print(f"stage {i}: p={s.p:g} eps={s.epsilon:.3g} "
              f"iters={s.iterations} {s.reason} h={s.final_h:.6g} "
              f"lambda={s.final_lambda:.6g} "
              f"residual={s.report.residual_l2:.4g}")
    if result.aborted:
        print(f"aborted: {result.abort_message}", file=sys.stderr)
        return 1
    if not result.converged:
        print("final stage stalled before completing its minimization",
              file=sys.stderr)
        return 2
    print(f"run complete: output in {out}")
    return 0


def cmd_verify(args) -> int:
    mesh = load_obj(args.mesh)
    vreport = validate(mesh)
    target_area = args.target_area
    if target_area is None:
        target_area = total_area(mesh)
    reference = None
    if args.sigma > 0.0:
        if args.reference is None:
            raise ConfigError("sigma > 0: reference required")
        reference = ReferenceSurface(load_obj(args.reference))
    params = EnergyParams(p=args.p, epsilon=args.epsilon, sigma=args.sigma,
                          target_area=target_area,
                          weight=_weight_from_args(args),
                          reference=reference)
    report = three_value_report(mesh, params, tau=args.tau,
                                delta_c=args.delta_c)
    doc = report.to_json_dict()
    doc["q_branch"] = "exact" if args.epsilon == 0.0 else "regularized"
    doc["mesh_valid"] = vreport.ok
    doc["validation_messages"] = list(vreport.messages)
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    print()
    if args.figures_dir is not None:
        os.makedirs(args.figures_dir, exist_ok=True)
        render_three_value_figure(report, mesh, params.weight,
                                  args.figures_dir)
    return 0 if vreport.ok else 1


def main(argv=None) -> int:
    _apply_thread_override()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "mesh":
            return cmd_mesh(args)
        if args.command == "run":
            return cmd_run(args)
        return cmd_verify(args)
    except (CurvminError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
