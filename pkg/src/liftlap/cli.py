"""Command-line front end: mesh generation, operator runs, convergence studies."""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .convergence import (
    compare_to_csv,
    report_to_csv,
    run_compare,
    run_convergence,
)
from .mesh import DomainKind, generate_planar, load_mesh, mesh_stats, save_off
from .operators import LtlOptions, OperatorKind, apply_operator
from .plotting import report_series, save_convergence_svg
from .surfaces import TestFunction, get_scalar_field, get_surface

_DOMAIN_CHOICES = ["three", "four", "unstructured", "a", "b", "c"]
_OP_CHOICES = [k.value for k in OperatorKind]
_SURFACE_CHOICES = ["F1", "F2", "F3", "F4", "flat"]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="liftlap",
        description="Discrete Laplace-Beltrami operators on triangle meshes "
        "and convergence studies over analytic graph surfaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-mesh", help="generate a planar or graph-surface mesh")
    g.add_argument("--kind", required=True, choices=_DOMAIN_CHOICES)
    g.add_argument("--n", required=True, type=int, help="cells per side")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--surface", choices=_SURFACE_CHOICES, default=None,
                   help="map z through this height field")
    g.add_argument("--out", default=None, help="OFF file to write")
    g.set_defaults(func=cmd_gen_mesh)

    a = sub.add_parser("apply", help="evaluate one operator on a mesh")
    a.add_argument("--mesh", required=True)
    a.add_argument("--op", required=True, choices=_OP_CHOICES)
    a.add_argument("--field", required=True,
                   help="builtin field name or a per-vertex CSV file")
    a.add_argument("--out", required=True, help="CSV file to write")
    a.add_argument("--neighbor-count", type=int, default=5)
    a.add_argument("--max-ring", type=int, default=3)
    a.set_defaults(func=cmd_apply)

    c = sub.add_parser("convergence", help="refinement study for one operator")
    _add_study_args(c)
    c.add_argument("--op", default="ltl", choices=_OP_CHOICES)
    c.set_defaults(func=cmd_convergence)

    m = sub.add_parser("compare", help="refinement study for several operators")
    _add_study_args(m)
    m.add_argument("--ops", required=True,
                   help="comma-separated operator list, e.g. ltl,xu")
    m.set_defaults(func=cmd_compare)
    return parser


def _add_study_args(p):
    p.add_argument("--surface", required=True, choices=_SURFACE_CHOICES)
    p.add_argument("--domain", required=True, choices=_DOMAIN_CHOICES)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["coordinate", "scalar"], default="coordinate")
    p.add_argument("--field", default="sincos",
                   help="scalar-mode test function (sincos or quadratic)")
    p.add_argument("--base-n", type=int, default=None,
                   help="override the base resolution of the ladder")
    p.add_argument("--warmup", type=int, default=0,
                   help="subdivisions applied before the first reported level")
    p.add_argument("--neighbor-count", type=int, default=5)
    p.add_argument("--max-ring", type=int, default=3)
    p.add_argument("--out", required=True, help="output prefix (.csv and .svg)")


def cmd_gen_mesh(args):
    mesh = generate_planar(DomainKind.parse(args.kind), args.n, args.seed)
    if args.surface is not None:
        from .convergence import graph_mesh

        mesh = graph_mesh(mesh, get_surface(args.surface))
    stats = mesh_stats(mesh)
    if args.out is not None:
        with open(args.out, "w") as fh:
            fh.write(save_off(mesh))
    print("vertices=%d faces=%d r=%.17g"
          % (stats.n_vertices, stats.n_faces, stats.mesh_size_r))
    return 0


_BUILTIN_FIELDS = {
    "constant": lambda p: np.ones(len(p)),
    "x": lambda p: p[:, 0].copy(),
    "y": lambda p: p[:, 1].copy(),
    "xy": lambda p: p[:, 0] * p[:, 1],
    "x2": lambda p: p[:, 0] ** 2,
    "y2": lambda p: p[:, 1] ** 2,
    "quadratic": lambda p: p[:, 0] ** 2 + p[:, 1] ** 2,
    "coord-x": lambda p: p[:, 0].copy(),
    "coord-y": lambda p: p[:, 1].copy(),
    "coord-z": lambda p: p[:, 2].copy(),
}


def _field_from_spec(spec, mesh):
    if spec in _BUILTIN_FIELDS:
        return _BUILTIN_FIELDS[spec](mesh.vertices)
    if os.path.exists(spec):
        values = np.full(mesh.n_vertices, np.nan)
        seen = 0
        with open(spec, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() == "vertex":
                    continue
                idx = int(row[0])
                if not 0 <= idx < mesh.n_vertices:
                    raise ValueError("field row references vertex %d" % idx)
                values[idx] = float(row[1])
                seen += 1
        if seen != mesh.n_vertices or np.isnan(values).any():
            raise ValueError(
                "field length mismatch: %d values for %d vertices"
                % (seen, mesh.n_vertices)
            )
        return values
    raise ValueError(
        "unknown field %r (builtins: %s; or pass a CSV path)"
        % (spec, ", ".join(_BUILTIN_FIELDS))
    )


def _load_mesh_path(path):
    fmt = "obj" if path.lower().endswith(".obj") else "off"
    with open(path) as fh:
        return load_mesh(fh.read(), fmt)


def cmd_apply(args):
    mesh = _load_mesh_path(args.mesh)
    h = _field_from_spec(args.field, mesh)
    opts = LtlOptions(neighbor_count=args.neighbor_count, max_ring=args.max_ring)
    field = apply_operator(args.op, mesh, h, opts)
    failure_kind = dict(field.failures)
    boundary = mesh.boundary_vertex_mask
    defined = field.defined
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vertex", "value", "status"])
        for v in range(mesh.n_vertices):
            if defined[v]:
                writer.writerow([v, "%.17g" % field.values[v], "ok"])
            elif v in failure_kind:
                writer.writerow([v, "", failure_kind[v]])
            elif boundary[v]:
                writer.writerow([v, "", "boundary"])
            else:
                writer.writerow([v, "", "failed"])
    n_fail = len(field.failures)
    print("wrote %s (%d ok, %d boundary, %d failed)"
          % (args.out, int(defined.sum()),
             int((boundary & ~defined).sum()) - n_fail, n_fail))
    return 0


def _study_inputs(args):
    surface = get_surface(args.surface)
    kind = DomainKind.parse(args.domain)
    if args.mode == "coordinate":
        tf = TestFunction.coordinate()
    else:
        tf = get_scalar_field(args.field)
    opts = LtlOptions(neighbor_count=args.neighbor_count, max_ring=args.max_ring)
    return surface, kind, tf, opts


def cmd_convergence(args):
    surface, kind, tf, opts = _study_inputs(args)
    report = run_convergence(
        args.op, surface, kind, tf, args.levels, args.seed, opts, args.base_n,
        args.warmup,
    )
    with open(args.out + ".csv", "w", newline="") as fh:
        fh.write(report_to_csv(report))
    save_convergence_svg(
        args.out + ".svg",
        report_series([report]),
        title="%s on %s, domain %s" % (args.op, args.surface, kind.value),
    )
    suffix = " (at noise floor)" if report.at_noise_floor else ""
    print("order=%.4f%s" % (report.fitted_order, suffix))
    if report.fitted_order < 0.2 and not report.at_noise_floor:
        print("warning: no convergence detected (fitted order %.4f)"
              % report.fitted_order)
    return 0


def cmd_compare(args):
    ops = [s.strip() for s in args.ops.split(",") if s.strip()]
    if not ops:
        print("error: --ops needs at least one operator", file=sys.stderr)
        return 2
    surface, kind, tf, opts = _study_inputs(args)
    reports = run_compare(
        ops, surface, kind, tf, args.levels, args.seed, opts, args.base_n,
        args.warmup,
    )
    with open(args.out + ".csv", "w", newline="") as fh:
        fh.write(compare_to_csv(reports))
    save_convergence_svg(
        args.out + ".svg",
        report_series(reports),
        title="%s, domain %s" % (args.surface, kind.value),
    )
    for rep in reports:
        print("op=%s order=%.4f seconds=%.6f"
              % (rep.operator.value, rep.fitted_order,
                 sum(lv.wall_time for lv in rep.levels)))
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
