"""Command-line interface.

Subcommands: grid, label, sperner, fixpoint, converse, render.  JSON goes to
stdout (or --out); human-readable summaries go to stderr.  Exit codes:
0 success/converged, 2 invalid input, 3 non-contraction witness,
4 resource limit.
"""

import argparse
import json
import sys
from fractions import Fraction

from .construction import roundtrip_check
from .errors import FixsimError, ResourceLimit
from .fixedpoint import ModulusOfContinuity, refine_fixed_point
from .labeling import Labeling, check_admissible, label_from_function
from .mapspec import parse_map
from .render import render_svg
from .simplex import subdivide
from .sperner import count_fully_labeled, find_fully_labeled

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_WITNESS = 3
EXIT_RESOURCE = 4


def _emit(payload, out_path):
    text = json.dumps(payload, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _note(message):
    print(message, file=sys.stderr)


def _load_map(args):
    if getattr(args, "map_file", None):
        with open(args.map_file) as handle:
            text = handle.read()
    else:
        text = args.map
    if not text:
        raise FixsimError("give --map or --map-file")
    return parse_map(text, args.n)


def _load_labeling(path):
    with open(path) as handle:
        return Labeling.from_json_dict(json.load(handle))


def cmd_grid(args):
    grid = subdivide(args.n, args.m)
    _emit(grid.to_json_dict(), args.out)
    _note(f"grid n={args.n} m={args.m}: {grid.num_cells} cells, "
          f"{grid.num_vertices} vertices")
    return EXIT_OK


def cmd_label(args):
    grid = subdivide(args.n, args.m)
    spec = _load_map(args)
    labeling = label_from_function(grid, spec, exact=args.rational,
                                   threads=args.threads)
    _emit(labeling.to_json_dict(), args.out)
    _note(f"labeled {grid.num_vertices} vertices from map {spec.to_text()!r}")
    return EXIT_OK


def cmd_sperner(args):
    labeling = _load_labeling(args.labeling)
    grid = labeling.grid
    violations = check_admissible(grid, labeling)
    if violations:
        _emit(
            {
                "admissible": False,
                "violations": [
                    {"v": list(v.int_coords), "l": v.label, "reason": v.reason}
                    for v in violations
                ],
            },
            args.out,
        )
        _note(f"labeling inadmissible: {len(violations)} violations")
        return EXIT_INVALID
    count = count_fully_labeled(grid, labeling, threads=args.threads)
    cell = find_fully_labeled(grid, labeling, strategy=args.strategy)
    _emit({"count": count, "firstCell": [int(i) for i in cell.vertex_ids]},
          args.out)
    _note(f"{count} fully labeled cells (odd: {count % 2 == 1})")
    return EXIT_OK


def cmd_fixpoint(args):
    spec = _load_map(args)
    modulus = None
    if args.lipschitz is not None:
        modulus = ModulusOfContinuity(lipschitz=args.lipschitz)
    elif args.modulus_table:
        with open(args.modulus_table) as handle:
            modulus = ModulusOfContinuity(table=tuple(map(tuple, json.load(handle))))
    result = refine_fixed_point(
        spec,
        tol=args.tol,
        modulus=modulus,
        delta_check=args.delta_check,
        witness_floor=args.witness_floor,
        threads=args.threads,
        seed=args.seed,
    )
    _emit(result.to_json_dict(), args.out)
    if result.status == "converged":
        _note(f"converged: residual {result.residual:.3e} after "
              f"{len(result.trace)} levels")
        return EXIT_OK
    w = result.witness
    _note(f"non-contraction witness: |x-y|={w.distance:.3e} with residuals "
          f"{w.residual_x:.3e}, {w.residual_y:.3e}")
    return EXIT_WITNESS


def cmd_converse(args):
    labeling = _load_labeling(args.labeling)
    violations = check_admissible(labeling.grid, labeling)
    if violations:
        _emit(
            {
                "admissible": False,
                "violations": [
                    {"v": list(v.int_coords), "l": v.label, "reason": v.reason}
                    for v in violations
                ],
            },
            args.out,
        )
        _note(f"labeling inadmissible: {len(violations)} violations")
        return EXIT_INVALID
    tau = Fraction(args.tau) if args.tau else None
    report = roundtrip_check(labeling.grid, labeling, tau=tau, tol=args.tol,
                             seed=args.seed)
    _emit(report.to_json_dict(), args.out)
    _note(f"exact fixed point at {[str(c) for c in report.exact_point.coords]}; "
          f"solver residual {report.solver_residual:.3e}")
    return EXIT_OK


def cmd_render(args):
    if args.labeling:
        labeling = _load_labeling(args.labeling)
        grid = labeling.grid
    else:
        from .simplex import SubdivisionGrid

        with open(args.grid) as handle:
            grid = SubdivisionGrid.from_json_dict(json.load(handle))
        labeling = None
    svg = render_svg(grid, labeling)
    with open(args.out, "w") as handle:
        handle.write(svg)
    _note(f"wrote {args.out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fixsim",
        description="Fixed points on the simplex via subdivision and labeling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grid", help="emit subdivision grid JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("label", help="label a grid from a map")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--map")
    p.add_argument("--map-file")
    p.add_argument("--rational", action="store_true",
                   help="evaluate the map in exact rational arithmetic")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("sperner", help="count and locate fully labeled cells")
    p.add_argument("--labeling", required=True)
    p.add_argument("--strategy", choices=("exhaustive", "path"),
                   default="exhaustive")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sperner)

    p = sub.add_parser("fixpoint", help="refine a fixed point of a map")
    p.add_argument("--map")
    p.add_argument("--map-file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--lipschitz", type=float)
    p.add_argument("--modulus-table",
                   help="JSON file with [eps, delta] rows")
    p.add_argument("--delta-check", type=float)
    p.add_argument("--witness-floor", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fixpoint)

    p = sub.add_parser("converse", help="exact fixed point from a labeling "
                                        "plus solver cross-check")
    p.add_argument("--labeling", required=True)
    p.add_argument("--tau", help="perturbation size as a fraction, e.g. 1/8")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_converse)

    p = sub.add_parser("render", help="render a 2-D grid or labeling to SVG")
    p.add_argument("--grid")
    p.add_argument("--labeling")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "render" and not (args.grid or args.labeling):
        parser.error("render needs --grid or --labeling")
    try:
        return args.func(args)
    except ResourceLimit as exc:
        _note(f"resource limit: {exc}")
        return EXIT_RESOURCE
    except FixsimError as exc:
        _note(f"error: {exc}")
        return EXIT_INVALID
    except OSError as exc:
        _note(f"io error: {exc}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
