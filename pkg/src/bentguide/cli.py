"""Command-line front end.

Every subcommand writes a data file (CSV, or JSON with ``--format json``)
and prints a one-line summary.  Bad arguments exit with status 2.  A
numerical failure exits with status 1 after writing a JSON error record to
stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__, conformal, fd_oracle, io, oblique, potentials, spectrum, validation
from .errors import BentGuideError
from .geometry import arm_threshold, geometry_from_q, geometry_from_slope


def _ranged(lo: float, hi: float, lo_open: bool = True, hi_open: bool = True):
    def parse(text: str) -> float:
        try:
            x = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        low_ok = x > lo if lo_open else x >= lo
        high_ok = x < hi if hi_open else x <= hi
        if not (math.isfinite(x) and low_ok and high_ok):
            raise argparse.ArgumentTypeError(f"{x!r} outside {'(' if lo_open else '['}{lo:g}, {hi:g}{')' if hi_open else ']'}")
        return x

    return parse


def _int_at_least(lo: int):
    def parse(text: str) -> int:
        try:
            x = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if x < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}")
        return x

    return parse


q_type = _ranged(0.0, 1.0)
positive = _ranged(0.0, math.inf)
slope_type = _ranged(0.0, math.inf, lo_open=False)


def _write_table(args, header, rows, q) -> int:
    rows = list(rows)
    if args.format == "json":
        io.write_json(args.out, {
            "header": list(header),
            "rows": [[v.item() if hasattr(v, "item") else v for v in r] for r in rows],
            "metadata": io.metadata_line(q),
        })
        return len(rows)
    return io.write_csv(args.out, header, rows, q)


def cmd_map(args) -> str:
    grid = conformal.export_contours(args.q, args.nu, args.nv, args.v_max, args.l)
    rows = zip(np.full(grid.u.size, args.q), grid.u.ravel(), grid.v.ravel(),
               grid.x.ravel(), grid.y.ravel(), grid.jacobian.ravel())
    n = _write_table(args, ("q", "u", "v", "x", "y", "jacobian"), rows, args.q)
    return f"map q={args.q:g}: {n} points, F(pi)={conformal.outer_corner(args.q):.12g}, wrote {args.out}"


def cmd_potential(args) -> str:
    v = np.linspace(-args.v_max, args.v_max, args.samples)
    V = potentials.mode_potential_matrix(args.q, args.n_max, v)
    rows = []
    feats = []
    for n in range(1, args.n_max + 1):
        vals = V[:, n - 1, n - 1]
        slope = np.gradient(vals, v)
        rows.extend((args.q, n, vv, val, s) for vv, val, s in zip(v, vals, slope))
        feats.append(potentials.numeric_features(args.q, n))
    count = _write_table(args, ("q", "n", "v", "V", "Vprime"), rows, args.q)
    v0, vp = feats[0]
    return f"potential q={args.q:g}: {count} rows, V_1(0)={v0:.6f}, max|V_1'|={vp:.6f}, wrote {args.out}"


def cmd_spectrum(args) -> str:
    if args.q_max < args.q_min:
        raise argparse.ArgumentTypeError("--q-max must not be below --q-min")
    q_grid = np.linspace(args.q_min, args.q_max, args.steps)
    results = spectrum.spectrum_sweep(q_grid, args.n_max, args.features)
    rows = [(r.q, r.n, r.method, r.energy, r.threshold, r.below_threshold) for r in results]
    count = _write_table(args, ("q", "n", "method", "energy", "threshold", "below_threshold"), rows,
                         f"{args.q_min:g}..{args.q_max:g}")
    below = sum(r.below_threshold for r in results)
    failed = sum(r.error is not None for r in results)
    return f"spectrum: {count} rows, {below} below threshold, {failed} failed points, wrote {args.out}"


def cmd_density(args) -> str:
    field = spectrum.density_map(args.q, args.n, grid=(args.nu, args.nv), l=args.l)
    count = _write_table(args, ("x", "y", "density"), zip(field.x, field.y, field.density), args.q)
    return (f"density q={args.q:g} n={args.n}: E={field.energy:.6f}, lattice norm={field.lattice_norm:.5f}, "
            f"{count} points, wrote {args.out}")


def cmd_oblique(args) -> str:
    g = geometry_from_slope(args.a, args.l)
    state = oblique.solve_ground_state(g, args.size)
    xs = np.linspace(-args.x_max * args.l, args.x_max * args.l, args.nx)
    ys = np.linspace(-args.l, args.a * args.x_max * args.l, args.ny)
    X, Y = np.meshgrid(xs, ys)
    psi = oblique.oblique_wavefunction(state, g, X, Y)
    count = _write_table(args, ("x", "y", "psi"), zip(X.ravel(), Y.ravel(), psi.ravel()), g.q)
    closed = oblique.ground_state_scaled(g)
    return (f"oblique a={args.a:g} size={args.size}: E0 scaled={state.scaled_energy:.6f} "
            f"(closed form {closed:.6f}), {count} points, wrote {args.out}")


def cmd_oracle(args) -> str:
    g = geometry_from_q(args.q, args.l) if args.a is None else geometry_from_slope(args.a, args.l)
    h = args.l / args.h_div
    x_cut = args.x_cut * args.l
    grid = fd_oracle.build_grid(g, h, x_cut)
    pairs = fd_oracle.lowest_eigenpairs(grid, args.k)
    count = _write_table(args, ("x", "y", "psi"), zip(grid.x, grid.y, pairs[0].field), g.q)
    record = {
        "q": g.q, "a": g.slope_a, "l": g.l, "h": h, "x_cut": x_cut,
        "threshold": arm_threshold(g),
        "energies": [p.energy for p in pairs],
        "normalized": [p.normalized for p in pairs],
        "bound": [p.bound for p in pairs],
        "residuals": [p.residual for p in pairs],
    }
    if args.json:
        io.write_json(args.json, record)
    n_bound = sum(p.bound for p in pairs)
    return (f"oracle q={g.q:.6g}: {grid.interior_points} sites, {n_bound} bound, "
            f"E0/threshold={pairs[0].normalized:.6f}, {count} points, wrote {args.out}")


def cmd_validate(args) -> str:
    results = validation.run_all(args.criteria)
    for r in results:
        print(r.line(), flush=True)
    if args.json:
        io.write_json(args.json, [
            {"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail, "seconds": r.seconds}
            for r in results
        ])
    passed = sum(r.passed for r in results)
    args._failed = passed < len(results)
    return f"validate: {passed}/{len(results)} criteria passed"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bentguide", description="Bound states of a sharply bent 2D waveguide.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_out(sp, required=True):
        sp.add_argument("-o", "--out", required=required, help="output data file")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("map", help="iso-coordinate lines of the conformal map")
    sp.add_argument("--q", type=q_type, required=True)
    sp.add_argument("--nu", type=_int_at_least(2), default=21)
    sp.add_argument("--nv", type=_int_at_least(2), default=41)
    sp.add_argument("--v-max", type=positive, default=3.0)
    sp.add_argument("--l", type=positive, default=math.pi)
    add_out(sp)
    sp.set_defaults(func=cmd_map)

    sp = sub.add_parser("potential", help="diagonal mode potentials and slopes")
    sp.add_argument("--q", type=q_type, required=True)
    sp.add_argument("--n-max", type=_int_at_least(1), default=3)
    sp.add_argument("--v-max", type=positive, default=5.0)
    sp.add_argument("--samples", type=_int_at_least(3), default=401)
    add_out(sp)
    sp.set_defaults(func=cmd_potential)

    sp = sub.add_parser("spectrum", help="conformal WKB energies over a q grid")
    sp.add_argument("--q-min", type=q_type, required=True)
    sp.add_argument("--q-max", type=q_type, required=True)
    sp.add_argument("--steps", type=_int_at_least(1), required=True)
    sp.add_argument("--n-max", type=_int_at_least(1), default=4)
    sp.add_argument("--features", choices=("estimate", "numeric"), default="estimate")
    add_out(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("density", help="probability density of a conformal-mode state")
    sp.add_argument("--q", type=q_type, required=True)
    sp.add_argument("--n", type=_int_at_least(1), default=1)
    sp.add_argument("--nu", type=_int_at_least(3), default=41)
    sp.add_argument("--nv", type=_int_at_least(3), default=801)
    sp.add_argument("--l", type=positive, default=math.pi)
    add_out(sp)
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("oblique", help="oblique-mode ground state and field")
    sp.add_argument("--a", type=slope_type, required=True)
    sp.add_argument("--size", type=_int_at_least(1), default=2)
    sp.add_argument("--l", type=positive, default=math.pi)
    sp.add_argument("--x-max", type=positive, default=4.0, help="half-width of the field window in units of l")
    sp.add_argument("--nx", type=_int_at_least(2), default=161)
    sp.add_argument("--ny", type=_int_at_least(2), default=81)
    add_out(sp)
    sp.set_defaults(func=cmd_oblique)

    sp = sub.add_parser("oracle", help="finite-difference eigenstates of the bent guide")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--q", type=q_type)
    grp.add_argument("--a", type=slope_type)
    sp.add_argument("--l", type=positive, default=math.pi)
    sp.add_argument("--h-div", type=_ranged(20.0, math.inf), default=40.0, help="lattice spacing is l / h_div")
    sp.add_argument("--x-cut", type=positive, default=8.0, help="arm cut position in units of l")
    sp.add_argument("--k", type=_int_at_least(1), default=4)
    sp.add_argument("--json", help="JSON summary path")
    add_out(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("validate", help="run the acceptance criteria")
    sp.add_argument("--criteria", type=int, nargs="+", choices=sorted(validation.CRITERIA))
    sp.add_argument("--json", help="JSON report path")
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        summary = args.func(args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except (BentGuideError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        record = {"command": args.command, "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1
    print(summary)
    return 1 if getattr(args, "_failed", False) else 0


if __name__ == "__main__":
    sys.exit(main())
