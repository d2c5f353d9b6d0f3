"""Command-line front end.

Exit codes: 0 ok, 1 study trend check failed, 2 invalid input, 3 design infeasible, 4 eigensolver did not
converge, 5 internal invariant breach.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .bands import convergence_study, estimate_lambda, sweep_bands
from .design import (
    DEFAULT_GAMMA,
    DEFAULT_MARGIN,
    TargetGaps,
    design,
    geometry_to_model,
    roundtrip_verify,
)
from .errors import NoConvergence, ResgapError, RoundtripMismatch, ValidationError
from .geometry import CellGeometry2D
from .limit_model import (
    UnitCellModel,
    build_matrix_AN,
    compute_betas,
    eigenvalues_AD,
    eigenvalues_AN,
    maxwell_gaps,
)
from .raster import passage_epsilon, rasterize

log = logging.getLogger("resgap")

MATRIX_RTOL = 1e-9
DEFAULT_LADDER_CELLS = (12, 6, 3)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_gaps(alphas, betas):
    print(f"{'j':>3} {'alpha':>22} {'beta':>22}")
    for j, (a, b) in enumerate(zip(alphas, betas), 1):
        print(f"{j:>3} {a:>22.15g} {b:>22.15g}")


def _print_maxwell(report):
    print("frequency gaps +-(sqrt(alpha), sqrt(beta)):")
    for lo, hi in maxwell_gaps(report):
        print(f"  ({lo:.12g}, {hi:.12g})")


def cmd_forward(args) -> int:
    model = UnitCellModel.from_dict(io.read_json(args.input))
    report = compute_betas(model)
    out = _out_dir(args)
    io.write_json(out / "gap_report.json", report.to_dict())
    _print_gaps(report.alphas, report.betas)
    if args.maxwell:
        io.write_json(out / "maxwell_gaps.json", {"intervals": maxwell_gaps(report)})
        _print_maxwell(report)
    return 0


def cmd_design(args) -> int:
    targets = TargetGaps.from_dict(io.read_json(args.input))
    eps = args.epsilon[0] if args.epsilon else None
    solution, geometry = design(targets, args.gamma, args.layout_margin, epsilon=eps)
    out = _out_dir(args)
    io.write_json(out / "geometry.json", geometry.to_dict())
    io.write_json(out / "design.json", solution.to_dict())
    try:
        report = roundtrip_verify(geometry, targets)
    except RoundtripMismatch as exc:
        print(f"roundtrip FAILED: {exc}", file=sys.stderr)
        return exc.exit_code
    io.write_json(out / "gap_report.json", report.to_dict())
    print(f"designed {targets.m} resonator(s), gamma={args.gamma}")
    for j, (r, t, e) in enumerate(zip(solution.rhos, solution.taus, solution.etas), 1):
        print(f"  j={j}: rho={r:.12g} tau={t:.12g} eta={e:.12g}")
    print("roundtrip pass:")
    _print_gaps(report.alphas, report.betas)
    if args.maxwell:
        _print_maxwell(report)
    return 0


def cmd_verify_matrix(args) -> int:
    model = UnitCellModel.from_dict(io.read_json(args.input))
    report = compute_betas(model)
    ev_n = eigenvalues_AN(build_matrix_AN(model))
    ev_d = eigenvalues_AD(model)
    dev_n = float(np.max(np.abs(ev_n[1:] - report.betas) / np.abs(report.betas)))
    dev_d = float(np.max(np.abs(ev_d - report.alphas) / np.abs(report.alphas)))
    kernel = float(abs(ev_n[0]))
    ok = dev_n < MATRIX_RTOL and dev_d < MATRIX_RTOL and kernel < 1e-10 * max(1.0, ev_n[-1])
    io.write_json(_out_dir(args) / "matrix_check.json", {
        "eigenvalues_AN": ev_n, "eigenvalues_AD": ev_d, "betas": report.betas,
        "alphas": report.alphas, "max_rel_dev_AN": dev_n, "max_rel_dev_AD": dev_d, "pass": ok,
    })
    print(f"A^N eigenvalues: {' '.join(f'{v:.12g}' for v in ev_n)}")
    print(f"A^D eigenvalues: {' '.join(f'{v:.12g}' for v in ev_d)}")
    print(f"max relative deviation from (beta, alpha): {dev_n:.2e}, {dev_d:.2e} "
          f"-> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 5


def _load_geometry_or_targets(args):
    data = io.read_json(args.input)
    if "rects_F" in data:
        geometry = CellGeometry2D.from_dict(data)
        targets = None
        if geometry.m:
            r = compute_betas(geometry_to_model(geometry))
            targets = TargetGaps(r.alphas, r.betas)
        return geometry, targets
    targets = TargetGaps.from_dict(data)
    return design(targets, args.gamma, args.layout_margin)[1], targets


def _epsilons(args, geometry) -> list[float]:
    if args.epsilon:
        return list(args.epsilon)
    if geometry.m == 0:
        return [1.0]
    return [passage_epsilon(geometry, args.grid_n, c) for c in DEFAULT_LADDER_CELLS]


def cmd_bands(args) -> int:
    geometry, targets = _load_geometry_or_targets(args)
    eps = _epsilons(args, geometry)[-1]
    k_max = args.k_max or geometry.m + 2
    cell = rasterize(geometry, eps, args.grid_n)
    out = _out_dir(args)
    io.write_pgm(out / "mask.pgm", cell)
    lam_hat = estimate_lambda(geometry, args.theta_grid, args.grid_n)
    cutoff = lam_hat / eps**2
    try:
        sweep = sweep_bands(cell, args.theta_grid, k_max, strict=False)
    except NoConvergence as exc:
        print(f"eigensolver failed: {exc}", file=sys.stderr)
        return exc.exit_code
    gaps = sweep.gaps_below(cutoff)
    io.write_bands_csv(out / "bands.csv", sweep)
    alphas = targets.alphas_t if targets else None
    betas = targets.betas_t if targets else None
    io.write_gaps_csv(out / "gaps.csv", gaps, alphas, betas)
    print(f"epsilon={eps:.6g} grid_n={args.grid_n} passages={cell.passage_cells} "
          f"Lambda_hat={lam_hat:.6g} cutoff={cutoff:.6g}")
    for row in io.gap_rows(gaps, alphas, betas):
        k, lo, hi, a, b, dev = row
        limit = f" limit=({a:.6g}, {b:.6g}) rel_dev={dev:.3g}" if a != "" else ""
        print(f"  gap {k}: ({lo:.6g}, {hi:.6g}){limit}")
    if not gaps:
        print("  no gaps below the cutoff")
    if sweep.failed:
        print(f"PARTIAL: {len(sweep.failed)} theta samples did not converge", file=sys.stderr)
        return NoConvergence.exit_code
    if sweep.bracket_violations:
        print(f"min-max bracketing violated {len(sweep.bracket_violations)} times",
              file=sys.stderr)
        return 5
    return 0


def cmd_study(args) -> int:
    geometry, targets = _load_geometry_or_targets(args)
    if targets is None:
        raise ValidationError("the study needs at least one resonator")
    eps_list = sorted(_epsilons(args, geometry), reverse=True)
    try:
        table = convergence_study(targets, args.gamma, eps_list, args.grid_n, args.theta_grid,
                                  geometry=geometry)
    except NoConvergence as exc:
        print(f"eigensolver failed: {exc}", file=sys.stderr)
        return exc.exit_code
    out = _out_dir(args)
    io.write_study_csv(out / "study.csv", table)
    print(f"Lambda_hat={table.lambda_hat:.6g} grid_n={table.grid_n}")
    for r in table.rows:
        print(f"eps={r.epsilon:.5g} cells={r.passage_cells} gaps={len(r.gaps)} "
              f"dev_alpha_D={np.max(r.dev_alpha_D):.3g} dev_beta_N={np.max(r.dev_beta_N):.3g} "
              f"dev_gap=({np.max(r.dev_gap_lo):.3g}, {np.max(r.dev_gap_hi):.3g})")
    trend = table.trend_ok()
    print("trend nonincreasing: " + ", ".join(f"{k}={v}" for k, v in trend.items()))
    if any(r.bracket_violations for r in table.rows):
        print("min-max bracketing violated", file=sys.stderr)
        return 5
    if not all(trend.values()):
        print("deviations are not nonincreasing along the ladder", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="input JSON file")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    common.add_argument("--layout-margin", type=float, default=DEFAULT_MARGIN)
    common.add_argument("--epsilon", type=float, action="append",
                        help="scale parameter; repeat for a study ladder")
    common.add_argument("--grid-n", type=int, default=512)
    common.add_argument("--theta-grid", type=int, default=5)
    common.add_argument("--k-max", type=int, default=None)
    common.add_argument("--maxwell", action="store_true",
                        help="also report the +-(sqrt(alpha), sqrt(beta)) frequency gaps")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="resgap", description="Spectral gaps of resonator-perforated periodic domains.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in [
        ("forward", cmd_forward, "limit gaps of a UnitCellModel JSON"),
        ("design", cmd_design, "geometry realising TargetGaps JSON"),
        ("verify-matrix", cmd_verify_matrix, "check the matrix oracles against the root finder"),
        ("bands", cmd_bands, "Floquet-Bloch band sweep of a geometry at one epsilon"),
        ("study", cmd_study, "convergence study along an epsilon ladder"),
    ]:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ResgapError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
