#!/usr/bin/env python3
"""
fraclap - verification runs for the fractional Laplacian overdetermined problem

Subcommands: constants, oracle, solve, boundary-deriv, moving-plane, certify, radial-test, verify-ball
Exit codes: 0 all checks pass, 1 config error, 2 precondition, 3 bound violation, 4 inconclusive
"""

import argparse
import logging
import os
import sys

import numpy as np

from BoundaryDerivative import overdetermined_report
from ClosedForm import (BallTorsion, CornerBarrier, ball_torsion_frac_normal_derivative, eval_ball_torsion,
                        eval_corner_barrier)
from DirichletSolver import ConvergenceError, DirichletSolver, residual_convergence
from FracConstants import lambda1_constant, lambda1_lower_bound
from FracOperator import Field, SizeCapError, frac_laplacian_at
from Geometry import Ball, Grid
from MaxPrincipleHarness import FAIL, INCONCLUSIVE, NOT_APPLICABLE, PASS, certification_suite
from MovingPlane import analyze_union_1d, default_directions, moving_plane_analyze, radial_monotone_test
from ReportWriter import (boundary_rows, build_report, field_rows, payload_line, summary_line, write_csv,
                          write_json)
from RunConfig import ConfigError, dump_defaults, load_config, RunConfig, setup_logging

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PRECONDITION = 2
EXIT_VIOLATION = 3
EXIT_INCONCLUSIVE = 4

STATUS_EXIT = {PASS: EXIT_OK, FAIL: EXIT_VIOLATION, NOT_APPLICABLE: EXIT_PRECONDITION,
               INCONCLUSIVE: EXIT_INCONCLUSIVE}

SUBCOMMANDS = ("constants", "oracle", "solve", "boundary-deriv", "moving-plane", "certify",
               "radial-test", "verify-ball")


def worst_status(statuses):
    """fail > not-applicable > inconclusive > pass"""
    for status in (FAIL, NOT_APPLICABLE, INCONCLUSIVE):
        if status in statuses:
            return status
    return PASS


class ScenarioRunner:
    """
    Runs one subcommand against a resolved RunConfig and writes its artifacts
    Each cmd_* returns (status, result dict); artifacts land under cfg.out
    """

    def __init__(self, cfg, expect=None, suite="all", samples=None, directions=None, shape=None, at=None,
                 study=False, alpha=1.0, csv_name=None):
        self.cfg = cfg
        self.shape = shape
        self.at = at
        self.study = study
        self.alpha = alpha
        self.csv_name = csv_name
        self.expect = expect
        self.suite = suite
        self.samples = samples or cfg.boundary_samples
        self.directions = directions or cfg.directions
        self.params = cfg.params()
        self.artifacts = []
        self._solver = None
        self._solution = None
        self.logger = logging.getLogger('ScenarioRunner')

    def path(self, name):
        return os.path.join(self.cfg.out, name)

    def csv_path(self, default):
        """--out given as a .csv file names the data file; otherwise it is the output directory"""
        return self.path(self.csv_name or default)

    # Shared pieces

    def solution(self):
        """Solved field on the configured domain, computed once per run"""
        if self._solution is None:
            cfg = self.cfg
            self._solver = DirichletSolver(cfg.domain(), self.params, cfg.solve_config())
            if cfg.nonlinear == "fixed-point":
                self._solution = self._solver.solve_semilinear(cfg.nonlinearity())
            else:
                self._solution = self._solver.solve(cfg.rhs_value)
        return self._solution

    def cmd_constants(self):
        p = self.params
        d = self.cfg.domain()
        result = {
            "N": p.N,
            "s": p.s,
            "c_ns": p.c_ns,
            "gamma_ns": p.gamma_ns,
            "lambda1_constant": lambda1_constant(p),
            "domain": d.describe(),
            "volume": d.volume(),
            "lambda1_lower_bound": lambda1_lower_bound(p, d.volume()),
        }
        print(payload_line(result))
        return PASS, result

    def cmd_oracle(self):
        """Closed-form oracle value at --at (ball torsion or corner barrier); --study adds the residual study"""
        p = self.params
        cfg = self.cfg
        x = np.zeros(p.N) if self.at is None else np.asarray(self.at, dtype=float)
        if x.size != p.N:
            raise ConfigError(f"expected {p.N} coordinates, got {x.size}", key="oracle.at")
        shape = self.shape or "ball"
        if shape == "ball":
            bt = BallTorsion(p, np.zeros(p.N), cfg.radius)
            inside = float(np.linalg.norm(x)) < cfg.radius
            result = {"shape": shape, "N": p.N, "s": p.s, "radius": cfg.radius, "at": x,
                      "value": float(eval_ball_torsion(bt, x)),
                      "frac_laplacian": 1.0 if inside else None,
                      "frac_normal_derivative": ball_torsion_frac_normal_derivative(bt)}
        elif p.N < 2:
            print(payload_line({"shape": shape, "N": p.N, "error": "the corner barrier needs N >= 2"}))
            return NOT_APPLICABLE, {"shape": shape, "error": "the corner barrier needs N >= 2"}
        else:
            cb = CornerBarrier(p, cfg.radius, self.alpha)
            result = {"shape": shape, "N": p.N, "s": p.s, "radius": cfg.radius, "alpha": cb.alpha, "at": x,
                      "value": float(eval_corner_barrier(cb, x)),
                      "diagonal_coefficient": cb.leading_coefficient()}
        status = PASS
        if self.study:
            status, result["study"] = self.residual_study()
        print(payload_line(result))
        return status, result

    def residual_study(self):
        """Operator residual on the ball torsion function, plus the pointwise value at the center"""
        p = self.params
        cfg = self.cfg
        radius = cfg.radius
        study = residual_convergence(p, [4.0 * cfg.h, 2.0 * cfg.h, cfg.h], radius)
        ball = Ball(np.zeros(p.N), radius)
        grid = Grid.covering(ball, cfg.h)
        psi = Field.from_function(grid, BallTorsion(p, np.zeros(p.N), radius), ball)
        center_value, low = frac_laplacian_at(psi, np.zeros(p.N), p, cfg.quadrature())
        last = study["residual"][-1]
        monotone = all(b < a for a, b in zip(study["residual"], study["residual"][1:]))
        ok = last <= cfg.oracle_tol and monotone
        result = {"study": study, "center_value": center_value, "center_low_confidence": low,
                  "monotone": monotone, "tolerance": cfg.oracle_tol}
        mark = "✓" if ok else "✗"
        self.logger.info(f"{mark} Oracle residual {last:.3%} at h={cfg.h} (monotone: {monotone})")
        return (PASS if ok else FAIL), result

    def cmd_solve(self):
        u = self.solution()
        columns, rows = field_rows(u, (u.delta() > 0.0) & (u.delta() < 2.0 * u.grid.h))
        self.artifacts.append(write_csv(self.csv_path("solution.csv"), "solution", columns, rows))
        meta = {k: v for k, v in u.meta.items() if k != "history"}
        result = {"grid": u.grid.describe(), "max": u.max_abs(), **meta}
        if "history" in u.meta:
            result["history"] = u.meta["history"]
        return PASS, result

    def cmd_boundary_deriv(self):
        u = self.solution()
        d = self.cfg.domain()
        report = overdetermined_report(u, d, self.params, self.samples, self.cfg.boundary_sampler())
        columns, rows = boundary_rows(report)
        self.artifacts.append(write_csv(self.csv_path("boundary.csv"), "boundary-deriv", columns, rows))
        verdict = report["verdict"]
        if verdict == "inconclusive":
            status = INCONCLUSIVE
        elif self.expect == "constant" and verdict != "constant":
            status = FAIL
        else:
            status = PASS
        return status, report

    def cmd_moving_plane(self):
        u = self.solution()
        d = self.cfg.domain()
        dirs = default_directions(self.params.N)[:self.directions]
        report = moving_plane_analyze(u, d, dirs, self.cfg.analyzer())
        result = report.as_dict()
        if self.params.N == 1 and len(d.members()) > 1:
            result["union"] = analyze_union_1d(u, d, self.cfg.analyzer())
        if report.verdict == "inconclusive":
            status = INCONCLUSIVE
        elif self.expect == "symmetric" and report.verdict != "symmetric":
            status = FAIL
        else:
            status = PASS
        return status, result

    def cmd_certify(self):
        certs = certification_suite(self.params, self.cfg.h, self.suite, self.cfg.seed,
                                    self.cfg.random_constructions)
        for name, cert in certs:
            self.artifacts.append(write_json(self.path(os.path.join("certs", f"{name}.json")),
                                             build_report("certificate", self.cfg, cert.as_dict(), cert.status)))
        statuses = [cert.status for _, cert in certs]
        counts = {s: statuses.count(s) for s in (PASS, FAIL, NOT_APPLICABLE, INCONCLUSIVE)}
        # checks that do not apply in this dimension do not fail the run
        applicable = [s for (name, cert), s in zip(certs, statuses)
                      if not (s == NOT_APPLICABLE and self.params.N == 1 and name in ("corner", "decay"))]
        return worst_status(applicable), {"counts": counts, "certificates": {n: c.as_dict() for n, c in certs}}

    def cmd_radial_test(self):
        u = self.solution()
        result = radial_monotone_test(u)
        return (PASS if result["radial"] else FAIL), result

    def cmd_verify_ball(self):
        """Oracle study, ball solve against the closed form, and the constant fractional Neumann datum"""
        p = self.params
        cfg = self.cfg
        status, oracle = self.residual_study()
        ball = Ball(np.zeros(p.N), cfg.radius)
        solver = DirichletSolver(ball, p, cfg.solve_config())
        u = solver.solve(1.0)
        exact = Field.from_function(u.grid, BallTorsion(p, np.zeros(p.N), cfg.radius), ball)
        mask = u.delta() >= 0.2 * cfg.radius
        solve_error = float(np.max(np.abs(u.values[mask] - exact.values[mask]) / exact.values[mask]))
        report = overdetermined_report(u, ball, p, self.samples, cfg.boundary_sampler())
        target = BallTorsion(p, np.zeros(p.N), cfg.radius).frac_normal_derivative()
        neumann_error = abs(report["mean"] - target) / abs(target) if report["mean"] is not None else float("inf")
        checks = {
            "oracle": status == PASS,
            "solve": solve_error <= cfg.oracle_tol,
            "neumann": neumann_error <= cfg.oracle_tol and report["verdict"] == "constant",
        }
        for name, ok in checks.items():
            self.logger.info(f"{'✓' if ok else '✗'} verify-ball {name}")
        result = {"oracle": oracle, "solve_relative_error": solve_error, "neumann_target": target,
                  "neumann_relative_error": neumann_error, "boundary": report, "checks": checks}
        return (PASS if all(checks.values()) else FAIL), result


def run_scenario(cfg, subcommand, **options):
    """Run one subcommand, write its JSON report and return the exit code"""
    if subcommand not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    runner = ScenarioRunner(cfg, **options)
    handler = getattr(runner, "cmd_" + subcommand.replace("-", "_"))
    try:
        status, result = handler()
    except SizeCapError as e:
        runner.logger.error(f"✗ {e}")
        status, result = NOT_APPLICABLE, {"error": str(e), "node_count": e.count, "cap": e.cap}
    except ConvergenceError as e:
        runner.logger.error(f"✗ {e}")
        status, result = FAIL, {"error": str(e), "history": e.history}
    report = build_report(subcommand, cfg, result, status)
    json_path = write_json(runner.path(f"{subcommand}.json"), report)
    print(summary_line(subcommand, status, report=json_path, artifacts=runner.artifacts,
                       config_digest=cfg.digest()))
    return STATUS_EXIT[status]


def build_parser():
    parser = argparse.ArgumentParser(prog="fraclap", description="Fractional Laplacian verification toolkit")
    parser.add_argument("--dump-defaults", action="store_true", help="Print the default config as JSON and exit")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--quiet", action="store_true", help="Warnings and errors only")
    parser.add_argument("--log-file", default="fraclap.log", help="Log file path (empty to disable)")
    subparsers = parser.add_subparsers(dest="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="JSON config file (TOML with Python >= 3.11)")
    common.add_argument("--out", "-o", help="Output directory, or a .csv path for the data file")
    common.add_argument("--N", type=int, help="Dimension")
    common.add_argument("--s", type=float, help="Fractional order in (0, 1)")
    common.add_argument("--h", type=float, help="Grid spacing")
    common.add_argument("--seed", type=int, help="Random seed for sample placement")

    for name, help_text in (
        ("constants", "Print c_N,s, gamma_N,s and the eigenvalue lower bound"),
        ("solve", "Dirichlet solve, CSV of node values"),
        ("radial-test", "Halfspace test for radial symmetry of the solution"),
        ("verify-ball", "Oracle, solve and Neumann checks on the ball"),
    ):
        subparsers.add_parser(name, parents=[common], help=help_text)

    oracle = subparsers.add_parser("oracle", parents=[common], help="Closed-form oracle values")
    oracle.add_argument("--shape", choices=["ball", "corner"], default="ball", help="Ball torsion or corner barrier")
    oracle.add_argument("--radius", type=float, help="Ball radius (corner barrier: R)")
    oracle.add_argument("--at", help="Evaluation point, comma separated")
    oracle.add_argument("--alpha", type=float, default=1.0, help="Corner barrier weight")
    oracle.add_argument("--study", action="store_true", help="Also run the operator residual study")

    bd = subparsers.add_parser("boundary-deriv", parents=[common], help="Fractional normal derivative samples")
    bd.add_argument("--samples", type=int, help="Boundary sample count")
    bd.add_argument("--expect", choices=["constant"], help="Fail unless the datum is constant")

    mp = subparsers.add_parser("moving-plane", parents=[common], help="Moving-plane symmetry analysis")
    mp.add_argument("--directions", type=int, help="Number of directions (axes and diagonals)")
    mp.add_argument("--expect", choices=["symmetric"], help="Fail unless every direction is symmetric")

    cert = subparsers.add_parser("certify", parents=[common], help="Maximum-principle certificates")
    cert.add_argument("--suite", default="all", choices=["all", "weak", "strong", "hopf", "corner", "decay"])
    return parser


def split_out(out):
    """(directory, csv file name) for --out; a path ending in .csv names the data file"""
    if out and os.path.splitext(out)[1].lower() == ".csv":
        return os.path.dirname(out) or ".", os.path.basename(out)
    return out, None


def parse_point(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse point {text!r}", key="oracle.at") from None


def resolve_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    out_dir, _ = split_out(args.out)
    overrides = {"params.N": args.N, "params.s": args.s, "solve.h": args.h, "seed": args.seed,
                 "output.path": out_dir, "domain.radius": getattr(args, "radius", None)}
    if args.N is not None and not args.config:
        # defaults are one-dimensional vectors; widen them with the dimension
        overrides.update({"domain.center": [0.0] * args.N, "domain.lower": [-1.0] * args.N,
                          "domain.upper": [1.0] * args.N})
    return cfg.with_overrides(overrides)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dump_defaults:
        print(dump_defaults())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_OK
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    setup_logging(level, args.log_file or None)
    try:
        cfg = resolve_config(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    _, csv_name = split_out(args.out)
    options = {"csv_name": csv_name}
    if args.command == "boundary-deriv":
        options.update({"samples": args.samples, "expect": args.expect})
    elif args.command == "moving-plane":
        options.update({"directions": args.directions, "expect": args.expect})
    elif args.command == "certify":
        options["suite"] = args.suite
    elif args.command == "oracle":
        try:
            at = parse_point(args.at) if args.at else None
        except ConfigError as e:
            print(f"config error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        options.update({"shape": args.shape, "at": at, "alpha": args.alpha, "study": args.study})
    try:
        return run_scenario(cfg, args.command, **options)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
