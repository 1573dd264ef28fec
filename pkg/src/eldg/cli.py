"""Command line entry point: ``eldg {converge,cfl-sweep,mass-track,solve} ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from .characteristics import SingularDecompositionError
from .harness import (ConfigError, RunConfig, run_cfl_sweep, run_convergence, run_mass_tracking,
                      solution_rows, solve, write_csv)
from .mesh import InvertedElementError
from .problems import PROBLEMS

log = logging.getLogger("eldg")


def _limiter(v: str):
    if v.lower() == "off":
        return None
    try:
        return float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number or 'off', got {v!r}") from None


def _on_off(v: str) -> bool:
    if v.lower() not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return v.lower() == "on"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    common.add_argument("--scheme", default="eldg")
    common.add_argument("--degree", type=int, default=1)
    common.add_argument("--nx", type=int, action="append")
    common.add_argument("--cfl", type=float, action="append")
    common.add_argument("--tfinal", type=float)
    common.add_argument("--rk", default="rk4", choices=["fe", "ssprk2", "rk2", "rk4"])
    common.add_argument("--limiter-m", type=_limiter, default=None)
    common.add_argument("--postprocess", type=_on_off, default=False)
    common.add_argument("--split", default="fourth", choices=["strang", "fourth"])
    common.add_argument("--component", type=int, default=1,
                        help="1-based solution component used for errors")
    common.add_argument("--norm-points", default="quadrature", choices=["quadrature", "nodes"],
                        help="error quadrature: dense Gauss rule or the k+1 Gauss nodes")
    common.add_argument("--out", help="output CSV path (stdout when omitted)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="eldg", description="Eulerian-Lagrangian DG experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("converge", parents=[common], help="errors and orders over --nx meshes")
    sub.add_parser("cfl-sweep", parents=[common], help="L-inf error versus --cfl values")
    sub.add_parser("mass-track", parents=[common], help="mass change per step")
    sub.add_parser("solve", parents=[common], help="single run, point values of the solution")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig(
            problem=args.problem, scheme=args.scheme, degree=args.degree,
            nx=tuple(args.nx or (20,)), cfl=tuple(args.cfl or (0.1,)), tfinal=args.tfinal,
            rk=args.rk, limiter_m=args.limiter_m, postprocess=args.postprocess,
            split=args.split, component=args.component - 1,
            norm_points=args.norm_points, out=args.out,
        ).validate()
        log.info("config: %s", cfg.manifest())
        if args.command == "converge":
            rows = run_convergence(cfg)
        elif args.command == "cfl-sweep":
            rows = run_cfl_sweep(cfg)
        elif args.command == "mass-track":
            rows = run_mass_tracking(cfg)
        else:
            res = solve(cfg, cfg.nx[0], cfg.cfl[0])
            if res.blowup:
                log.warning("solution blew up after %d steps", res.steps)
            rows = solution_rows(res, cfg.spec)
    except ConfigError as e:
        print(f"eldg: invalid configuration: {e}", file=sys.stderr)
        return 2
    except (InvertedElementError, SingularDecompositionError) as e:
        print(f"eldg: solver failure: {e}", file=sys.stderr)
        return 3
    text = write_csv(rows, cfg.out, cfg)
    if not cfg.out:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
