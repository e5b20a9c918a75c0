#!/usr/bin/env python3
"""
Command-line entry point for singular-quad.

Subcommands: integrate, weights, stability, solve, fracdiff, converge.
Results go to stdout (JSON or CSV) or to --out; logs go to stderr and, with
--log-file, to a timestamped file under logs/.
"""

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import List, Optional

from config import get_settings
from errors import QuadratureError
from harness import (
    ExperimentSpec,
    check_experiment,
    load_spec,
    reports_to_csv,
    run_experiment,
    run_study,
)
from kernel import make_kernel
from mesh import uniform_mesh
from quadrature import INTEGRANDS, integrate
from stability import (
    margin_table,
    scheme_stability_polynomial,
    schur_test,
    weight_positivity_audit,
)
from stencil import SchemeOrder
from volterra import example_problem, step_solve
from weights import weight_table, weights_frame, consistency_report

logger = logging.getLogger(__name__)

KERNEL_CHOICES = ['power-singular', 'power', 'const', 'caputo']


def setup_logging(level: str, log_file: bool = False) -> None:
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        Path("logs").mkdir(exist_ok=True)
        log_filename = f"logs/singular_quad_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"
        handlers.append(logging.FileHandler(log_filename))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def _resolve_out(out: Optional[str]) -> Optional[Path]:
    """Bare file names land in QUAD_RESULTS_DIR."""
    if out is None:
        return None
    path = Path(out)
    if path.parent == Path('.'):
        results = Path(get_settings().results_dir)
        results.mkdir(parents=True, exist_ok=True)
        path = results / path
    return path


def _emit_json(data, out: Optional[str]) -> None:
    text = json.dumps(data, indent=2)
    path = _resolve_out(out)
    if path is None:
        print(text)
    else:
        path.write_text(text, encoding='utf-8')
        logger.info(f"✅ Wrote {path}")


def cmd_integrate(args) -> int:
    K = make_kernel(args.kernel, args.alpha)
    order = SchemeOrder.parse(args.order, alpha=args.alpha)
    result = integrate(K, order, uniform_mesh(args.T, args.N), args.f, args.alpha)
    _emit_json(result, args.out)
    return 0


def cmd_weights(args) -> int:
    K = make_kernel(args.kernel, args.alpha)
    order = SchemeOrder.parse(args.order, alpha=args.alpha)
    mesh = uniform_mesh(args.T, args.N)
    table = weight_table(mesh, K, order, args.n)
    report = consistency_report(table)
    logger.info(f"Consistency: sum={report.sum:.15g}, mass={report.mass:.15g}, defect={report.defect:.3e}")

    frame = weights_frame(table, include_raw=args.raw)
    path = _resolve_out(args.out)
    if path is None:
        frame.to_csv(sys.stdout, index=False)
    else:
        frame.to_csv(path, index=False)
        logger.info(f"✅ Wrote {path}")
    return 0


def cmd_stability(args) -> int:
    orders = args.order or [3, 4, 5, 6]
    analysed = [g for g in orders if g >= 3]
    if analysed:
        print(margin_table(analysed).to_string(index=False))

    if args.alpha is not None and args.N is not None:
        K = make_kernel(args.kernel, args.alpha)
        mesh = uniform_mesh(args.T, args.N)
        for g in orders:
            order = SchemeOrder.integer(g, allow_unstable=True)
            audit = weight_positivity_audit(mesh, K, order)
            print(json.dumps(audit.to_dict()))
            if args.lam is not None:
                poly = scheme_stability_polynomial(mesh, K, order, args.lam)
                print(json.dumps({'order': g, **schur_test(poly).to_dict()}))
    return 0


def cmd_solve(args) -> int:
    order = SchemeOrder.parse(args.order, alpha=args.alpha)
    problem = example_problem(args.example, args.alpha, order, args.N, args.T,
                              kernel=args.kernel, exact_power=args.exact_power)
    solution = step_solve(problem)
    if solution.error is not None:
        logger.info(f"E_inf = {solution.error:.4e}")
    _emit_json(solution.to_dict(), args.out)
    return 0


def cmd_fracdiff(args) -> int:
    spec = ExperimentSpec(
        name='fracdiff', problem='fracdiff', order=args.order, alphas=[args.alpha],
        ladder=args.N, T=args.T, M=args.M, rho_mode=args.rho, source_quadrature=args.source,
    )
    report = run_study(spec, args.alpha, progress=not args.quiet)
    _emit_json(report.to_dict(), args.out)
    return 0


def cmd_converge(args) -> int:
    spec = load_spec(args.spec)
    reports = run_experiment(spec, long=args.long, progress=not args.quiet)

    path = _resolve_out(args.out)
    if path is not None and path.suffix == '.csv':
        reports_to_csv(reports, path)
        logger.info(f"✅ Wrote {path}")
    else:
        _emit_json([r.to_dict() for r in reports], args.out)

    if args.check:
        mismatches = check_experiment(spec, reports)
        if mismatches:
            logger.error(f"❌ {len(mismatches)} golden mismatches in {spec.name}")
            return 1
        logger.info(f"✅ {spec.name} matches its golden table")
    return 0


def _add_problem_args(parser, default_order='3', with_kernel=True) -> None:
    if with_kernel:
        parser.add_argument('--kernel', choices=KERNEL_CHOICES, default='power-singular')
    parser.add_argument('--alpha', type=float, default=0.5)
    parser.add_argument('--order', default=default_order, help="1..5 or 'alpha'")
    parser.add_argument('--N', type=int, default=160)
    parser.add_argument('--T', type=float, default=1.0)
    parser.add_argument('--out', default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='singular-quad',
        description='Composite quadrature for weakly singular convolution integrals',
    )
    parser.add_argument('--log-level', default=None, help='Overrides QUAD_LOG_LEVEL')
    parser.add_argument('--log-file', action='store_true', help='Also log to logs/')
    parser.add_argument('--quiet', action='store_true', help='Hide progress bars')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('integrate', help='Running convolution integral of a named integrand')
    _add_problem_args(p)
    p.add_argument('--f', choices=sorted(INTEGRANDS), default='t3')
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser('weights', help='Collapsed (and raw) weights as CSV')
    _add_problem_args(p)
    p.add_argument('--n', type=int, default=None, help='Target node index, defaults to N')
    p.add_argument('--raw', action='store_true')
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser('stability', help='Coefficient-sum margins and weight audits')
    p.add_argument('--order', type=int, nargs='*', default=None)
    p.add_argument('--kernel', choices=KERNEL_CHOICES, default='power-singular')
    p.add_argument('--alpha', type=float, default=None)
    p.add_argument('--N', type=int, default=None)
    p.add_argument('--T', type=float, default=1.0)
    p.add_argument('--lam', type=float, default=None, help='Also run the Schur test with this lambda')
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser('solve', help='Volterra equation of the second kind')
    _add_problem_args(p, with_kernel=False)
    p.add_argument('--example', choices=['1', '2', 'custom'], default='1')
    p.add_argument('--kernel', choices=KERNEL_CHOICES, default=None, help='Kernel for --example custom')
    p.add_argument('--exact-power', type=float, default=None, help='Exact solution t^m for --example custom')
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser('fracdiff', help='Time-fractional diffusion convergence study')
    p.add_argument('--alpha', type=float, default=0.5)
    p.add_argument('--rho', choices=['alpha', 'one-minus-alpha'], default='alpha')
    p.add_argument('--source', choices=['exact', 'sampled'], default='exact',
                   help='Convolve the power-law source exactly or sample it at the nodes')
    p.add_argument('--order', default='alpha')
    p.add_argument('--M', type=int, default=25)
    p.add_argument('--N', type=int, nargs='+', default=[10, 20, 40, 80, 160])
    p.add_argument('--T', type=float, default=1.0)
    p.add_argument('--out', default=None)
    p.set_defaults(func=cmd_fracdiff)

    p = sub.add_parser('converge', help='Run an experiment spec and optionally check its golden table')
    p.add_argument('--spec', required=True)
    p.add_argument('--out', default=None, help='report.json or report.csv')
    p.add_argument('--long', action='store_true', help='Allow long-running experiments')
    p.add_argument('--check', action='store_true', help='Exit 1 when a golden tolerance fails')
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level or get_settings().log_level, args.log_file)

    try:
        return args.func(args)
    except (QuadratureError, FileNotFoundError) as e:
        logger.error(f"❌ {e}")
        print(json.dumps({'success': False, 'error': str(e)}))
        return 2


if __name__ == '__main__':
    sys.exit(main())
