"""
dgiga - Main Entry Point v1.0
Command-line interface for the multipatch dG-IgA solver: refinement studies,
domain verification and solution sampling.

Exit codes: 0 success, 2 validation failure, 3 solver failure.
"""

import argparse
import logging
import os
import sys

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from dgiga import check_domain, load_config
from dgiga.config import LOG_LEVEL
from dgiga.errors import VALIDATION_ERRORS, DGIGAError, SolverError
from dgiga.study_runner import (
    StudyRunner,
    emit_report,
    load_coefficients,
    refine_to,
    sample_solution,
    save_coefficients,
    write_samples,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def print_banner():
    """Print the application banner."""
    banner = """
╔═══════════════════════════════════════════════════════════════════════════════╗
║                                                                               ║
║        ██████╗  ██████╗       ██╗ ██████╗  █████╗                             ║
║        ██╔══██╗██╔════╝       ██║██╔════╝ ██╔══██╗                            ║
║        ██║  ██║██║  ███╗█████╗██║██║  ███╗███████║                            ║
║        ██║  ██║██║   ██║╚════╝██║██║   ██║██╔══██║                            ║
║        ██████╔╝╚██████╔╝      ██║╚██████╔╝██║  ██║                            ║
║        ╚═════╝  ╚═════╝       ╚═╝ ╚═════╝ ╚═╝  ╚═╝                            ║
║                                                                               ║
║         Discontinuous Galerkin Isogeometric Analysis on Multipatch Domains    ║
║                   Interior penalty (SIP / IIP) + Convergence Studies          ║
║                                                                               ║
╚═══════════════════════════════════════════════════════════════════════════════╝
    """
    print(banner)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dgiga", description="Multipatch dG-IgA diffusion solver")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    parser.add_argument("--quiet", action="store_true", help="suppress banner and tables")
    sub = parser.add_subparsers(dest="command", required=True)

    study = sub.add_parser("study", help="run a refinement study")
    study.add_argument("--config", required=True, help="config path or bundled config name")
    study.add_argument("--degree", type=int, help="spline degree k")
    study.add_argument("--levels", type=int, help="refinement levels S")
    study.add_argument("--scheme", choices=["sip", "iip"])
    study.add_argument("--mu", type=float, help="penalty parameter override")
    study.add_argument("--quadrature-order", type=int, dest="quadrature_order")
    study.add_argument("--format", choices=["csv", "json"], default="csv")
    study.add_argument("--out", required=True, help="report output path")
    study.add_argument("--save-coeffs", dest="save_coeffs", help="store the finest-level solution (JSON)")

    verify = sub.add_parser("verify", help="run geometry and interface checks only")
    verify.add_argument("--config", required=True)

    sample = sub.add_parser("sample", help="sample a saved solution on an N^d grid per patch")
    sample.add_argument("--config", required=True)
    sample.add_argument("--coeffs", required=True)
    sample.add_argument("--grid", type=int, default=11)
    sample.add_argument("--degree", type=int, help="degree of the saved solution (default: from the file)")
    sample.add_argument("--level", type=int, help="refinement level of the saved solution (default: from the file)")
    sample.add_argument("--out", required=True)
    return parser


def run_study_command(args) -> int:
    overrides = {
        "degree": args.degree,
        "levels": args.levels,
        "scheme": args.scheme,
        "mu": args.mu,
        "quadrature_order": args.quadrature_order,
        "format": args.format,
        "output": args.out,
    }
    study, domain = load_config(args.config, overrides)
    runner = StudyRunner(verbose=not args.quiet)
    report = runner.run_study(study, domain)
    path = emit_report(report, args.out, study.format)
    print(f"\nReport written to {path}")

    if args.save_coeffs and runner.final is not None:
        save_coefficients(args.save_coeffs, runner.final.coefficients, study, runner.final.record.level)
        print(f"Coefficients written to {args.save_coeffs}")

    if not report.complete:
        print(f"\n[ERROR] Study incomplete: {report.message}")
        return EXIT_SOLVER
    return EXIT_OK


def run_verify_command(args) -> int:
    _, domain = load_config(args.config, verify=False)
    report = check_domain(domain, strict=True)
    print("\n" + "=" * 80)
    print(f"DOMAIN CHECKS: {args.config}")
    print("=" * 80)
    for check in report.interface_checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"  [{status}] {check.face}: max mismatch {check.max_mismatch:.2e} (tol {check.tolerance:.1e})")
    for i, (lo, hi) in enumerate(report.jacobian_ranges):
        print(f"  patch {i}: |det J| in [{lo:.4g}, {hi:.4g}], quasi-uniformity {report.quasi_uniformity[i]:.2f}")
    print(f"\n  {domain.num_patches} patches, {len(domain.interfaces)} interfaces, "
          f"{len(domain.boundary_faces)} boundary faces: OK")
    return EXIT_OK


def run_sample_command(args) -> int:
    saved = load_coefficients(args.coeffs)
    degree = args.degree if args.degree is not None else saved["degree"]
    level = args.level if args.level is not None else saved["level"]
    _, domain = load_config(args.config, {"degree": degree})
    domain = refine_to(domain, level)
    samples = sample_solution(domain, saved["coefficients"], args.grid)
    path = write_samples(args.out, samples, domain.dim)
    print(f"{len(samples)} samples written to {path}")
    return EXIT_OK


def main(argv=None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    level = "INFO" if args.verbose else LOG_LEVEL
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if not args.quiet and args.command == "study":
        print_banner()

    commands = {"study": run_study_command, "verify": run_verify_command, "sample": run_sample_command}
    try:
        return commands[args.command](args)
    except VALIDATION_ERRORS as e:
        print(f"\n[ERROR] Validation failed ({type(e).__name__}): {e}")
        return EXIT_VALIDATION
    except SolverError as e:
        print(f"\n[ERROR] Solver failed: {e}")
        return EXIT_SOLVER
    except DGIGAError as e:
        print(f"\n[ERROR] {e}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
