"""
Direct Rate-Table Runner
Simply run: python run_acceptance.py [--quick] [--only smooth2d_k2 ...]
Runs the bundled convergence studies and compares final rates with predictions.
"""

import argparse
import os
import sys
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional

# Setup path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from dgiga import load_config
from dgiga.errors import DGIGAError
from dgiga.study_runner import StudyRunner, emit_report, summarize


@dataclass
class AcceptanceCase:
    """One study of the rate table."""
    config: str
    degree: int
    levels: int
    params: Optional[Dict[str, float]] = None
    reference_rate: Optional[float] = None
    tolerance: float = 0.15


CASES: Dict[str, AcceptanceCase] = {
    "smooth2d_k2": AcceptanceCase("smooth2d.json", 2, 5, reference_rate=2.02),
    "smooth2d_k3": AcceptanceCase("smooth2d.json", 3, 5, reference_rate=3.04),
    "smooth3d_k2": AcceptanceCase("smooth3d.json", 2, 3, tolerance=0.3),
    "lowreg3d_l2_k2": AcceptanceCase("lowreg3d.json", 2, 3, {"d": 3, "l": 2, "p": 1.4}, reference_rate=0.36),
    "lowreg3d_l2_k3": AcceptanceCase("lowreg3d.json", 3, 3, {"d": 3, "l": 2, "p": 1.4}, reference_rate=0.36),
    "lowreg3d_l3_k2": AcceptanceCase("lowreg3d.json", 2, 3, {"d": 3, "l": 3, "p": 1.4}, reference_rate=1.36),
    "lowreg3d_l3_k3": AcceptanceCase("lowreg3d.json", 3, 3, {"d": 3, "l": 3, "p": 1.4}, reference_rate=1.36),
    "nonmatching2d_k2": AcceptanceCase("nonmatching2d.json", 2, 5, tolerance=0.2),
    "alpha_jump2d_k2": AcceptanceCase("alpha_jump2d.json", 2, 5),
}

QUICK = ["smooth2d_k2", "nonmatching2d_k2", "alpha_jump2d_k2"]


def run_case(name: str, case: AcceptanceCase, out_dir: Path):
    overrides = {"degree": case.degree, "levels": case.levels, "problem_params": case.params}
    study, domain = load_config(case.config, overrides)
    report = StudyRunner(verbose=True).run_study(study, domain)
    emit_report(report, out_dir / f"{name}.json", "json")
    return report


def main():
    parser = argparse.ArgumentParser(description="Run the convergence-rate acceptance suite")
    parser.add_argument("--quick", action="store_true", help="2D studies only")
    parser.add_argument("--only", nargs="*", choices=sorted(CASES), help="run selected cases")
    args = parser.parse_args()

    names = args.only or (QUICK if args.quick else list(CASES))
    out_dir = Path(f"acceptance_results_{datetime.now().strftime('%Y-%m-%d_%H-%M-%S')}")

    print("\n" + "=" * 70)
    print("  CONVERGENCE RATE ACCEPTANCE SUITE")
    print("=" * 70)
    print(f"\nRunning: {', '.join(names)}")

    reports, verdicts = [], []
    for name in names:
        case = CASES[name]
        try:
            report = run_case(name, case, out_dir)
        except DGIGAError as e:
            print(f"\n[ERROR] {name} failed: {e}")
            verdicts.append((name, "ERROR", None, None))
            continue
        reports.append(report)
        final = report.final_dg_rate
        target = report.predicted_rate
        passed = report.complete and final is not None and target is not None and abs(final - target) <= case.tolerance
        verdicts.append((name, "PASS" if passed else "FAIL", final, case.reference_rate))

    print("\n" + "=" * 70)
    print("RESULTS - RATE TABLE")
    print("=" * 70)
    print(summarize(reports))
    for name, status, final, reference in verdicts:
        ref = "" if reference is None else f" (reference {reference:.2f})"
        rate = "-" if final is None else f"{final:.2f}"
        print(f"  [{status}] {name}: final dG rate {rate}{ref}")

    print(f"\nReports saved to: {out_dir}/")
    return 0 if all(v[1] == "PASS" for v in verdicts) else 1


if __name__ == "__main__":
    sys.exit(main())
