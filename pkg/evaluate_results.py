"""
Study Evaluation Module v1.0
Grades saved convergence reports against their predicted rates.

Metrics:
1. Completeness - Did every refinement level solve?
2. Final Rate - Finest-step dG rate within tolerance of the prediction
3. Monotonicity - Does the dG error decrease at every step?
4. L2 Rate - Is the auxiliary L2 rate at least the dG rate?
"""

import glob
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, List, Optional

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from dgiga.analysis import ConvergenceReport


@dataclass
class EvaluationCriteria:
    """Acceptance thresholds for one report."""
    rate_tolerance: float = 0.15
    require_monotone: bool = True


@dataclass
class StudyScore:
    """Grade of one saved report."""
    name: str
    problem: str
    degree: int
    final_rate: Optional[float] = None
    predicted_rate: Optional[float] = None
    complete: bool = False
    monotone: bool = False
    l2_ahead: bool = False
    passed: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def grade(self) -> str:
        if not self.complete:
            return "INCOMPLETE"
        return "PASS" if self.passed else "FAIL"


class StudyEvaluator:
    """Scores convergence reports saved as JSON."""

    def __init__(self, criteria: Optional[EvaluationCriteria] = None):
        self.criteria = criteria or EvaluationCriteria()

    def evaluate_report(self, name: str, report: ConvergenceReport) -> StudyScore:
        score = StudyScore(name, report.problem, report.degree,
                           report.final_dg_rate, report.predicted_rate, report.complete)
        errors = [r.dg_error for r in report.records]
        score.monotone = all(b < a for a, b in zip(errors[:-1], errors[1:]))
        if not score.monotone:
            score.notes.append("dG error not monotone")

        l2 = report.l2_rates
        if l2 and score.final_rate is not None:
            score.l2_ahead = l2[-1] >= score.final_rate - self.criteria.rate_tolerance

        if score.final_rate is None or score.predicted_rate is None:
            score.notes.append("no rate to compare")
        else:
            deviation = abs(score.final_rate - score.predicted_rate)
            within = deviation <= self.criteria.rate_tolerance
            if not within:
                score.notes.append(f"rate off by {deviation:.2f}")
            score.passed = score.complete and within and (score.monotone or not self.criteria.require_monotone)
        if not report.complete:
            score.notes.append(report.message)
        return score

    def evaluate_files(self, paths: List[str]) -> Dict[str, StudyScore]:
        scores = {}
        for path in paths:
            name = os.path.splitext(os.path.basename(path))[0]
            scores[name] = self.evaluate_report(name, ConvergenceReport.load(path))
        return scores

    def generate_report(self, scores: Dict[str, StudyScore]) -> str:
        """Generate markdown evaluation table."""
        lines = [
            "# Convergence Study Evaluation",
            "",
            f"Generated: {datetime.now().isoformat(timespec='seconds')}",
            f"Rate tolerance: ±{self.criteria.rate_tolerance}",
            "",
            "| Study | Problem | k | Final dG rate | Predicted | Monotone | Grade | Notes |",
            "|---|---|---|---|---|---|---|---|",
        ]
        for name, s in scores.items():
            final = "-" if s.final_rate is None else f"{s.final_rate:.2f}"
            predicted = "-" if s.predicted_rate is None else f"{s.predicted_rate:.3f}"
            lines.append(f"| {name} | {s.problem} | {s.degree} | {final} | {predicted} | "
                         f"{'yes' if s.monotone else 'no'} | {s.grade} | {'; '.join(s.notes)} |")
        passed = sum(s.grade == "PASS" for s in scores.values())
        lines += ["", f"**{passed}/{len(scores)} studies passed.**"]
        return "\n".join(lines) + "\n"


def main():
    """Evaluate report files given on the command line, or the newest acceptance run."""
    print("\n" + "=" * 60)
    print("  CONVERGENCE REPORT EVALUATOR")
    print("=" * 60 + "\n")

    paths = sys.argv[1:]
    if not paths:
        runs = sorted(glob.glob("acceptance_results_*"))
        if not runs:
            print("No report files given and no acceptance_results_* directory found.")
            return 1
        paths = sorted(glob.glob(os.path.join(runs[-1], "*.json")))
        print(f"Evaluating newest run: {runs[-1]}")

    evaluator = StudyEvaluator()
    scores = evaluator.evaluate_files(paths)
    report = evaluator.generate_report(scores)
    print("\n" + report)

    report_file = f"evaluation_{datetime.now().strftime('%Y-%m-%d_%H-%M-%S')}.md"
    with open(report_file, "w", encoding="utf-8") as f:
        f.write(report)
    print(f"\nReport saved to: {report_file}")
    return 0 if all(s.grade == "PASS" for s in scores.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
