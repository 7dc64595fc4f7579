"""Trial batteries, metrics and the advisor/feasibility ablation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .advisor import Advisor, LlmAdvisor, MockAdvisor, NullAdvisor
from .errors import EmptyInput
from .monitor import GOAL_REACHED, ExecutionReport, MonitorConfig, execute_with_monitoring
from .refs import Ref, canonical_name
from .scenarios import BUILTIN_SCENARIOS, Scenario, load_scenario

ADVISOR_MODES = ("full", "blind", "llm", "null")


@dataclass(frozen=True)
class TrialRecord:
    scenario: str
    advisor_mode: str
    feasibility_gate: bool
    trial_index: int
    correct_detection: bool
    correct_identification: bool
    recovered: bool
    ticks: int
    correct_recovery: bool = False
    rejected_suggestions: int = 0
    seed: int = 0


CellKey = tuple[str, str, bool]


@dataclass
class Cell:
    n_trials: int = 0
    detected: int = 0
    identified: int = 0
    recovered: int = 0
    rejected_suggestions: int = 0

    @property
    def consistency(self) -> Fraction:
        return Fraction(self.recovered, self.n_trials)

    @property
    def identification_accuracy(self) -> Fraction:
        return Fraction(self.identified, self.n_trials)

    @property
    def detection_accuracy(self) -> Fraction:
        return Fraction(self.detected, self.n_trials)


@dataclass
class MetricsSummary:
    cells: dict[CellKey, Cell] = field(default_factory=dict)

    def cell(self, scenario: str, advisor_mode: str, gate: bool) -> Cell:
        return self.cells[(scenario, advisor_mode, gate)]

    def to_dict(self) -> dict:
        rows = []
        for (scenario, mode, gate), c in sorted(self.cells.items()):
            rows.append({
                "scenario": scenario,
                "advisor_mode": mode,
                "feasibility_gate": gate,
                "n_trials": c.n_trials,
                "detection_accuracy": str(c.detection_accuracy),
                "identification_accuracy": str(c.identification_accuracy),
                "consistency": str(c.consistency),
                "rejected_suggestions": c.rejected_suggestions,
            })
        return {"format": "btrecover.metrics/1", "cells": rows}


def make_mode_advisor(mode: str) -> Advisor:
    if mode == "full":
        return MockAdvisor("full")
    if mode == "blind":
        return MockAdvisor("blind")
    if mode == "null":
        return NullAdvisor()
    if mode == "llm":
        return LlmAdvisor()
    raise ValueError(f"unknown advisor mode {mode!r}; choose from {', '.join(ADVISOR_MODES)}")


def _matches(proposed: Ref, reference: Ref) -> bool:
    return canonical_name(proposed.name) == canonical_name(reference.name) and proposed.args == reference.args


def score(report: ExecutionReport, scenario: Scenario, mode: str, gate: bool, index: int, seed: int = 0) -> TrialRecord:
    failure_verdicts = [v for phase, v in report.consultations if phase == "failure"]
    if report.failures:
        detected = bool(failure_verdicts) and failure_verdicts[0].will_fail
    else:
        detected = report.outcome == GOAL_REACHED
    # the verdict that drove the first recovery, else the first failure-time answer
    verdict = report.recoveries[0].verdict if report.recoveries else (failure_verdicts[0] if failure_verdicts else None)
    identified = recovery_ok = False
    ref = scenario.reference
    if verdict is not None and verdict.missing_condition is not None and ref is not None:
        identified = _matches(verdict.missing_condition.ref, ref.condition)
        recovery_ok = verdict.recovery is not None and verdict.recovery.skill == ref.recovery
    return TrialRecord(
        scenario=scenario.name,
        advisor_mode=mode,
        feasibility_gate=gate,
        trial_index=index,
        correct_detection=detected,
        correct_identification=identified,
        recovered=report.outcome == GOAL_REACHED,
        ticks=report.ticks_used,
        correct_recovery=recovery_ok,
        rejected_suggestions=sum(len(r.rejected) for r in report.recoveries),
        seed=seed,
    )


def run_trials(
    scenario: str | Scenario,
    advisor_mode: str,
    gate: bool,
    n: int,
    seed: int = 0,
    config: MonitorConfig | None = None,
) -> list[TrialRecord]:
    """Run ``n`` independent monitored executions; each owns its registry and world.

    ``seed`` is recorded per trial (``seed + index``) for advisors that sample;
    the deterministic ones ignore it.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    sc = scenario if isinstance(scenario, Scenario) else load_scenario(scenario)
    base = config or MonitorConfig()
    records = []
    for i in range(n):
        cfg = MonitorConfig(**{**base.__dict__, "feasibility_gate": gate})
        report = execute_with_monitoring(sc, make_mode_advisor(advisor_mode), cfg)
        records.append(score(report, sc, advisor_mode, gate, i, seed + i))
    return records


def summarize(records: Iterable[TrialRecord]) -> MetricsSummary:
    records = list(records)
    if not records:
        raise EmptyInput("no trial records to summarize")
    summary = MetricsSummary()
    for r in records:
        c = summary.cells.setdefault((r.scenario, r.advisor_mode, r.feasibility_gate), Cell())
        c.n_trials += 1
        c.detected += r.correct_detection
        c.identified += r.correct_identification
        c.recovered += r.recovered
        c.rejected_suggestions += r.rejected_suggestions
    return summary


def _pct(f: Fraction) -> str:
    return f"{float(f):.2f}"


def emit_report(summary: MetricsSummary, fmt: str = "table") -> str:
    if fmt in ("json", "machine-readable"):
        return json.dumps(summary.to_dict(), indent=2) + "\n"
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    header = f"{'scenario':<14} {'advisor':<7} {'gate':<5} {'n':>3}   {'detection':>9} {'identification':>14} {'recovery':>8} {'rejected':>8}"
    lines = [header, "-" * len(header)]
    for (scenario, mode, gate), c in sorted(summary.cells.items()):
        lines.append(
            f"{scenario:<14} {mode:<7} {'on' if gate else 'off':<5} {c.n_trials:>3}   "
            f"{_pct(c.detection_accuracy):>9} {_pct(c.identification_accuracy):>14} "
            f"{_pct(c.consistency):>8} {c.rejected_suggestions:>8}"
        )
    return "\n".join(lines) + "\n"


def ablate(scenario: str | Scenario, n: int, seed: int = 0) -> MetricsSummary:
    """Advisor view (full, blind) crossed with the feasibility gate (on, off)."""
    records = []
    for mode in ("full", "blind"):
        for gate in (True, False):
            records.extend(run_trials(scenario, mode, gate, n, seed))
    return summarize(records)


def expected_cells() -> dict[CellKey, Fraction]:
    """Recovered fractions the deterministic advisors must reach."""
    out = {}
    for name in BUILTIN_SCENARIOS:
        for mode in ("full", "blind"):
            for gate in (True, False):
                blind_ungated_large = name == "peg_large" and mode == "blind" and not gate
                out[(name, mode, gate)] = Fraction(0) if blind_ungated_large else Fraction(1)
    return out


@dataclass(frozen=True)
class ThresholdCheck:
    cell: CellKey
    expected: Fraction
    actual: Fraction | None

    @property
    def ok(self) -> bool:
        return self.actual == self.expected


def check_thresholds(summary: MetricsSummary, expected: dict[CellKey, Fraction] | None = None) -> list[ThresholdCheck]:
    expected = expected if expected is not None else expected_cells()
    out = []
    for key, want in sorted(expected.items()):
        cell = summary.cells.get(key)
        out.append(ThresholdCheck(key, want, cell.consistency if cell else None))
    return out


def merge(*summaries: MetricsSummary) -> MetricsSummary:
    merged = MetricsSummary()
    for s in summaries:
        merged.cells.update(s.cells)
    return merged


__all__ = [
    "ADVISOR_MODES",
    "Cell",
    "MetricsSummary",
    "ThresholdCheck",
    "TrialRecord",
    "ablate",
    "check_thresholds",
    "emit_report",
    "expected_cells",
    "make_mode_advisor",
    "merge",
    "run_trials",
    "score",
    "summarize",
]

