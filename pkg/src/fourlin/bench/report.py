"""Pass/fail records produced by the numerical checks."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckReport:
    name: str
    passed: bool
    checked: int = 0
    violations: list[dict] = field(default_factory=list)
    slack: float | None = None
    details: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return {
            "check": self.name,
            "passed": bool(self.passed),
            "checked": self.checked,
            "violations": self.violations,
            "min_slack": self.slack,
            **self.details,
        }

    def __bool__(self) -> bool:
        return bool(self.passed)


def merge(name: str, reports: list[CheckReport]) -> CheckReport:
    """Combine same-kind reports; keeps every violation and the smallest slack."""
    slacks = [r.slack for r in reports if r.slack is not None]
    return CheckReport(
        name=name,
        passed=all(r.passed for r in reports),
        checked=sum(r.checked for r in reports),
        violations=[v for r in reports for v in r.violations],
        slack=min(slacks) if slacks else None,
        details={"runs": len(reports)},
    )
