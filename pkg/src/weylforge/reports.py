"""Lightweight check/report containers shared by the validation surfaces."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckItem:
    name: str
    passed: bool
    residual: float | None = None
    tolerance: float | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        out = {"name": self.name, "passed": bool(self.passed)}
        if self.residual is not None:
            out["residual"] = float(self.residual)
        if self.tolerance is not None:
            out["tolerance"] = float(self.tolerance)
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class ValidationReport:
    checks: list[CheckItem] = field(default_factory=list)
    verdict: str = ""

    def add(self, name: str, passed: bool, residual: float | None = None,
            tolerance: float | None = None, detail: str = "") -> None:
        self.checks.append(CheckItem(name, passed, residual, tolerance, detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckItem]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        out = {"passed": self.passed, "checks": [c.as_dict() for c in self.checks]}
        if self.verdict:
            out["verdict"] = self.verdict
        return out
