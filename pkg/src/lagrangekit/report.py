"""Residual bookkeeping for identity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def scaled_residual(lhs, rhs) -> tuple[float, float]:
    """Return ``(absolute, scaled)`` residuals of two scalars or arrays.

    The scaled residual divides by ``1 + max|terms|`` so that round-off in
    large terms is not mistaken for an identity failure.
    """
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    diff = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
    scale = 1.0 + max(float(np.max(np.abs(lhs))) if lhs.size else 0.0,
                      float(np.max(np.abs(rhs))) if rhs.size else 0.0)
    return diff, diff / scale


@dataclass
class IdentityReport:
    """Per-point residuals of one check.

    ``passed`` holds iff at least one point was evaluated and the largest
    (scaled) residual is within ``tolerance``. Points whose evaluation failed
    are listed in ``failures`` and do not contribute residuals.
    """

    name: str
    tolerance: float
    residuals: list = field(default_factory=list)
    abs_residuals: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    skipped: bool = False
    reason: str = ""

    def add(self, abs_residual, scaled=None):
        self.abs_residuals.append(float(abs_residual))
        self.residuals.append(float(abs_residual if scaled is None else scaled))

    def add_pair(self, lhs, rhs):
        self.add(*scaled_residual(lhs, rhs))

    def fail(self, where, exc):
        self.failures.append(f"{where}: {type(exc).__name__}: {exc}")

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else math.nan

    @property
    def max_abs_residual(self) -> float:
        return max(self.abs_residuals) if self.abs_residuals else math.nan

    @property
    def passed(self) -> bool:
        if self.skipped or not self.residuals:
            return False
        return self.max_residual <= self.tolerance

    def merge(self, other: "IdentityReport") -> "IdentityReport":
        out = IdentityReport(self.name, self.tolerance)
        for r in (self, other):
            out.residuals += r.residuals
            out.abs_residuals += r.abs_residuals
            out.failures += r.failures
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "residual": None if math.isnan(self.max_residual) else self.max_residual,
            "abs_residual": None if math.isnan(self.max_abs_residual) else self.max_abs_residual,
            "tolerance": self.tolerance,
            "points": len(self.residuals),
            "failures": list(self.failures),
            "skipped": self.skipped,
            "reason": self.reason,
            "passed": self.passed,
        }

    def __str__(self):
        if self.skipped:
            return f"{self.name}: SKIPPED ({self.reason})"
        status = "PASS" if self.passed else "FAIL"
        extra = f", {len(self.failures)} point failures" if self.failures else ""
        return (f"{self.name}: {status} max residual {self.max_residual:.3e} "
                f"(tol {self.tolerance:.1e}, {len(self.residuals)} points{extra})")
