"""Check results shared by the symmetry toolkit and the command line."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .expr import ExprError, lambdify


@dataclass
class CheckReport:
    name: str
    passed: bool
    max_residual: float = 0.0
    worst_point: dict[str, float] | None = None
    details: dict[str, Any] = field(default_factory=dict)
    note: str = ""
    skipped: bool = False

    def line(self) -> str:
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        out = f"[{status}] {self.name}: max residual {self.max_residual:.3e}"
        if self.worst_point and not self.passed:
            pt = ", ".join(f"{k}={v:.6g}" for k, v in self.worst_point.items())
            out += f" at ({pt})"
        if self.note:
            out += f"  ({self.note})"
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name, "passed": bool(self.passed), "skipped": bool(self.skipped),
            "max_residual": float(self.max_residual), "worst_point": self.worst_point,
            "details": _plain(self.details), "note": self.note,
        }


def _plain(obj):
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def sweep(exprs: Sequence, coords: Sequence[str], params: Mapping[str, float], points: np.ndarray) -> np.ndarray:
    """Evaluate ``exprs`` at each row of ``points``; rows that hit a domain error are NaN."""
    f = lambdify(exprs, coords, params)
    out = np.full((len(points), len(exprs)), np.nan)
    for k, x in enumerate(points):
        try:
            out[k] = f(x)
        except ExprError:
            pass
    return out


def point_dict(coords: Sequence[str], x) -> dict[str, float]:
    return {c: float(v) for c, v in zip(coords, x)}
