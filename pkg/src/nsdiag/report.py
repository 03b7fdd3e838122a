"""Check reports: per-case ratios of an inequality's two sides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = ["Case", "CheckReport", "digest_array", "to_json", "summary_csv"]

TOOLKIT_VERSION = "0.1.0"


def digest_array(*arrays, nbytes: int = 12) -> str:
    h = hashlib.sha256()
    for a in arrays:
        if hasattr(a, "values"):
            a = a.values
        a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[: 2 * nbytes]


@dataclass
class Case:
    label: str
    lhs: float
    rhs: float
    digest: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return not (np.isfinite(self.rhs) and self.rhs > 0)

    @property
    def ratio(self) -> float | None:
        if self.degenerate:
            return None
        return self.lhs / self.rhs

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "digest": self.digest,
            "lhs": self.lhs,
            "rhs_no_constant": self.rhs,
            "ratio": self.ratio,
            "degenerate": self.degenerate,
            **({"extra": self.extra} if self.extra else {}),
        }


@dataclass
class CheckReport:
    """Empirical-constant ledger for one inequality.

    ``ratio = lhs / rhs`` where ``rhs`` omits the unspecified constant.
    Cases with ``rhs <= 0`` are degenerate and excluded from the verdict.
    ``passed`` requires at least one case, every ratio finite, max ratio
    within ``cap``, and every entry of ``conditions`` true; a report whose
    cases are all degenerate passes vacuously.
    """

    name: str
    cap: float
    cases: list[Case] = field(default_factory=list)
    conditions: dict[str, bool] = field(default_factory=dict)
    info: dict[str, Any] = field(default_factory=dict)

    def add(self, label, lhs, rhs, digest="", **extra) -> Case:
        c = Case(label, float(lhs), float(rhs), digest, extra)
        self.cases.append(c)
        return c

    @property
    def ratios(self) -> list[float]:
        return [c.ratio for c in self.cases if not c.degenerate]

    @property
    def degenerate_count(self) -> int:
        return sum(c.degenerate for c in self.cases)

    @property
    def max_ratio(self) -> float | None:
        r = self.ratios
        return max(r) if r else None

    @property
    def median_ratio(self) -> float | None:
        r = self.ratios
        return float(np.median(r)) if r else None

    @property
    def passed(self) -> bool:
        r = self.ratios
        if not self.cases:
            return False
        if not all(np.isfinite(r)):
            return False
        return max(r, default=0.0) <= self.cap and all(self.conditions.values())

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "cap": self.cap,
            "cases": [c.to_dict() for c in self.cases],
            "ratios": self.ratios,
            "max_ratio": self.max_ratio,
            "median_ratio": self.median_ratio,
            "degenerate": self.degenerate_count,
            "conditions": dict(self.conditions),
            "info": self.info,
            "pass": self.passed,
        }

    def to_json(self, **meta) -> str:
        return to_json({**self.to_dict(), **meta})

    def summary_row(self) -> dict:
        return {
            "check": self.name,
            "cases": len(self.cases),
            "max_ratio": self.max_ratio,
            "cap": self.cap,
            "pass": self.passed,
        }


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def to_json(obj) -> str:
    """Deterministic JSON: sorted keys, shortest float repr."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2)


def summary_csv(reports) -> str:
    lines = ["check,cases,max_ratio,cap,pass"]
    for r in reports:
        row = r.summary_row()
        mr = "" if row["max_ratio"] is None else repr(row["max_ratio"])
        lines.append(f"{row['check']},{row['cases']},{mr},{row['cap']!r},{str(row['pass']).lower()}")
    return "\n".join(lines) + "\n"
