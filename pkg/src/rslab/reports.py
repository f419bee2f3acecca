"""Uniform record of "claimed bound vs. measured quantity"."""
import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class BoundReport:
    """One verification outcome.

    ``margin`` is ``min(claimed - measured)`` over the series (scalars
    broadcast).  ``passed`` is ``margin >= -tolerance``.  ``skipped`` reports
    carry no margin and count as passing.
    """

    name: str
    claimed: object
    measured: object
    tolerance: float = 0.0
    margin: float = field(default=np.nan)
    passed: bool = field(default=False)
    skipped: bool = False
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.skipped:
            self.passed = True
            return
        c = np.asarray(self.claimed, dtype=float)
        m = np.asarray(self.measured, dtype=float)
        diff = np.broadcast_to(c, np.broadcast(c, m).shape) - m
        self.margin = float(np.min(diff)) if diff.size else np.inf
        self.passed = bool(self.margin >= -self.tolerance)

    @classmethod
    def skip(cls, name, reason):
        return cls(name, None, None, skipped=True, info={"reason": reason})

    def line(self):
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        if self.skipped:
            return f"[{status}] {self.name}: {self.info.get('reason', '')}"
        return f"[{status}] {self.name}: margin={self.margin:.3e} tol={self.tolerance:.1e}"

    def to_dict(self):
        def conv(x):
            if x is None:
                return None
            a = np.asarray(x, dtype=float)
            return float(a) if a.ndim == 0 else [float(v) for v in a.ravel()]

        return {
            "name": self.name,
            "claimed": conv(self.claimed),
            "measured": conv(self.measured),
            "tolerance": float(self.tolerance),
            "margin": None if self.skipped else float(self.margin),
            "passed": self.passed,
            "skipped": self.skipped,
            "info": _plain(self.info),
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def all_passed(reports):
    return all(r.passed for r in reports)


def _reduce(x):
    if x is None:
        return None
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        return float(a)
    if a.size == 0:
        return {"n": 0}
    return {"n": int(a.size), "min": float(a.min()), "max": float(a.max())}


def summary(report):
    """Compact dict: series are reduced to ``n, min, max``."""
    return {
        "name": report.name,
        "passed": report.passed,
        "skipped": report.skipped,
        "margin": None if report.skipped else float(report.margin),
        "tolerance": float(report.tolerance),
        "claimed": _reduce(report.claimed),
        "measured": _reduce(report.measured),
        "info": _plain(report.info),
    }


def write_csv(reports, path):
    """One row per report: ``name,status,margin,tolerance,claimed_max,measured_max``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "status", "margin", "tolerance", "claimed_max", "measured_max"])
        for r in reports:
            status = "SKIP" if r.skipped else ("PASS" if r.passed else "FAIL")
            if r.skipped:
                w.writerow([r.name, status, "", "", "", ""])
                continue
            cm = float(np.max(r.claimed)) if np.size(r.claimed) else ""
            mm = float(np.max(r.measured)) if np.size(r.measured) else ""
            w.writerow([r.name, status, repr(r.margin), repr(float(r.tolerance)), repr(cm), repr(mm)])
