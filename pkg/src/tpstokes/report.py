"""Verification report containers.

A report stores the numbers a check measured plus a list of criteria; the
pass flag is never stored independently but always recomputed from those
criteria, so a serialized report can be re-judged without rerunning anything.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class Criterion:
    name: str
    value: float
    op: str  # "<=", ">=", "<", ">", "between"
    threshold: object  # float, or [lo, hi] for "between"

    def holds(self):
        v = self.value
        if v is None or not math.isfinite(v):
            return False
        if self.op == "<=":
            return v <= self.threshold
        if self.op == ">=":
            return v >= self.threshold
        if self.op == "<":
            return v < self.threshold
        if self.op == ">":
            return v > self.threshold
        if self.op == "between":
            lo, hi = self.threshold
            return lo <= v <= hi
        raise ValueError(f"unknown criterion op {self.op!r}")

    def describe(self):
        mark = "PASS" if self.holds() else "FAIL"
        shown = "nan" if self.value is None else f"{self.value:.6g}"
        return f"[{mark}] {self.name}: {shown} {self.op} {self.threshold}"


@dataclass
class VerificationReport:
    check: str
    params: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    criteria: list = field(default_factory=list)
    runtime_s: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return bool(self.criteria) and all(c.holds() for c in self.criteria)

    def require(self, name, value, op, threshold):
        self.criteria.append(Criterion(name, _plain(value), op, _plain(threshold)))

    def to_dict(self):
        d = {
            "check": self.check,
            "params": _plain(self.params),
            "samples": _plain(self.samples),
            "fits": _plain(self.fits),
            "constants": _plain(self.constants),
            "criteria": [_plain(asdict(c)) for c in self.criteria],
            "pass": self.passed,
            "runtime_s": self.runtime_s,
        }
        if self.notes:
            d["notes"] = list(self.notes)
        return d

    def to_json(self, **kw):
        kw.setdefault("indent", 2)
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), allow_nan=False, **kw)

    @classmethod
    def from_dict(cls, d):
        return cls(
            check=d["check"],
            params=d.get("params", {}),
            samples=d.get("samples", {}),
            fits=d.get("fits", {}),
            constants=d.get("constants", {}),
            criteria=[Criterion(**c) for c in d.get("criteria", [])],
            runtime_s=d.get("runtime_s", 0.0),
            notes=d.get("notes", []),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def summary(self):
        lines = [f"{self.check}: {'PASS' if self.passed else 'FAIL'}"]
        lines += ["  " + c.describe() for c in self.criteria]
        return "\n".join(lines)


def _plain(obj):
    """Convert numpy scalars/arrays to JSON-ready Python objects; map non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj
