"""Verification reports and their JSON / CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any

MAX_RECORDED_FAILURES = 1000


def _natural(item) -> tuple:
    key = str(item[0])
    return (0, int(key), key) if key.isdigit() else (1, 0, key)


def merge_details(a: dict, b: dict) -> dict:
    """Combine per-chunk details: counters add, ``max``/``min`` keys reduce, first value wins otherwise."""
    out = dict(a)
    for key, value in b.items():
        if key not in out:
            out[key] = value
        elif isinstance(value, dict):
            merged = dict(out[key])
            for k, v in value.items():
                merged[k] = merged.get(k, 0) + v
            out[key] = dict(sorted(merged.items(), key=_natural))
        elif "max" in key:
            out[key] = max(out[key], value)
        elif "min" in key:
            out[key] = min(out[key], value)
        elif key.startswith("first"):
            pass
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            out[key] = out[key] + value
    return out


@dataclass
class Failure:
    element: int
    witness: str


@dataclass
class CheckReport:
    model: str
    check: str
    total: int = 0
    failures: list[Failure] = field(default_factory=list)
    elapsed_ms: int = 0
    details: dict[str, Any] = field(default_factory=dict)
    failure_count: int = 0

    @property
    def passed(self) -> bool:
        return self.failure_count == 0 and not self.failures

    def fail(self, element: int, witness: str) -> None:
        self.failure_count += 1
        if len(self.failures) < MAX_RECORDED_FAILURES:
            self.failures.append(Failure(int(element), witness))

    def merge(self, other: "CheckReport") -> None:
        """Append a later chunk; failures keep element order if chunks arrive in order."""
        self.total += other.total
        self.failure_count += other.failure_count
        room = MAX_RECORDED_FAILURES - len(self.failures)
        self.failures.extend(other.failures[:max(room, 0)])
        self.details = merge_details(self.details, other.details)

    @contextmanager
    def timed(self):
        start = time.perf_counter()
        try:
            yield self
        finally:
            self.elapsed_ms += int(round((time.perf_counter() - start) * 1000))

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "model": self.model,
            "check": self.check,
            "total": self.total,
            "failures": [{"element": f.element, "witness": f.witness} for f in self.failures],
            "elapsed_ms": self.elapsed_ms if timing else 0,
        }
        if self.failure_count > len(self.failures):
            out["details"] = dict(self.details, failures_truncated=self.failure_count)
        elif self.details:
            out["details"] = self.details
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=False) + "\n"

    def to_csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model", "check", "total", "element", "witness", "elapsed_ms"])
        elapsed = self.elapsed_ms if timing else 0
        for f in self.failures:
            writer.writerow([self.model, self.check, self.total, f.element, f.witness, elapsed])
        summary = f"SUMMARY failures={self.failure_count} passed={str(self.passed).lower()}"
        writer.writerow([self.model, self.check, self.total, "", summary, elapsed])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, data: dict) -> "CheckReport":
        report = cls(model=data["model"], check=data["check"], total=data["total"],
                     elapsed_ms=data.get("elapsed_ms", 0), details=dict(data.get("details", {})))
        for f in data["failures"]:
            report.fail(f["element"], f["witness"])
        return report

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.check} [{self.model}] total={self.total} failures={self.failure_count} ({self.elapsed_ms} ms)"
