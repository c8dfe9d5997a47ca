"""Check records shared by every verification suite."""

from __future__ import annotations

import time
from dataclasses import dataclass, field


@dataclass
class CheckRecord:
    suite: str
    case: str
    params: dict = field(default_factory=dict)
    status: str = "pass"  # pass | fail | skip
    lhs: str | None = None
    rhs: str | None = None
    elapsed_ms: float = 0.0


def passed(suite: str, case: str, params: dict | None = None, elapsed_ms: float = 0.0) -> CheckRecord:
    return CheckRecord(suite, case, params or {}, "pass", None, None, elapsed_ms)


def failed(
    suite: str,
    case: str,
    params: dict | None = None,
    lhs: str | None = None,
    rhs: str | None = None,
    elapsed_ms: float = 0.0,
) -> CheckRecord:
    return CheckRecord(suite, case, params or {}, "fail", lhs, rhs, elapsed_ms)


def summarize(records: list[CheckRecord]) -> dict[str, int]:
    counts = {"pass": 0, "fail": 0, "skip": 0}
    for rec in records:
        counts[rec.status] += 1
    return counts


def all_pass(records: list[CheckRecord]) -> bool:
    return all(rec.status == "pass" for rec in records)


class Stopwatch:
    def __enter__(self) -> "Stopwatch":
        self._start = time.perf_counter()
        self.ms = 0.0
        return self

    def __exit__(self, *exc) -> None:
        self.ms = (time.perf_counter() - self._start) * 1000.0
