"""Deterministic JSON-lines reports for check results.

A report is a stream of records, one line per check, with a fixed key
order.  Rerunning the same configuration with the same seed must reproduce
the output byte for byte, so records are reduced to plain Python scalars
before serialization and the serializer is pinned (no indentation choices,
explicit separators, newline-terminated lines).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

KEY_ORDER = ("check", "region", "beta", "value", "tolerance", "pass", "seed")


@dataclass
class ReportRecord:
    """One check outcome; ``region`` is a site-list label such as ``"2,3"``."""

    check: str
    region: str
    beta: float
    value: float
    tolerance: float
    passed: bool
    seed: int

    def as_line(self) -> str:
        payload = {
            "check": str(self.check),
            "region": str(self.region),
            "beta": float(self.beta),
            "value": float(self.value),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
            "seed": int(self.seed),
        }
        return json.dumps(payload, separators=(", ", ": "))


def from_checks(checks, region_label: str, beta: float,
                seed: int) -> list[ReportRecord]:
    """Records from the stability module's check objects."""
    return [ReportRecord(c.check, region_label, beta, c.value, c.tolerance,
                         c.passed, seed) for c in checks]


def render_report(records: Iterable[ReportRecord]) -> str:
    return "".join(record.as_line() + "\n" for record in records)


def emit_report(records: Iterable[ReportRecord],
                path: str | None = None) -> str:
    """Serialize records; write them to ``path`` when given.

    Returns the serialized text either way.  An empty record list yields an
    empty file.
    """
    text = render_report(records)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    return text


def all_passed(records: Iterable[ReportRecord]) -> bool:
    return all(record.passed for record in records)
