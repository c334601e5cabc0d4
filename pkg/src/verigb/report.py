"""Campaign reports: per-input records, exact aggregate fractions, output files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

from .numbers import format_rational
from .verdict import VerdictKind

SCHEMA_VERSION = 1


@dataclass
class InputRecord:
    input_id: str
    epsilon: Fraction
    kind: VerdictKind
    elapsed: float = 0.0
    counterexample: Optional[dict] = None
    ce_path: Optional[str] = None
    reason: str = ""
    leaves_pruned: int = 0
    leaves_total: int = 0

    def to_json(self) -> dict[str, Any]:
        return {
            "input_id": self.input_id,
            "epsilon": format_rational(self.epsilon),
            "verdict": self.kind.value,
            "elapsed": round(self.elapsed, 6),
            "counterexample": self.counterexample,
            "ce_path": self.ce_path,
            "reason": self.reason,
            "leaves_pruned": self.leaves_pruned,
            "leaves_total": self.leaves_total,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "InputRecord":
        return cls(
            raw["input_id"],
            Fraction(raw["epsilon"]),
            VerdictKind(raw["verdict"]),
            raw.get("elapsed", 0.0),
            raw.get("counterexample"),
            raw.get("ce_path"),
            raw.get("reason", ""),
            raw.get("leaves_pruned", 0),
            raw.get("leaves_total", 0),
        )


@dataclass(frozen=True)
class Aggregate:
    epsilon: Fraction
    count: int
    robust: int
    counterexample: int
    timeout: int
    unknown: int

    @property
    def rho(self) -> Fraction:
        return Fraction(self.robust, self.count) if self.count else Fraction(0)

    @property
    def ce_fraction(self) -> Fraction:
        return Fraction(self.counterexample, self.count) if self.count else Fraction(0)

    @property
    def timeout_fraction(self) -> Fraction:
        return Fraction(self.timeout, self.count) if self.count else Fraction(0)

    @property
    def unknown_fraction(self) -> Fraction:
        return Fraction(self.unknown, self.count) if self.count else Fraction(0)

    def to_json(self) -> dict[str, Any]:
        return {
            "epsilon": format_rational(self.epsilon),
            "count": self.count,
            "robust": self.robust,
            "counterexample": self.counterexample,
            "timeout": self.timeout,
            "unknown": self.unknown,
            "rho": format_rational(self.rho),
            "ce_fraction": format_rational(self.ce_fraction),
            "timeout_fraction": format_rational(self.timeout_fraction),
            "unknown_fraction": format_rational(self.unknown_fraction),
        }


def aggregate(records: Sequence[InputRecord]) -> list[Aggregate]:
    """One row per epsilon, in first-seen order."""
    order: list[Fraction] = []
    buckets: dict[Fraction, list[InputRecord]] = {}
    for r in records:
        if r.epsilon not in buckets:
            order.append(r.epsilon)
            buckets[r.epsilon] = []
        buckets[r.epsilon].append(r)
    rows = []
    for eps in order:
        rs = buckets[eps]
        kinds = [r.kind for r in rs]
        rows.append(
            Aggregate(
                eps,
                len(rs),
                kinds.count(VerdictKind.ROBUST),
                kinds.count(VerdictKind.NOT_ROBUST),
                kinds.count(VerdictKind.TIMEOUT),
                kinds.count(VerdictKind.UNKNOWN),
            )
        )
    return rows


@dataclass
class CampaignReport:
    records: list[InputRecord] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    versions: dict = field(default_factory=dict)

    @property
    def aggregates(self) -> list[Aggregate]:
        return aggregate(self.records)

    def row(self, epsilon) -> Aggregate:
        eps = Fraction(epsilon)
        for a in self.aggregates:
            if a.epsilon == eps:
                return a
        raise KeyError(f"no records for epsilon {epsilon}")

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "versions": self.versions,
            "aggregates": [a.to_json() for a in self.aggregates],
            "records": [r.to_json() for r in self.records],
        }

    @classmethod
    def from_json(cls, raw: dict) -> "CampaignReport":
        if raw.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {raw.get('schema_version')!r}")
        return cls([InputRecord.from_json(r) for r in raw["records"]], raw.get("config", {}), raw.get("versions", {}))

    def table(self) -> str:
        """Fixed-width summary: one row per epsilon."""
        header = f"{'epsilon':>10} {'inputs':>7} {'Verified (rho)':>15} {'T/O':>8} {'C/E':>8} {'Unknown':>8}"
        lines = [header, "-" * len(header)]

        def pct(f: Fraction) -> str:
            return f"{float(f) * 100:.1f}%"

        for a in self.aggregates:
            lines.append(
                f"{format_rational(a.epsilon):>10} {a.count:>7} {pct(a.rho):>15} "
                f"{pct(a.timeout_fraction):>8} {pct(a.ce_fraction):>8} {pct(a.unknown_fraction):>8}"
            )
        return "\n".join(lines) + "\n"

    def write(self, directory) -> tuple[Path, Path]:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        js = out / "report.json"
        txt = out / "summary.txt"
        js.write_text(json.dumps(self.to_json(), indent=1) + "\n")
        txt.write_text(self.table())
        return js, txt
