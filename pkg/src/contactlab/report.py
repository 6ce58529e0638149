"""Structured records of verification runs, serialized to CSV and JSON."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def seed_for(seed: int, *counters: int) -> int:
    """Independent child seed for a sub-experiment, derived from one root seed."""
    return int(np.random.SeedSequence([int(seed), *map(int, counters)]).generate_state(1)[0])


def _plain(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


@dataclass
class ExperimentReport:
    name: str
    metrics: dict = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)
    flags: dict[str, bool] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_dict(self) -> dict:
        return _plain(
            {
                "name": self.name,
                "config": self.config,
                "meta": self.meta,
                "metrics": self.metrics,
                "flags": self.flags,
                "passed": self.passed,
                "rows": self.rows,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        if not self.rows:
            return ""
        cols = list(self.rows[0])
        for r in self.rows[1:]:
            cols += [c for c in r if c not in cols]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"experiment: {self.name}"]
        for k, v in self.metrics.items():
            lines.append(f"  {k}: {_fmt(v)}")
        for k, v in self.flags.items():
            lines.append(f"  [{'PASS' if v else 'FAIL'}] {k}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        (out / "metrics.csv").write_text(self.to_csv())
        (out / "summary.txt").write_text(self.summary())
        return out


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return _plain(v)
