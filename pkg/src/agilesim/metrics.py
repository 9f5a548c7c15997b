"""Measurement: congestion, allocation shares, delay, evidence-based
competence, technical productivity, correlation, and sprint-log ingestion.

Competence follows a smoothed two-sided evidence model: difficulty-
weighted positive evidence (on time AND quality above the midpoint) vs
negative evidence (late OR quality at/below the midpoint), with +1
smoothing on both sides so an empty history scores exactly 0.5.
"Satisfactory quality" means a rating strictly greater than 5 on the
0-10 scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

from .simulation import RunResult


class MetricsError(ValueError):
    """Raised when a metric is undefined for the given input."""


class LogSchemaError(ValueError):
    """Raised by :func:`ingest_log`; carries one entry per problem."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(errors))


@dataclass(frozen=True)
class SprintRecord:
    """One completed task as logged in a sprint activity record.

    Scales: difficulty, priority, confidence, quality on 0-10;
    mood_begin and mood_end on 1-5; collaborators >= 1.
    """

    task_id: str
    assignee_id: str
    sprint_index: int
    difficulty: float
    priority: float
    confidence: float
    estimated_days: float
    actual_days: float
    quality: float
    collaborators: int
    mood_begin: float
    mood_end: float
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def on_time(self) -> bool:
        return self.actual_days - self.estimated_days <= 0

    @property
    def satisfactory(self) -> bool:
        return self.quality > 5


@dataclass(frozen=True)
class MetricSeries:
    """A named per-day or per-sprint series with units."""

    name: str
    unit: str
    index_name: str
    points: tuple[tuple[int, float], ...]

    def __post_init__(self):
        indices = [i for i, _ in self.points]
        if indices != sorted(indices):
            raise ValueError(f"series {self.name!r} index must be monotone")


def competence(records: Iterable[SprintRecord], agent: str) -> float:
    """Smoothed evidence score in (0, 1); exactly 0.5 with no history.

    Positive evidence is the summed difficulty of the agent's on-time,
    satisfactory-quality tasks; negative evidence the summed difficulty
    of tasks late or with unsatisfactory quality.
    """
    alpha = 0.0
    beta = 0.0
    for record in records:
        if record.assignee_id != agent:
            continue
        if record.on_time and record.satisfactory:
            alpha += record.difficulty
        else:
            beta += record.difficulty
    return (alpha + 1.0) / ((alpha + 1.0) + (beta + 1.0))


def technical_productivity(records: Iterable[SprintRecord], agent: str) -> float:
    """Mean difficulty-weighted workload completed per sprint; 0 with no
    history."""
    per_sprint: dict[int, float] = {}
    for record in records:
        if record.assignee_id != agent:
            continue
        per_sprint[record.sprint_index] = (
            per_sprint.get(record.sprint_index, 0.0) + record.difficulty
        )
    if not per_sprint:
        return 0.0
    return sum(per_sprint.values()) / len(per_sprint)


def congestion(queue_sizes: Iterable[int]) -> float:
    """Sum of squared queue lengths over all agent-type queues."""
    total = 0.0
    for size in queue_sizes:
        if size < 0:
            raise MetricsError(f"queue size must be >= 0 (got {size})")
        total += size * size
    return total


@dataclass(frozen=True)
class ProportionReport:
    by_agent: dict[str, float]
    by_category: dict[str, float]


def allocation_proportion(result: RunResult) -> ProportionReport:
    """Each agent's (and category's) share of total assigned effort.

    Shares sum to 1 within 1e-9. Raises when nothing was allocated.
    """
    totals = result.total_assigned_effort()
    grand_total = sum(totals.values())
    if grand_total <= 0:
        raise MetricsError("no allocations")
    by_agent = {agent: effort / grand_total for agent, effort in totals.items()}
    by_category: dict[str, float] = {}
    for agent, share in by_agent.items():
        category = result.categories[agent]
        by_category[category] = by_category.get(category, 0.0) + share
    return ProportionReport(by_agent=by_agent, by_category=by_category)


def delay_percentage(source: Union[RunResult, Sequence[SprintRecord]]) -> float:
    """Fraction of completed tasks finished late, in [0, 1].

    Log mode (sprint records): late means actual days exceed estimated
    days. Simulation mode: late means completion after the nominal
    duration ceil(effort / assignee max effort) counted from assignment,
    since synthetic tasks carry no human estimate.
    """
    if isinstance(source, RunResult):
        if source.completed_count == 0:
            raise MetricsError("no completions")
        return source.delay_count / source.completed_count
    records = list(source)
    if not records:
        raise MetricsError("no completions")
    late = sum(1 for record in records if not record.on_time)
    return late / len(records)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample correlation coefficient in [-1, 1].

    Requires equal lengths >= 2 and nonzero variance on both sides.
    """
    if len(x) != len(y):
        raise MetricsError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise MetricsError(f"need at least 2 points (got {n})")
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    dx = [value - mean_x for value in x]
    dy = [value - mean_y for value in y]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise MetricsError("zero variance: correlation undefined")
    cov = math.fsum(a * b for a, b in zip(dx, dy))
    r = cov / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, r))


# --- sprint activity logs ---------------------------------------------------
#
# CSV schema: one header row with exactly the SprintRecord field names;
# the three optional pass-through columns are kept in ``extras``.

_REQUIRED_COLUMNS = (
    "task_id",
    "assignee_id",
    "sprint_index",
    "difficulty",
    "priority",
    "confidence",
    "estimated_days",
    "actual_days",
    "quality",
    "collaborators",
    "mood_begin",
    "mood_end",
)
_OPTIONAL_COLUMNS = ("workload", "final_score", "team_score")

_RANGES = {
    "difficulty": (0.0, 10.0),
    "priority": (0.0, 10.0),
    "confidence": (0.0, 10.0),
    "quality": (0.0, 10.0),
    "mood_begin": (1.0, 5.0),
    "mood_end": (1.0, 5.0),
}


def ingest_log(path: str | Path) -> list[SprintRecord]:
    """Parse and range-validate a sprint activity CSV.

    Every problem is collected (with its row number, header = row 1)
    and raised together as a :class:`LogSchemaError`.
    """
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise LogSchemaError(["file is empty: no header row"])
        missing = [col for col in _REQUIRED_COLUMNS if col not in reader.fieldnames]
        if missing:
            raise LogSchemaError(
                [f"missing required column: {col}" for col in missing]
            )
        records: list[SprintRecord] = []
        errors: list[str] = []
        for row_no, row in enumerate(reader, start=2):
            parsed: dict[str, float] = {}
            row_bad = False
            for column in _REQUIRED_COLUMNS[2:]:
                raw = (row.get(column) or "").strip()
                try:
                    parsed[column] = float(raw)
                except ValueError:
                    errors.append(f"row {row_no}: {column} is not numeric ({raw!r})")
                    row_bad = True
            if row_bad:
                continue
            for column, (low, high) in _RANGES.items():
                value = parsed[column]
                if not low <= value <= high:
                    errors.append(
                        f"row {row_no}: {column} {value} outside [{low:g}, {high:g}]"
                    )
                    row_bad = True
            if parsed["actual_days"] < 0:
                errors.append(f"row {row_no}: actual_days must be >= 0")
                row_bad = True
            if parsed["estimated_days"] < 0:
                errors.append(f"row {row_no}: estimated_days must be >= 0")
                row_bad = True
            if parsed["collaborators"] < 1:
                errors.append(f"row {row_no}: collaborators must be >= 1")
                row_bad = True
            if parsed["sprint_index"] != int(parsed["sprint_index"]):
                errors.append(f"row {row_no}: sprint_index must be an integer")
                row_bad = True
            if row_bad:
                continue
            extras = {}
            for column in _OPTIONAL_COLUMNS:
                raw = (row.get(column) or "").strip()
                if raw:
                    try:
                        extras[column] = float(raw)
                    except ValueError:
                        errors.append(
                            f"row {row_no}: {column} is not numeric ({raw!r})"
                        )
                        row_bad = True
            if row_bad:
                continue
            records.append(
                SprintRecord(
                    task_id=(row.get("task_id") or "").strip(),
                    assignee_id=(row.get("assignee_id") or "").strip(),
                    sprint_index=int(parsed["sprint_index"]),
                    difficulty=parsed["difficulty"],
                    priority=parsed["priority"],
                    confidence=parsed["confidence"],
                    estimated_days=parsed["estimated_days"],
                    actual_days=parsed["actual_days"],
                    quality=parsed["quality"],
                    collaborators=int(parsed["collaborators"]),
                    mood_begin=parsed["mood_begin"],
                    mood_end=parsed["mood_end"],
                    extras=extras,
                )
            )
    if errors:
        raise LogSchemaError(errors)
    return records


def confidence_variance(records: Sequence[SprintRecord]) -> float:
    """Population variance of the logged confidence values."""
    if not records:
        raise MetricsError("no records")
    values = [record.confidence for record in records]
    mean = math.fsum(values) / len(values)
    return math.fsum((v - mean) ** 2 for v in values) / len(values)
