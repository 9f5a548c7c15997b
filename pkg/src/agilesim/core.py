"""Shared domain types and the catalog of preset team scenarios.

Teams are described by per-category head counts, competence, and daily
effort capacity. A scenario combines a team with a task mix, a horizon,
and run parameters (seed, repetitions, acceptance weight, allocator,
mood mode). Nine presets cover three team sizes (20 / 50 / 160 heads)
crossed with three competence profiles.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class Category(str, Enum):
    """Developer-agent behavior categories, most to least competent."""

    HCA = "HCA"
    MCA = "MCA"
    MIA = "MIA"
    HIA = "HIA"


class Allocator(str, Enum):
    SMART = "SMART"
    AWR = "AWR"


class TaskStatus(str, Enum):
    PENDING = "pending-in-common-queue"
    ASSIGNED = "assigned"
    COMPLETED = "completed"


class UnknownPresetError(KeyError):
    """Raised when a preset name is not in the catalog."""


class ScenarioValidationError(ValueError):
    """Raised by :func:`validate` with every violation listed."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(errors))


@dataclass(frozen=True)
class TaskTypeSpec:
    """Static properties shared by every task of one type.

    ``priority`` orders the common queue, ``utility`` is the reward for a
    successful completion, and ``effort`` is the work required to finish
    one task of this type.
    """

    type_id: str
    priority: float
    utility: float
    effort: float


@dataclass
class TaskInstance:
    """One concrete task and its runtime state."""

    task_id: str
    type_id: str
    arrival_day: int
    remaining_effort: float
    status: TaskStatus = TaskStatus.PENDING
    assignee: str | None = None
    assigned_day: int | None = None
    completion_day: int | None = None
    quality_success: bool | None = None
    accept_seq: int | None = None


@dataclass
class AgentState:
    """A developer agent: identity, context, and pending work.

    ``competence`` is a scalar in [0, 1]; a per-type override map may be
    supplied for agents whose skill differs across task types.
    ``queues`` holds accepted-but-unfinished tasks per type in acceptance
    order; ``pending`` is the same tasks in global acceptance order and
    is the service order. ``carryover_effort`` is the effort already sunk
    into the head in-service task.
    """

    agent_id: str
    category: Category
    competence: float
    mood: float
    max_effort: float
    competence_by_type: dict[str, float] | None = None
    queues: dict[str, deque[TaskInstance]] = field(default_factory=dict)
    pending: deque[TaskInstance] = field(default_factory=deque)
    pending_effort: float = 0.0
    carryover_effort: float = 0.0
    recent_completions: dict[str, int] = field(default_factory=dict)

    def competence_for(self, type_id: str) -> float:
        if self.competence_by_type and type_id in self.competence_by_type:
            return self.competence_by_type[type_id]
        return self.competence


@dataclass(frozen=True)
class CategorySpec:
    category: Category
    count: int
    competence: float
    max_effort: float


@dataclass(frozen=True)
class TeamConfig:
    """Team composition: one spec per category, in roster order."""

    categories: tuple[CategorySpec, ...]

    def head_count(self) -> int:
        return sum(c.count for c in self.categories)

    def build_agents(self, mood: float = 1.0) -> list[AgentState]:
        """Instantiate the roster. Agent ids are ``dev-NNN`` in declared
        category order, so id order follows the roster order."""
        agents: list[AgentState] = []
        serial = 0
        for spec in self.categories:
            for _ in range(spec.count):
                agents.append(
                    AgentState(
                        agent_id=f"dev-{serial:03d}",
                        category=spec.category,
                        competence=spec.competence,
                        mood=mood,
                        max_effort=spec.max_effort,
                    )
                )
                serial += 1
        return agents


@dataclass(frozen=True)
class MoodMode:
    """Mood dynamics selector: a fixed value, or daily concept-map
    coupling driven by each agent's completion outcomes."""

    kind: str  # "constant" | "fcm-coupled"
    value: float = 1.0

    @classmethod
    def constant(cls, value: float = 1.0) -> "MoodMode":
        return cls(kind="constant", value=value)

    @classmethod
    def fcm_coupled(cls) -> "MoodMode":
        return cls(kind="fcm-coupled")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    team: TeamConfig
    task_mix: tuple[tuple[TaskTypeSpec, int], ...]
    horizon_days: int = 100
    repetitions: int = 10
    seed: int = 0
    psi: float = 1.0
    allocator: Allocator = Allocator.SMART
    mood_mode: MoodMode = MoodMode.constant(1.0)

    def task_types(self) -> dict[str, TaskTypeSpec]:
        return {spec.type_id: spec for spec, _ in self.task_mix}

    def total_tasks(self) -> int:
        return sum(count for _, count in self.task_mix)


# Category profiles used by every preset: (competence, daily max effort).
_PROFILES = {
    Category.HCA: (0.9, 20.0),
    Category.MCA: (0.7, 15.0),
    Category.MIA: (0.3, 15.0),
    Category.HIA: (0.1, 10.0),
}

# Per-type (utility, effort) ladder shared by all presets; priority is
# taken equal to utility since higher-value work is queued first.
_TASK_LADDER = ((10.0, 10.0), (8.0, 8.0), (5.0, 5.0), (3.0, 3.0), (1.0, 1.0))

# Head counts per preset in HCA/MCA/MIA/HIA order, with the per-type task
# count. The two large rosters marked "scaled" are rebuilt at 160 heads by
# scaling the small-team mixes (L-M from S-M, L-C mirroring L-I), because
# only ratios are available for them.
_PRESET_ROSTERS: dict[str, tuple[tuple[int, int, int, int], int]] = {
    "S-I": ((1, 5, 5, 9), 100),
    "S-M": ((5, 5, 5, 5), 100),
    "S-C": ((9, 5, 5, 1), 100),
    "M-I": ((2, 13, 13, 22), 300),
    "M-M": ((12, 13, 13, 12), 300),
    "M-C": ((22, 13, 13, 2), 300),
    "L-I": ((10, 40, 40, 70), 1000),
    "L-M": ((40, 40, 40, 40), 1000),  # scaled
    "L-C": ((70, 40, 40, 10), 1000),  # scaled
}

PRESET_NAMES = tuple(_PRESET_ROSTERS)


def _task_mix(per_type_count: int) -> tuple[tuple[TaskTypeSpec, int], ...]:
    mix = []
    for idx, (utility, effort) in enumerate(_TASK_LADDER, start=1):
        spec = TaskTypeSpec(
            type_id=f"T{idx}", priority=utility, utility=utility, effort=effort
        )
        mix.append((spec, per_type_count))
    return tuple(mix)


def preset(name: str) -> ScenarioConfig:
    """Return one of the nine preset scenarios (S/M/L x I/M/C).

    All presets run 100 days with 10 repetitions. Team sizes are 20, 50,
    and 160 heads; the large medium-competence and high-competence
    rosters are reconstructions at 160 heads preserving the small-team
    ratios (L-M: 40/40/40/40; L-C: 70/40/40/10, mirroring L-I), since no
    explicit 160-person roster exists for them.
    """
    try:
        counts, per_type = _PRESET_ROSTERS[name]
    except KeyError:
        raise UnknownPresetError(
            f"unknown preset: {name!r} (expected one of {', '.join(PRESET_NAMES)})"
        ) from None
    categories = tuple(
        CategorySpec(cat, count, *_PROFILES[cat])
        for cat, count in zip(Category, counts)
    )
    return ScenarioConfig(
        name=name,
        team=TeamConfig(categories=categories),
        task_mix=_task_mix(per_type),
        horizon_days=100,
        repetitions=10,
    )


def validate(config: ScenarioConfig) -> ScenarioConfig:
    """Check every invariant and return the config unchanged.

    Raises :class:`ScenarioValidationError` carrying one entry per
    violation, each prefixed with the offending field path.
    """
    errors: list[str] = []
    if not config.name:
        errors.append("name: must be non-empty")
    if config.horizon_days < 1:
        errors.append(f"horizon_days: must satisfy horizon_days >= 1 (got {config.horizon_days})")
    if config.repetitions < 1:
        errors.append(f"repetitions: must satisfy repetitions >= 1 (got {config.repetitions})")
    if config.psi < 0:
        errors.append(f"psi: must satisfy psi >= 0 (got {config.psi})")
    if config.team.head_count() <= 0:
        errors.append("team: total head-count must be > 0")
    for spec in config.team.categories:
        path = f"team.{spec.category.value}"
        if spec.count < 0:
            errors.append(f"{path}.count: must be >= 0 (got {spec.count})")
        if not 0.0 < spec.competence <= 1.0:
            errors.append(
                f"{path}.competence: competence must be within (0, 1] (got {spec.competence})"
            )
        if spec.max_effort <= 0:
            errors.append(f"{path}.max_effort: must be > 0 (got {spec.max_effort})")
    if config.total_tasks() <= 0:
        errors.append("task_mix: total task count must be > 0")
    seen: set[str] = set()
    for idx, (spec, count) in enumerate(config.task_mix):
        path = f"task_mix[{idx}]"
        if spec.type_id in seen:
            errors.append(f"{path}.type_id: duplicate type id {spec.type_id!r}")
        seen.add(spec.type_id)
        if count < 0:
            errors.append(f"{path}.count: must be >= 0 (got {count})")
        if spec.utility < 0:
            errors.append(f"{path}.utility: must be >= 0 (got {spec.utility})")
        if spec.effort <= 0:
            errors.append(f"{path}.effort: must be > 0 (got {spec.effort})")
        if spec.priority < 0:
            errors.append(f"{path}.priority: must be >= 0 (got {spec.priority})")
    if config.mood_mode.kind not in ("constant", "fcm-coupled"):
        errors.append(f"mood_mode.kind: unknown kind {config.mood_mode.kind!r}")
    if not 0.0 <= config.mood_mode.value <= 1.0:
        errors.append(
            f"mood_mode.value: mood must be within [0, 1] (got {config.mood_mode.value})"
        )
    if errors:
        raise ScenarioValidationError(errors)
    return config


# --- scenario files -------------------------------------------------------
#
# A scenario document is JSON with top-level keys: name, team, tasks,
# horizon_days, repetitions, seed, psi, allocator, mood_mode.


def scenario_to_document(config: ScenarioConfig) -> dict:
    team = {
        spec.category.value: {
            "count": spec.count,
            "competence": spec.competence,
            "max_effort": spec.max_effort,
        }
        for spec in config.team.categories
    }
    tasks = [
        {
            "type_id": spec.type_id,
            "priority": spec.priority,
            "utility": spec.utility,
            "effort": spec.effort,
            "count": count,
        }
        for spec, count in config.task_mix
    ]
    if config.mood_mode.kind == "constant":
        mood = f"constant:{config.mood_mode.value}"
    else:
        mood = "fcm-coupled"
    return {
        "name": config.name,
        "team": team,
        "tasks": tasks,
        "horizon_days": config.horizon_days,
        "repetitions": config.repetitions,
        "seed": config.seed,
        "psi": config.psi,
        "allocator": config.allocator.value,
        "mood_mode": mood,
    }


def _parse_mood_mode(raw: str) -> MoodMode:
    if raw == "fcm-coupled":
        return MoodMode.fcm_coupled()
    if raw == "constant":
        return MoodMode.constant(1.0)
    if raw.startswith("constant:"):
        return MoodMode.constant(float(raw.split(":", 1)[1]))
    raise ScenarioValidationError([f"mood_mode: unrecognized value {raw!r}"])


def scenario_from_document(doc: dict) -> ScenarioConfig:
    missing = [
        key
        for key in ("name", "team", "tasks", "horizon_days", "repetitions", "seed")
        if key not in doc
    ]
    if missing:
        raise ScenarioValidationError(
            [f"{key}: required key missing" for key in missing]
        )
    categories = []
    for cat_name, entry in doc["team"].items():
        try:
            cat = Category(cat_name)
        except ValueError:
            raise ScenarioValidationError(
                [f"team.{cat_name}: unknown category"]
            ) from None
        categories.append(
            CategorySpec(
                category=cat,
                count=int(entry["count"]),
                competence=float(entry["competence"]),
                max_effort=float(entry["max_effort"]),
            )
        )
    task_mix = tuple(
        (
            TaskTypeSpec(
                type_id=str(entry["type_id"]),
                priority=float(entry["priority"]),
                utility=float(entry["utility"]),
                effort=float(entry["effort"]),
            ),
            int(entry["count"]),
        )
        for entry in doc["tasks"]
    )
    try:
        allocator = Allocator(doc.get("allocator", "SMART"))
    except ValueError:
        raise ScenarioValidationError(
            [f"allocator: unknown allocator {doc.get('allocator')!r}"]
        ) from None
    config = ScenarioConfig(
        name=str(doc["name"]),
        team=TeamConfig(categories=tuple(categories)),
        task_mix=task_mix,
        horizon_days=int(doc["horizon_days"]),
        repetitions=int(doc["repetitions"]),
        seed=int(doc["seed"]),
        psi=float(doc.get("psi", 1.0)),
        allocator=allocator,
        mood_mode=_parse_mood_mode(str(doc.get("mood_mode", "constant:1.0"))),
    )
    return validate(config)


def load_scenario(path: str | Path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as handle:
        return scenario_from_document(json.load(handle))


def save_scenario(config: ScenarioConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(scenario_to_document(config), handle, indent=2)
        handle.write("\n")


def with_overrides(
    config: ScenarioConfig,
    seed: int | None = None,
    allocator: Allocator | None = None,
    repetitions: int | None = None,
    psi: float | None = None,
) -> ScenarioConfig:
    """Copy a scenario with selected run parameters replaced."""
    from dataclasses import replace

    changes: dict = {}
    if seed is not None:
        changes["seed"] = seed
    if allocator is not None:
        changes["allocator"] = allocator
    if repetitions is not None:
        changes["repetitions"] = repetitions
    if psi is not None:
        changes["psi"] = psi
    return replace(config, **changes) if changes else config
