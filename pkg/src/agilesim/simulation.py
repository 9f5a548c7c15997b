"""Deterministic discrete-time team simulation.

Each day: (1) new tasks are admitted to the common queue, highest
priority first; (2) agents acquire work, either through per-agent
acceptance plans (SMART) or by assigning every task on arrival to the
most competent agent (AWR); (3) each agent spends up to its daily
effort on its pending tasks in acceptance order, carrying partial
effort across days; (4) each completion draws a quality outcome with
success probability equal to the worker's competence for the type;
(5) moods update according to the scenario's mood mode; (6) the day's
metrics are recorded.

Runs are bit-reproducible for a fixed seed. The arrival schedule
depends only on the seed, never on the allocator, so toggling the
allocator compares like against like. Within one run the arrival
stream and the quality stream use separate generators.

Crediting: a completed task contributes its full utility to global
utility when its quality draw succeeds, and nothing otherwise; tasks
still in flight at the horizon credit nothing.
"""

from __future__ import annotations

import math
import random
import statistics
from collections import deque
from dataclasses import dataclass, field

from . import fcm
from .allocation import TypeEconomics, awr_assign, smart_plan, visit_order
from .core import (
    AgentState,
    Allocator,
    ScenarioConfig,
    TaskInstance,
    TaskStatus,
)

_EPS = 1e-9


class SimulationInvariantError(RuntimeError):
    """An internal accounting invariant was breached; aborts the run."""


@dataclass
class SimState:
    """Complete state of one run between days.

    ``common_queue`` holds unassigned tasks per type in arrival order;
    combined with the per-type priority this realizes a priority-ordered
    backlog. Every task is in exactly one of: the common queue, an
    agent's queues, or ``completed``.
    """

    day: int
    agents: list[AgentState]
    common_queue: dict[str, deque[TaskInstance]]
    completed: list[TaskInstance]
    arrivals_by_day: dict[int, list[TaskInstance]]
    quality_rng: random.Random
    arrived_total: int = 0
    accept_counter: int = 0
    metrics: "_MetricsAccumulator | None" = None
    mood_map: fcm.ConceptMap | None = None
    _types_by_priority: list[str] = field(default_factory=list)

    def common_queue_tasks(self) -> list[TaskInstance]:
        """Backlog snapshot in priority-then-arrival order."""
        ordered: list[TaskInstance] = []
        for tid in self._types_by_priority:
            ordered.extend(self.common_queue[tid])
        return ordered


@dataclass
class CompletedTask:
    task_id: str
    type_id: str
    assignee: str
    arrival_day: int
    assigned_day: int
    completion_day: int
    quality_success: bool
    late: bool
    utility: float


@dataclass
class RunResult:
    """Per-day series and totals for one simulated run."""

    scenario: str
    allocator: Allocator
    seed: int
    horizon: int
    agent_ids: list[str]
    categories: dict[str, str]
    assigned_effort: dict[str, list[float]]
    busy_effort: dict[str, list[float]]
    pending_workload: dict[str, list[float]]
    queue_sizes: dict[str, list[int]]
    congestion: list[float]
    arrivals: list[int]
    completions: list[int]
    utility: list[float]
    completed: list[CompletedTask]
    global_utility: float
    completed_count: int
    high_quality_count: int
    delay_count: int

    def cumulative_utility(self) -> list[float]:
        total = 0.0
        series = []
        for value in self.utility:
            total += value
            series.append(total)
        return series

    def total_assigned_effort(self) -> dict[str, float]:
        return {agent: sum(series) for agent, series in self.assigned_effort.items()}


@dataclass
class RepeatedResult:
    """All runs of one scenario plus per-metric mean and standard
    deviation (sample standard deviation; 0.0 for a single run)."""

    runs: list[RunResult]
    mean: dict[str, float]
    std: dict[str, float]


class _MetricsAccumulator:
    def __init__(self, agents: list[AgentState], horizon: int):
        self.horizon = horizon
        self.agent_ids = [a.agent_id for a in agents]
        self.assigned_effort = {a.agent_id: [] for a in agents}
        self.busy_effort = {a.agent_id: [] for a in agents}
        self.pending_workload = {a.agent_id: [] for a in agents}
        self.queue_sizes = {a.agent_id: [] for a in agents}
        self.congestion: list[float] = []
        self.arrivals: list[int] = []
        self.completions: list[int] = []
        self.utility: list[float] = []
        self.completed: list[CompletedTask] = []


def _derive_rngs(seed: int) -> tuple[random.Random, random.Random]:
    # Disjoint integer seeds keep the arrival stream independent of the
    # quality stream and distinct across repetition seeds.
    return random.Random(2 * seed), random.Random(2 * seed + 1)


def generate_arrivals(config: ScenarioConfig, seed: int) -> list[TaskInstance]:
    """Create every task with its arrival day.

    Each type's count is spread uniformly over the horizon (either
    floor(N/T) or ceil(N/T) per day, extras on the earliest days), and
    the merged per-day order is shuffled by the seeded generator. The
    result is ordered by day, then by within-day shuffle position.
    Deterministic for a fixed seed and independent of the allocator.
    """
    arrivals_rng, _ = _derive_rngs(seed)
    horizon = config.horizon_days
    per_day: list[list[TaskInstance]] = [[] for _ in range(horizon)]
    for spec, count in config.task_mix:
        base, extra = divmod(count, horizon)
        serial = 0
        for day in range(horizon):
            todays = base + (1 if day < extra else 0)
            for _ in range(todays):
                per_day[day].append(
                    TaskInstance(
                        task_id=f"{spec.type_id.lower()}-{serial:05d}",
                        type_id=spec.type_id,
                        arrival_day=day,
                        remaining_effort=spec.effort,
                    )
                )
                serial += 1
    ordered: list[TaskInstance] = []
    for day in range(horizon):
        arrivals_rng.shuffle(per_day[day])
        ordered.extend(per_day[day])
    return ordered


def initial_state(config: ScenarioConfig, seed: int | None = None) -> SimState:
    """Build the day-0 state for a scenario.

    Validation is the caller's responsibility (the CLI and the scenario
    loader both validate); this keeps degenerate-but-harmless configs,
    such as an empty task mix, runnable for experiments.
    """
    run_seed = config.seed if seed is None else seed
    _, quality_rng = _derive_rngs(run_seed)
    mood = 0.5 if config.mood_mode.kind == "fcm-coupled" else config.mood_mode.value
    agents = config.team.build_agents(mood=mood)
    types = config.task_types()
    for agent in agents:
        agent.queues = {tid: deque() for tid in types}
    arrivals_by_day: dict[int, list[TaskInstance]] = {}
    for task in generate_arrivals(config, run_seed):
        arrivals_by_day.setdefault(task.arrival_day, []).append(task)
    state = SimState(
        day=0,
        agents=agents,
        common_queue={tid: deque() for tid in types},
        completed=[],
        arrivals_by_day=arrivals_by_day,
        quality_rng=quality_rng,
        metrics=_MetricsAccumulator(agents, config.horizon_days),
    )
    state._types_by_priority = sorted(
        types, key=lambda tid: (-types[tid].priority, tid)
    )
    if config.mood_mode.kind == "fcm-coupled":
        # Three-node mood/progress/quality map driving daily mood updates.
        state.mood_map = fcm.bundled_map("michael_scenario1")
    return state


def _claim(
    state: SimState,
    agent: AgentState,
    task: TaskInstance,
    effort: float,
    day: int,
) -> None:
    task.assignee = agent.agent_id
    task.assigned_day = day
    task.status = TaskStatus.ASSIGNED
    task.accept_seq = state.accept_counter
    state.accept_counter += 1
    agent.queues[task.type_id].append(task)
    agent.pending.append(task)
    agent.pending_effort += effort


def _check_conservation(state: SimState) -> None:
    in_common = sum(len(q) for q in state.common_queue.values())
    in_agents = sum(len(a.pending) for a in state.agents)
    total = in_common + in_agents + len(state.completed)
    if total != state.arrived_total:
        raise SimulationInvariantError(
            f"task conservation breached on day {state.day}: "
            f"{in_common} queued + {in_agents} assigned + "
            f"{len(state.completed)} completed != {state.arrived_total} arrived"
        )


def tick(state: SimState, config: ScenarioConfig) -> SimState:
    """Advance the simulation by one day (mutates and returns state)."""
    if state.day >= config.horizon_days:
        raise ValueError(f"day {state.day} is already at the horizon")
    day = state.day
    types = config.task_types()
    metrics = state.metrics

    # (1) Admission: today's arrivals enter the common queue by priority,
    # preserving the shuffled within-day order for equal priorities.
    todays = state.arrivals_by_day.pop(day, [])
    for task in sorted(todays, key=lambda t: -types[t.type_id].priority):
        state.common_queue[task.type_id].append(task)
    state.arrived_total += len(todays)

    # (2) Allocation.
    assigned_today = {agent.agent_id: 0.0 for agent in state.agents}
    if config.allocator is Allocator.SMART:
        offered = {
            tid: len(queue) for tid, queue in state.common_queue.items() if queue
        }
        for agent in state.agents:
            if not offered:
                break
            economics = {
                tid: TypeEconomics(
                    type_id=tid,
                    expected_utility=spec.utility
                    * agent.competence_for(tid)
                    * agent.mood,
                    recent_service_rate=float(agent.recent_completions.get(tid, 0)),
                    effort=spec.effort,
                )
                for tid, spec in types.items()
            }
            plan = smart_plan(agent, offered, economics, config.psi)
            for tid in visit_order(economics, config.psi, list(offered)):
                count = plan.accepted.get(tid, 0)
                for _ in range(count):
                    task = state.common_queue[tid].popleft()
                    _claim(state, agent, task, types[tid].effort, day)
                if count:
                    assigned_today[agent.agent_id] += count * types[tid].effort
            offered = {
                tid: offered[tid] - plan.accepted.get(tid, 0)
                for tid in offered
                if offered[tid] - plan.accepted.get(tid, 0) > 0
            }
    else:  # AWR: every queued task is assigned immediately, none rejected.
        agents_by_id = {agent.agent_id: agent for agent in state.agents}
        # Competence is static within a run, so the choice per type is too.
        assignee_by_type = {
            tid: awr_assign(tid, state.agents)
            for tid in types
            if state.common_queue[tid]
        }
        for tid in state._types_by_priority:
            queue = state.common_queue[tid]
            while queue:
                task = queue.popleft()
                agent = agents_by_id[assignee_by_type[tid]]
                _claim(state, agent, task, types[tid].effort, day)
                assigned_today[agent.agent_id] += types[tid].effort

    # (3) Service, (4) quality outcomes.
    completions_today = 0
    utility_today = 0.0
    per_agent_outcomes: dict[str, tuple[int, int, int]] = {}
    for agent in state.agents:
        budget = agent.max_effort
        served: dict[str, int] = {}
        done = on_time = high_quality = 0
        while budget > _EPS and agent.pending:
            task = agent.pending[0]
            spend = min(budget, task.remaining_effort)
            task.remaining_effort -= spend
            budget -= spend
            agent.pending_effort -= spend
            if task.remaining_effort <= _EPS:
                agent.pending.popleft()
                agent.queues[task.type_id].popleft()
                task.remaining_effort = 0.0
                task.status = TaskStatus.COMPLETED
                task.completion_day = day
                spec = types[task.type_id]
                success = state.quality_rng.random() < agent.competence_for(
                    task.type_id
                )
                task.quality_success = success
                nominal_days = math.ceil(spec.effort / agent.max_effort)
                late = (day - task.assigned_day + 1) > nominal_days
                state.completed.append(task)
                served[task.type_id] = served.get(task.type_id, 0) + 1
                done += 1
                on_time += 0 if late else 1
                high_quality += 1 if success else 0
                completions_today += 1
                credited = spec.utility if success else 0.0
                utility_today += credited
                if metrics is not None:
                    metrics.completed.append(
                        CompletedTask(
                            task_id=task.task_id,
                            type_id=task.type_id,
                            assignee=agent.agent_id,
                            arrival_day=task.arrival_day,
                            assigned_day=task.assigned_day,
                            completion_day=day,
                            quality_success=success,
                            late=late,
                            utility=credited,
                        )
                    )
        spent = agent.max_effort - budget
        if spent > agent.max_effort + _EPS:
            raise SimulationInvariantError(
                f"agent {agent.agent_id} spent {spent} effort with "
                f"max_effort {agent.max_effort} on day {day}"
            )
        if agent.pending:
            head = agent.pending[0]
            agent.carryover_effort = types[head.type_id].effort - head.remaining_effort
        else:
            agent.carryover_effort = 0.0
        agent.recent_completions = served
        per_agent_outcomes[agent.agent_id] = (done, on_time, high_quality)
        if metrics is not None:
            metrics.busy_effort[agent.agent_id].append(spent)

    # (5) Mood update.
    if config.mood_mode.kind == "fcm-coupled" and state.mood_map is not None:
        for agent in state.agents:
            done, on_time, high_quality = per_agent_outcomes[agent.agent_id]
            progress = on_time / done if done else 0.5
            quality = high_quality / done if done else 0.5
            mood_state = fcm.StateVector(values=(agent.mood, progress, quality))
            agent.mood = fcm.step(state.mood_map, mood_state).values[0]

    # (6) Record metrics and advance the clock.
    if metrics is not None:
        congestion_today = 0.0
        for agent in state.agents:
            metrics.assigned_effort[agent.agent_id].append(
                assigned_today[agent.agent_id]
            )
            metrics.pending_workload[agent.agent_id].append(agent.pending_effort)
            metrics.queue_sizes[agent.agent_id].append(len(agent.pending))
            for queue in agent.queues.values():
                congestion_today += len(queue) ** 2
        metrics.congestion.append(congestion_today)
        metrics.arrivals.append(len(todays))
        metrics.completions.append(completions_today)
        metrics.utility.append(utility_today)
    _check_conservation(state)
    state.day += 1
    return state


def run(config: ScenarioConfig, seed: int | None = None) -> RunResult:
    """Execute one full run from an empty state."""
    state = initial_state(config, seed)
    for _ in range(config.horizon_days):
        tick(state, config)
    metrics = state.metrics
    assert metrics is not None
    completed = metrics.completed
    return RunResult(
        scenario=config.name,
        allocator=config.allocator,
        seed=config.seed if seed is None else seed,
        horizon=config.horizon_days,
        agent_ids=list(metrics.agent_ids),
        categories={a.agent_id: a.category.value for a in state.agents},
        assigned_effort=metrics.assigned_effort,
        busy_effort=metrics.busy_effort,
        pending_workload=metrics.pending_workload,
        queue_sizes=metrics.queue_sizes,
        congestion=metrics.congestion,
        arrivals=metrics.arrivals,
        completions=metrics.completions,
        utility=metrics.utility,
        completed=completed,
        global_utility=sum(metrics.utility),
        completed_count=len(completed),
        high_quality_count=sum(1 for c in completed if c.quality_success),
        delay_count=sum(1 for c in completed if c.late),
    )


def run_repeated(config: ScenarioConfig) -> RepeatedResult:
    """Run ``config.repetitions`` seeded runs (seed, seed+1, ...) and
    aggregate per-metric mean and sample standard deviation."""
    runs = [run(config, seed=config.seed + r) for r in range(config.repetitions)]
    metric_values = {
        "global_utility": [r.global_utility for r in runs],
        "completed_count": [float(r.completed_count) for r in runs],
        "high_quality_count": [float(r.high_quality_count) for r in runs],
        "delay_count": [float(r.delay_count) for r in runs],
    }
    mean = {name: statistics.fmean(values) for name, values in metric_values.items()}
    std = {
        name: statistics.stdev(values) if len(values) > 1 else 0.0
        for name, values in metric_values.items()
    }
    return RepeatedResult(runs=runs, mean=mean, std=std)
