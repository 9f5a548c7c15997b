"""Per-agent task-acceptance planning and the competence-greedy baseline.

The planner scores each task type with an availability score

    psi * utility * competence * mood - recent_service_rate

and visits types in descending score order, accepting as many offered
tasks of each strictly positive type as the remaining daily effort
budget allows. NOTE on the ordering key: the greedy visit order is the
availability score itself. The acceptance counts being computed cannot
order their own computation, and the score is the quantity the plan
maximizes per unit of accepted work, so it is the only coherent key.
Ties are broken by type id so plans are deterministic.

A score of exactly zero is rejected: acceptance requires a strictly
positive score. Tasks not accepted are reported as rejected and return
to the common queue for later days.

The baseline (``awr_assign``) models accept-when-requested behavior:
every task is taken, on arrival, by the team member most competent for
its type, regardless of queue length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import AgentState


class UnknownTaskTypeError(KeyError):
    """An incoming task type has no economics entry."""


def expected_utility(utility: float, competence: float, mood: float) -> float:
    """Utility expected from one task: reward discounted by the worker's
    competence and mood."""
    return utility * competence * mood


def queue_update(queue_length: int, accepted: int, served: int) -> int:
    """Next queue length: arrivals minus service, never negative."""
    return max(queue_length + accepted - served, 0)


def drift(accepted: int, served: int) -> float:
    """Workload-drift penalty for one queue: the product of tasks
    admitted and tasks served in the same step."""
    return accepted * served


def availability_score(
    psi: float, utility: float, competence: float, mood: float, service_rate: float
) -> float:
    """Acceptance key for one task type: weighted expected utility minus
    the recent service rate."""
    return psi * expected_utility(utility, competence, mood) - service_rate


@dataclass(frozen=True)
class TypeEconomics:
    """Per-type inputs to the acceptance plan.

    ``expected_utility`` is the utility * competence * mood product for
    the planning agent, ``recent_service_rate`` its trailing completion
    rate for the type (tasks/day), and ``effort`` the per-task effort.
    """

    type_id: str
    expected_utility: float
    recent_service_rate: float
    effort: float

    def __post_init__(self):
        if self.expected_utility < 0:
            raise ValueError(
                f"expected_utility must be >= 0 (got {self.expected_utility})"
            )
        if self.recent_service_rate < 0:
            raise ValueError(
                f"recent_service_rate must be >= 0 (got {self.recent_service_rate})"
            )
        if self.effort <= 0:
            raise ValueError(f"effort must be > 0 (got {self.effort})")

    def availability_score(self, psi: float) -> float:
        return psi * self.expected_utility - self.recent_service_rate


@dataclass(frozen=True)
class AllocationPlan:
    """Outcome of one agent's daily acceptance decision.

    Always satisfies: sum(accepted[t] * effort[t]) <= max_effort and
    0 <= accepted[t] <= offered[t]; ``leftover_effort`` is the unspent
    budget and ``rejected`` the offers returned to the common queue.
    """

    accepted: dict[str, int]
    leftover_effort: float
    rejected: dict[str, int]


def visit_order(
    economics: Mapping[str, TypeEconomics], psi: float, type_ids: Sequence[str]
) -> list[str]:
    """Type visit order: descending availability score, then type id."""
    return sorted(
        type_ids,
        key=lambda tid: (-economics[tid].availability_score(psi), tid),
    )


def smart_plan(
    agent: AgentState,
    incoming: Mapping[str, int],
    economics: Mapping[str, TypeEconomics],
    psi: float,
) -> AllocationPlan:
    """Greedy daily acceptance plan for one agent.

    ``incoming`` maps type id to the number of tasks offered today.
    Types are visited in descending availability score; each strictly
    positive type accepts ``min(offered, floor(budget / effort))`` tasks
    and debits the budget, starting from the agent's full daily effort.
    """
    unknown = [tid for tid in incoming if tid not in economics]
    if unknown:
        raise UnknownTaskTypeError(
            f"no economics for incoming task type(s): {', '.join(sorted(unknown))}"
        )
    for tid, count in incoming.items():
        if count < 0:
            raise ValueError(f"incoming count for {tid!r} must be >= 0 (got {count})")
    if agent.max_effort <= 0:
        raise ValueError(f"agent max_effort must be > 0 (got {agent.max_effort})")

    budget = agent.max_effort
    accepted: dict[str, int] = {}
    for tid in visit_order(economics, psi, list(incoming)):
        econ = economics[tid]
        offered = incoming[tid]
        if econ.availability_score(psi) > 0:
            if offered * econ.effort <= budget:
                count = offered
            else:
                count = math.floor(budget / econ.effort)
            budget -= count * econ.effort
        else:
            count = 0
        accepted[tid] = count
    rejected = {tid: incoming[tid] - accepted[tid] for tid in incoming}
    return AllocationPlan(accepted=accepted, leftover_effort=budget, rejected=rejected)


def awr_assign(task_type: str, agents: Sequence[AgentState]) -> str:
    """Pick the assignee under accept-when-requested: the agent most
    competent for the type, ties broken by lowest agent id."""
    if not agents:
        raise ValueError("awr_assign requires at least one agent")
    best = min(agents, key=lambda a: (-a.competence_for(task_type), a.agent_id))
    return best.agent_id
