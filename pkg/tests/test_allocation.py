import math
import random

import pytest

from agilesim import allocation, core
from agilesim.allocation import AllocationPlan, TypeEconomics


def agent(max_effort=10.0, competence=0.9, mood=1.0, agent_id="a1"):
    return core.AgentState(
        agent_id=agent_id,
        category=core.Category.HCA,
        competence=competence,
        mood=mood,
        max_effort=max_effort,
    )


def econ(type_id, score, effort, psi=1.0, eu=None, mu=None):
    """Economics entry with a chosen availability score at the given psi.

    score = psi * eu - mu; pick mu = 0 and eu = score / psi when the
    score is positive, otherwise eu = 0 and mu = -score.
    """
    if eu is None or mu is None:
        if score > 0:
            eu, mu = score / psi, 0.0
        else:
            eu, mu = 0.0, -score
    return TypeEconomics(
        type_id=type_id, expected_utility=eu, recent_service_rate=mu, effort=effort
    )


class TestScalarOps:
    def test_expected_utility(self):
        assert allocation.expected_utility(10, 0.9, 1.0) == pytest.approx(9.0)
        assert allocation.expected_utility(10, 0.9, 0.5) == pytest.approx(4.5)
        assert allocation.expected_utility(123.0, 0.0, 0.7) == 0.0

    def test_queue_update(self):
        assert allocation.queue_update(5, 2, 3) == 4
        assert allocation.queue_update(1, 0, 3) == 0
        assert allocation.queue_update(0, 0, 0) == 0

    def test_drift(self):
        assert allocation.drift(2, 3) == 6
        assert allocation.drift(0, 17) == 0
        assert allocation.drift(1, 1) == 1

    def test_availability_score(self):
        assert allocation.availability_score(1, 10, 0.9, 1.0, 2) == pytest.approx(7.0)
        assert allocation.availability_score(1, 10, 0.9, 1.0, 9) == pytest.approx(0.0)
        assert allocation.availability_score(2, 10, 0.9, 1.0, 2) == pytest.approx(16.0)


class TestSmartPlan:
    def test_capacity_limited_acceptance(self):
        economics = {
            "A": econ("A", score=7.0, effort=3.0),
            "B": econ("B", score=-1.0, effort=1.0),
        }
        plan = allocation.smart_plan(
            agent(max_effort=10.0), {"A": 5, "B": 2}, economics, psi=1.0
        )
        assert plan.accepted == {"A": 3, "B": 0}
        assert plan.leftover_effort == pytest.approx(1.0)
        assert plan.rejected == {"A": 2, "B": 2}

    def test_all_scores_nonpositive(self):
        economics = {
            "A": econ("A", score=0.0, effort=2.0),
            "B": econ("B", score=-3.0, effort=1.0),
        }
        plan = allocation.smart_plan(
            agent(max_effort=10.0), {"A": 4, "B": 4}, economics, psi=1.0
        )
        assert plan.accepted == {"A": 0, "B": 0}
        assert plan.leftover_effort == pytest.approx(10.0)

    def test_full_offer_accepted_when_it_fits(self):
        economics = {"A": econ("A", score=2.0, effort=2.0)}
        plan = allocation.smart_plan(agent(max_effort=10.0), {"A": 3}, economics, 1.0)
        assert plan.accepted == {"A": 3}
        assert plan.leftover_effort == pytest.approx(4.0)

    def test_unknown_type_rejected(self):
        with pytest.raises(allocation.UnknownTaskTypeError):
            allocation.smart_plan(agent(), {"Z": 1}, {}, 1.0)

    def test_negative_offer_rejected(self):
        with pytest.raises(ValueError):
            allocation.smart_plan(
                agent(), {"A": -1}, {"A": econ("A", 1.0, 1.0)}, 1.0
            )

    def test_zero_mood_accepts_nothing(self):
        rng = random.Random(5)
        for _ in range(50):
            economics = {
                f"T{i}": TypeEconomics(
                    type_id=f"T{i}",
                    expected_utility=0.0,  # mood 0 zeroes the product
                    recent_service_rate=rng.choice([0.0, rng.uniform(0, 4)]),
                    effort=rng.uniform(0.5, 5),
                )
                for i in range(rng.randint(1, 5))
            }
            offers = {tid: rng.randint(0, 6) for tid in economics}
            plan = allocation.smart_plan(agent(), offers, economics, psi=1.0)
            assert all(count == 0 for count in plan.accepted.values())


def random_instance(rng):
    n_types = rng.randint(1, 6)
    economics = {}
    offers = {}
    for i in range(n_types):
        tid = f"T{i}"
        economics[tid] = TypeEconomics(
            type_id=tid,
            expected_utility=rng.uniform(0, 12),
            recent_service_rate=rng.choice([0.0, rng.uniform(0, 8)]),
            effort=rng.uniform(0.5, 8.0),
        )
        offers[tid] = rng.randint(0, 10)
    planner = agent(max_effort=rng.uniform(1.0, 30.0))
    psi = rng.choice([0.25, 0.5, 1.0, 2.0, 4.0])
    return planner, offers, economics, psi


def retrace(max_effort, rows):
    """Straight-line transcription of the acceptance loop, kept separate
    from the library implementation on purpose.

    ``rows`` are (type_id, score, effort, offered).
    """
    budget = max_effort
    out = {}
    for tid, score, effort, offered in sorted(rows, key=lambda r: (-r[1], r[0])):
        if score > 0:
            if offered * effort <= budget:
                accepted = offered
            else:
                accepted = math.floor(budget / effort)
            budget -= accepted * effort
        else:
            accepted = 0
        out[tid] = accepted
    return out, budget


class TestPlanProperties:
    def test_feasibility_fuzz(self):
        rng = random.Random(42)
        for _ in range(300):
            planner, offers, economics, psi = random_instance(rng)
            plan = allocation.smart_plan(planner, offers, economics, psi)
            spent = sum(
                plan.accepted[tid] * economics[tid].effort for tid in offers
            )
            assert spent <= planner.max_effort + 1e-9
            for tid in offers:
                assert 0 <= plan.accepted[tid] <= offers[tid]
                assert plan.rejected[tid] == offers[tid] - plan.accepted[tid]
            assert plan.leftover_effort == pytest.approx(planner.max_effort - spent)

    def test_oracle_equivalence(self):
        rng = random.Random(99)
        for _ in range(100):
            planner, offers, economics, psi = random_instance(rng)
            plan = allocation.smart_plan(planner, offers, economics, psi)
            rows = [
                (
                    tid,
                    economics[tid].availability_score(psi),
                    economics[tid].effort,
                    offers[tid],
                )
                for tid in offers
            ]
            expected, leftover = retrace(planner.max_effort, rows)
            assert plan.accepted == expected
            assert plan.leftover_effort == pytest.approx(leftover)

    def test_monotone_in_score(self):
        rng = random.Random(7)
        for _ in range(200):
            planner, offers, economics, psi = random_instance(rng)
            target = rng.choice(list(offers))
            before = allocation.smart_plan(planner, offers, economics, psi)
            boosted = dict(economics)
            raised = economics[target]
            boosted[target] = TypeEconomics(
                type_id=target,
                expected_utility=raised.expected_utility + rng.uniform(0.1, 5.0),
                recent_service_rate=raised.recent_service_rate,
                effort=raised.effort,
            )
            after = allocation.smart_plan(planner, offers, boosted, psi)
            assert after.accepted[target] >= before.accepted[target]

    def test_psi_scaling_keeps_order_when_rates_zero(self):
        rng = random.Random(13)
        for _ in range(50):
            n = rng.randint(2, 6)
            economics = {
                f"T{i}": TypeEconomics(
                    type_id=f"T{i}",
                    expected_utility=rng.uniform(0.1, 10.0),
                    recent_service_rate=0.0,
                    effort=rng.uniform(0.5, 4.0),
                )
                for i in range(n)
            }
            type_ids = list(economics)
            orders = {
                psi: allocation.visit_order(economics, psi, type_ids)
                for psi in (0.5, 1.0, 2.0, 10.0)
            }
            base = orders[1.0]
            assert all(order == base for order in orders.values())


class TestAwrAssign:
    def agents(self, *rows):
        return [
            agent(agent_id=aid, competence=comp, max_effort=10.0)
            for aid, comp in rows
        ]

    def test_most_competent_wins(self):
        team = self.agents(("a1", 0.9), ("a2", 0.3))
        assert allocation.awr_assign("T1", team) == "a1"

    def test_tie_breaks_to_lowest_id(self):
        team = self.agents(("a2", 0.7), ("a1", 0.7))
        assert allocation.awr_assign("T1", team) == "a1"

    def test_single_agent(self):
        team = self.agents(("solo", 0.1))
        assert allocation.awr_assign("T1", team) == "solo"

    def test_empty_team(self):
        with pytest.raises(ValueError):
            allocation.awr_assign("T1", [])

    def test_uses_per_type_competence(self):
        specialist = core.AgentState(
            agent_id="a9",
            category=core.Category.MIA,
            competence=0.3,
            mood=1.0,
            max_effort=10.0,
            competence_by_type={"T1": 0.95},
        )
        team = [*self.agents(("a1", 0.9)), specialist]
        assert allocation.awr_assign("T1", team) == "a9"
        assert allocation.awr_assign("T2", team) == "a1"
