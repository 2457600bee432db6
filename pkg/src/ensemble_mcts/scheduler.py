"""UCB bandit over the agent pool.

Each scheduling decision (expansion, evaluation, rollout, or reflection)
scores every agent as

    score(i) = mean_reward(i) + alpha * sqrt(ln(max(N_total, 1)) / (N_i + 1))

and picks the argmax. The +1 denominator smoothing keeps the expression
total for fresh agents; the max(N_total, 1) guard covers the very first
decision, where no scheduling history exists. Rewards are credited to the
agent that generated the rewarded node, so the mean tracks generation
quality while the invocation count tracks total scheduling load.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


class SchedulerError(Exception):
    pass


@dataclass
class AgentStats:
    """Per-agent scheduler record.

    ``invocations`` counts every scheduling decision for the agent;
    ``nodes_generated`` and ``reward_sum`` advance together and only when a
    node the agent generated receives its reward, so evaluation-only calls
    raise invocations without touching the mean.
    """

    agent: str
    invocations: int = 0
    reward_sum: float = 0.0
    nodes_generated: int = 0

    @property
    def mean_reward(self) -> float:
        if self.nodes_generated == 0:
            return 0.0
        return self.reward_sum / self.nodes_generated


def ucb_score(stats: AgentStats, total: int, alpha: float) -> float:
    """Exploration-adjusted score of one agent given N_total decisions."""
    if total < 0:
        raise SchedulerError(f"negative total {total}")
    if alpha <= 0:
        raise SchedulerError(f"alpha must be > 0, got {alpha}")
    exploration = math.sqrt(math.log(max(total, 1)) / (stats.invocations + 1))
    return stats.mean_reward + alpha * exploration


@dataclass
class PoolState:
    """Bandit state: ordered per-agent stats plus the shared decision count."""

    stats: list[AgentStats]
    alpha: float = 20.0
    total: int = 0

    @classmethod
    def for_agents(cls, agent_ids: list[str], alpha: float = 20.0) -> "PoolState":
        return cls(stats=[AgentStats(agent=a) for a in agent_ids], alpha=alpha)

    def __post_init__(self):
        if not self.stats:
            raise SchedulerError("empty pool")
        if self.alpha <= 0:
            raise SchedulerError(f"alpha must be > 0, got {self.alpha}")
        self._by_id = {s.agent: s for s in self.stats}

    def stats_for(self, agent_id: str) -> AgentStats:
        try:
            return self._by_id[agent_id]
        except KeyError:
            raise SchedulerError(f"unknown agent {agent_id!r}") from None

    def scores(self) -> list[float]:
        return [ucb_score(s, self.total, self.alpha) for s in self.stats]

    def best_agent(self) -> str:
        """Argmax of ucb_score without mutating state.

        Ties go to the agent with fewer invocations, then to registration
        order, so a cold pool warms up round-robin instead of pinning the
        first registrant.
        """
        best = None
        best_key = None
        for index, stats in enumerate(self.stats):
            key = (-ucb_score(stats, self.total, self.alpha), stats.invocations, index)
            if best_key is None or key < best_key:
                best, best_key = stats.agent, key
        return best

    def select_agent(self) -> str:
        """Pick the best agent and record the scheduling decision."""
        agent = self.best_agent()
        self.stats_for(agent).invocations += 1
        self.total += 1
        return agent

    def record_reward(self, agent_id: str, reward: float) -> None:
        """Credit a generated node's reward to its generating agent."""
        stats = self.stats_for(agent_id)
        stats.reward_sum += reward
        stats.nodes_generated += 1

    def to_json(self) -> list[dict]:
        return [
            {
                "agent": s.agent,
                "invocations": s.invocations,
                "nodes_generated": s.nodes_generated,
                "reward_sum": s.reward_sum,
                "mean": s.mean_reward,
            }
            for s in self.stats
        ]

    def dumps(self) -> str:
        return json.dumps(self.to_json())
