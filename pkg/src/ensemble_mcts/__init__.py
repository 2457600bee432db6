"""Monte Carlo tree search planning over a heterogeneous pool of agents.

The package combines a UCB bandit over agents, entropy-modulated value
scoring, pool-wide reflection memory, and a classic UCT search tree into one
planning loop, plus desk-scale environments and an experiment harness to
exercise it deterministically.
"""

from .agents import (
    Agent,
    AgentPool,
    AgentQuery,
    AgentResponse,
    EvalResult,
    HttpBackend,
    MockBackend,
    PromptRole,
    RoleTemperatures,
    ScriptedBackend,
    TokenUsage,
    count_tokens,
    format_evaluation,
    parse_evaluation,
)
from .environments import (
    EnvStep,
    FactGraph,
    FactGraphEnv,
    TreasureTreeEnv,
    enumerate_optimal,
    generate_hopqa,
)
from .memory import PoolMemory, Reflection, ReflectionBuffer, render_memory
from .planner import EpisodeResult, Planner, PlannerConfig
from .scheduler import AgentStats, PoolState, ucb_score
from .scoring import ModulatedReward, bernoulli_entropy, modulate
from .tree import Node, SearchTree, Trajectory

__all__ = [
    "Agent",
    "AgentPool",
    "AgentQuery",
    "AgentResponse",
    "AgentStats",
    "EnvStep",
    "EpisodeResult",
    "EvalResult",
    "FactGraph",
    "FactGraphEnv",
    "HttpBackend",
    "MockBackend",
    "ModulatedReward",
    "Node",
    "Planner",
    "PlannerConfig",
    "PoolMemory",
    "PoolState",
    "PromptRole",
    "Reflection",
    "ReflectionBuffer",
    "RoleTemperatures",
    "ScriptedBackend",
    "SearchTree",
    "TokenUsage",
    "Trajectory",
    "TreasureTreeEnv",
    "bernoulli_entropy",
    "count_tokens",
    "enumerate_optimal",
    "format_evaluation",
    "generate_hopqa",
    "modulate",
    "parse_evaluation",
    "render_memory",
    "ucb_score",
]
