"""Ready-made scripted and mock pools for desk-scale experiments.

These builders wire deterministic agents to the two bundled environments so
tests, scripts, and sample configs can exercise the full planning loop
without any model endpoint.
"""

from __future__ import annotations

from .agents import (
    Agent,
    AgentPool,
    MockBackend,
    PromptRole,
    ScriptedBackend,
    format_evaluation,
)
from .environments import FactGraph, TreasureTreeEnv, canonical_chain

REFLECTION_TEXT = (
    "The failure in the previous trial occurred because the chosen branch "
    "did not lead to the goal; try an unexplored branch next time."
)


def chooser_pool(
    branching: int,
    n_agents: int | None = None,
    eval_z: float = 0.6,
    eval_c: float = 0.9,
) -> AgentPool:
    """One single-minded agent per branch: agent i always answers Choose[i].

    All agents share one constant evaluation response, so scheduling rewards
    stay identical across the pool and selections rotate evenly. Together the
    agents cover every branch of a width-``branching`` tree.
    """
    n_agents = branching if n_agents is None else n_agents
    agents = []
    for i in range(n_agents):
        backend = ScriptedBackend(
            table={},
            defaults={
                PromptRole.EXPANSION: f"Choose[{i % branching}]",
                PromptRole.EVALUATION: format_evaluation(eval_z, eval_c),
                PromptRole.REFLECTION: REFLECTION_TEXT,
            },
        )
        agents.append(Agent(id=f"chooser-{i}", backend=backend))
    return AgentPool(agents)


def duplicated_pool(n_agents: int, action: str = "Choose[0]") -> AgentPool:
    """A homogeneous pool: every agent returns the same expansion action."""
    agents = []
    for i in range(n_agents):
        backend = ScriptedBackend(
            table={},
            defaults={
                PromptRole.EXPANSION: action,
                PromptRole.EVALUATION: format_evaluation(0.6, 0.9),
                PromptRole.REFLECTION: REFLECTION_TEXT,
            },
        )
        agents.append(Agent(id=f"twin-{i}", backend=backend))
    return AgentPool(agents)


def state_scored_chooser_pool(
    env: TreasureTreeEnv,
    n_agents: int | None = None,
    lucky_branch: int = 0,
    high: tuple[float, float] = (0.95, 0.95),
    low: tuple[float, float] = (0.05, 0.95),
) -> AgentPool:
    """Choosers whose evaluations depend on the state being scored.

    States under ``lucky_branch`` score high, everything else low, so the
    scheduler sees one consistently lucky agent. Useful for studying how the
    exploration coefficient balances invocations.
    """
    n_agents = env.branching if n_agents is None else n_agents
    eval_table = {}
    for path, state in env.all_states().items():
        z, c = high if path[:1] == (lucky_branch,) else low
        eval_table[(PromptRole.EVALUATION, state)] = format_evaluation(z, c)
    agents = []
    for i in range(n_agents):
        backend = ScriptedBackend(
            table=dict(eval_table),
            defaults={
                PromptRole.EXPANSION: f"Choose[{i % env.branching}]",
                PromptRole.REFLECTION: REFLECTION_TEXT,
            },
        )
        agents.append(Agent(id=f"chooser-{i}", backend=backend))
    return AgentPool(agents)


def mock_chooser_pool(
    branching: int, n_agents: int, seed: int = 0
) -> AgentPool:
    """Stochastic agents sampling valid (and one invalid) branch actions."""
    expansion = [f"Choose[{i}]" for i in range(branching)] + ["Choose[99]"]
    evaluation = [
        format_evaluation(0.2, 0.6),
        format_evaluation(0.5, 0.5),
        format_evaluation(0.8, 0.9),
    ]
    agents = []
    for i in range(n_agents):
        backend = MockBackend(
            responses={
                PromptRole.EXPANSION: expansion,
                PromptRole.EVALUATION: evaluation,
                PromptRole.REFLECTION: [REFLECTION_TEXT],
            },
            seed=seed + i,
        )
        agents.append(Agent(id=f"mock-{i}", backend=backend))
    return AgentPool(agents)


def hopqa_chain_pool(graph: FactGraph, n_agents: int = 3) -> AgentPool:
    """Scripted agents that jointly cover the canonical answer chain.

    Agent 0 always proposes the canonical next action for any chain state;
    the others propose distractor searches, making the pool heterogeneous
    while guaranteeing the correct branch exists at every expansion.
    """
    chain = canonical_chain(graph)
    canonical = {(PromptRole.EXPANSION, graph.question): f"Search[{chain[0]}]"}
    # Each chain paragraph names the next entity; the second-to-last names
    # the answer itself, so from there the canonical move is Finish.
    for i in range(len(chain) - 1):
        state = graph.facts[chain[i]]
        if i < len(chain) - 2:
            canonical[(PromptRole.EXPANSION, state)] = f"Search[{chain[i + 1]}]"
        else:
            canonical[(PromptRole.EXPANSION, state)] = f"Finish[{graph.answer}]"

    decoys = [e for e in graph.entities if e not in chain] or [graph.seed_entity]
    agents = []
    for i in range(n_agents):
        if i == 0:
            backend = ScriptedBackend(
                table=canonical,
                defaults={
                    PromptRole.EXPANSION: f"Search[{chain[0]}]",
                    PromptRole.EVALUATION: format_evaluation(0.7, 0.9),
                    PromptRole.REFLECTION: REFLECTION_TEXT,
                },
            )
        else:
            backend = ScriptedBackend(
                table={},
                defaults={
                    PromptRole.EXPANSION: f"Search[{decoys[i % len(decoys)]}]",
                    PromptRole.EVALUATION: format_evaluation(0.7, 0.9),
                    PromptRole.REFLECTION: REFLECTION_TEXT,
                },
            )
        agents.append(Agent(id=f"hopper-{i}", backend=backend))
    return AgentPool(agents)
