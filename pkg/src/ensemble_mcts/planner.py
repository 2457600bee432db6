"""Planning loop: scheduled expansion, entropy-modulated evaluation,
rollout simulation, reflection on failure, and backpropagation.

One ``plan`` call answers one question: it runs K rollout episodes of up to
D depth iterations each. Every depth iteration selects a frontier node by
UCT, expands it n ways through bandit-scheduled agents, scores each child
with an entropy-modulated evaluation, simulates from the selected node, and
backpropagates the discounted rollout return. An environment-confirmed
success ends the call immediately; a failed episode broadcasts one
reflection to the whole pool before the next episode starts.

Scheduler statistics and reflection memory are (re)initialized per call, so
independent questions never share state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .agents import (
    AgentError,
    AgentPool,
    AgentQuery,
    AgentResponse,
    EvalResult,
    PromptRole,
    TokenUsage,
    UnparseableEvaluationError,
    parse_evaluation,
)
from .environments import Environment, EnvStep
from .events import RunRecord
from .memory import DEFAULT_MAX_CHARS, PoolMemory, Reflection
from .scheduler import PoolState
from .scoring import modulate
from .tree import SearchTree, Trajectory

# Evaluation responses that cannot be parsed contribute the maximal-entropy,
# zero-value point: reward 0, so garbage output cannot steer the search.
FALLBACK_EVAL = EvalResult(z=0.0, c=0.5)


class PlannerError(Exception):
    pass


@dataclass
class PlannerConfig:
    """Search hyperparameters.

    Defaults: 4-way expansion, UCT constant 2, scheduling coefficient 20,
    10 rollout episodes, undiscounted returns, rollout length bounded only
    by the remaining depth budget.
    """

    n: int = 4
    depth_limit: int = 5
    rollouts: int = 10
    alpha: float = 20.0
    uct_c: float = 2.0
    gamma: float = 1.0
    rollout_length: int | None = None
    success_reward: float = 1.0
    seed: int = 0
    memory_capacity: int = 5
    reflection_max_chars: int = DEFAULT_MAX_CHARS
    credit_evaluator: bool = False
    env_reward_rollouts: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.depth_limit < 1:
            raise ValueError("depth_limit must be >= 1")
        if self.rollouts < 1:
            raise ValueError("rollouts must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.uct_c <= 0:
            raise ValueError("uct_c must be > 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.rollout_length is not None and self.rollout_length < 1:
            raise ValueError("rollout_length must be >= 1 when set")


@dataclass
class EpisodeResult:
    """Outcome of one plan call."""

    success: bool
    solution: Trajectory | None
    nodes_expanded: int
    agent_calls: int
    tokens: TokenUsage
    reflections_emitted: int


@dataclass
class SimulationResult:
    reward: float
    success: bool
    steps: list[tuple[str, str]] = field(default_factory=list)
    end_state: str = ""


class Planner:
    """Binds an environment, an agent pool, and a config into one searcher."""

    def __init__(
        self,
        env: Environment,
        pool: AgentPool,
        cfg: PlannerConfig | None = None,
        record: RunRecord | None = None,
    ):
        self.env = env
        self.pool = pool
        self.cfg = cfg or PlannerConfig()
        self.record = record or RunRecord()
        self.tree: SearchTree | None = None
        self.scheduler: PoolState | None = None
        self.memory: PoolMemory | None = None
        self._reset_counters()

    def _reset_counters(self) -> None:
        self.nodes_expanded = 0
        self.agent_calls = 0
        self.reflections_emitted = 0
        self.tokens = TokenUsage()
        self._batch = 0

    # -- agent plumbing ------------------------------------------------

    def _select(self, k: int, role: PromptRole) -> str:
        agent_id = self.scheduler.select_agent()
        self.record.emit(
            "select",
            {"k": k, "role": role.value, "agent": agent_id,
             "n_total": self.scheduler.total},
        )
        return agent_id

    def _query(
        self, k: int, agent_id: str, role: PromptRole, state: str, history: Trajectory
    ) -> AgentResponse:
        agent = self.pool.agent(agent_id)
        query = AgentQuery(
            role=role,
            state=state,
            history=history,
            memory=self.memory.buffer_for(agent_id).texts(),
            temperature=agent.temperatures.for_role(role),
        )
        try:
            response = self.pool.query(agent_id, query)
        except AgentError as exc:
            raise PlannerError(f"episode {k}: {role.value} query failed: {exc}") from exc
        self.agent_calls += 1
        self.tokens = self.tokens + response.tokens
        return response

    def _env_step(self, k: int, state: str, action: str) -> EnvStep:
        try:
            return self.env.step(state, action)
        except Exception as exc:
            raise PlannerError(f"episode {k}: environment step failed: {exc}") from exc

    @staticmethod
    def _tok(tokens: TokenUsage) -> dict:
        return {"prompt": tokens.prompt_tokens, "completion": tokens.completion_tokens}

    # -- evaluation ----------------------------------------------------

    def _evaluate_state(
        self, k: int, state: str, history: Trajectory
    ) -> tuple[EvalResult, float, str, TokenUsage]:
        """Scheduled evaluation of a state; returns (parsed, reward, agent, tokens)."""
        agent_id = self._select(k, PromptRole.EVALUATION)
        response = self._query(k, agent_id, PromptRole.EVALUATION, state, history)
        try:
            result = parse_evaluation(response.text)
        except UnparseableEvaluationError:
            result = FALLBACK_EVAL
        return result, modulate(result).r, agent_id, response.tokens

    # -- main loop -----------------------------------------------------

    def plan(self) -> EpisodeResult:
        cfg = self.cfg
        self._reset_counters()
        self.scheduler = PoolState.for_agents(self.pool.agent_ids, alpha=cfg.alpha)
        self.memory = PoolMemory(self.pool.agent_ids, capacity=cfg.memory_capacity)

        start = self.env.reset()
        if start.terminal and start.success:
            self.tree = SearchTree(start.observation, root_terminal=True)
            solution = Trajectory(terminal_state=start.observation, success=True)
            return self._finish(k=0, success=True, solution=solution)
        self.tree = SearchTree(start.observation, root_terminal=start.terminal)

        for k in range(cfg.rollouts):
            for d in range(cfg.depth_limit):
                node_id = self.tree.uct_select(cfg.uct_c, cfg.n)
                node = self.tree.node(node_id)

                if node.terminal:
                    # Selection walked into a failed terminal: episode over.
                    self._backprop(k, node_id, 0.0)
                    self._reflect_and_broadcast(k, node_id)
                    break

                result = self._expand(k, node_id)
                if result is not None:
                    return result

                sim = self.simulate(k, node_id)
                if sim.success:
                    self._backprop(k, node_id, cfg.success_reward)
                    prefix = self.tree.extract_path(node_id)
                    solution = Trajectory(
                        steps=prefix.steps + sim.steps,
                        terminal_state=sim.end_state,
                        success=True,
                    )
                    return self._finish(k, success=True, solution=solution)
                self._backprop(k, node_id, sim.reward)

                if d == cfg.depth_limit - 1:
                    self._reflect_and_broadcast(k, node_id)

        return self._finish(cfg.rollouts - 1, success=False, solution=None)

    def _expand(self, k: int, node_id: int) -> EpisodeResult | None:
        """n-way expansion plus evaluation; returns a result only on success."""
        cfg = self.cfg
        node = self.tree.node(node_id)
        history = self.tree.extract_path(node_id)
        self._batch += 1

        children: list[tuple[int, str]] = []
        for _ in range(cfg.n):
            agent_id = self._select(k, PromptRole.EXPANSION)
            response = self._query(
                k, agent_id, PromptRole.EXPANSION, node.state, history
            )
            step = self._env_step(k, node.state, response.text)
            child_id = self.tree.add_child(
                node_id,
                action=response.text,
                state=step.observation,
                reward=0.0,
                expanded_by=agent_id,
                terminal=step.terminal,
            )
            self.nodes_expanded += 1
            self.record.emit(
                "expand",
                {
                    "k": k,
                    "batch": self._batch,
                    "parent": node_id,
                    "node": child_id,
                    "agent": agent_id,
                    "action": response.text,
                    "state": step.observation,
                    "terminal": step.terminal,
                    "tokens": self._tok(response.tokens),
                },
            )
            if step.success:
                self.tree.node(child_id).modulated_reward = cfg.success_reward
                self._backprop(k, child_id, cfg.success_reward)
                solution = self.tree.extract_path(child_id)
                solution.success = True
                return self._finish(k, success=True, solution=solution)
            children.append((child_id, agent_id))

        for child_id, expander in children:
            child = self.tree.node(child_id)
            child_history = self.tree.extract_path(child_id)
            result, reward, evaluator, tokens = self._evaluate_state(
                k, child.state, child_history
            )
            child.modulated_reward = reward
            credited = evaluator if cfg.credit_evaluator else expander
            self.scheduler.record_reward(credited, reward)
            self.record.emit(
                "evaluate",
                {
                    "k": k,
                    "node": child_id,
                    "agent": evaluator,
                    "expanded_by": expander,
                    "credited": credited,
                    "z": result.z,
                    "c": result.c,
                    "reward": reward,
                    "tokens": self._tok(tokens),
                },
            )
        return None

    def simulate(self, k: int, node_id: int) -> SimulationResult:
        """Rollout from a node: scheduled actions, scored states, discounted sum.

        Runs at most min(rollout_length, depth_limit - node.depth) steps,
        stopping at any terminal. Rollout states are scored by scheduled
        evaluations unless ``env_reward_rollouts`` is set, in which case the
        environment's binary success signal is the step reward.
        """
        cfg = self.cfg
        node = self.tree.node(node_id)
        if node.terminal:
            return SimulationResult(reward=0.0, success=False, end_state=node.state)

        remaining = max(cfg.depth_limit - node.depth, 0)
        budget = remaining if cfg.rollout_length is None else min(
            cfg.rollout_length, remaining
        )
        history = self.tree.extract_path(node_id)
        state = node.state
        total = 0.0
        discount = 1.0
        steps: list[tuple[str, str]] = []

        for t in range(budget):
            agent_id = self._select(k, PromptRole.EXPANSION)
            response = self._query(k, agent_id, PromptRole.EXPANSION, state, history)
            step = self._env_step(k, state, response.text)
            steps.append((state, response.text))
            history.steps.append((state, response.text))
            history.terminal_state = step.observation
            calls = [
                {"agent": agent_id, **self._tok(response.tokens)},
            ]

            if step.success:
                self.record.emit(
                    "simulate_step",
                    {
                        "k": k, "t": t, "node": node_id, "agent": agent_id,
                        "action": response.text, "observation": step.observation,
                        "terminal": True, "success": True, "reward": cfg.success_reward,
                        "calls": calls,
                    },
                )
                return SimulationResult(
                    reward=total + discount * cfg.success_reward,
                    success=True,
                    steps=steps,
                    end_state=step.observation,
                )

            if cfg.env_reward_rollouts:
                reward = 0.0
            else:
                _, reward, evaluator, tokens = self._evaluate_state(
                    k, step.observation, history
                )
                calls.append({"agent": evaluator, **self._tok(tokens)})
            total += discount * reward
            discount *= cfg.gamma
            self.record.emit(
                "simulate_step",
                {
                    "k": k, "t": t, "node": node_id, "agent": agent_id,
                    "action": response.text, "observation": step.observation,
                    "terminal": step.terminal, "success": step.success,
                    "reward": reward, "calls": calls,
                },
            )
            if step.terminal:
                break
            state = step.observation

        return SimulationResult(
            reward=total,
            success=False,
            steps=steps,
            end_state=history.terminal_state or state,
        )

    def reflect_on_failure(self, tau: Trajectory, k: int) -> Reflection:
        """Scheduled reflection over a failed trajectory; caller broadcasts."""
        if tau.success:
            raise PlannerError("reflect_on_failure requires an unsuccessful trajectory")
        agent_id = self._select(k, PromptRole.REFLECTION)
        response = self._query(
            k, agent_id, PromptRole.REFLECTION, tau.terminal_state, tau
        )
        reflection = Reflection.create(
            text=response.text,
            episode=k,
            author=agent_id,
            max_chars=self.cfg.reflection_max_chars,
        )
        self.record.emit(
            "reflect",
            {
                "episode": k,
                "author": agent_id,
                "text": reflection.text,
                "tokens": self._tok(response.tokens),
            },
        )
        return reflection

    def _reflect_and_broadcast(self, k: int, node_id: int) -> None:
        tau = self.tree.extract_path(node_id)
        tau.success = False
        reflection = self.reflect_on_failure(tau, k)
        self.memory.broadcast(reflection)
        self.reflections_emitted += 1

    def _backprop(self, k: int, node_id: int, reward: float) -> None:
        self.tree.backpropagate(node_id, reward)
        self.record.emit("backprop", {"k": k, "node": node_id, "reward": reward})

    def _finish(self, k: int, success: bool, solution: Trajectory | None) -> EpisodeResult:
        self.record.emit(
            "terminal",
            {
                "k": k,
                "success": success,
                "nodes_expanded": self.nodes_expanded,
                "agent_calls": self.agent_calls,
            },
        )
        return EpisodeResult(
            success=success,
            solution=solution,
            nodes_expanded=self.nodes_expanded,
            agent_calls=self.agent_calls,
            tokens=self.tokens,
            reflections_emitted=self.reflections_emitted,
        )
