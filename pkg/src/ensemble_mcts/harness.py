"""Experiment harness: strict JSON configs, seeded batch runs, and metrics.

A run executes ``episodes`` independent plan calls, each on a freshly built
environment and agent pool derived from (seed + episode index), and writes:

* ``events.jsonl``  -- every planner event, monotone ids, no timestamps.
* ``summary.json``  -- success rate, node counts, token totals, invocation
  frequencies.
* ``trees.jsonl``   -- one serialized search tree per episode.

Config documents are rejected on any unknown key so a stored config always
replays bit-for-bit.
"""

from __future__ import annotations

import csv
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .agents import (
    Agent,
    AgentPool,
    HttpBackend,
    MockBackend,
    PromptRole,
    RoleTemperatures,
    ScriptedBackend,
)
from .environments import (
    Environment,
    FactGraph,
    FactGraphEnv,
    TreasureTreeEnv,
    generate_hopqa,
    normalize_text,
)
from .events import Event, RunRecord, read_events
from .planner import Planner, PlannerConfig


class ConfigError(Exception):
    """Invalid run configuration; message lists every offending field."""


@dataclass
class AgentSpec:
    kind: str
    id: str
    temperatures: RoleTemperatures = field(default_factory=RoleTemperatures)
    params: dict = field(default_factory=dict)


@dataclass
class EnvSpec:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    pool: list[AgentSpec]
    environment: EnvSpec
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    episodes: int = 1
    out_dir: str = "runs/run"
    seed: int = 0

    def __post_init__(self):
        if not self.pool:
            raise ConfigError("config error: pool must contain at least one agent")
        if self.episodes < 1:
            raise ConfigError("config error: episodes must be >= 1")


_AGENT_KINDS = ("scripted", "mock", "http")
_ENV_KINDS = ("treasure", "hopqa", "fixture")


def _check_keys(doc: dict, allowed: set[str], where: str, problems: list[str]) -> None:
    for key in doc:
        if key not in allowed:
            problems.append(f"{where}: unknown key {key!r}")


def _load_temperatures(doc: dict, where: str, problems: list[str]) -> RoleTemperatures:
    _check_keys(doc, {"expansion", "evaluation", "reflection"}, where, problems)
    base = RoleTemperatures()
    return RoleTemperatures(
        expansion=float(doc.get("expansion", base.expansion)),
        evaluation=float(doc.get("evaluation", base.evaluation)),
        reflection=float(doc.get("reflection", base.reflection)),
    )


def _load_agent_spec(doc: dict, index: int, problems: list[str]) -> AgentSpec | None:
    where = f"pool[{index}]"
    _check_keys(doc, {"kind", "id", "temperatures", "params"}, where, problems)
    kind = doc.get("kind")
    agent_id = doc.get("id")
    if kind not in _AGENT_KINDS:
        problems.append(f"{where}: kind must be one of {_AGENT_KINDS}, got {kind!r}")
        return None
    if not agent_id:
        problems.append(f"{where}: id is required")
        return None
    temps = _load_temperatures(doc.get("temperatures", {}), f"{where}.temperatures", problems)
    return AgentSpec(kind=kind, id=agent_id, temperatures=temps, params=dict(doc.get("params", {})))


def _load_planner(doc: dict, problems: list[str]) -> PlannerConfig:
    allowed = {f.name for f in fields(PlannerConfig)}
    _check_keys(doc, allowed, "planner", problems)
    try:
        return PlannerConfig(**{k: v for k, v in doc.items() if k in allowed})
    except (TypeError, ValueError) as exc:
        problems.append(f"planner: {exc}")
        return PlannerConfig()


def load_run_config(doc: dict) -> RunConfig:
    """Parse and validate a config document; unknown keys are fatal."""
    problems: list[str] = []
    _check_keys(
        doc,
        {"planner", "pool", "environment", "episodes", "out_dir", "seed"},
        "config",
        problems,
    )
    planner = _load_planner(doc.get("planner", {}), problems)

    pool: list[AgentSpec] = []
    raw_pool = doc.get("pool", [])
    if not raw_pool:
        problems.append("pool: at least one agent is required")
    for index, agent_doc in enumerate(raw_pool):
        spec = _load_agent_spec(agent_doc, index, problems)
        if spec is not None:
            pool.append(spec)

    env_doc = doc.get("environment")
    if not isinstance(env_doc, dict) or env_doc.get("kind") not in _ENV_KINDS:
        problems.append(f"environment: kind must be one of {_ENV_KINDS}")
        env = EnvSpec(kind="treasure")
    else:
        params = {k: v for k, v in env_doc.items() if k != "kind"}
        env = EnvSpec(kind=env_doc["kind"], params=params)

    episodes = doc.get("episodes", 1)
    if not isinstance(episodes, int) or episodes < 1:
        problems.append(f"episodes: must be a positive integer, got {episodes!r}")
        episodes = 1

    if problems:
        raise ConfigError("config error: " + "; ".join(problems))
    return RunConfig(
        pool=pool,
        environment=env,
        planner=planner,
        episodes=episodes,
        out_dir=str(doc.get("out_dir", "runs/run")),
        seed=int(doc.get("seed", 0)),
    )


def load_run_config_file(path: str | Path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return load_run_config(json.load(handle))


# ---------------------------------------------------------------------------
# Builders


def _role_map(doc: dict, where: str) -> dict[PromptRole, str]:
    out = {}
    for key, value in doc.items():
        try:
            out[PromptRole(key)] = value
        except ValueError:
            raise ConfigError(f"{where}: unknown prompt role {key!r}") from None
    return out


def build_agent(spec: AgentSpec, episode_seed: int) -> Agent:
    params = spec.params
    if spec.kind == "scripted":
        table = {}
        for role, entries in _role_map(params.get("table", {}), spec.id).items():
            for state, response in entries.items():
                table[(role, state)] = response
        defaults = _role_map(params.get("defaults", {}), spec.id)
        backend = ScriptedBackend(table=table, defaults=defaults)
    elif spec.kind == "mock":
        responses = _role_map(params.get("responses", {}), spec.id)
        backend = MockBackend(
            responses=responses,
            seed=int(params.get("seed", 0)) + episode_seed,
        )
    elif spec.kind == "http":
        backend = HttpBackend(
            base_url=params["base_url"],
            model=params.get("model", ""),
            api_key_env=params.get("api_key_env", ""),
            system_prompt=params.get("system_prompt", ""),
            timeout=float(params.get("timeout", 30.0)),
            max_retries=int(params.get("retries", 2)),
        )
    else:  # pragma: no cover - guarded by config validation
        raise ConfigError(f"unknown agent kind {spec.kind!r}")
    return Agent(id=spec.id, backend=backend, temperatures=spec.temperatures)


def build_pool(specs: list[AgentSpec], episode_seed: int) -> AgentPool:
    return AgentPool([build_agent(spec, episode_seed) for spec in specs])


def build_environment(spec: EnvSpec, episode_seed: int) -> Environment:
    params = spec.params
    if spec.kind == "treasure":
        return TreasureTreeEnv(
            branching=int(params.get("branching", 3)),
            depth=int(params.get("depth", 3)),
            seed=int(params.get("seed", 0)) + episode_seed,
            success_threshold=params.get("success_threshold"),
        )
    if spec.kind == "hopqa":
        return FactGraphEnv(
            generate_hopqa(
                seed=int(params.get("seed", 0)) + episode_seed,
                hops=int(params.get("hops", 2)),
                entities=int(params.get("entities", 8)),
            )
        )
    if spec.kind == "fixture":
        return FactGraphEnv(FactGraph.load(params["path"]))
    raise ConfigError(f"unknown environment kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Running


def run_experiment(cfg: RunConfig, out_dir: str | Path | None = None) -> Path:
    """Run all episodes, write events/summary/trees; returns the output dir."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    record = RunRecord()
    per_episode = []
    invocations: Counter[str] = Counter()
    trees = []
    for index in range(cfg.episodes):
        episode_seed = cfg.seed + index
        record.episode = index
        env = build_environment(cfg.environment, episode_seed)
        pool = build_pool(cfg.pool, episode_seed)
        planner = Planner(env, pool, cfg.planner, record=record)
        result = planner.plan()
        for stats in planner.scheduler.to_json():
            invocations[stats["agent"]] += stats["invocations"]
        per_episode.append(
            {
                "episode": index,
                "success": result.success,
                "nodes_expanded": result.nodes_expanded,
                "agent_calls": result.agent_calls,
                "tokens": {
                    "prompt": result.tokens.prompt_tokens,
                    "completion": result.tokens.completion_tokens,
                },
                "reflections": result.reflections_emitted,
                "solution_actions": result.solution.actions() if result.solution else None,
            }
        )
        trees.append({"episode": index, "nodes": planner.tree.to_json()})

    successes = sum(1 for ep in per_episode if ep["success"])
    total_tokens = sum(
        ep["tokens"]["prompt"] + ep["tokens"]["completion"] for ep in per_episode
    )
    summary = {
        "episodes": cfg.episodes,
        "successes": successes,
        "success_rate": round(successes / cfg.episodes, 4),
        "mean_nodes_expanded": sum(ep["nodes_expanded"] for ep in per_episode)
        / cfg.episodes,
        "mean_tokens": total_tokens / cfg.episodes,
        "invocation_frequencies": dict(invocations),
        "per_episode": per_episode,
    }

    record.write_jsonl(out / "events.jsonl")
    with open(out / "summary.json", "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2)
    with open(out / "trees.jsonl", "w", encoding="utf-8") as handle:
        for tree in trees:
            handle.write(json.dumps(tree) + "\n")
    return out


# ---------------------------------------------------------------------------
# Metrics


@dataclass
class DiversityHistogram:
    """How many expansions produced exactly k distinct actions."""

    counts: dict[int, int] = field(default_factory=dict)

    @property
    def total_expansions(self) -> int:
        return sum(self.counts.values())

    def share(self, k: int) -> float:
        total = self.total_expansions
        return self.counts.get(k, 0) / total if total else 0.0

    def to_json(self) -> dict:
        return {str(k): v for k, v in sorted(self.counts.items())}


def diversity_report(events_path: str | Path) -> DiversityHistogram:
    """Tally k-distinct-action counts per n-way expansion batch."""
    events = read_events(events_path)
    groups: dict[tuple[int, int], list[str]] = defaultdict(list)
    for event in events:
        if event.kind != "expand":
            continue
        key = (event.episode, int(event.payload["batch"]))
        groups[key].append(str(event.payload["action"]))
    histogram = DiversityHistogram()
    for actions in groups.values():
        distinct = len({normalize_text(action) for action in actions})
        histogram.counts[distinct] = histogram.counts.get(distinct, 0) + 1
    return histogram


def _token_entries(event: Event) -> list[tuple[str, int, int]]:
    payload = event.payload
    if event.kind in ("expand", "evaluate"):
        tok = payload["tokens"]
        return [(payload["agent"], int(tok["prompt"]), int(tok["completion"]))]
    if event.kind == "reflect":
        tok = payload["tokens"]
        return [(payload["author"], int(tok["prompt"]), int(tok["completion"]))]
    if event.kind == "simulate_step":
        return [
            (call["agent"], int(call["prompt"]), int(call["completion"]))
            for call in payload.get("calls", [])
        ]
    return []


def token_report(events_path: str | Path) -> dict:
    """Prompt/completion token totals per episode and per agent."""
    events = read_events(events_path)
    per_episode: dict[int, dict[str, int]] = defaultdict(
        lambda: {"prompt": 0, "completion": 0}
    )
    per_agent: dict[str, dict[str, int]] = defaultdict(
        lambda: {"prompt": 0, "completion": 0}
    )
    episodes = set()
    for event in events:
        episodes.add(event.episode)
        for agent, prompt, completion in _token_entries(event):
            per_episode[event.episode]["prompt"] += prompt
            per_episode[event.episode]["completion"] += completion
            per_agent[agent]["prompt"] += prompt
            per_agent[agent]["completion"] += completion
    for bucket in (*per_episode.values(), *per_agent.values()):
        bucket["total"] = bucket["prompt"] + bucket["completion"]
    overall = sum(bucket["total"] for bucket in per_episode.values())
    n_episodes = len(episodes)
    return {
        "episodes": n_episodes,
        "per_episode": {str(k): v for k, v in sorted(per_episode.items())},
        "per_agent": dict(sorted(per_agent.items())),
        "total_tokens": overall,
        "mean_tokens_per_episode": overall / n_episodes if n_episodes else 0.0,
    }


# ---------------------------------------------------------------------------
# Parameter sweeps

SWEEP_PARAMS = {
    "alpha": "alpha",
    "n": "n",
    "K": "rollouts",
    "uct_c": "uct_c",
}


def sweep(
    cfg: RunConfig,
    param: str,
    values: list,
    out_dir: str | Path | None = None,
) -> Path:
    """Run one experiment per value; write sweep.csv with summary columns."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(
            f"unknown sweep param {param!r}; choose from {sorted(SWEEP_PARAMS)}"
        )
    if not values:
        raise ConfigError("sweep values must be non-empty")
    base = Path(out_dir or cfg.out_dir)
    base.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        planner = replace(cfg.planner, **{SWEEP_PARAMS[param]: value})
        sub_cfg = replace(cfg, planner=planner)
        sub_out = run_experiment(sub_cfg, out_dir=base / f"{param}_{value}")
        with open(sub_out / "summary.json", "r", encoding="utf-8") as handle:
            summary = json.load(handle)
        rows.append(
            {
                "param_value": value,
                "success_rate": summary["success_rate"],
                "mean_nodes": summary["mean_nodes_expanded"],
                "mean_tokens": summary["mean_tokens"],
            }
        )
    csv_path = base / "sweep.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as handle:
        writer = csv.DictWriter(
            handle,
            fieldnames=["param_value", "success_rate", "mean_nodes", "mean_tokens"],
            lineterminator="\n",
        )
        writer.writeheader()
        writer.writerows(rows)
    return csv_path
