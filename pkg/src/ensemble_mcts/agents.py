"""Agent pool: uniform prompt interface over heterogeneous backends.

Every agent answers three prompt roles (expansion, evaluation, reflection)
through one query surface. Three backends are provided:

* scripted  -- a lookup table keyed by (role, digest of the state text);
               deterministic fixtures for tests and desk-scale experiments.
* mock      -- a seeded pseudo-random choice from a configured response set;
               replays are deterministic given (seed, call counter).
* http      -- a chat-completions endpoint; bearer token read from an
               environment variable, retries with exponential backoff.

Token accounting: the HTTP backend passes through provider-reported counts;
scripted/mock backends estimate tokens as whitespace-delimited word counts.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import httpx

from .tree import Trajectory


class PromptRole(Enum):
    EXPANSION = "expansion"
    EVALUATION = "evaluation"
    REFLECTION = "reflection"


class AgentError(Exception):
    """Base class for agent-layer failures."""


class ScriptedMissError(AgentError):
    """Scripted table has no entry for the queried key."""

    def __init__(self, key: tuple[str, str]):
        super().__init__(f"scripted miss for key {key!r}")
        self.key = key


class EmptyResponseError(AgentError):
    """Backend produced an empty completion."""


class TransportError(AgentError):
    """HTTP backend failed after exhausting retries."""

    def __init__(self, message: str, retries: int):
        super().__init__(f"{message} (after {retries} retries)")
        self.retries = retries


class TemplateError(AgentError):
    """A prompt template is missing a required placeholder."""


class UnparseableEvaluationError(AgentError):
    """Evaluation text contained neither JSON nor the expected score lines."""


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass
class AgentQuery:
    """One request to an agent: role, state, history, shared memory."""

    role: PromptRole
    state: str
    history: Trajectory = field(default_factory=Trajectory)
    memory: list[str] = field(default_factory=list)
    temperature: float = 0.0


@dataclass
class AgentResponse:
    text: str
    tokens: TokenUsage
    agent: str
    latency: float = 0.0


@dataclass(frozen=True)
class EvalResult:
    """Parsed evaluation: value estimate z in [0,1], confidence c in (0,1)."""

    z: float
    c: float


@dataclass(frozen=True)
class RoleTemperatures:
    """Per-role sampling temperatures.

    Action sampling defaults to 0.2 so agents follow instructions closely;
    evaluation uses 0 for deterministic value estimates; reflection follows
    the action-sampling setting.
    """

    expansion: float = 0.2
    evaluation: float = 0.0
    reflection: float = 0.2

    def for_role(self, role: PromptRole) -> float:
        return getattr(self, role.value)


def count_tokens(text: str) -> int:
    """Whitespace word count, the documented estimator for local backends."""
    return len(text.split())


CONF_EPS = 1e-6

_VALUE_RE = re.compile(r"value\s*estimate\s*:\s*([-+]?\d*\.?\d+)", re.IGNORECASE)
_CONF_RE = re.compile(r"confidence\s*score\s*:\s*([-+]?\d*\.?\d+)", re.IGNORECASE)


def parse_evaluation(text: str) -> EvalResult:
    """Extract (z, c) from an evaluation completion.

    Tries strict JSON ``{"value": ..., "confidence": ...}`` first, then the
    line format ``Value Estimate: <float>`` / ``Confidence Score: <float>``
    (case-insensitive, whitespace-tolerant). z is clamped to [0, 1] and c to
    [1e-6, 1 - 1e-6] so downstream logs never see ln(0).
    """
    z = c = None
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError):
        doc = None
    if isinstance(doc, dict) and "value" in doc and "confidence" in doc:
        if isinstance(doc["value"], (int, float)) and isinstance(
            doc["confidence"], (int, float)
        ):
            z, c = float(doc["value"]), float(doc["confidence"])
    if z is None:
        vm = _VALUE_RE.search(text)
        cm = _CONF_RE.search(text)
        if not vm or not cm:
            raise UnparseableEvaluationError(f"unparseable evaluation: {text[:80]!r}")
        z, c = float(vm.group(1)), float(cm.group(1))
    z = min(max(z, 0.0), 1.0)
    c = min(max(c, CONF_EPS), 1.0 - CONF_EPS)
    return EvalResult(z=z, c=c)


def format_evaluation(z: float, c: float) -> str:
    """Render (z, c) in the line style that parse_evaluation accepts."""
    return f"Value Estimate: {z}\nConfidence Score: {c}"


DEFAULT_TEMPLATES = {
    PromptRole.EXPANSION: (
        "You are exploring solutions step by step.\n"
        "Lessons from earlier failures:\n{memory}\n"
        "Steps so far:\n{history}\n"
        "Current state:\n{state}\n"
        "Propose the single next action."
    ),
    PromptRole.EVALUATION: (
        "Assess how promising the current state is for solving the task.\n"
        "Lessons from earlier failures:\n{memory}\n"
        "Steps so far:\n{history}\n"
        "Current state:\n{state}\n"
        "Reply with lines 'Value Estimate: <0..1>' and "
        "'Confidence Score: <0..1>'."
    ),
    PromptRole.REFLECTION: (
        "The attempt below ended in failure.\n"
        "Trajectory:\n{history}\n"
        "Final state:\n{state}\n"
        "Write a short reflection on what went wrong and what to try instead."
    ),
}


class TemplateRegistry:
    """Role-indexed prompt templates with {state}/{history}/{memory} slots."""

    REQUIRED = ("{state}", "{history}")

    def __init__(self, templates: Mapping[PromptRole, str] | None = None):
        self._templates: dict[PromptRole, str] = {}
        for role, text in (templates or DEFAULT_TEMPLATES).items():
            self.register(role, text)

    def register(self, role: PromptRole, template: str) -> None:
        for placeholder in self.REQUIRED:
            if placeholder not in template:
                raise TemplateError(
                    f"template for role {role.value!r} is missing required "
                    f"placeholder {placeholder!r}"
                )
        self._templates[role] = template

    def has(self, role: PromptRole) -> bool:
        return role in self._templates

    def render(self, query: AgentQuery) -> str:
        if query.role not in self._templates:
            raise TemplateError(f"no template registered for role {query.role.value!r}")
        memory_block = render_memory_items(query.memory)
        text = self._templates[query.role]
        text = text.replace("{state}", query.state)
        text = text.replace("{history}", query.history.render())
        text = text.replace("{memory}", memory_block)
        return text


def render_memory_items(items: Sequence[str]) -> str:
    """Bulleted memory block, oldest first; item newlines become spaces."""
    return "\n".join("- " + " ".join(item.split()) for item in items)


def state_digest(state: str) -> str:
    """First 16 hex chars of SHA-256 of the state text; keeps fixtures short."""
    return hashlib.sha256(state.encode("utf-8")).hexdigest()[:16]


class ScriptedBackend:
    """Deterministic lookup table keyed on (role, state digest).

    ``table`` maps (role, state text) to a response; states are digested
    internally. ``defaults`` optionally supplies a per-role fallback so
    fixtures need not enumerate every reachable state (e.g. reflection over
    arbitrary failure summaries). Without a default, a missing key raises
    ScriptedMissError.
    """

    kind = "scripted"

    def __init__(
        self,
        table: Mapping[tuple[PromptRole, str], str],
        defaults: Mapping[PromptRole, str] | None = None,
    ):
        self._table = {
            (role.value, state_digest(state)): resp
            for (role, state), resp in table.items()
        }
        self._defaults = {r.value: t for r, t in (defaults or {}).items()}

    def complete(self, prompt: str, query: AgentQuery) -> tuple[str, TokenUsage | None]:
        key = (query.role.value, state_digest(query.state))
        text = self._table.get(key)
        if text is None:
            text = self._defaults.get(query.role.value)
        if text is None:
            raise ScriptedMissError(key)
        return text, None


class MockBackend:
    """Seeded pseudo-random choice from a per-role response set.

    Each call derives its RNG from (seed, call counter), so replaying a
    freshly constructed backend yields a byte-identical response sequence
    regardless of how callers interleave roles.
    """

    kind = "mock"

    def __init__(self, responses: Mapping[PromptRole, Sequence[str]], seed: int = 0):
        if not responses or any(len(v) == 0 for v in responses.values()):
            raise ValueError("mock backend needs a non-empty response set per role")
        self._responses = {r: list(v) for r, v in responses.items()}
        self.seed = seed
        self._calls = 0

    def complete(self, prompt: str, query: AgentQuery) -> tuple[str, TokenUsage | None]:
        options = self._responses.get(query.role)
        if options is None:
            raise AgentError(f"mock backend has no responses for role {query.role.value!r}")
        rng = random.Random((self.seed, self._calls))
        self._calls += 1
        return options[rng.randrange(len(options))], None


class HttpBackend:
    """Chat-completions client: POST {base_url}/chat/completions.

    Auth uses a bearer token read from the environment variable named by
    ``api_key_env``. Transport failures and non-2xx responses are retried
    ``max_retries`` times with exponential backoff before raising
    TransportError.
    """

    kind = "http"

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "",
        system_prompt: str = "",
        timeout: float = 30.0,
        max_retries: int = 2,
        backoff: float = 0.5,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.system_prompt = system_prompt
        self.max_retries = max_retries
        self.backoff = backoff
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            token = os.environ.get(self.api_key_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, prompt: str, query: AgentQuery) -> tuple[str, TokenUsage | None]:
        messages = []
        if self.system_prompt:
            messages.append({"role": "system", "content": self.system_prompt})
        messages.append({"role": "user", "content": prompt})
        body = {
            "model": self.model,
            "messages": messages,
            "temperature": query.temperature,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = self._client.post(
                    f"{self.base_url}/chat/completions",
                    json=body,
                    headers=self._headers(),
                )
                resp.raise_for_status()
                doc = resp.json()
                text = doc["choices"][0]["message"]["content"]
                usage = doc.get("usage", {})
                tokens = TokenUsage(
                    prompt_tokens=int(usage.get("prompt_tokens", 0)),
                    completion_tokens=int(usage.get("completion_tokens", 0)),
                )
                return text, tokens
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < self.max_retries:
                    time.sleep(self.backoff * (2**attempt))
        raise TransportError(str(last_error), retries=self.max_retries)


@dataclass
class Agent:
    """One pool member: an identifier, a backend, and its temperatures."""

    id: str
    backend: ScriptedBackend | MockBackend | HttpBackend
    temperatures: RoleTemperatures = field(default_factory=RoleTemperatures)


class AgentPool:
    """Registered agents sharing one template set and one query surface."""

    def __init__(
        self,
        agents: Sequence[Agent],
        templates: TemplateRegistry | None = None,
    ):
        if not agents:
            raise ValueError("agent pool must not be empty")
        ids = [a.id for a in agents]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate agent ids in pool: {ids}")
        self._agents = {a.id: a for a in agents}
        self.templates = templates or TemplateRegistry()
        self.calls = 0

    @property
    def agent_ids(self) -> list[str]:
        return list(self._agents)

    def agent(self, agent_id: str) -> Agent:
        try:
            return self._agents[agent_id]
        except KeyError:
            raise AgentError(f"unknown agent {agent_id!r}") from None

    def register_template(self, role: PromptRole, template: str) -> None:
        self.templates.register(role, template)

    def query(self, agent_id: str, query: AgentQuery) -> AgentResponse:
        """Render the role template, invoke the backend, count tokens."""
        agent = self.agent(agent_id)
        prompt = self.templates.render(query)
        started = time.monotonic()
        text, tokens = agent.backend.complete(prompt, query)
        latency = time.monotonic() - started
        if not text:
            raise EmptyResponseError(f"empty response from agent {agent_id!r}")
        if tokens is None:
            tokens = TokenUsage(
                prompt_tokens=count_tokens(prompt),
                completion_tokens=count_tokens(text),
            )
        self.calls += 1
        return AgentResponse(text=text, tokens=tokens, agent=agent_id, latency=latency)
