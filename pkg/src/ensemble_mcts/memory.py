"""Pool-wise reflection memory.

A reflection is a natural-language failure summary produced once per failed
rollout. It is broadcast to every agent's buffer; buffers are fixed-size
FIFO queues, so all agents see an identical sliding window of the most
recent reflections. Per-agent buffers exist to permit future divergence but
never diverge under broadcast-only updates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

DEFAULT_CAPACITY = 5
DEFAULT_MAX_CHARS = 800


@dataclass(frozen=True)
class Reflection:
    """One failure summary, indexed by the rollout episode that produced it."""

    text: str
    episode: int
    author: str
    created_at: float = field(default_factory=time.time)

    @classmethod
    def create(
        cls, text: str, episode: int, author: str, max_chars: int = DEFAULT_MAX_CHARS
    ) -> "Reflection":
        if not text:
            raise ValueError("reflection text must be non-empty")
        return cls(text=text[:max_chars], episode=episode, author=author)


class ReflectionBuffer:
    """Fixed-capacity FIFO of reflections, oldest first."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.items: list[Reflection] = []

    def append(self, reflection: Reflection) -> None:
        self.items.append(reflection)
        if len(self.items) > self.capacity:
            del self.items[0]

    def texts(self) -> list[str]:
        return [r.text for r in self.items]

    def __len__(self) -> int:
        return len(self.items)


class PoolMemory:
    """One reflection buffer per agent, updated only by pool-wide broadcast."""

    def __init__(self, agent_ids: list[str], capacity: int = DEFAULT_CAPACITY):
        self.buffers: dict[str, ReflectionBuffer] = {
            agent_id: ReflectionBuffer(capacity) for agent_id in agent_ids
        }

    def broadcast(self, reflection: Reflection) -> None:
        for buffer in self.buffers.values():
            buffer.append(reflection)

    def buffer_for(self, agent_id: str) -> ReflectionBuffer:
        return self.buffers[agent_id]


def render_memory(buffer: ReflectionBuffer) -> str:
    """Bulleted block, oldest first; newlines inside an item become spaces."""
    return "\n".join("- " + " ".join(r.text.split()) for r in buffer.items)
