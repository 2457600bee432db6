"""Append-only run record.

Every planning episode logs its agent selections, expansions, evaluations,
rollout steps, reflections, backpropagations, and terminal outcome as one
JSONL event per line:

    {"event_id": ..., "episode": ..., "kind": ..., "payload": {...}}

Event ids are monotone across the whole record. Events deliberately carry
no timestamps or latencies, so two identical seeded runs produce
byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

KINDS = (
    "select",
    "expand",
    "evaluate",
    "simulate_step",
    "reflect",
    "backprop",
    "terminal",
)


class EventLogError(Exception):
    pass


@dataclass(frozen=True)
class Event:
    event_id: int
    episode: int
    kind: str
    payload: dict

    def to_json(self) -> dict:
        return {
            "event_id": self.event_id,
            "episode": self.episode,
            "kind": self.kind,
            "payload": self.payload,
        }


class RunRecord:
    """In-memory event sink with monotone ids and a JSONL writer."""

    def __init__(self):
        self.events: list[Event] = []
        self.episode = 0

    def emit(self, kind: str, payload: dict) -> Event:
        if kind not in KINDS:
            raise EventLogError(f"unknown event kind {kind!r}")
        event = Event(
            event_id=len(self.events),
            episode=self.episode,
            kind=kind,
            payload=payload,
        )
        self.events.append(event)
        return event

    def of_kind(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for event in self.events:
                handle.write(json.dumps(event.to_json()) + "\n")


def read_events(path: str | Path) -> list[Event]:
    """Parse a JSONL event file; malformed lines report their line number."""
    events = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                events.append(
                    Event(
                        event_id=int(doc["event_id"]),
                        episode=int(doc["episode"]),
                        kind=str(doc["kind"]),
                        payload=dict(doc["payload"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise EventLogError(f"malformed event at line {lineno}: {exc}") from exc
    return events
