"""Desk-scale environments with oracle feedback.

Environments are stateless between calls: the full decision state is carried
in the observation text, so ``step(state, action)`` can be called on any
node of the search tree in any order. Two concrete environments are
provided:

* ``FactGraphEnv`` -- a synthetic multi-hop QA graph with a Search / Lookup /
  Finish action grammar and immediate success feedback on Finish.
* ``TreasureTreeEnv`` -- an abstract reward tree with a Choose[i] grammar and
  a brute-force optimal-path oracle, used to validate search correctness.

Unparseable actions yield a non-terminal "Invalid action." observation so
agents can recover instead of crashing the episode.
"""

from __future__ import annotations

import difflib
import itertools
import json
import random
import re
from dataclasses import dataclass
from typing import Protocol


class EnvError(Exception):
    """Raised on invalid environment construction or oversized oracles."""


@dataclass(frozen=True)
class EnvStep:
    """One transition result; ``success`` is only present at terminals."""

    observation: str
    terminal: bool = False
    success: bool | None = None


class Environment(Protocol):
    def reset(self) -> EnvStep: ...

    def step(self, state: str, action: str) -> EnvStep: ...


def normalize_text(text: str) -> str:
    """Case-fold, trim, and collapse internal whitespace."""
    return " ".join(text.split()).casefold()


_ACTION_RE = re.compile(r"(Search|Lookup|Finish|Choose)\[([^\[\]]*)\]")


def parse_action(text: str) -> tuple[str, str] | None:
    """Extract the first grammar-shaped action from a raw completion."""
    match = _ACTION_RE.search(text)
    if not match:
        return None
    return match.group(1), match.group(2)


# ---------------------------------------------------------------------------
# Abstract reward tree


class TreasureTreeEnv:
    """Complete b-ary tree of fixed depth with seeded leaf values in [0, 1].

    Descending with Choose[i] actions reaches a leaf after ``depth`` steps;
    the terminal step reports success iff the leaf value is at or above
    ``success_threshold``, which defaults to the optimal value so that
    success means "found the best leaf".
    """

    MAX_LEAVES = 10**6

    def __init__(
        self,
        branching: int,
        depth: int,
        seed: int = 0,
        success_threshold: float | None = None,
    ):
        if branching < 1 or depth < 1:
            raise EnvError("branching and depth must be >= 1")
        if branching**depth > self.MAX_LEAVES:
            raise EnvError(
                f"{branching}^{depth} leaves exceeds the {self.MAX_LEAVES} guard"
            )
        self.branching = branching
        self.depth = depth
        self.seed = seed
        rng = random.Random(seed)
        self.leaf_values: dict[tuple[int, ...], float] = {
            path: rng.random()
            for path in itertools.product(range(branching), repeat=depth)
        }
        if success_threshold is None:
            success_threshold = max(self.leaf_values.values())
        self.success_threshold = success_threshold

    def leaf_value(self, path: tuple[int, ...]) -> float:
        return self.leaf_values[path]

    def all_states(self) -> dict[tuple[int, ...], str]:
        """State text of every tree position, keyed by path prefix."""
        states = {}
        for length in range(self.depth + 1):
            for path in itertools.product(range(self.branching), repeat=length):
                states[path] = self.state_for(path)
        return states

    def state_for(self, path: tuple[int, ...]) -> str:
        if len(path) == self.depth:
            return (
                f"Reached leaf {list(path)}. "
                f"Value {self.leaf_values[path]:.6f}."
            )
        return (
            f"Position {list(path)}. Depth {len(path)} of {self.depth}. "
            f"Pick one action among Choose[0]..Choose[{self.branching - 1}]."
        )

    def _parse_path(self, state: str) -> tuple[int, ...] | None:
        match = re.search(r"(?:Position|Reached leaf) \[([0-9, ]*)\]", state)
        if not match:
            return None
        digits = match.group(1).strip()
        if not digits:
            return ()
        return tuple(int(x) for x in digits.split(","))

    def reset(self) -> EnvStep:
        return EnvStep(observation=self.state_for(()))

    def step(self, state: str, action: str) -> EnvStep:
        path = self._parse_path(state)
        parsed = parse_action(action)
        if path is None or len(path) >= self.depth or parsed is None:
            return EnvStep(observation=f"Invalid action. {state}")
        verb, arg = parsed
        if verb != "Choose" or not arg.strip().isdigit():
            return EnvStep(observation=f"Invalid action. {state}")
        index = int(arg)
        if not 0 <= index < self.branching:
            return EnvStep(observation=f"Invalid action. {state}")
        new_path = path + (index,)
        observation = self.state_for(new_path)
        if len(new_path) == self.depth:
            value = self.leaf_values[new_path]
            return EnvStep(
                observation=observation,
                terminal=True,
                success=value >= self.success_threshold,
            )
        return EnvStep(observation=observation)


def enumerate_optimal(env: TreasureTreeEnv) -> tuple[tuple[int, ...], float]:
    """Exhaustive argmax over all leaves; ties go to the smallest path."""
    if env.branching**env.depth > TreasureTreeEnv.MAX_LEAVES:
        raise EnvError("tree too large to enumerate")
    best_path: tuple[int, ...] | None = None
    best_value = -1.0
    for path in itertools.product(range(env.branching), repeat=env.depth):
        value = env.leaf_values[path]
        if value > best_value:
            best_path, best_value = path, value
    return best_path, best_value


# ---------------------------------------------------------------------------
# Synthetic multi-hop QA graph


@dataclass
class FactGraph:
    """A directed fact graph with one canonical multi-hop answer chain."""

    entities: list[str]
    facts: dict[str, str]
    links: list[tuple[str, str, str]]
    question: str
    answer: str
    seed_entity: str
    hops: int = 0

    def to_json(self) -> dict:
        return {
            "entities": self.entities,
            "facts": self.facts,
            "links": [list(edge) for edge in self.links],
            "question": self.question,
            "answer": self.answer,
            "seed_entity": self.seed_entity,
            "hops": self.hops,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FactGraph":
        return cls(
            entities=list(doc["entities"]),
            facts=dict(doc["facts"]),
            links=[tuple(edge) for edge in doc["links"]],
            question=doc["question"],
            answer=doc["answer"],
            seed_entity=doc["seed_entity"],
            hops=int(doc.get("hops", 0)),
        )

    @classmethod
    def load(cls, path: str) -> "FactGraph":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_json(json.load(handle))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json(), handle, indent=2)


_NAME_STEMS = [
    "Bel", "Cor", "Dan", "Fen", "Gal", "Hol", "Jun", "Kel",
    "Lor", "Mar", "Nor", "Pel", "Quin", "Ros", "Tor", "Vel",
]
_NAME_ENDS = ["ia", "on", "ar", "eth", "um", "is", "or", "an"]
_RELATIONS = [
    "allied with", "founded by", "located in",
    "derived from", "named after", "succeeded by",
]


def generate_hopqa(seed: int, hops: int, entities: int) -> FactGraph:
    """Seeded fact graph whose question needs exactly ``hops`` Search steps.

    The first hops+1 generated entities form the answer chain; the rest are
    decoys. Distractor edges only point at decoys or back at the chain's
    start, so no shortcut to the answer exists.
    """
    if hops < 1:
        raise EnvError("hops must be >= 1")
    if entities < hops + 1:
        raise EnvError(f"need at least {hops + 1} entities for {hops} hops")
    rng = random.Random(seed)

    names: list[str] = []
    seen = set()
    while len(names) < entities:
        name = rng.choice(_NAME_STEMS) + rng.choice(_NAME_ENDS)
        if name in seen:
            name = f"{name}-{len(names)}"
        seen.add(name)
        names.append(name)

    chain = names[: hops + 1]
    decoys = names[hops + 1 :]
    chain_relations = [rng.choice(_RELATIONS) for _ in range(hops)]

    links: list[tuple[str, str, str]] = []
    for i in range(hops):
        links.append((chain[i], chain_relations[i], chain[i + 1]))

    # Distractors may target decoys or the chain's seed, never later chain
    # nodes, so the canonical chain stays the unique route to the answer.
    safe_targets = decoys + [chain[0]]
    for name in names:
        choices = [t for t in safe_targets if t != name]
        for _ in range(min(2, len(choices))):
            target = rng.choice(choices)
            links.append((name, rng.choice(_RELATIONS), target))

    outgoing: dict[str, list[tuple[str, str]]] = {n: [] for n in names}
    for src, rel, dst in links:
        outgoing[src].append((rel, dst))

    facts = {}
    for name in names:
        sentences = [f"{name} is a well documented subject."]
        for rel, dst in outgoing[name]:
            sentences.append(f"{name} is {rel} {dst}.")
        facts[name] = " ".join(sentences)

    route = ", then ".join(chain_relations)
    question = (
        f'Starting from "{chain[0]}", which entity do you reach by '
        f"following: {route}? Answer with Finish[entity]."
    )
    return FactGraph(
        entities=names,
        facts=facts,
        links=links,
        question=question,
        answer=chain[-1],
        seed_entity=chain[0],
        hops=hops,
    )


def canonical_chain(graph: FactGraph) -> list[str]:
    """Shortest entity path from the seed to the answer, via BFS over links."""
    frontier = [graph.seed_entity]
    parents: dict[str, str | None] = {graph.seed_entity: None}
    while frontier:
        nxt = []
        for entity in frontier:
            if entity == graph.answer:
                chain = []
                cursor: str | None = entity
                while cursor is not None:
                    chain.append(cursor)
                    cursor = parents[cursor]
                return list(reversed(chain))
            for src, _, dst in graph.links:
                if src == entity and dst not in parents:
                    parents[dst] = entity
                    nxt.append(dst)
        frontier = nxt
    raise EnvError(f"no path from {graph.seed_entity!r} to {graph.answer!r}")


class FactGraphEnv:
    """Search / Lookup / Finish environment over a FactGraph.

    Search[entity] returns the entity's fact paragraph, or a "Could not
    find" line with similar entity names. Lookup[keyword] returns the first
    sentence of the current observation containing the keyword. Finish[x]
    terminates with success iff x matches the canonical answer after
    whitespace/case normalization.
    """

    def __init__(self, graph: FactGraph):
        self.graph = graph
        self._by_norm = {normalize_text(name): name for name in graph.entities}

    def reset(self) -> EnvStep:
        return EnvStep(observation=self.graph.question)

    def _search(self, entity: str) -> str:
        name = self._by_norm.get(normalize_text(entity))
        if name is not None:
            return self.graph.facts[name]
        similar = difflib.get_close_matches(
            normalize_text(entity), list(self._by_norm), n=3, cutoff=0.0
        )
        names = [self._by_norm[s] for s in similar]
        return f'Could not find "{entity}". Similar: {names}.'

    def _lookup(self, keyword: str, state: str) -> str:
        needle = normalize_text(keyword)
        for sentence in re.split(r"(?<=\.)\s+", state):
            if needle in normalize_text(sentence):
                return sentence.strip()
        return f'No sentence contains "{keyword}".'

    def step(self, state: str, action: str) -> EnvStep:
        parsed = parse_action(action)
        if parsed is None:
            return EnvStep(observation="Invalid action.")
        verb, arg = parsed
        if verb == "Search":
            return EnvStep(observation=self._search(arg))
        if verb == "Lookup":
            return EnvStep(observation=self._lookup(arg, state))
        if verb == "Finish":
            success = normalize_text(arg) == normalize_text(self.graph.answer)
            return EnvStep(
                observation=f"Answer submitted: {arg}",
                terminal=True,
                success=success,
            )
        return EnvStep(observation="Invalid action.")
