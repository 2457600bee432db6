"""Search tree for Monte Carlo tree search.

Owns node storage, UCT selection, child insertion, incremental-mean
backpropagation, and root-to-node path extraction. All mutation is expected
to come from a single logical owner (the planner); read-only snapshots may be
shared freely.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


class TreeError(Exception):
    """Raised on structurally invalid tree operations."""


@dataclass
class Node:
    """One vertex of the search tree.

    ``value_mean`` is the running mean of all rewards backpropagated through
    this node; the underlying reward list is not retained.
    """

    id: int
    state: str
    action_in: str | None = None
    visit_count: int = 0
    value_mean: float = 0.0
    modulated_reward: float = 0.0
    children: list[int] = field(default_factory=list)
    parent: int | None = None
    depth: int = 0
    terminal: bool = False
    expanded_by: str | None = None


@dataclass
class Trajectory:
    """A contiguous root-to-node path as (state, action) pairs.

    ``steps[i]`` pairs the state an action was taken from with that action;
    ``terminal_state`` is the state of the final node. ``success`` is None
    until an environment verdict is known.
    """

    steps: list[tuple[str, str]] = field(default_factory=list)
    terminal_state: str = ""
    success: bool | None = None

    def actions(self) -> list[str]:
        return [a for _, a in self.steps]

    def render(self) -> str:
        """Serialize the path for prompt injection, one step per line."""
        return "\n".join(f"{s} -> {a}" for s, a in self.steps)


class SearchTree:
    """Mutable MCTS tree rooted at an initial state."""

    def __init__(self, root_state: str, root_terminal: bool = False):
        self._nodes: dict[int, Node] = {}
        self._next_id = 0
        root = Node(id=self._alloc_id(), state=root_state, terminal=root_terminal)
        self._nodes[root.id] = root
        self.root_id = root.id

    def _alloc_id(self) -> int:
        nid = self._next_id
        self._next_id += 1
        return nid

    def node(self, node_id: int) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise TreeError(f"unknown node id {node_id}") from None

    def __len__(self) -> int:
        return len(self._nodes)

    def nodes(self) -> list[Node]:
        """All nodes in insertion order."""
        return list(self._nodes.values())

    def uct_score(self, child: Node, parent: Node, c: float) -> float:
        """UCT score of ``child`` under ``parent``: Q + c*sqrt(ln N(p)/N(s)).

        Unvisited children score +inf so every generated branch is visited
        before any branch is revisited.
        """
        if child.visit_count == 0:
            return math.inf
        return child.value_mean + c * math.sqrt(
            math.log(max(parent.visit_count, 1)) / child.visit_count
        )

    def uct_select(self, c: float, branch_limit: int) -> int:
        """Descend from the root by max UCT score; return a frontier node id.

        Descent stops at the first node that is terminal, has fewer than
        ``branch_limit`` children, or has no children. Ties between children
        are broken by insertion order. A terminal root is returned as-is.
        """
        if c <= 0:
            raise ValueError("exploration constant c must be > 0")
        if not self._nodes:
            raise TreeError("no root")
        node = self.node(self.root_id)
        while True:
            if node.terminal:
                return node.id
            if len(node.children) < branch_limit or not node.children:
                return node.id
            best = None
            best_score = -math.inf
            for cid in node.children:
                score = self.uct_score(self.node(cid), node, c)
                if score > best_score:
                    best, best_score = cid, score
            node = self.node(best)

    def add_child(
        self,
        parent_id: int,
        action: str,
        state: str,
        reward: float,
        expanded_by: str,
        terminal: bool = False,
    ) -> int:
        """Append a new child to ``parent_id``; returns the new node id.

        Duplicate action texts are allowed and kept as distinct nodes.
        """
        parent = self.node(parent_id)
        if parent.terminal:
            raise TreeError(f"expansion of terminal node {parent_id}")
        child = Node(
            id=self._alloc_id(),
            state=state,
            action_in=action,
            modulated_reward=reward,
            parent=parent_id,
            depth=parent.depth + 1,
            terminal=terminal,
            expanded_by=expanded_by,
        )
        self._nodes[child.id] = child
        parent.children.append(child.id)
        return child.id

    def backpropagate(self, leaf_id: int, reward: float) -> None:
        """Update N and the running mean Q on every node from leaf to root."""
        node = self.node(leaf_id)
        while True:
            node.visit_count += 1
            node.value_mean += (reward - node.value_mean) / node.visit_count
            if node.parent is None:
                return
            node = self.node(node.parent)

    def path_to(self, node_id: int) -> list[Node]:
        """Nodes from root to ``node_id`` inclusive."""
        chain = []
        node = self.node(node_id)
        while True:
            chain.append(node)
            if node.parent is None:
                break
            node = self.node(node.parent)
        chain.reverse()
        return chain

    def extract_path(self, node_id: int) -> Trajectory:
        """Root-to-node (state, action) sequence, root state first."""
        chain = self.path_to(node_id)
        steps = [
            (chain[i].state, chain[i + 1].action_in) for i in range(len(chain) - 1)
        ]
        return Trajectory(steps=steps, terminal_state=chain[-1].state)

    def to_json(self) -> list[dict]:
        """Flat node array with parent ids, for replay and reports."""
        return [
            {
                "id": n.id,
                "parent": n.parent,
                "action_in": n.action_in,
                "state": n.state,
                "n": n.visit_count,
                "q": n.value_mean,
                "r": n.modulated_reward,
                "depth": n.depth,
                "terminal": n.terminal,
                "expanded_by": n.expanded_by,
            }
            for n in self._nodes.values()
        ]

    def dumps(self) -> str:
        return json.dumps(self.to_json())
