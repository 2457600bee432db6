"""Expected-error analysis of sampling agents from a pool.

Given a binary error-indicator matrix e (rows = agents, columns = steps,
e[i][t] = 1 iff agent i errs at step t) and a strictly positive sampling
distribution p over agents, the expected total error of "sample one agent
per step i.i.d. from p" is

    E_ens = sum_t sum_i p_i * e[i][t] = sum_i p_i * E_i

with E_i the per-agent error total. Convexity bounds E_ens between the best
and worst agent; whether the inequality against the best agent is *strict*
depends on the matrix, so the report states it as data rather than asserting
it. ``COUNTEREXAMPLE`` below satisfies both the correct-coverage and
non-triviality assumptions yet ties every single agent exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

P_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ErrorMatrix:
    """Binary indicator matrix plus the agent sampling distribution."""

    e: tuple[tuple[int, ...], ...]
    p: tuple[float, ...]

    @classmethod
    def create(cls, e: list[list[int]], p: list[float] | None = None) -> "ErrorMatrix":
        if not e or not e[0]:
            raise ValueError("error matrix must be non-empty")
        width = len(e[0])
        for row in e:
            if len(row) != width:
                raise ValueError("error matrix rows must have equal length")
            if any(x not in (0, 1) for x in row):
                raise ValueError("error matrix entries must be 0 or 1")
        if p is None:
            p = [1.0 / len(e)] * len(e)
        if len(p) != len(e):
            raise ValueError("p must have one entry per agent")
        if any(x <= 0.0 for x in p):
            raise ValueError("sampling probabilities must be strictly positive")
        if abs(math.fsum(p) - 1.0) > P_TOLERANCE:
            raise ValueError(f"sampling probabilities must sum to 1, got {math.fsum(p)}")
        return cls(
            e=tuple(tuple(int(x) for x in row) for row in e),
            p=tuple(float(x) for x in p),
        )

    @property
    def n_agents(self) -> int:
        return len(self.e)

    @property
    def n_steps(self) -> int:
        return len(self.e[0])

    def per_agent_errors(self) -> list[int]:
        return [sum(row) for row in self.e]


COUNTEREXAMPLE = ErrorMatrix.create(e=[[0, 1], [1, 0]], p=[0.5, 0.5])


def check_assumptions(matrix: ErrorMatrix) -> tuple[bool, bool]:
    """(coverage, nontrivial): some correct agent per step; no perfect agent."""
    coverage = all(
        any(matrix.e[i][t] == 0 for i in range(matrix.n_agents))
        for t in range(matrix.n_steps)
    )
    nontrivial = all(any(x == 1 for x in row) for row in matrix.e)
    return coverage, nontrivial


def ensemble_expected_error(matrix: ErrorMatrix) -> float:
    """Exactly-rounded sum of p_i * e[i][t] over all agents and steps."""
    return math.fsum(
        matrix.p[i] * matrix.e[i][t]
        for i in range(matrix.n_agents)
        for t in range(matrix.n_steps)
    )


def monte_carlo_verify(
    matrix: ErrorMatrix, trials: int, seed: int
) -> tuple[float, float, float]:
    """Simulate i.i.d. agent sampling; returns (empirical, analytical, stderr).

    Each trial samples one agent per step from p and counts errors. The
    standard error is the exact binomial-sum value sqrt(sum_t q_t(1-q_t) /
    trials) with q_t the per-step error probability; callers typically assert
    |empirical - analytical| <= 4 * stderr.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    e = np.array(matrix.e, dtype=np.int64)
    p = np.array(matrix.p, dtype=np.float64)
    picks = rng.choice(matrix.n_agents, size=(trials, matrix.n_steps), p=p)
    errors = e[picks, np.arange(matrix.n_steps)[None, :]]
    empirical = float(errors.sum(axis=1).mean())
    analytical = ensemble_expected_error(matrix)
    q = p @ e
    stderr = float(np.sqrt(np.sum(q * (1.0 - q)) / trials))
    return empirical, analytical, stderr


def report(matrix: ErrorMatrix, trials: int, seed: int) -> dict:
    """Full JSON-ready report over one matrix."""
    coverage, nontrivial = check_assumptions(matrix)
    empirical, analytical, stderr = monte_carlo_verify(matrix, trials, seed)
    per_agent = matrix.per_agent_errors()
    return {
        "coverage": coverage,
        "nontrivial": nontrivial,
        "analytical": analytical,
        "empirical": empirical,
        "stderr": stderr,
        "per_agent_errors": per_agent,
        "strict_vs_best": analytical < min(per_agent),
        "strict_vs_worst": analytical < max(per_agent),
    }
