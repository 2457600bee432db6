"""Entropy-modulated reward scoring.

An agent evaluation yields a value estimate z in [0, 1] and a confidence
c in (0, 1). The confidence is read as the success probability of a
Bernoulli variable; its entropy (in nats) down-weights the value estimate:

    r = z * (1 - entropy(c))

Entropy peaks at ln 2 for c = 0.5, so maximal uncertainty scales the value
by 1 - ln 2 (about 0.307) rather than zeroing it; entropy is deliberately
not normalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .agents import EvalResult

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ModulatedReward:
    """Reward after entropy down-weighting, with its provenance."""

    r: float
    entropy: float
    source: EvalResult


def bernoulli_entropy(c: float) -> float:
    """Entropy in nats of a Bernoulli(c) variable, with 0*ln(0) = 0.

    Total on [0, 1]: entropy(0) = entropy(1) = 0, maximum ln 2 at c = 0.5.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"confidence {c!r} outside [0, 1]")
    if c == 0.0 or c == 1.0:
        return 0.0
    return -c * math.log(c) - (1.0 - c) * math.log(1.0 - c)


def entropy_gradient(c: float) -> float:
    """d(entropy)/dc = ln((1-c)/c), defined on the open interval (0, 1)."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"confidence {c!r} outside (0, 1)")
    return math.log((1.0 - c) / c)


def modulate(result: EvalResult) -> ModulatedReward:
    """Down-weight a value estimate by the entropy of its confidence."""
    entropy = bernoulli_entropy(result.c)
    return ModulatedReward(r=result.z * (1.0 - entropy), entropy=entropy, source=result)
