"""Categorical random draws inside b-threads.

A choice declares a distribution over values plus optional repeat /
replace / sorted modifiers.  It can be sampled during execution or
expanded into the exact list of (outcome, probability) pairs for
analysis.  Without-replacement draws follow the urn model: sequential
draws with renormalization over the remaining support.
"""

from __future__ import annotations

import random
from typing import Any, Mapping

PROB_SUM_TOL = 1e-9
EXPANSION_TOL = 1e-12
DEFAULT_OUTCOME_CAP = 10**6


class InvalidDistribution(ValueError):
    pass


class SupportTooLarge(RuntimeError):
    pass


class ChoiceSpec:
    """A categorical distribution with repeat/replace/sorted modifiers."""

    def __init__(
        self,
        distribution: Mapping[Any, float],
        repeat: int = 1,
        replace: bool = True,
        sorted: bool = False,
    ):
        if not distribution:
            raise InvalidDistribution("empty distribution")
        probs = list(distribution.values())
        if any(p < 0 for p in probs):
            raise InvalidDistribution("negative probability")
        total = sum(probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise InvalidDistribution(f"probabilities sum to {total}, expected 1")
        if repeat < 1:
            raise InvalidDistribution("repeat must be >= 1")
        support = sum(1 for p in probs if p > 0)
        if not replace and repeat > support:
            raise InvalidDistribution(
                f"repeat={repeat} exceeds positive support of size {support} "
                "without replacement"
            )
        self.distribution = dict(distribution)
        self.repeat = repeat
        self.replace = replace
        self.sorted = sorted

    def __repr__(self) -> str:
        return (
            f"ChoiceSpec({self.distribution!r}, repeat={self.repeat}, "
            f"replace={self.replace}, sorted={self.sorted})"
        )


def sample(spec: ChoiceSpec, rng: random.Random):
    """Draw from the spec. Returns a single value for repeat=1, else a tuple."""
    values = list(spec.distribution.keys())
    weights = [spec.distribution[v] for v in values]
    if spec.repeat == 1:
        return rng.choices(values, weights=weights, k=1)[0]
    draws = []
    if spec.replace:
        draws = rng.choices(values, weights=weights, k=spec.repeat)
    else:
        pool = list(zip(values, weights))
        for _ in range(spec.repeat):
            vs = [v for v, _ in pool]
            ws = [w for _, w in pool]
            pick = rng.choices(range(len(pool)), weights=ws, k=1)[0]
            draws.append(vs[pick])
            del pool[pick]
    if spec.sorted:
        draws = sorted(draws)
    return tuple(draws)


def expand_outcomes(spec: ChoiceSpec, cap: int = DEFAULT_OUTCOME_CAP):
    """Enumerate all outcomes with exact probabilities.

    For repeat=1 this is the distribution itself.  Otherwise outcomes are
    tuples of draws; sorted=True merges order-equivalent sequences by
    summing their probabilities.
    """
    items = [(v, p) for v, p in spec.distribution.items() if p > 0]
    total = sum(p for _, p in items)
    items = [(v, p / total) for v, p in items]
    if spec.repeat == 1:
        return items

    outcomes: list[tuple[tuple, float]] = [((), 1.0)]
    for _ in range(spec.repeat):
        nxt = []
        for prefix, p in outcomes:
            if spec.replace:
                pool = items
                scale = 1.0
            else:
                pool = [(v, q) for v, q in items if v not in prefix]
                scale = sum(q for _, q in pool)
            for v, q in pool:
                nxt.append((prefix + (v,), p * q / (scale if not spec.replace else 1.0)))
        outcomes = nxt
        if len(outcomes) > cap:
            raise SupportTooLarge(f"outcome count exceeds cap of {cap}")

    if spec.sorted:
        merged: dict[tuple, float] = {}
        for seq, p in outcomes:
            key = tuple(sorted(seq))
            merged[key] = merged.get(key, 0.0) + p
        outcomes = list(merged.items())
    return outcomes
