"""Optimal caching probabilities: an exact fractional-knapsack solve.

The cache placement LP (minimize uncached popularity mass subject to the
capacity budget and box bounds) is solved by greedy loading in decreasing
popularity-per-byte order, which is optimal for this structure; optimality is
certified through the knapsack dual price.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import CacheConfig


@dataclass(frozen=True)
class CacheSolution:
    e: np.ndarray          # placement in [0, 1] per file
    objective: float       # sum_v (1 - e_v) * c_v
    dual_price: float      # marginal popularity per unit of capacity
    duality_gap: float     # certified optimality gap (should be ~0)


def zipf_popularity(n_files: int, skew: float) -> np.ndarray:
    """Request probabilities c_v = v^-skew / sum_i i^-skew, v = 1..V."""
    if n_files < 1:
        raise ValueError("n_files must be >= 1")
    ranks = np.arange(1, n_files + 1, dtype=float)
    weights = ranks ** (-skew)
    return weights / weights.sum()


def solve_caching(cache_cfg: CacheConfig) -> CacheSolution:
    """Exact LP optimum with at most one fractional placement.

    Ties in popularity-per-byte are broken toward the smaller file index so
    the result is deterministic.
    """
    c = zipf_popularity(cache_cfg.n_files, cache_cfg.skew)
    q = cache_cfg.lengths_array()
    cap = float(cache_cfg.capacity)

    order = np.argsort(-c / q, kind="stable")
    e = np.zeros_like(c)
    remaining = cap
    marginal = 0.0
    for v in order:
        if remaining <= 0.0:
            break
        if q[v] <= remaining:
            e[v] = 1.0
            remaining -= q[v]
        else:
            e[v] = remaining / q[v]
            marginal = c[v] / q[v]
            remaining = 0.0
            break
    if remaining > 0.0:
        marginal = 0.0          # capacity not binding
    elif marginal == 0.0:
        # exactly full with integral placements: price of the next-best file
        loaded = e >= 1.0
        leftover = ~loaded
        marginal = float(np.max(c[leftover] / q[leftover])) if leftover.any() else 0.0

    objective = float((1.0 - e) @ c)
    # LP duality on the equivalent max-form: value(mu) = mu*F + sum max(0, c - mu q)
    gained = float(e @ c)
    dual_value = marginal * cap + float(np.maximum(0.0, c - marginal * q).sum())
    gap = dual_value - gained
    return CacheSolution(e=e, objective=objective, dual_price=marginal, duality_gap=gap)


def random_caching(cache_cfg: CacheConfig, rng: np.random.Generator) -> np.ndarray:
    """Popularity-proportional random 0/1 placement under the capacity budget."""
    c = zipf_popularity(cache_cfg.n_files, cache_cfg.skew)
    q = cache_cfg.lengths_array()
    e = np.zeros_like(c)
    remaining = float(cache_cfg.capacity)
    available = np.ones(len(c), dtype=bool)
    while True:
        fits = available & (q <= remaining)
        if not fits.any():
            break
        probs = np.where(fits, c, 0.0)
        probs /= probs.sum()
        v = int(rng.choice(len(c), p=probs))
        e[v] = 1.0
        available[v] = False
        remaining -= q[v]
    return e
