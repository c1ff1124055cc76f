"""Synthetic traffic matrices: uniform, hotspot, and skewed-middle patterns.

Stand-ins for application traces.  ``skewed_middle`` concentrates a chosen
share of all traffic on core pairs whose communication must cross one
inter-die gap, reproducing workloads that hammer the middle vertical links.
All generators are seeded and return valid :class:`TrafficProfile` objects.
"""

from __future__ import annotations

import numpy as np

from .model import TrafficProfile

__all__ = ["uniform_traffic", "hotspot_traffic", "skewed_middle_traffic", "synth_traffic"]


def uniform_traffic(n=64, volume=1.0):
    """Equal demand between every ordered pair of distinct cores."""
    f = np.full((n, n), volume, dtype=np.float64)
    np.fill_diagonal(f, 0.0)
    return TrafficProfile(f)


def hotspot_traffic(n=64, k=4, ratio=20.0, seed=0, volume=1.0):
    """Uniform background with ``k`` seeded pairs at ``ratio`` times it."""
    if k < 1 or k > n * (n - 1):
        raise ValueError("k must name between 1 and n(n-1) ordered pairs")
    rng = np.random.default_rng(seed)
    f = np.full((n, n), volume, dtype=np.float64)
    np.fill_diagonal(f, 0.0)
    flat = [(i, j) for i in range(n) for j in range(n) if i != j]
    picks = rng.choice(len(flat), size=k, replace=False)
    for p in picks:
        i, j = flat[p]
        f[i, j] = ratio * volume
    return TrafficProfile(f)


def skewed_middle_traffic(n=64, dies=4, gap=2, share=0.7, seed=0, jitter=0.25):
    """Concentrate ``share`` of all traffic on pairs crossing one die gap.

    ``gap`` is 1-based: gap g separates die g-1 from die g, so gap 2 of a
    four-die stack is the middle boundary.  Crossing pairs split ``share`` of
    the total volume (with multiplicative jitter for instance variety);
    everything else shares the remainder uniformly.
    """
    if n % dies:
        raise ValueError("n must be divisible by the die count")
    if not 1 <= gap <= dies - 1:
        raise ValueError(f"gap must lie in 1..{dies - 1}")
    if not 0.0 < share < 1.0:
        raise ValueError("share must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    per_die = n // dies
    die_of = np.arange(n) // per_die
    above = die_of >= gap
    crossing = above[:, None] != above[None, :]
    np.fill_diagonal(crossing, False)
    f = np.zeros((n, n))
    weights = 1.0 + jitter * rng.random(int(crossing.sum()))
    f[crossing] = weights / weights.sum() * share
    rest = ~crossing
    np.fill_diagonal(rest, False)
    f[rest] = (1.0 - share) / rest.sum()
    return TrafficProfile(f)


def synth_traffic(kind, n=64, seed=0, **kw):
    """Build a traffic matrix from a named pattern.

    ``kind`` is "uniform", "hotspot" (options k, ratio), or "skewed"
    (options dies, gap, share).
    """
    if kind == "uniform":
        return uniform_traffic(n)
    if kind == "hotspot":
        return hotspot_traffic(n, seed=seed, **kw)
    if kind in ("skewed", "skewed-middle"):
        return skewed_middle_traffic(n, seed=seed, **kw)
    raise ValueError(f"unknown traffic kind {kind!r}")
