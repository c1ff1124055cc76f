"""Spare-vertical-link allocation search.

A spare can be armed on each functional vertical link; when the functional
conductor bundle fails, the spare takes over and the link keeps carrying
traffic on a fresh stress budget.  Given a budget of ``n`` spares over ``m``
functional links, the searches below pick the subset that maximizes chip
lifetime as judged by a black-box evaluator (normally an aging-driven
simulation, any object with an ``evaluate(solution) -> lifetime`` method
works).  Searches report exact evaluator-call counts; greedy makes
``n*m - n*(n-1)/2`` calls, exhaustive enumerates binomially many and refuses
beyond a configured cap.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .aging import (
    AgingParams,
    epoch_measurement,
    failure_timeline,
    lifetime as timeline_lifetime,
    DEFAULT_BUNDLE,
)
from .errors import SearchSpaceTooLarge
from .netsim import EnergyParams, SimConfig

__all__ = [
    "AllocationSolution",
    "SearchStats",
    "LifetimeEvaluator",
    "greedy_allocate",
    "exhaustive_allocate",
    "static_allocate",
    "saturation_sweep",
    "SweepResult",
    "critical_set",
    "prune_equivalence_check",
    "filter_zero_utilization",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AllocationSolution:
    """A set of spared vertical links with per-member spare fractions.

    ``members`` are sorted 1-based vertical-link numbers; ``fractions`` is
    parallel to it (1.0 = a full spare bundle).
    """

    members: tuple = ()
    fractions: tuple = ()

    def __post_init__(self):
        members = tuple(sorted(int(v) for v in self.members))
        fractions = tuple(float(f) for f in self.fractions)
        if not fractions:
            fractions = (1.0,) * len(members)
        if len(fractions) != len(members):
            raise ValueError("fractions must be given per member")
        if len(set(members)) != len(members):
            raise ValueError("duplicate vertical link in allocation")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "fractions", fractions)

    @classmethod
    def uniform(cls, members, fraction=1.0):
        members = tuple(sorted(int(v) for v in members))
        return cls(members, (float(fraction),) * len(members))

    def as_mapping(self):
        return dict(zip(self.members, self.fractions))

    def __len__(self):
        return len(self.members)


@dataclass
class SearchStats:
    """Evaluator accounting for one search run.

    ``simulator_calls`` counts evaluator invocations made by the search;
    ``memo_hits`` of those were answered from the evaluator's cache;
    ``q_estimate`` is mean wall seconds per invocation.
    """

    simulator_calls: int = 0
    memo_hits: int = 0
    wall_time_s: float = 0.0
    q_estimate: float = 0.0


class _StatsScope:
    """Counts evaluator invocations and wall time for one search."""

    def __init__(self, evaluator):
        self.evaluator = evaluator
        self.stats = SearchStats()
        self._hits0 = getattr(evaluator, "memo_hits", 0)
        self._t0 = time.perf_counter()

    def evaluate(self, solution):
        self.stats.simulator_calls += 1
        return self.evaluator.evaluate(solution)

    def done(self):
        self.stats.wall_time_s = time.perf_counter() - self._t0
        self.stats.memo_hits = getattr(self.evaluator, "memo_hits", 0) - self._hits0
        if self.stats.simulator_calls:
            self.stats.q_estimate = self.stats.wall_time_s / self.stats.simulator_calls
        return self.stats


class LifetimeEvaluator:
    """Aging-driven lifetime of a spare allocation, memoized per solution.

    Runs :func:`swnoc.aging.failure_timeline` with the solution's spares
    armed and reads off the first time EDP meets ``threshold_edp``.  Epoch
    simulations are cached on the surviving link set and shared across
    solutions, so overlapping timelines cost little.
    """

    def __init__(
        self,
        topology,
        traffic,
        threshold_edp,
        sim_config=None,
        energy=None,
        aging_params=None,
        horizon=math.inf,
        max_failures=None,
        bundle=DEFAULT_BUNDLE,
        memoize=True,
    ):
        self.topology = topology
        self.traffic = traffic
        self.threshold_edp = float(threshold_edp)
        self.sim_config = sim_config or SimConfig()
        self.energy = energy or EnergyParams()
        self.aging_params = aging_params or AgingParams()
        self.horizon = horizon
        self.max_failures = max_failures
        self.bundle = bundle
        self.memoize = memoize
        self.memo_hits = 0
        self._memo = {}
        self._sim_cache = {}

    @property
    def n_vl(self):
        return len(self.topology.vertical_links)

    def _key(self, solution):
        return (solution.members, solution.fractions)

    def _run(self, solution):
        tl = failure_timeline(
            self.topology,
            self.traffic,
            self.sim_config,
            self.energy,
            self.aging_params,
            allocation=solution.as_mapping(),
            horizon=self.horizon,
            max_failures=self.max_failures,
            stop_edp=self.threshold_edp,
            bundle=self.bundle,
            sim_cache=self._sim_cache,
        )
        return timeline_lifetime(tl, self.threshold_edp), tl

    def evaluate(self, solution):
        key = self._key(solution)
        if self.memoize and key in self._memo:
            self.memo_hits += 1
            return self._memo[key][0]
        value = self._run(solution)
        if self.memoize:
            self._memo[key] = value
        return value[0]

    def timeline(self, solution):
        key = self._key(solution)
        if self.memoize and key in self._memo:
            return self._memo[key][1]
        value = self._run(solution)
        if self.memoize:
            self._memo[key] = value
        return value[1]

    def first_failure_cached(self, solution):
        """First failing link of a solution already evaluated, else None."""
        hit = self._memo.get(self._key(solution))
        if hit is None or not hit[1].events:
            return None
        return hit[1].events[0].vl

    def base_measurement(self):
        """(EDP, per-link utilization) of the intact network at t = 0."""
        return epoch_measurement(
            self.topology,
            self.traffic,
            self.sim_config,
            self.energy,
            sim_cache=self._sim_cache,
        )


def _candidate_pool(pool, restrict_to, n):
    pool = tuple(sorted(int(v) for v in pool))
    if len(set(pool)) != len(pool):
        raise ValueError("duplicate vertical link in pool")
    if restrict_to is not None:
        restricted = tuple(sorted(int(v) for v in restrict_to))
        if not set(restricted) <= set(pool):
            raise ValueError("restricted pool must be a subset of the functional pool")
        pool = restricted
    if n > len(pool):
        raise ValueError(f"cannot place {n} spares over {len(pool)} candidate links")
    return pool


def greedy_allocate(pool, n, evaluator, restrict_to=None, fraction=1.0):
    """Grow the spare set one best link at a time.

    Each step evaluates every remaining candidate joined to the current set
    and keeps the best lifetime, ties to the lowest link number.  Returns the
    solution and exact evaluator-call statistics.
    """
    cands = _candidate_pool(pool, restrict_to, n)
    scope = _StatsScope(evaluator)
    chosen = []
    for _ in range(n):
        current = AllocationSolution.uniform(chosen, fraction)
        expected = None
        if hasattr(evaluator, "first_failure_cached"):
            expected = evaluator.first_failure_cached(current)
        best = None
        for x in cands:
            if x in chosen:
                continue
            val = scope.evaluate(AllocationSolution.uniform(chosen + [x], fraction))
            rank = (val, -x)
            if best is None or rank > best[0]:
                best = (rank, x)
        chosen.append(best[1])
        if expected is not None and expected in cands:
            if best[1] == expected:
                logger.info("greedy step picked the first-failing link %d", expected)
            else:
                logger.warning(
                    "greedy step picked link %d, not the first-failing link %d",
                    best[1],
                    expected,
                )
    return AllocationSolution.uniform(chosen, fraction), scope.done()


def exhaustive_allocate(pool, n, evaluator, restrict_to=None, fraction=1.0, cap=10**6):
    """Evaluate every n-subset of the candidate pool.

    Refuses with :class:`SearchSpaceTooLarge` (carrying the exact binomial
    count) when there are more than ``cap`` subsets.  Ties keep the
    lexicographically smallest member set.
    """
    cands = _candidate_pool(pool, restrict_to, n)
    count = math.comb(len(cands), n)
    if count > cap:
        raise SearchSpaceTooLarge(
            f"{count} candidate subsets exceed the cap of {cap}",
            space_size=count,
            cap=cap,
        )
    scope = _StatsScope(evaluator)
    best = None
    for combo in itertools.combinations(cands, n):
        val = scope.evaluate(AllocationSolution.uniform(combo, fraction))
        if best is None or val > best[0]:  # strict: first (smallest) set wins ties
            best = (val, combo)
    return AllocationSolution.uniform(best[1], fraction), scope.done()


def static_allocate(vl_utilization, n, fraction=1.0):
    """Spare the n busiest links as measured on the intact network at t = 0.

    Makes no evaluator calls; ties go to the lowest link number.
    """
    u = np.asarray(vl_utilization, dtype=np.float64)
    if n > len(u):
        raise ValueError(f"cannot place {n} spares over {len(u)} links")
    order = np.lexsort((np.arange(len(u)), -u))
    return AllocationSolution.uniform((order[:n] + 1).tolist(), fraction)


def critical_set(vl_utilization, h=16):
    """The h highest-utilization link numbers (the restricted search pool)."""
    u = np.asarray(vl_utilization, dtype=np.float64)
    h = min(h, len(u))
    order = np.lexsort((np.arange(len(u)), -u))
    return tuple(sorted(int(k) + 1 for k in order[:h]))


@dataclass
class SweepResult:
    """Greedy lifetimes per spare count and the saturation point.

    ``lifetimes[k]`` is the lifetime with k spares (index 0 = unspared);
    ``gains[k]`` is the relative gain of k spares over k-1 (index 0 unused).
    ``order`` lists the links in greedy pick order, so the first n entries
    form the n-spare solution.  ``n_star`` is the smallest count beyond which
    every further spare gains less than ``gain_threshold``.
    """

    lifetimes: list
    gains: list
    n_star: int
    order: list
    fraction: float
    stats: SearchStats
    gain_threshold: float = 0.01

    def solution_at(self, n):
        return AllocationSolution.uniform(self.order[:n], self.fraction)


def saturation_sweep(pool, n_max, evaluator, fraction=1.0, gain_threshold=0.01):
    """One incremental greedy run recording lifetime after each added spare.

    Greedy solutions nest, so a single pass to ``n_max`` yields the whole
    lifetime-vs-n curve.  The saturation point ``n_star`` is the smallest n
    such that every subsequent spare improves lifetime by less than
    ``gain_threshold`` (relative).
    """
    cands = _candidate_pool(pool, None, n_max)
    scope = _StatsScope(evaluator)
    lifetimes = [scope.evaluate(AllocationSolution.uniform((), fraction))]
    chosen = []
    for _ in range(n_max):
        best = None
        for x in cands:
            if x in chosen:
                continue
            val = scope.evaluate(AllocationSolution.uniform(chosen + [x], fraction))
            rank = (val, -x)
            if best is None or rank > best[0]:
                best = (rank, x)
        chosen.append(best[1])
        lifetimes.append(best[0][0])
    gains = [0.0]
    for k in range(1, len(lifetimes)):
        prev, cur = lifetimes[k - 1], lifetimes[k]
        if prev > 0 and math.isfinite(prev):
            gains.append((cur - prev) / prev)
        else:
            gains.append(math.inf if cur > prev else 0.0)
    n_star = 0
    for k in range(1, len(gains)):
        if gains[k] >= gain_threshold:
            n_star = k
    return SweepResult(
        lifetimes=lifetimes,
        gains=gains,
        n_star=n_star,
        order=list(chosen),
        fraction=fraction,
        stats=scope.done(),
        gain_threshold=gain_threshold,
    )


def prune_equivalence_check(pool, restricted, n, evaluator):
    """True iff restricting the pool loses nothing on this instance.

    Compares greedy-with-restriction against greedy-on-everything and
    exhaustive-with-restriction against exhaustive-on-everything; all four
    runs must agree on the achieved lifetime.
    """
    g_full, _ = greedy_allocate(pool, n, evaluator)
    g_res, _ = greedy_allocate(pool, n, evaluator, restrict_to=restricted)
    e_full, _ = exhaustive_allocate(pool, n, evaluator)
    e_res, _ = exhaustive_allocate(pool, n, evaluator, restrict_to=restricted)
    vg_full = evaluator.evaluate(g_full)
    vg_res = evaluator.evaluate(g_res)
    ve_full = evaluator.evaluate(e_full)
    ve_res = evaluator.evaluate(e_res)
    return vg_full == vg_res and ve_full == ve_res


def filter_zero_utilization(pool, vl_utilization):
    """Drop candidate links that carry no traffic on the intact network.

    Heuristic pruning: a link idle at t = 0 can still matter after re-routing,
    so this may change search results; it is never applied automatically.
    """
    warnings.warn(
        "dropping zero-utilization links is a heuristic prune and may "
        "exclude links that matter after re-routing",
        UserWarning,
        stacklevel=2,
    )
    u = np.asarray(vl_utilization, dtype=np.float64)
    return tuple(v for v in pool if u[v - 1] > 0.0)
