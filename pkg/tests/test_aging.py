"""Electromigration aging: closed forms, damage bookkeeping, timelines."""

import math

import numpy as np
import pytest

from swnoc.aging import (
    AgingParams,
    DamageState,
    FailureTimeline,
    effective_life,
    epoch_measurement,
    failure_timeline,
    lifetime,
    mesh_baseline_edp,
    resistance_increase,
    spare_life_multiplier,
)
from swnoc.errors import NoFailurePossible
from swnoc.netsim import SimConfig
from swnoc.topogen import build_3d_sw
from swnoc.workloads import skewed_middle_traffic


TOY_CFG = SimConfig(
    warmup_cycles=200, measure_cycles=1000, drain_cycles=800, injection_rate=0.06, seed=1
)


def toy_instance(seed=1):
    topo = build_3d_sw(grid_x=2, grid_y=4, dies=2, seed=seed)
    traffic = skewed_middle_traffic(16, dies=2, gap=1, share=0.7, seed=0)
    return topo, traffic


# ---------------------------------------------------------------- closed forms


def test_effective_life_closed_form():
    # R(t) - R0 = A ln(t/t0) reaches delta_fail*R0 at t0 * exp(delta_fail*R0/A)
    p = AgingParams(R0=1.0, A=0.1 / math.log(2.0), t0=100.0, delta_fail=0.1)
    assert effective_life(p) == pytest.approx(200.0, rel=1e-12)
    p = AgingParams(R0=1.0, A=0.1, t0=1.0, delta_fail=0.1)
    assert effective_life(p) == pytest.approx(math.e, rel=1e-12)
    # default A is calibrated so the full-stress life is exactly 5 * t0
    p = AgingParams()
    assert effective_life(p) == pytest.approx(5.0 * p.t0, rel=1e-12)


def test_physical_parameter_overrides():
    p = AgingParams(rho_b=2.0, t_b=0.25, t_cu=3.0, r_tsv=2.0, alpha_f=0.5)
    assert p.A == pytest.approx(2.0 / (4.0 * math.pi * 0.25), rel=1e-12)
    assert p.t0 == pytest.approx(3.0 * math.pi * 4.0 / 0.5, rel=1e-12)
    assert effective_life(p) == pytest.approx(
        p.t0 * math.exp(p.delta_fail * p.R0 / p.A), rel=1e-12
    )


def test_resistance_increase_profile():
    p = AgingParams(R0=1.0, A=0.2, t0=10.0, delta_fail=0.3)
    assert resistance_increase(p, 5.0) == 0.0
    assert resistance_increase(p, 10.0) == 0.0
    assert resistance_increase(p, 20.0) == pytest.approx(0.2 * math.log(2.0), rel=1e-12)
    # at the effective life the growth equals the failure criterion
    assert resistance_increase(p, effective_life(p)) == pytest.approx(
        p.delta_fail * p.R0, rel=1e-12
    )


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        AgingParams(R0=0.0)
    with pytest.raises(ValueError):
        AgingParams(t0=-1.0)
    with pytest.raises(ValueError):
        AgingParams(A=-0.5)


# ------------------------------------------------------- bundle spare model


def test_spare_life_multiplier_values():
    # 16-TSV bundle, crowding 1.0 -> 1.5 linear, spares on the hottest TSVs
    assert spare_life_multiplier(0.0) == pytest.approx(1.0, rel=1e-12)
    assert spare_life_multiplier(0.5) == pytest.approx(
        1.5 / (1.0 + 0.5 * 7.0 / 15.0), rel=1e-12
    )
    assert spare_life_multiplier(0.75) == pytest.approx(1.5 / 1.1, rel=1e-12)
    assert spare_life_multiplier(1.0) == pytest.approx(2.0, rel=1e-12)


def test_spare_life_multiplier_monotone_and_bounded():
    grid = np.linspace(0.0, 1.0, 33)
    vals = [spare_life_multiplier(f) for f in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert all(1.0 <= v <= 2.0 for v in vals)
    with pytest.raises(ValueError):
        spare_life_multiplier(-0.1)
    with pytest.raises(ValueError):
        spare_life_multiplier(1.1)


# ------------------------------------------------------------- damage state


def test_two_link_hand_case():
    p = AgingParams()
    T = effective_life(p)
    st = DamageState(2, p)
    e1 = st.advance([0.5, 0.25])
    assert e1.vl == 1 and e1.what == "failed" and e1.link_removed
    assert e1.time == pytest.approx(2.0 * T, rel=1e-12)
    # link 2 accumulated 0.25 * 2T = T/2 of its budget; at u = 0.25 the rest
    # takes 2T more, so it fails at 4T total
    e2 = st.advance([0.0, 0.25])
    assert e2.vl == 2 and e2.time == pytest.approx(4.0 * T, rel=1e-12)
    assert st.n_alive == 0


def test_tie_breaks_to_lowest_link():
    st = DamageState(3, AgingParams())
    e = st.advance([0.25, 0.5, 0.5])
    assert e.vl == 2


def test_no_failure_possible():
    st = DamageState(2, AgingParams())
    with pytest.raises(NoFailurePossible):
        st.advance([0.0, 0.0])
    # dead links under stress do not count either
    st = DamageState(2, AgingParams())
    st.advance([1.0, 0.0])
    with pytest.raises(NoFailurePossible):
        st.advance([1.0, 0.0])


def test_spare_lifecycle_full_fraction():
    p = AgingParams()
    T = effective_life(p)
    st = DamageState(1, p, allocation={1: 1.0})
    e1 = st.advance([0.5])
    assert e1.what == "spare_activated" and not e1.link_removed
    assert e1.time == pytest.approx(2.0 * T, rel=1e-12)
    assert st.n_alive == 1  # spare keeps the link up
    e2 = st.advance([0.5])
    assert e2.what == "spare_exhausted" and e2.link_removed
    assert e2.time == pytest.approx(4.0 * T, rel=1e-12)
    assert st.n_alive == 0


def test_partial_fraction_budget():
    p = AgingParams()
    T = effective_life(p)
    for frac in (0.5, 0.75):
        st = DamageState(1, p, allocation={1: frac})
        st.advance([1.0])
        e = st.advance([1.0])
        assert e.time == pytest.approx(spare_life_multiplier(frac) * T, rel=1e-12)
    # a zero fraction never arms a spare
    st = DamageState(1, p, allocation={1: 0.0})
    e = st.advance([1.0])
    assert e.what == "failed" and e.time == pytest.approx(T, rel=1e-12)


def test_allocation_bounds_checked():
    with pytest.raises(ValueError):
        DamageState(2, AgingParams(), allocation={3: 1.0})
    with pytest.raises(ValueError):
        DamageState(2, AgingParams(), allocation={0: 1.0})


def test_event_times_scale_with_effective_life():
    # doubling delta_fail (A fixed) stretches every event time by the same
    # exp(delta R0 / A) factor on any fixed utilization trace
    pa = AgingParams(R0=1.0, A=0.5, t0=10.0, delta_fail=0.25)
    pb = AgingParams(R0=1.0, A=0.5, t0=10.0, delta_fail=0.5)
    factor = effective_life(pb) / effective_life(pa)
    trace = [[0.8, 0.3, 0.5], [0.2, 0.7, 0.1], [0.5, 0.5, 0.5]]
    sa, sb = DamageState(3, pa), DamageState(3, pb)
    for u in trace:
        ea, eb = sa.advance(u), sb.advance(u)
        assert eb.vl == ea.vl
        assert eb.time == pytest.approx(factor * ea.time, rel=1e-12)


def test_miner_accumulation_across_epochs():
    p = AgingParams()
    T = effective_life(p)
    st = DamageState(2, p)
    st.advance([1.0, 0.5])  # link 1 dies at T; link 2 is half spent
    e = st.advance([0.0, 1.0])
    assert e.vl == 2 and e.time == pytest.approx(1.5 * T, rel=1e-12)


# -------------------------------------------------------- simulated timelines


def test_failure_timeline_on_toy_network():
    topo, traffic = toy_instance()
    tl = failure_timeline(topo, traffic, TOY_CFG)
    assert tl.events, "links under traffic must eventually fail"
    times = [e.time for e in tl.events]
    assert times == sorted(times)
    assert all(e.what == "failed" for e in tl.events)  # no spares armed
    # the published EDP profile never decreases
    edps = [edp for _, edp in tl.samples if math.isfinite(edp)]
    assert edps == sorted(edps)
    assert tl.samples[-1][1] > edps[0]  # the network degrades overall
    assert tl.edp_at(0.0) == pytest.approx(edps[0])
    assert math.isnan(tl.edp_at(-1.0))


def test_spare_keeps_link_up_and_extends_lifetime():
    topo, traffic = toy_instance()
    cache = {}
    threshold = mesh_baseline_edp(traffic, TOY_CFG, grid=(2, 4, 2))
    bare = failure_timeline(topo, traffic, TOY_CFG, sim_cache=cache)
    first = bare.events[0].vl
    spared = failure_timeline(
        topo, traffic, TOY_CFG, allocation={first: 1.0}, sim_cache=cache
    )
    mine = [e for e in spared.events if e.vl == first]
    assert mine[0].what == "spare_activated" and not mine[0].link_removed
    assert lifetime(spared, threshold) >= lifetime(bare, threshold)


def test_timeline_stop_conditions():
    topo, traffic = toy_instance()
    cache = {}
    tl = failure_timeline(topo, traffic, TOY_CFG, max_failures=2, sim_cache=cache)
    assert len(tl.events) == 2
    full = failure_timeline(topo, traffic, TOY_CFG, sim_cache=cache)
    cut = full.events[0].time + 1.0
    tl = failure_timeline(topo, traffic, TOY_CFG, horizon=cut, sim_cache=cache)
    assert len(tl.events) == 1 and tl.horizon == cut
    stop = full.samples[1][1]  # EDP right after the first failure
    tl = failure_timeline(topo, traffic, TOY_CFG, stop_edp=stop, sim_cache=cache)
    assert tl.samples[-1][1] >= stop and len(tl.events) <= len(full.events)


def test_shared_sim_cache_reuses_epochs():
    topo, traffic = toy_instance()
    cache = {}
    tl1 = failure_timeline(topo, traffic, TOY_CFG, sim_cache=cache)
    size = len(cache)
    tl2 = failure_timeline(topo, traffic, TOY_CFG, sim_cache=cache)
    assert len(cache) == size  # identical run resolved entirely from cache
    assert tl2.samples == tl1.samples


def test_epoch_measurement_reports_per_link_utilization():
    topo, traffic = toy_instance()
    n_vl = len(topo.vertical_links)
    edp, u = epoch_measurement(topo, traffic, TOY_CFG)
    assert edp > 0 and u.shape == (n_vl,) and np.all(u >= 0)
    alive = np.ones(n_vl, dtype=bool)
    alive[0] = False
    _, u2 = epoch_measurement(topo, traffic, TOY_CFG, alive=alive)
    assert u2[0] == 0.0


def test_mesh_baseline_is_positive_and_above_small_world():
    topo, traffic = toy_instance()
    threshold = mesh_baseline_edp(traffic, TOY_CFG, grid=(2, 4, 2))
    edp, _ = epoch_measurement(topo, traffic, TOY_CFG)
    assert threshold > 0
    assert edp < threshold  # the small-world design starts below its threshold


# ------------------------------------------------------------------ lifetime


def test_lifetime_edges():
    tl = FailureTimeline(samples=[(0.0, 5.0), (10.0, 8.0), (20.0, 12.0)])
    assert lifetime(tl, 9.0) == 20.0
    assert lifetime(tl, 8.0) == 10.0  # crossing means meeting or exceeding
    assert lifetime(tl, 100.0) == math.inf
    assert lifetime(tl, 1.0) == 0.0
