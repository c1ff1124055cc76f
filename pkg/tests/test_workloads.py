"""Synthetic traffic generators: uniform, hotspot, die-gap skew."""

import numpy as np
import pytest

from swnoc.netsim import SimConfig, simulate
from swnoc.topogen import build_3d_sw, build_mesh
from swnoc.workloads import (
    hotspot_traffic,
    skewed_middle_traffic,
    synth_traffic,
    uniform_traffic,
)


def test_uniform_traffic():
    t = uniform_traffic(64, volume=2.0)
    assert t.f.shape == (64, 64)
    assert np.all(np.diag(t.f) == 0.0)
    off = t.f[~np.eye(64, dtype=bool)]
    assert off.size == 64 * 63 == 4032
    assert np.all(off == 2.0)


def test_hotspot_traffic():
    t = hotspot_traffic(64, k=4, ratio=20.0, seed=3, volume=1.0)
    off = t.f[~np.eye(64, dtype=bool)]
    assert int((off == 20.0).sum()) == 4  # exactly k seeded pairs
    assert int((off == 1.0).sum()) == 4032 - 4
    again = hotspot_traffic(64, k=4, ratio=20.0, seed=3, volume=1.0)
    assert np.array_equal(t.f, again.f)
    other = hotspot_traffic(64, k=4, ratio=20.0, seed=4, volume=1.0)
    assert not np.array_equal(t.f, other.f)
    with pytest.raises(ValueError):
        hotspot_traffic(8, k=0)
    with pytest.raises(ValueError):
        hotspot_traffic(8, k=8 * 7 + 1)


def test_skewed_traffic_share_is_exact():
    t = skewed_middle_traffic(64, dies=4, gap=2, share=0.7, seed=5)
    die = np.arange(64) // 16
    crossing = (die[:, None] < 2) != (die[None, :] < 2)
    assert t.f[crossing].sum() / t.f.sum() == pytest.approx(0.7, rel=1e-12)
    assert np.all(np.diag(t.f) == 0.0)
    assert np.all(t.f[~np.eye(64, dtype=bool)] > 0.0)
    # jitter differentiates the crossing pairs without changing the share
    assert len(np.unique(t.f[crossing])) > 1
    again = skewed_middle_traffic(64, dies=4, gap=2, share=0.7, seed=5)
    assert np.array_equal(t.f, again.f)


def test_skewed_traffic_validation():
    with pytest.raises(ValueError):
        skewed_middle_traffic(63, dies=4)
    with pytest.raises(ValueError):
        skewed_middle_traffic(64, dies=4, gap=0)
    with pytest.raises(ValueError):
        skewed_middle_traffic(64, dies=4, gap=4)
    with pytest.raises(ValueError):
        skewed_middle_traffic(64, dies=4, share=1.0)


def test_synth_traffic_dispatch():
    assert np.array_equal(synth_traffic("uniform", 8).f, uniform_traffic(8).f)
    assert np.array_equal(
        synth_traffic("hotspot", 16, seed=2, k=3).f,
        hotspot_traffic(16, k=3, seed=2).f,
    )
    assert np.array_equal(
        synth_traffic("skewed", 64, seed=1, gap=2).f,
        skewed_middle_traffic(64, gap=2, seed=1).f,
    )
    with pytest.raises(ValueError):
        synth_traffic("bursty")


def middle_gap_share(topology, result):
    u = result.vl_utilization
    mid = [
        k
        for k, lk in enumerate(topology.vertical_links)
        if min(lk.ends) // 16 == 1  # links spanning the middle die gap
    ]
    return u[mid].sum() / u.sum()


@pytest.mark.parametrize(
    "topology", [build_mesh(), build_3d_sw(seed=1)], ids=["mesh", "small-world"]
)
def test_skewed_traffic_loads_middle_gap_links(topology):
    traffic = skewed_middle_traffic(64, dies=4, gap=2, share=0.7, seed=0)
    cfg = SimConfig(
        warmup_cycles=500, measure_cycles=2000, drain_cycles=2000,
        injection_rate=0.05, seed=1,
    )
    result = simulate(topology, traffic, cfg)
    # 16 of 48 vertical links span the stressed gap yet carry > 40% of the load
    assert middle_gap_share(topology, result) > 0.40
