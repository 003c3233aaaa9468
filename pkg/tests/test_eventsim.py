"""Per-PE event simulator: exact values, routing discipline, trace format."""

import numpy as np
import pytest

from deconvsim import (FxFormat, LayerDescriptor, builtin_config,
                       deconv_insert_conv, simulate_layer_events)
from deconvsim.errors import TraceLimitError
from deconvsim.eventsim import MeshEventSim
from deconvsim.layers import count_ops
from deconvsim.scheduler import fifo_depth_requirement

CFG2 = builtin_config("table2-2d")
CFG3 = builtin_config("table2-3d")


def _layer(dims, size, k=3, s=2, nc=1, nm=1, p=0):
    size = (size,) * dims if isinstance(size, int) else tuple(size)
    return LayerDescriptor(name="t", dims=dims, in_channels=nc, out_channels=nm,
                           in_size=size, kernel=k, stride=s, crop=p)


def _tensors(layer, rng, span=7):
    x = rng.integers(-span, span + 1, (layer.in_channels,) + layer.in_size)
    w = rng.integers(-span, span + 1,
                     (layer.out_channels, layer.in_channels) + (layer.kernel,) * layer.dims)
    return x, w


CASES = [
    _layer(2, 2),
    _layer(2, 3, k=2, s=1),
    _layer(2, 5, k=3, s=1, nc=2, nm=2),     # multi spatial tile, deep overlap
    _layer(2, 4, k=5, s=2),                 # multi-hop forwarding
    _layer(2, 4, k=3, s=3),                 # K == S, no routing at all
    _layer(3, 2),
    _layer(3, 3, k=4, s=2, nm=3),
    _layer(3, 5, k=2, s=1, nc=2),           # spatial tiling in depth
    _layer(3, 3, k=3, s=2, nc=2, nm=2, p=1),
]


@pytest.mark.parametrize("layer", CASES, ids=[f"case{i}" for i in range(len(CASES))])
def test_values_match_reference(layer):
    rng = np.random.default_rng(7 + layer.kernel + layer.dims)
    cfg = CFG3 if layer.dims == 3 else CFG2
    x, w = _tensors(layer, rng)
    out, stats, _ = simulate_layer_events(layer, cfg, x, w)
    np.testing.assert_array_equal(out, deconv_insert_conv(x, w, layer))
    assert 2 * stats.mac_count == count_ops(layer, mode="valid")


def test_depth_fifo_silent_for_2d():
    rng = np.random.default_rng(21)
    layer = _layer(2, 4, nc=3, nm=2)
    x, w = _tensors(layer, rng)
    _, stats, _ = simulate_layer_events(layer, CFG2, x, w)
    assert stats.max_fifo_occupancy["D"] == 0
    assert stats.fifo_hops > 0


def test_no_routing_when_stride_covers_kernel():
    rng = np.random.default_rng(22)
    layer = _layer(2, 4, k=3, s=3)
    x, w = _tensors(layer, rng)
    _, stats, _ = simulate_layer_events(layer, CFG2, x, w)
    assert stats.routed_elements == 0
    assert stats.fifo_hops == 0
    assert stats.fused_adds == 0


def test_occupancy_within_declared_depth():
    rng = np.random.default_rng(23)
    layer = _layer(3, 4, k=3, s=1)
    x, w = _tensors(layer, rng)
    _, stats, _ = simulate_layer_events(layer, CFG3, x, w)
    cap = fifo_depth_requirement(3, 1, 3) + 27
    assert max(stats.max_fifo_occupancy.values()) <= cap


def test_halo_merges_cross_tile_boundaries():
    rng = np.random.default_rng(24)
    layer = _layer(2, 6)  # 6x6 on a 4x4 mesh, K=3 S=2 overlap
    x, w = _tensors(layer, rng)
    out, stats, _ = simulate_layer_events(layer, CFG2, x, w)
    assert stats.halo_merges > 0
    np.testing.assert_array_equal(out, deconv_insert_conv(x, w, layer))


def test_fixed_point_matches_reference():
    rng = np.random.default_rng(25)
    fx = FxFormat()
    layer = _layer(3, 2, nc=2)
    x = rng.integers(-150, 151, (2, 2, 2, 2))
    w = rng.integers(-150, 151, (1, 2, 3, 3, 3))
    out, stats, _ = simulate_layer_events(layer, CFG3, x, w, fx=fx)
    np.testing.assert_array_equal(out, deconv_insert_conv(x, w, layer, fx=fx))


def test_idle_cycle_only_advances_counter():
    rng = np.random.default_rng(26)
    layer = _layer(2, 2)
    x, w = _tensors(layer, rng)
    sim = MeshEventSim(layer, CFG2, x, w)
    sim.run()
    before = sim.cycle
    sim.advance_cycle()
    assert sim.cycle == before + 1
    assert not sim.pending_work


def test_cycle_limit_enforced():
    rng = np.random.default_rng(27)
    layer = _layer(3, 4, nc=4, nm=4)
    x, w = _tensors(layer, rng)
    with pytest.raises(TraceLimitError):
        simulate_layer_events(layer, CFG3, x, w, cycle_limit=3)


def test_trace_records_staggered_columns():
    rng = np.random.default_rng(28)
    layer = _layer(2, 2)
    x, w = _tensors(layer, rng)
    _, _, trace = simulate_layer_events(layer, CFG2, x, w, trace=True)
    assert any(t.startswith("0, pe(0,0,0), load_a, ch=0") for t in trace)
    assert "0, pe(0,0,0), load_w, k=0" in trace
    # column 0 computes kernel element (0, 0, 0) on cycle 0
    assert any(t.startswith("0, pe(0,0,0), mul, m=0 ch=0 k=(0, 0, 0)")
               for t in trace)
    # column 1 starts one cycle later, while column 0 is on element (0, 0, 1)
    assert "1, pe(0,0,1), load_w, k=0" in trace
    assert any(t.startswith("1, pe(0,0,0), mul, m=0 ch=0 k=(0, 0, 1)")
               for t in trace)
    # cycle 0 emits nothing from the not-yet-loaded column
    assert not any(t.startswith("0, pe(0,0,1),") for t in trace)


def test_trace_off_by_default():
    rng = np.random.default_rng(29)
    layer = _layer(2, 2)
    x, w = _tensors(layer, rng)
    _, _, trace = simulate_layer_events(layer, CFG2, x, w)
    assert trace is None


def test_stats_match_analytic_mac_count():
    rng = np.random.default_rng(30)
    layer = _layer(3, 3, nc=2, nm=3)
    x, w = _tensors(layer, rng)
    from deconvsim import simulate_layer
    _, mesh_stats = simulate_layer(layer, CFG3, x, w)
    _, ev_stats, _ = simulate_layer_events(layer, CFG3, x, w)
    assert ev_stats.mac_count == mesh_stats.mac_count
