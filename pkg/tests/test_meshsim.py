"""Mesh simulator: value exactness against references, cycle accounting."""

import numpy as np
import pytest

from deconvsim import (FxFormat, LayerDescriptor, adder_tree_reduce,
                       builtin_config, deconv_insert_conv, simulate_layer)
from deconvsim.errors import (AccumulatorOverflowError, ConfigError,
                              ShapeMismatchError)

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


def test_single_stamp_macs():
    _, stats = simulate_layer(_layer(3, 1), CFG3)
    assert stats.mac_count == 27
    assert stats.tiles == 1


def test_2d_values_match_reference():
    rng = np.random.default_rng(11)
    layer = _layer(2, 4, nc=2, nm=2)
    x, w = _tensors(layer, rng)
    out, stats = simulate_layer(layer, CFG2, x, w)
    np.testing.assert_array_equal(out, deconv_insert_conv(x, w, layer))
    assert stats.mac_count == 2 * 2 * 16 * 9


def test_3d_values_and_overlap_messages():
    rng = np.random.default_rng(12)
    layer = _layer(3, 3)
    x, w = _tensors(layer, rng)
    out, stats = simulate_layer(layer, CFG3, x, w)
    np.testing.assert_array_equal(out, deconv_insert_conv(x, w, layer))
    assert stats.overlap_messages == 54


def test_multi_tile_values_match_reference():
    rng = np.random.default_rng(13)
    layer = _layer(3, 6, k=4, s=3, nc=20, nm=3, p=1)
    x, w = _tensors(layer, rng)
    out, stats = simulate_layer(layer, CFG3, x, w)
    np.testing.assert_array_equal(out, deconv_insert_conv(x, w, layer))
    assert stats.tiles == 2 * 8 * 2  # m=ceil(3/2), sp=2^3, n=ceil(20/16)


def test_2d_layer_identical_on_both_mesh_shapes():
    rng = np.random.default_rng(14)
    layer = _layer(2, 5, nc=3, nm=3)
    x, w = _tensors(layer, rng)
    out_a, stats_a = simulate_layer(layer, CFG3, x, w)
    out_b, stats_b = simulate_layer(layer, CFG2, x, w)
    np.testing.assert_array_equal(out_a, out_b)
    assert stats_a.mac_count == stats_b.mac_count


def test_fixed_point_matches_reference():
    rng = np.random.default_rng(15)
    fx = FxFormat()
    layer = _layer(3, 2, nc=2, nm=2)
    x = rng.integers(-200, 201, (2,) + layer.in_size)
    w = rng.integers(-200, 201, (2, 2, 3, 3, 3))
    out, stats = simulate_layer(layer, CFG3, x, w, fx=fx)
    ref = deconv_insert_conv(x, w, layer, fx=fx)
    np.testing.assert_array_equal(out, ref)
    assert out.dtype == np.int64


def test_breakdown_sums_to_total():
    for layer in (_layer(3, 6, nc=20, nm=5), _layer(2, 9, nc=70, nm=3, p=1)):
        cfg = CFG3 if layer.dims == 3 else CFG2
        _, stats = simulate_layer(layer, cfg)
        assert stats.total_cycles == sum(stats.breakdown.values())
        assert stats.breakdown["compute"] == stats.compute_cycles
        assert stats.breakdown["stall"] == stats.stall_cycles


def test_stats_only_run_matches_full_run():
    rng = np.random.default_rng(16)
    layer = _layer(3, 4, nc=6, nm=4)
    x, w = _tensors(layer, rng)
    out, full = simulate_layer(layer, CFG3, x, w)
    none_out, bare = simulate_layer(layer, CFG3)
    assert none_out is None
    assert out is not None
    for name in ("total_cycles", "compute_cycles", "stall_cycles",
                 "mac_count", "overlap_messages", "tiles"):
        assert getattr(full, name) == getattr(bare, name)


def test_deterministic_stats():
    layer = _layer(3, 5, nc=18, nm=3)
    _, a = simulate_layer(layer, CFG3)
    _, b = simulate_layer(layer, CFG3)
    assert a == b


def test_edge_tiles_cost_full_pass():
    # 5^3 input on a 4^3 mesh: eight blocks, seven of them partial
    layer = _layer(3, 5)
    _, stats = simulate_layer(layer, CFG3)
    pass_cycles = 27 + 2 * CFG3.t_c
    assert stats.compute_cycles == stats.tiles * pass_cycles


def test_overlap_add_cycles_charge():
    layer = _layer(3, 4)
    _, base = simulate_layer(layer, CFG3)
    _, slow = simulate_layer(layer, CFG3, overlap_add_cycles=2)
    per_tile = 2 * (27 - 8)
    assert slow.compute_cycles == base.compute_cycles + base.tiles * per_tile
    assert slow.total_cycles > base.total_cycles


def test_negative_overlap_add_rejected():
    with pytest.raises(ConfigError):
        simulate_layer(_layer(2, 2), CFG2, overlap_add_cycles=-1)


def test_accumulator_overflow_detected():
    fx = FxFormat(accumulator_bits=32)
    layer = _layer(3, 1, nc=4)
    x = np.full((4, 1, 1, 1), 30000, dtype=np.int64)
    w = np.full((1, 4, 3, 3, 3), 30000, dtype=np.int64)
    with pytest.raises(AccumulatorOverflowError):
        simulate_layer(layer, CFG3, x, w, fx=fx)
    out, _ = simulate_layer(layer, CFG3, x, w, fx=fx, check_overflow=False)
    assert out.shape == (1, 3, 3, 3)


def test_tensor_argument_pairing():
    layer = _layer(2, 2)
    x = np.zeros((1, 2, 2), dtype=np.int64)
    with pytest.raises(ShapeMismatchError):
        simulate_layer(layer, CFG2, x, None)
    with pytest.raises(ShapeMismatchError):
        simulate_layer(layer, CFG2, x.astype(float), np.zeros((1, 1, 3, 3)))


def test_adder_tree_reduce():
    assert adder_tree_reduce([5]) == 5
    assert adder_tree_reduce(list(range(16))) == 120
    rng = np.random.default_rng(17)
    v = rng.integers(-100, 100, 64)
    assert adder_tree_reduce(v) == int(v.sum())
    with pytest.raises(ConfigError):
        adder_tree_reduce([1, 2, 3])


def test_adder_tree_reduces_rows():
    m = np.arange(8 * 3).reshape(8, 3)
    np.testing.assert_array_equal(adder_tree_reduce(m), m.sum(axis=0))
