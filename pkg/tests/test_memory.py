"""DDR traffic accounting and transfer/compute overlap."""

import pytest

from deconvsim import (LayerDescriptor, builtin_config, layer_traffic,
                       overlap_transfer_compute, transfer_cycles)
from deconvsim.errors import ConfigError
from deconvsim.memory import bytes_per_cycle, input_is_resident


def _layer(dims, size, k=3, s=2, nc=1, nm=1):
    size = (size,) * dims if isinstance(size, int) else tuple(size)
    return LayerDescriptor(name="t", dims=dims, in_channels=nc, out_channels=nm,
                           in_size=size, kernel=k, stride=s)


CFG3 = builtin_config("table2-3d")


def test_bytes_per_cycle():
    assert bytes_per_cycle(CFG3) == pytest.approx(128.0)
    assert bytes_per_cycle(CFG3, derated=True) == pytest.approx(102.4)


def test_transfer_cycles():
    assert transfer_cycles(0, CFG3) == 0
    assert transfer_cycles(1, CFG3) == 1
    assert transfer_cycles(128, CFG3) == 1
    assert transfer_cycles(129, CFG3) == 2
    assert transfer_cycles(1 << 20, CFG3) == 8192
    with pytest.raises(ConfigError):
        transfer_cycles(-1, CFG3)


def test_minimal_layer_byte_counts():
    # one voxel, one input and output channel, 3x3x3 kernel, 16-bit words
    tr = layer_traffic(_layer(3, 1), CFG3)
    assert tr.input_bytes == 2
    assert tr.weight_bytes == 54
    assert tr.output_bytes == 54
    assert tr.refetch_factor == 1
    assert tr.input_resident


def test_weight_bytes_scale_with_channels():
    tr = layer_traffic(_layer(3, 1, nc=4, nm=6), CFG3)
    assert tr.weight_bytes == 4 * 6 * 27 * 2


def test_output_bytes_follow_crop():
    layer = LayerDescriptor(name="t", dims=2, in_channels=1, out_channels=1,
                            in_size=(4, 4), kernel=3, stride=2, crop=1)
    tr = layer_traffic(layer, builtin_config("table2-2d"))
    assert tr.output_bytes == 7 * 7 * 2  # (4-1)*2+3 = 9, minus 1 each side


def test_refetch_factor_when_input_exceeds_buffer():
    cfg = CFG3
    # big enough that spatial * Nc * 2B > input buffer
    nc = 8
    side = 1
    while side**3 * nc * cfg.word_bytes <= cfg.input_buf_bytes:
        side *= 2
    layer = _layer(3, side, nc=nc, nm=4 * cfg.t_m)
    assert not input_is_resident(layer, cfg)
    tr = layer_traffic(layer, cfg)
    assert tr.refetch_factor == 4
    assert tr.input_bytes == side**3 * nc * cfg.word_bytes * 4


def test_resident_input_read_once_across_m_tiles():
    layer = _layer(3, 4, nc=4, nm=4 * CFG3.t_m)
    assert input_is_resident(layer, CFG3)
    tr = layer_traffic(layer, CFG3)
    assert tr.refetch_factor == 1
    assert tr.input_bytes == 4**3 * 4 * 2


def test_overlap_uniform_tiles():
    total, stalls = overlap_transfer_compute(90, 100, 10)
    assert (total, stalls) == (1100, 100)


def test_overlap_transfer_hidden_when_compute_dominates():
    total, stalls = overlap_transfer_compute(100, 90, 10)
    assert stalls == 0
    assert total == 90 + 10 * 100


def test_overlap_balanced_no_stall():
    total, stalls = overlap_transfer_compute(100, 100, 5)
    assert stalls == 0
    assert total == 100 + 5 * 100


def test_overlap_sequences():
    total, stalls = overlap_transfer_compute([50, 60, 70], [40, 80, 70])
    assert total == 40 + 50 + 80 + 70
    assert stalls == 20


def test_overlap_zero_transfers():
    total, stalls = overlap_transfer_compute([10, 20], [0, 0])
    assert (total, stalls) == (30, 0)


def test_overlap_empty():
    assert overlap_transfer_compute([], []) == (0, 0)


def test_overlap_length_mismatch():
    with pytest.raises(ConfigError):
        overlap_transfer_compute([1, 2], [1])


def test_tile_transfer_monotone_in_bandwidth():
    from dataclasses import replace
    layer = _layer(3, 8, nc=16)
    slow = replace(CFG3, ddr_bandwidth_gbps=6.4)
    fast = replace(CFG3, ddr_bandwidth_gbps=25.6)
    assert (layer_traffic(layer, slow).tile_transfer_cycles
            > layer_traffic(layer, fast).tile_transfer_cycles)
