"""Off-chip traffic, buffer residency, and transfer/compute overlap.

Bandwidth is a flat rate: ddr_bandwidth_gbps * 1e9 bytes per second,
divided by the clock to get bytes per cycle (25.6 GB/s at 200 MHz is
128 B/cycle). Raw transfer arithmetic uses that figure; the stall model
applies the configured derating factor to approximate DRAM efficiency,
since sustained bandwidth never reaches the pin rate.

Residency drives the input refetch factor. The layer's whole input either
fits the input buffer (read once, reused across output-channel tiles) or it
does not (re-read once per output-channel tile). Weights are fetched once;
results are written once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .accel import AccelConfig, channel_lanes
from .errors import ConfigError
from .layers import LayerDescriptor, output_shape, spatial3


@dataclass(frozen=True)
class TrafficSummary:
    input_bytes: int
    weight_bytes: int
    output_bytes: int
    refetch_factor: int
    input_resident: bool
    tile_transfer_cycles: int   # steady-state activation tile fetch, derated


def bytes_per_cycle(cfg: AccelConfig, derated: bool = False) -> float:
    if cfg.ddr_bandwidth_gbps <= 0:
        raise ConfigError("ddr_bandwidth_gbps must be positive")
    rate = cfg.ddr_bandwidth_gbps * 1e9 / (cfg.clock_mhz * 1e6)
    return rate * cfg.bandwidth_derating if derated else rate


def transfer_cycles(nbytes: int, cfg: AccelConfig, derated: bool = False) -> int:
    """Cycles to move nbytes at the flat (optionally derated) rate."""
    if nbytes < 0:
        raise ConfigError(f"negative byte count {nbytes}")
    if nbytes == 0:
        return 0
    return math.ceil(nbytes / bytes_per_cycle(cfg, derated))


def input_is_resident(layer: LayerDescriptor, cfg: AccelConfig) -> bool:
    return math.prod(spatial3(layer)) * layer.in_channels * cfg.word_bytes <= cfg.input_buf_bytes


def layer_traffic(layer: LayerDescriptor, cfg: AccelConfig) -> TrafficSummary:
    """Per-layer DDR byte counts.

    Inputs resident on chip are read once; otherwise every output-channel
    tile re-reads them (the inner loops exhaust the buffer before the next
    m tile needs the same activations back).
    """
    wb = cfg.word_bytes
    in_elems = math.prod(spatial3(layer)) * layer.in_channels
    resident = input_is_resident(layer, cfg)
    refetch = 1 if resident else -(-layer.out_channels // cfg.t_m)
    _, cropped = output_shape(layer)
    lanes = channel_lanes(cfg, layer.dims)
    block = cfg.t_r * cfg.t_c * (cfg.t_z if layer.dims == 3 else 1)
    tile_elems = min(lanes, layer.in_channels) * block
    return TrafficSummary(
        input_bytes=in_elems * wb * refetch,
        weight_bytes=layer.in_channels * layer.out_channels * layer.kernel**layer.dims * wb,
        output_bytes=math.prod(cropped) * layer.out_channels * wb,
        refetch_factor=refetch,
        input_resident=resident,
        tile_transfer_cycles=transfer_cycles(tile_elems * wb, cfg, derated=True),
    )


def overlap_transfer_compute(compute_cycles, tile_transfer_cycles, n_tiles: int | None = None):
    """Double-buffered pipeline totals: (total_cycles, stall_cycles).

    Scalar form models uniform tiles: total = prologue (first transfer) +
    n * max(compute, transfer). Sequence form takes per-tile cycle lists of
    equal length. Stalls are the per-tile excess of transfer over compute;
    transfers shorter than compute hide completely behind it.
    """
    if n_tiles is not None:
        computes = [compute_cycles] * n_tiles
        transfers = [tile_transfer_cycles] * n_tiles
    else:
        computes = list(compute_cycles)
        transfers = list(tile_transfer_cycles)
        if len(computes) != len(transfers):
            raise ConfigError("compute/transfer sequences differ in length")
    if not computes:
        return 0, 0
    total = transfers[0]
    stalls = 0
    for c, t in zip(computes, transfers):
        total += max(c, t)
        stalls += max(0, t - c)
    return total, stalls
