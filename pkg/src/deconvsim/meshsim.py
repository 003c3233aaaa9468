"""Tile-granular mesh simulation: exact values, cycle-approximate timing.

The functional half walks the tile schedule and scatters each activation
block's kernel stamps into a full-output accumulator, exactly as the PE
array would sum them (integer arithmetic makes every summation order
bit-identical). The timing half charges each tile a fixed pass cost and
runs the double-buffered memory model alongside to find stalls.

Cycle model in one place:

* pass = K^dims + 2 * T_c. Every activation holds its PE for K^dims
  multiply cycles per output-channel pass; activation columns enter one per
  cycle (T_c fill) and result blocks hop leftward to the collecting column
  (T_c drain). Edge tiles still clock the full mesh.
* Overlap merges ride the MAC datapath for free by default; the
  ``overlap_add_cycles`` knob charges that many extra cycles per overlapped
  kernel position (K^dims - S^dims of them) for sensitivity studies.
* The adder tree is pipelined: its log2(T_n) latency appears once at the
  end of the layer (drain), not per tile.
* Weights for an output-channel tile prefetch during the previous
  output-channel tile; whatever does not fit in that window stalls the
  pipe. The first such load cannot hide and is the layer's load prologue.
* Per-tile transfers (input fetch when not resident or on the first pass,
  write-back on the last input-channel tile) overlap compute; the excess
  over the pass cost is a stall. Transfers use derated bandwidth.

Utilization is compute / total: pipeline fill and drain inside a pass count
as computation time, memory waits do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccumulatorOverflowError, ConfigError, ShapeMismatchError
from .fixedpoint import FxFormat, requantize_accumulator
from .layers import (
    LayerDescriptor,
    kernel3,
    output_shape3,
    spatial3,
    stride3,
)
from .memory import input_is_resident, transfer_cycles
from .scheduler import TileSchedule, tile_layer, tile_overlap_messages, tile_owned_ranges


@dataclass
class CycleStats:
    total_cycles: int = 0
    compute_cycles: int = 0
    load_cycles: int = 0
    drain_cycles: int = 0
    stall_cycles: int = 0
    mac_count: int = 0
    overlap_messages: int = 0
    tiles: int = 0
    saturations: int = 0
    breakdown: dict = field(default_factory=dict)


def adder_tree_reduce(values):
    """Binary-tree sum over the leading (lane) axis; lanes must be 2^k.

    Integer associativity makes the result identical to any sequential sum;
    the tree exists for the timing model and the event simulator.
    """
    v = np.asarray(values, dtype=np.int64)
    n = v.shape[0]
    if n < 1 or n & (n - 1):
        raise ConfigError(f"lane count must be a power of two, got {n}")
    while v.shape[0] > 1:
        v = v[0::2] + v[1::2]
    return v[0]


def _check_tensors(x, w, layer: LayerDescriptor):
    x = np.asarray(x)
    w = np.asarray(w)
    for name, a in (("activations", x), ("weights", w)):
        if not np.issubdtype(a.dtype, np.integer):
            raise ShapeMismatchError(f"{name} must be integer-typed, got {a.dtype}")
    want_x = (layer.in_channels,) + layer.in_size
    want_w = (layer.out_channels, layer.in_channels) + (layer.kernel,) * layer.dims
    if x.shape != want_x:
        raise ShapeMismatchError(f"activations {x.shape}, expected {want_x}")
    if w.shape != want_w:
        raise ShapeMismatchError(f"weights {w.shape}, expected {want_w}")
    x = x.astype(np.int64)
    w = w.astype(np.int64)
    # one output element gathers at most Nc * prod(ceil(K/S)) products;
    # that worst case has to fit the int64 working registers
    mult = 1
    for k, s in zip(kernel3(layer), stride3(layer)):
        mult *= -(-k // s)
    mx = int(np.max(np.abs(x), initial=0))
    mw = int(np.max(np.abs(w), initial=0))
    if mx * mw * layer.in_channels * mult >= 2**62:
        raise AccumulatorOverflowError(
            "accumulation could exceed the int64 working range"
        )
    if layer.dims == 2:
        return x[:, None, :, :], w[:, :, None, :, :]
    return x, w


def _run_functional(schedule: TileSchedule, x, w, fx, check_overflow):
    """Schedule-driven scatter: one spatial block at a time, all channels.

    The channel tiling only changes when partial sums meet, never their
    values, so lanes are batched; spatial blocks follow the schedule so tile
    coverage bugs cannot cancel out.
    """
    layer = schedule.layer
    x3, w3 = _check_tensors(x, w, layer)
    kd, kh, kw = kernel3(layer)
    sd, sh, sw = stride3(layer)

    full = np.zeros((layer.out_channels,) + output_shape3(layer), dtype=np.int64)
    track_peak = fx is not None and check_overflow
    peak = (
        np.zeros_like(full) if track_peak else None
    )  # running sum of |contributions|, an upper bound on any partial sum
    aw = np.abs(w3) if track_peak else None

    for tile in schedule.tiles:
        if tile.m_index or tile.n_index:
            continue  # functional values batch all channels per spatial block
        d0, h0, w0 = tile.origin
        ez, er, ec = tile.extents
        block = x3[:, d0 : d0 + ez, h0 : h0 + er, w0 : w0 + ec]
        if track_peak:
            ablock = np.abs(block)
        for a in range(kd):
            for b in range(kh):
                for c in range(kw):
                    sl = (
                        slice(None),
                        slice(d0 * sd + a, (d0 + ez - 1) * sd + a + 1, sd),
                        slice(h0 * sh + b, (h0 + er - 1) * sh + b + 1, sh),
                        slice(w0 * sw + c, (w0 + ec - 1) * sw + c + 1, sw),
                    )
                    full[sl] += np.einsum("cdhw,mc->mdhw", block, w3[:, :, a, b, c])
                    if track_peak:
                        peak[sl] += np.einsum("cdhw,mc->mdhw", ablock, aw[:, :, a, b, c])

    if track_peak and peak.size:
        if int(peak.max(initial=0)) > fx.accumulator_max:
            raise AccumulatorOverflowError(
                f"worst-case partial sum exceeds {fx.accumulator_bits}-bit accumulator"
            )

    p = layer.crop
    if p:
        if layer.dims == 2:
            full = full[:, :, p:-p, p:-p]
        else:
            full = full[:, p:-p, p:-p, p:-p]
    if layer.dims == 2:
        full = full[:, 0]
    if fx is None:
        return full.copy(), 0
    words, n_sat = requantize_accumulator(full, fx)
    return words, n_sat


def _weight_mtile_bytes(layer: LayerDescriptor, cfg, m_count: int) -> int:
    return m_count * layer.in_channels * layer.kernel**layer.dims * cfg.word_bytes


def _run_timing(schedule: TileSchedule, overlap_add_cycles: int) -> CycleStats:
    layer = schedule.layer
    cfg = schedule.cfg
    k_vol = layer.kernel**layer.dims
    s_vol = layer.stride**layer.dims
    pass_cycles = k_vol + 2 * cfg.t_c + overlap_add_cycles * (k_vol - s_vol)

    resident = input_is_resident(layer, cfg)
    wb_bytes_per = cfg.word_bytes
    full3 = output_shape3(layer)
    crop3 = (0, layer.crop, layer.crop) if layer.dims == 2 else (layer.crop,) * 3
    last_n = schedule.n_tiles - 1

    # weights prefetch whole output-channel tiles when the buffer allows it,
    # otherwise every tile hauls its own slice and nothing hides
    widest_m = min(cfg.t_m, layer.out_channels)
    weights_resident = (
        _weight_mtile_bytes(layer, cfg, widest_m) <= cfg.weight_buf_bytes
    )

    def w_cycles(m_count):
        return transfer_cycles(_weight_mtile_bytes(layer, cfg, m_count), cfg, derated=True)

    stats = CycleStats(tiles=len(schedule.tiles))
    first = schedule.tiles[0]
    load = w_cycles(first.m_count) if weights_resident else 0
    total = load
    compute = 0
    stall = 0
    macs = 0
    msgs = 0
    slot_sum = 0  # hiding window for the next m tile's weight prefetch
    current_m = 0

    for tile in schedule.tiles:
        if tile.m_index != current_m:
            if weights_resident:
                spill = max(0, w_cycles(tile.m_count) - slot_sum)
                total += spill
                stall += spill
            slot_sum = 0
            current_m = tile.m_index

        nbytes = 0
        if not resident or tile.m_index == 0:
            ez, er, ec = tile.extents
            nbytes += tile.n_count * ez * er * ec * cfg.word_bytes
        if not weights_resident:
            nbytes += tile.m_count * tile.n_count * k_vol * cfg.word_bytes
        if tile.n_index == last_n:
            vol = 1
            for (lo, hi), f, p in zip(tile_owned_ranges(tile, layer), full3, crop3):
                vol *= max(0, min(hi, f - p) - max(lo, p))
            nbytes += vol * tile.m_count * wb_bytes_per
        tr = transfer_cycles(nbytes, cfg, derated=True)

        slot = max(pass_cycles, tr)
        total += slot
        slot_sum += slot
        stall += max(0, tr - pass_cycles)
        compute += pass_cycles
        ez, er, ec = tile.extents
        macs += tile.m_count * tile.n_count * ez * er * ec * k_vol
        msgs += tile_overlap_messages(tile, layer)

    drain = cfg.t_c + int(math.log2(cfg.t_n))
    total += drain

    stats.total_cycles = total
    stats.compute_cycles = compute
    stats.load_cycles = load
    stats.drain_cycles = drain
    stats.stall_cycles = stall
    stats.mac_count = macs
    stats.overlap_messages = msgs
    stats.breakdown = {
        "load": load,
        "compute": compute,
        "stall": stall,
        "drain": drain,
    }
    return stats


def simulate_layer(
    layer: LayerDescriptor,
    cfg,
    activations=None,
    weights=None,
    *,
    fx: FxFormat | None = None,
    overlap_add_cycles: int = 0,
    check_overflow: bool = True,
):
    """Run one layer through the mesh model.

    With tensors, returns (output, stats) where the output is element-exact
    against the reference formulations (same integer or fixed-point mode).
    Without tensors only the timing walk runs and the output is None, which
    is how benchmark-scale layers stay cheap.
    """
    if overlap_add_cycles < 0:
        raise ConfigError(f"overlap_add_cycles must be >= 0, got {overlap_add_cycles}")
    if (activations is None) != (weights is None):
        raise ShapeMismatchError("provide both activations and weights, or neither")
    schedule = tile_layer(layer, cfg)
    stats = _run_timing(schedule, overlap_add_cycles)
    output = None
    if activations is not None:
        output, n_sat = _run_functional(schedule, activations, weights, fx, check_overflow)
        stats.saturations = n_sat
    return output, stats
