"""Tiling and activation-to-PE mapping for the input-oriented dataflow.

A layer is decomposed into tiles shaped by the mesh: T_m output channels x
(T_z, T_r, T_c) activations x one group of concurrent input channels. The
loop nest is ordered output-channel tile -> spatial tile -> input-channel
tile, with the input-channel loop innermost so partial sums accumulate in
the output buffer and each output tile is written back exactly once per
output-channel tile.

Mapping follows the input-oriented rule: PE (z, r, c) owns activation
(origin + (z, r, c)) and performs only that activation's multiplications,
so inserted zeros never reach a multiplier. For 2D layers the depth-plane
dimension of the mesh is repurposed to carry T_n*T_z input channels at once
and the depth FIFOs go quiet.

Overlap bookkeeping: adjacent activations' kernel stamps intersect in a
K-S thick slab per axis. Inside a tile the slab travels through the
inter-PE FIFOs toward the lower-indexed neighbor (V first, then H, then D,
so doubly/triply overlapped corners land exactly once). Across tile
boundaries the halo stays in the output buffer and the neighboring tile
accumulates into it there; no FIFO traffic crosses tiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .layers import LayerDescriptor, kernel3, spatial3, stride3


@dataclass(frozen=True)
class Tile:
    m_index: int
    sp_index: int
    n_index: int
    m_lo: int
    m_count: int
    n_lo: int
    n_count: int
    origin: tuple
    extents: tuple
    is_edge: bool


@dataclass(frozen=True)
class TileSchedule:
    layer: LayerDescriptor
    cfg: object
    lanes: int            # concurrent input channels per tile
    tile_shape: tuple     # (z, r, c) activation block shape
    m_tiles: int
    sp_tiles: tuple       # per-axis spatial tile counts (z, r, c)
    n_tiles: int
    tiles: list

    def __len__(self):
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)


def _chunks(total: int, size: int):
    for lo in range(0, total, size):
        yield lo, min(size, total - lo)


def tile_layer(layer: LayerDescriptor, cfg) -> TileSchedule:
    problems = layer_config_problems(layer, cfg)
    if problems:
        raise ConfigError("; ".join(problems))

    lanes = cfg.t_n * cfg.t_z if layer.dims == 2 else cfg.t_n
    shape = (1, cfg.t_r, cfg.t_c) if layer.dims == 2 else (cfg.t_z, cfg.t_r, cfg.t_c)
    size = spatial3(layer)
    sp_counts = tuple(-(-i // t) for i, t in zip(size, shape))

    spatial = []
    for z_lo, ez in _chunks(size[0], shape[0]):
        for r_lo, er in _chunks(size[1], shape[1]):
            for c_lo, ec in _chunks(size[2], shape[2]):
                spatial.append(((z_lo, r_lo, c_lo), (ez, er, ec)))

    tiles = []
    for m_index, (m_lo, m_count) in enumerate(_chunks(layer.out_channels, cfg.t_m)):
        for sp_index, (origin, extents) in enumerate(spatial):
            for n_index, (n_lo, n_count) in enumerate(_chunks(layer.in_channels, lanes)):
                tiles.append(Tile(
                    m_index=m_index,
                    sp_index=sp_index,
                    n_index=n_index,
                    m_lo=m_lo,
                    m_count=m_count,
                    n_lo=n_lo,
                    n_count=n_count,
                    origin=origin,
                    extents=extents,
                    is_edge=extents != shape,
                ))
    return TileSchedule(
        layer=layer,
        cfg=cfg,
        lanes=lanes,
        tile_shape=shape,
        m_tiles=-(-layer.out_channels // cfg.t_m),
        sp_tiles=sp_counts,
        n_tiles=-(-layer.in_channels // lanes),
        tiles=tiles,
    )


def layer_config_problems(layer: LayerDescriptor, cfg) -> list[str]:
    # late import: accel also imports this module for FIFO sizing
    from .accel import validate_config
    from .layers import validate_layer

    return validate_layer(layer) + validate_config(cfg, layer)


def map_block_to_mesh(tile: Tile, cfg, dims: int) -> dict:
    """Activation assignment: mesh coordinate (z, r, c) -> (channel, voxel).

    The mesh z coordinate runs over all T_n*T_z planes (lane-major). For
    dims=3 a lane is one input channel spread over T_z depth slices; for
    dims=2 every plane is its own input channel and depth collapses.
    Only active PEs appear; PEs outside the tile extents idle.
    """
    out = {}
    ez, er, ec = tile.extents
    d0, h0, w0 = tile.origin
    for lane in range(tile.n_count):
        channel = tile.n_lo + lane
        for z in range(ez):
            mesh_z = lane * cfg.t_z + z if dims == 3 else lane
            for r in range(er):
                for c in range(ec):
                    voxel = (d0 + z, h0 + r, w0 + c)
                    out[(mesh_z, r, c)] = (channel, voxel)
    return out


@dataclass(frozen=True)
class OverlapDescriptor:
    kernel: int
    stride: int
    dims: int
    thickness: int      # K - S, per axis
    slab_elems: int     # (K-S) * K^(dims-1), elements per face slab
    directions: tuple   # active flow directions, each toward the lower index


def overlap_regions(kernel: int, stride: int, dims: int) -> OverlapDescriptor:
    if not (1 <= stride <= kernel):
        raise ConfigError(f"K >= S >= 1 required, got K={kernel}, S={stride}")
    if dims not in (2, 3):
        raise ConfigError(f"dims must be 2 or 3, got {dims}")
    thickness = kernel - stride
    active = ("V", "H", "D")[: 2 + (dims == 3)] if thickness else ()
    return OverlapDescriptor(
        kernel=kernel,
        stride=stride,
        dims=dims,
        thickness=thickness,
        slab_elems=thickness * kernel ** (dims - 1),
        directions=active,
    )


def fifo_depth_requirement(kernel: int, stride: int, dims: int) -> int:
    """Deepest in-flight overlap slab per FIFO: (K-S) * K^(dims-1) words.

    Allocation adds one K^dims block of slack on top of this.
    """
    if not (1 <= stride <= kernel):
        raise ConfigError(f"K >= S >= 1 required, got K={kernel}, S={stride}")
    return (kernel - stride) * kernel ** (dims - 1)


def owned_output_range(a_lo: int, ext: int, total: int, kernel: int, stride: int) -> tuple:
    """Full-output index range [lo, hi) owned by activations [a_lo, a_lo+ext).

    Ownership resolves overlaps: the K-S slab shared with the lower-indexed
    neighbor belongs to the neighbor. Consecutive ranges partition
    [0, (total-1)*S + K) exactly.
    """
    lo = a_lo * stride + (kernel - stride if a_lo > 0 else 0)
    a_hi = a_lo + ext
    if a_hi < total:
        hi = a_hi * stride + (kernel - stride)
    else:
        hi = (a_hi - 1) * stride + kernel
    return lo, hi


def tile_owned_ranges(tile: Tile, layer: LayerDescriptor) -> list:
    """Owned [lo, hi) per (depth, height, width) axis, full-output coords."""
    size = spatial3(layer)
    ks = kernel3(layer)
    ss = stride3(layer)
    return [
        owned_output_range(a, e, i, k, s)
        for a, e, i, k, s in zip(tile.origin, tile.extents, size, ks, ss)
    ]


def tile_overlap_messages(tile: Tile, layer: LayerDescriptor) -> int:
    """Inter-PE face slabs exchanged while this tile computes.

    One message per adjacent active-PE pair per direction, per channel lane
    and per output-channel group; K = S means no overlap and no traffic.
    """
    if layer.kernel == layer.stride:
        return 0
    ez, er, ec = tile.extents
    faces = (ec - 1) * er * ez + (er - 1) * ec * ez + (ez - 1) * er * ec
    return tile.m_count * tile.n_count * faces


def schedule_overlap_messages(schedule: TileSchedule) -> int:
    return sum(tile_overlap_messages(t, schedule.layer) for t in schedule.tiles)


def dump_schedule(schedule: TileSchedule, include_assignments: bool | None = None) -> dict:
    """JSON-ready schedule description for the diagnostic dump flag.

    Assignments blow up quadratically with mesh size, so by default they are
    included only for small schedules (<= 64 tiles); pass True/False to
    force.
    """
    if include_assignments is None:
        include_assignments = len(schedule.tiles) <= 64
    layer = schedule.layer
    doc = {
        "layer": layer.name,
        "dims": layer.dims,
        "lanes": schedule.lanes,
        "tile_shape": list(schedule.tile_shape),
        "m_tiles": schedule.m_tiles,
        "sp_tiles": list(schedule.sp_tiles),
        "n_tiles": schedule.n_tiles,
        "tile_count": len(schedule.tiles),
        "assignments_included": bool(include_assignments),
        "tiles": [],
    }
    for t in schedule.tiles:
        entry = {
            "m_index": t.m_index,
            "sp_index": t.sp_index,
            "n_index": t.n_index,
            "m_channels": [t.m_lo, t.m_lo + t.m_count],
            "n_channels": [t.n_lo, t.n_lo + t.n_count],
            "origin": list(t.origin),
            "extents": list(t.extents),
            "is_edge": t.is_edge,
        }
        if include_assignments:
            assignment = map_block_to_mesh(t, schedule.cfg, layer.dims)
            entry["assignment"] = [
                {"pe": list(pe), "channel": ch, "voxel": list(vox)}
                for pe, (ch, vox) in sorted(assignment.items())
            ]
        doc["tiles"].append(entry)
    return doc


def tile_counts_product(schedule: TileSchedule) -> int:
    return schedule.m_tiles * math.prod(schedule.sp_tiles) * schedule.n_tiles
