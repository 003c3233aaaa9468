"""Per-PE event simulation for small layers.

This is the debug companion to the tile-granular model: every multiply,
FIFO hop, and merge is an explicit event, so mapping or routing mistakes
show up as wrong values or tripped occupancy assertions instead of silently
averaged-away cycles. Functional results are element-exact against the
reference formulations; cycle totals are illustrative (the analytic model
is the authority for throughput numbers) because inter-tile pipelining is
deliberately not modeled here.

Event semantics, per tile pass:

* activation columns enter leftmost-first, one column per cycle; column c
  of the mesh loads at local cycle c,
* weights shift one column rightward per cycle, so column c multiplies
  kernel element j = t - c at local cycle t; elements sweep the kernel in
  row-major order with the fastest axis along the mesh row,
* each product routes to the PE owning its output element: overlap slabs
  flow toward the lower-indexed neighbor, vertical hops first, then
  horizontal, then depth, one hop per cycle; contributions whose owner
  lies in an earlier tile skip the FIFOs and merge in the output buffer
  (halo accumulation),
* a PE consumes an arriving element the same cycle when it is the owner
  (the add is fused with the MAC datapath) and forwards it the next cycle
  otherwise; occupancy is asserted against the declared FIFO depth,
* when the pass empties, result blocks drain leftward for T_c cycles and
  lane partials reduce through the adder tree into the output buffer.

For 2D layers the depth FIFOs must stay permanently empty; that is asserted,
not assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TraceLimitError
from .fixedpoint import FxFormat, check_accumulator_range, requantize_accumulator
from .layers import LayerDescriptor, kernel3, output_shape3, stride3
from .meshsim import _check_tensors, adder_tree_reduce
from .scheduler import fifo_depth_requirement, map_block_to_mesh, tile_layer


@dataclass
class EventStats:
    cycles: int = 0
    mac_count: int = 0
    fused_adds: int = 0
    routed_elements: int = 0
    fifo_hops: int = 0
    halo_merges: int = 0
    max_fifo_occupancy: dict = field(default_factory=lambda: {"V": 0, "H": 0, "D": 0})
    saturations: int = 0
    tiles: int = 0


class _PE:
    __slots__ = ("ra", "rw", "acc", "fifo", "channel", "voxel")

    def __init__(self):
        self.ra = 0
        self.rw = 0
        self.acc = {}            # owned output coordinate -> partial value
        self.fifo = {"V": 0, "H": 0, "D": 0}   # current occupancy per queue
        self.channel = None
        self.voxel = None


class MeshEventSim:
    """Drives one layer through the mesh, one cycle at a time.

    ``advance_cycle`` is the single-cycle transition; ``run`` loops it to
    completion. With no pending work a cycle only bumps the counter.
    """

    def __init__(self, layer: LayerDescriptor, cfg, activations, weights,
                 *, fx: FxFormat | None = None, trace: bool = False,
                 cycle_limit: int = 1_000_000):
        self.layer = layer
        self.cfg = cfg
        self.fx = fx
        self.schedule = tile_layer(layer, cfg)
        self.x3, self.w3 = _check_tensors(activations, weights, layer)
        self.kvol = math.prod(kernel3(layer))
        self.cycle_limit = cycle_limit
        self.trace_lines: list[str] | None = [] if trace else None
        self.stats = EventStats(tiles=len(self.schedule.tiles))
        self.cycle = 0

        self._fifo_cap = (
            fifo_depth_requirement(layer.kernel, layer.stride, layer.dims)
            + layer.kernel**layer.dims
        )
        self._buffer = np.zeros(
            (layer.out_channels,) + output_shape3(layer), dtype=np.int64
        )
        self._tiles = iter(self.schedule.tiles)
        self._tile = None
        self._pes = {}
        self._arrivals = []      # delivered this cycle, forwarded next cycle
        self._tile_start = 0
        self._drain_left = 0

    # -- helpers ---------------------------------------------------------

    def _emit(self, pe, op, operands):
        if self.trace_lines is not None:
            z, r, c = pe
            self.trace_lines.append(f"{self.cycle}, pe({z},{r},{c}), {op}, {operands}")

    def _owner(self, out_coord):
        """Global activation index owning each axis of an output element."""
        own = []
        for o, k, s in zip(out_coord, kernel3(self.layer), stride3(self.layer)):
            own.append(max(0, (o - k) // s + 1))
        return tuple(own)

    def _kernel_offset(self, j):
        kd, kh, kw = kernel3(self.layer)
        return (j // (kh * kw), (j // kw) % kh, j % kw)

    @property
    def pending_work(self) -> bool:
        return bool(
            self._tile is not None or self._arrivals
            or self._drain_left or self._peek_tile()
        )

    def _peek_tile(self) -> bool:
        if self._tile is None:
            try:
                self._tile = next(self._tiles)
            except StopIteration:
                return False
            self._begin_tile()
        return True

    # -- tile lifecycle ---------------------------------------------------

    def _begin_tile(self):
        tile = self._tile
        self._assignment = map_block_to_mesh(tile, self.cfg, self.layer.dims)
        self._pes = {pos: _PE() for pos in self._assignment}
        for pos, (ch, vox) in self._assignment.items():
            self._pes[pos].channel = ch
            self._pes[pos].voxel = vox
        # voxel -> mesh position, for overlap routing inside the tile
        self._pe_of_voxel = {
            (pe.channel, pe.voxel): pos for pos, pe in self._pes.items()
        }
        self._tile_start = self.cycle
        self._emitted = 0
        self._to_emit = len(self._assignment) * self.kvol

    def _finish_tile(self):
        """Drain results: lane partials reduce through the adder tree."""
        tile = self._tile
        layer = self.layer
        lanes = self.schedule.lanes
        width = 1 << max(0, (lanes - 1).bit_length())  # pad to a power of two
        for g in range(tile.m_count):
            m = tile.m_lo + g
            partials = {}
            for pos, pe in self._pes.items():
                lane = pos[0] // self.cfg.t_z if layer.dims == 3 else pos[0]
                for coord, val in pe.acc.items():
                    if coord[0] != m:
                        continue
                    slot = partials.setdefault(coord[1:], [0] * width)
                    slot[lane] += val
            for coord, vals in partials.items():
                self._buffer[(m,) + coord] += int(adder_tree_reduce(vals))
        self._tile = None
        self._pes = {}
        self._drain_left = self.cfg.t_c

    # -- the single-cycle transition --------------------------------------

    def advance_cycle(self):
        if self.cycle >= self.cycle_limit:
            raise TraceLimitError(
                f"event simulation exceeded {self.cycle_limit} cycles"
            )
        if not self.pending_work:
            self.cycle += 1
            return

        if self._drain_left:
            self._drain_left -= 1
            self.cycle += 1
            return

        tile = self._tile
        layer = self.layer

        # 1. previously arrived foreign elements move one hop
        moving, self._arrivals = self._arrivals, []
        for item in moving:
            self._hop(item)

        # 2. every active PE computes this cycle's kernel element
        local_t = self.cycle - self._tile_start
        for (z, r, c), pe in self._pes.items():
            j = local_t - c
            if j < 0 or j >= self.kvol:
                continue
            if j == 0:
                self._emit((z, r, c), "load_a", f"ch={pe.channel} voxel={pe.voxel}")
                self._emit((z, r, c), "load_w", "k=0")
            off = self._kernel_offset(j)
            for g in range(tile.m_count):
                m = tile.m_lo + g
                val = int(self.x3[pe.channel][pe.voxel]) * int(
                    self.w3[m, pe.channel, off[0], off[1], off[2]]
                )
                out = tuple(v * s + o for v, s, o in
                            zip(pe.voxel, stride3(layer), off))
                self._emit(
                    (z, r, c), "mul",
                    f"m={m} ch={pe.channel} k={off} -> out={out} val={val}",
                )
                self.stats.mac_count += 1
                self._route((z, r, c), pe, m, out, val)
            self._emitted += 1

        # 3. finished? (all products emitted, nothing in the air)
        if self._emitted >= self._to_emit and not self._arrivals:
            self._finish_tile()

        self.cycle += 1

    # -- routing -----------------------------------------------------------

    def _route(self, pos, pe, m, out, val):
        tile = self._tile
        layer = self.layer
        owner = self._owner(out)
        key = (pe.channel, owner)
        if key == (pe.channel, pe.voxel):
            pe.acc[(m,) + out] = pe.acc.get((m,) + out, 0) + val
            return
        target = self._pe_of_voxel.get(key)
        if target is None:
            # owner sits in an earlier tile: halo accumulation in the buffer
            self._buffer[(m,) + out] += val
            self.stats.halo_merges += 1
            self._emit(pos, "halo", f"m={m} out={out} val={val}")
            return
        self.stats.routed_elements += 1
        self._send(pos, target, m, out, val)

    def _send(self, current, target, m, out, val):
        """One hop toward the target, vertical first, then horizontal, then depth."""
        z, r, c = current
        tz, tr, tc = target
        if r != tr:
            nxt, direction = (z, r - 1, c), "V"
        elif c != tc:
            nxt, direction = (z, r, c - 1), "H"
        else:
            nxt, direction = (z - 1, r, c), "D"
        assert direction != "D" or self.layer.dims == 3, "depth FIFO used by a 2D layer"
        self.stats.fifo_hops += 1
        dest = self._pes[nxt]
        dest.fifo[direction] += 1
        occ = dest.fifo[direction]
        self.stats.max_fifo_occupancy[direction] = max(
            self.stats.max_fifo_occupancy[direction], occ
        )
        assert occ <= self._fifo_cap, (
            f"fifo_{direction.lower()} occupancy {occ} exceeds capacity {self._fifo_cap}"
        )
        self._emit(current, f"fwd_{direction.lower()}", f"m={m} out={out} -> pe{nxt}")
        if nxt == target:
            # fused add on arrival: the owner consumes it this same cycle
            dest.fifo[direction] -= 1
            dest.acc[(m,) + out] = dest.acc.get((m,) + out, 0) + val
            self.stats.fused_adds += 1
            self._emit(nxt, "merge", f"m={m} out={out} val={val}")
        else:
            self._arrivals.append((val, m, target, nxt, out, direction))

    def _hop(self, item):
        val, m, target, current, out, came_from = item
        self._pes[current].fifo[came_from] -= 1
        self._send(current, target, m, out, val)

    # -- top level ----------------------------------------------------------

    def run(self):
        while self.pending_work:
            self.advance_cycle()
        self.stats.cycles = self.cycle
        out = self._buffer
        p = self.layer.crop
        if p:
            if self.layer.dims == 2:
                out = out[:, :, p:-p, p:-p]
            else:
                out = out[:, p:-p, p:-p, p:-p]
        if self.layer.dims == 2:
            out = out[:, 0]
        if self.fx is None:
            return out.copy(), self.stats
        check_accumulator_range(out, self.fx)
        words, n_sat = requantize_accumulator(out, self.fx)
        self.stats.saturations = n_sat
        return words, self.stats


def simulate_layer_events(layer, cfg, activations, weights, *,
                          fx: FxFormat | None = None, trace: bool = False,
                          cycle_limit: int = 1_000_000):
    """Convenience wrapper: build, run, return (output, stats, trace lines)."""
    sim = MeshEventSim(
        layer, cfg, activations, weights, fx=fx, trace=trace, cycle_limit=cycle_limit
    )
    out, stats = sim.run()
    return out, stats, sim.trace_lines
