"""Throughput, utilization and bound classification reports.

A report row summarizes one simulated layer; a network report stacks the
layer rows and appends an aggregate row. Two throughput figures are kept
side by side on purpose:

* ``gops_valid`` counts only the multiplies that touch real activations,
* ``gops_effective`` counts against the nominal zero-inserted workload,
  which is the basis a dense convolution engine would be charged with.

The gap between the two is exactly what skipping the inserted zeros buys.

CSV output is data-only with a fixed column set; the JSON variant carries
an assumptions block (clock, bandwidth, derating, buffer sizes) so a saved
report is self-describing. Both serializations are byte-deterministic for
a given input.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

from .accel import AccelConfig, adder_count, pe_count, peak_throughput
from .errors import DeconvSimError
from .layers import LayerDescriptor, count_ops, sparsity
from .meshsim import CycleStats, simulate_layer
from .network import NetworkDescriptor

CSV_COLUMNS = (
    "network", "layer", "dims", "Nc", "Nm", "I", "K", "S",
    "cycles_total", "cycles_compute", "cycles_stall", "mac_count",
    "utilization", "gops_valid", "gops_effective", "sparsity", "bound_class",
)

# stall share of total cycles above which a layer counts as memory bound
STALL_BOUND_THRESHOLD = 0.05

REPORT_SCHEMA = "deconvsim-report-v1"


def utilization(stats: CycleStats) -> float:
    if stats.total_cycles <= 0:
        raise DeconvSimError("utilization undefined for zero total cycles")
    return stats.compute_cycles / stats.total_cycles


def stall_fraction(stats: CycleStats) -> float:
    if stats.total_cycles <= 0:
        raise DeconvSimError("stall fraction undefined for zero total cycles")
    return stats.stall_cycles / stats.total_cycles


def bound_class(stats: CycleStats) -> str:
    return "memory" if stall_fraction(stats) > STALL_BOUND_THRESHOLD else "compute"


def gops(ops: int, total_cycles: int, cfg: AccelConfig) -> float:
    """Sustained throughput in GOP/s for `ops` operations over `total_cycles`."""
    if total_cycles <= 0:
        raise DeconvSimError("throughput undefined for zero total cycles")
    seconds = total_cycles / (cfg.clock_mhz * 1e6)
    return ops / seconds / 1e9


def effective_throughput(layer: LayerDescriptor, stats: CycleStats,
                         cfg: AccelConfig) -> float:
    """GOP/s on the nominal basis: the zero-inserted dense-conv workload."""
    return gops(count_ops(layer, "nominal"), stats.total_cycles, cfg)


def valid_throughput(layer: LayerDescriptor, stats: CycleStats,
                     cfg: AccelConfig) -> float:
    """GOP/s counting only multiplies that touch real activations."""
    return gops(count_ops(layer, "valid"), stats.total_cycles, cfg)


@dataclass
class LayerReport:
    network: str
    layer: str
    dims: int
    nc: int
    nm: int
    in_size: tuple
    kernel: int
    stride: int
    cycles_total: int
    cycles_compute: int
    cycles_stall: int
    mac_count: int
    utilization: float
    gops_valid: float
    gops_effective: float
    sparsity: float
    bound_class: str

    def csv_row(self) -> list[str]:
        return [
            self.network,
            self.layer,
            str(self.dims),
            str(self.nc),
            str(self.nm),
            "x".join(str(v) for v in self.in_size),
            str(self.kernel),
            str(self.stride),
            str(self.cycles_total),
            str(self.cycles_compute),
            str(self.cycles_stall),
            str(self.mac_count),
            f"{self.utilization:.6f}",
            f"{self.gops_valid:.3f}",
            f"{self.gops_effective:.3f}",
            f"{self.sparsity:.6f}",
            self.bound_class,
        ]

    def json_obj(self) -> dict:
        return {
            "network": self.network,
            "layer": self.layer,
            "dims": self.dims,
            "Nc": self.nc,
            "Nm": self.nm,
            "I": list(self.in_size),
            "K": self.kernel,
            "S": self.stride,
            "cycles_total": self.cycles_total,
            "cycles_compute": self.cycles_compute,
            "cycles_stall": self.cycles_stall,
            "mac_count": self.mac_count,
            "utilization": round(self.utilization, 6),
            "gops_valid": round(self.gops_valid, 3),
            "gops_effective": round(self.gops_effective, 3),
            "sparsity": round(self.sparsity, 6),
            "bound_class": self.bound_class,
        }


@dataclass
class NetworkReport:
    name: str
    dims: int
    layers: list = field(default_factory=list)
    summary: LayerReport | None = None
    assumptions: dict = field(default_factory=dict)


def report_assumptions(cfg: AccelConfig, overlap_add_cycles: int = 0) -> dict:
    return {
        "clock_mhz": cfg.clock_mhz,
        "ddr_bandwidth_gbps": cfg.ddr_bandwidth_gbps,
        "bandwidth_derating": cfg.bandwidth_derating,
        "word_bits": cfg.word_bits,
        "frac_bits": cfg.frac_bits,
        "mesh": {
            "t_m": cfg.t_m, "t_n": cfg.t_n, "t_z": cfg.t_z,
            "t_r": cfg.t_r, "t_c": cfg.t_c,
        },
        "pe_count": pe_count(cfg),
        "adder_count": adder_count(cfg),
        "peak_gops": round(peak_throughput(cfg), 3),
        "buffers_bytes": {
            "input": cfg.input_buf_bytes,
            "weight": cfg.weight_buf_bytes,
            "output": cfg.output_buf_bytes,
        },
        "overlap_add_cycles": overlap_add_cycles,
        "halo_policy": (
            "cross-tile overlap accumulates in the on-chip output buffer; "
            "cropped borders are never written back"
        ),
    }


def layer_report_from_stats(layer: LayerDescriptor, cfg: AccelConfig,
                            stats: CycleStats, network: str = "-") -> LayerReport:
    return LayerReport(
        network=network,
        layer=layer.name,
        dims=layer.dims,
        nc=layer.in_channels,
        nm=layer.out_channels,
        in_size=layer.in_size,
        kernel=layer.kernel,
        stride=layer.stride,
        cycles_total=stats.total_cycles,
        cycles_compute=stats.compute_cycles,
        cycles_stall=stats.stall_cycles,
        mac_count=stats.mac_count,
        utilization=utilization(stats),
        gops_valid=gops(count_ops(layer, "valid"), stats.total_cycles, cfg),
        gops_effective=gops(count_ops(layer, "nominal"), stats.total_cycles, cfg),
        sparsity=sparsity(layer),
        bound_class=bound_class(stats),
    )


def build_layer_report(layer: LayerDescriptor, cfg: AccelConfig, *,
                       network: str = "-",
                       overlap_add_cycles: int = 0) -> LayerReport:
    _, stats = simulate_layer(layer, cfg, overlap_add_cycles=overlap_add_cycles)
    return layer_report_from_stats(layer, cfg, stats, network)


def _aggregate(name: str, dims: int, rows: list) -> LayerReport:
    total = sum(r.cycles_total for r in rows)
    compute = sum(r.cycles_compute for r in rows)
    stall = sum(r.cycles_stall for r in rows)
    if total <= 0:
        raise DeconvSimError("network aggregate undefined for zero total cycles")
    # throughput and sparsity are filled by the caller from exact op counts
    return LayerReport(
        network=name,
        layer="TOTAL",
        dims=dims,
        nc=0, nm=0, in_size=(), kernel=0, stride=0,
        cycles_total=total,
        cycles_compute=compute,
        cycles_stall=stall,
        mac_count=sum(r.mac_count for r in rows),
        utilization=compute / total,
        gops_valid=0.0,
        gops_effective=0.0,
        sparsity=0.0,
        bound_class="memory" if stall / total > STALL_BOUND_THRESHOLD else "compute",
    )


def build_network_report(net: NetworkDescriptor, cfg: AccelConfig, *,
                         overlap_add_cycles: int = 0) -> NetworkReport:
    rows = []
    total_valid = 0
    total_nominal = 0
    total_in = 0
    total_stretched = 0
    for layer in net.layers:
        rows.append(build_layer_report(
            layer, cfg, network=net.name, overlap_add_cycles=overlap_add_cycles))
        total_valid += count_ops(layer, "valid")
        total_nominal += count_ops(layer, "nominal")
        total_in += math.prod(layer.in_size)
        total_stretched += math.prod(
            (v - 1) * layer.stride + 1 for v in layer.in_size)
    summary = _aggregate(net.name, net.dims, rows)
    seconds = summary.cycles_total / (cfg.clock_mhz * 1e6)
    summary.gops_valid = total_valid / seconds / 1e9
    summary.gops_effective = total_nominal / seconds / 1e9
    summary.sparsity = 1.0 - total_in / total_stretched
    return NetworkReport(
        name=net.name,
        dims=net.dims,
        layers=rows,
        summary=summary,
        assumptions=report_assumptions(cfg, overlap_add_cycles),
    )


def _summary_csv_row(summary: LayerReport) -> list[str]:
    row = summary.csv_row()
    # aggregate row leaves the per-layer shape columns blank
    for idx in (3, 4, 5, 6, 7):
        row[idx] = ""
    return row


def emit_csv(reports: list[NetworkReport]) -> bytes:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for rep in reports:
        for lr in rep.layers:
            out.write(",".join(lr.csv_row()) + "\n")
        if rep.summary is not None:
            out.write(",".join(_summary_csv_row(rep.summary)) + "\n")
    return out.getvalue().encode("utf-8")


def emit_json(reports: list[NetworkReport]) -> bytes:
    obj = {
        "schema": REPORT_SCHEMA,
        "networks": [
            {
                "name": rep.name,
                "dims": rep.dims,
                "assumptions": rep.assumptions,
                "layers": [lr.json_obj() for lr in rep.layers],
                "summary": (rep.summary.json_obj()
                            if rep.summary is not None else None),
                # plot-ready series, x = 1-based layer position
                "series": {
                    "sparsity": [[i + 1, round(lr.sparsity, 6)]
                                 for i, lr in enumerate(rep.layers)],
                    "utilization": [[i + 1, round(lr.utilization, 6)]
                                    for i, lr in enumerate(rep.layers)],
                },
            }
            for rep in reports
        ],
    }
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def emit_report(reports: list[NetworkReport], fmt: str = "json") -> bytes:
    if fmt == "json":
        return emit_json(reports)
    if fmt == "csv":
        return emit_csv(reports)
    raise DeconvSimError(f"unknown report format {fmt!r}")


def sparsity_series(kernel: int, stride: int, dims: int,
                    sizes) -> list[tuple[int, float]]:
    """Zero-insertion sparsity for cubic inputs of the given edge sizes."""
    out = []
    for n in sizes:
        layer = LayerDescriptor(
            name=f"I{n}", dims=dims, in_channels=1, out_channels=1,
            in_size=(n,) * dims, kernel=kernel, stride=stride)
        out.append((n, sparsity(layer)))
    return out


def sparsity_csv(kernel: int, stride: int, dims: int, sizes) -> bytes:
    rows = sparsity_series(kernel, stride, dims, sizes)
    out = io.StringIO()
    out.write("input_size,sparsity\n")
    for n, s in rows:
        out.write(f"{n},{s:.6f}\n")
    return out.getvalue().encode("utf-8")


def network_sparsity_csv(net: NetworkDescriptor) -> bytes:
    """Two-column per-layer sparsity series, x = 1-based layer position."""
    out = io.StringIO()
    out.write("layer,sparsity\n")
    for i, layer in enumerate(net.layers):
        out.write(f"{i + 1},{sparsity(layer):.6f}\n")
    return out.getvalue().encode("utf-8")
