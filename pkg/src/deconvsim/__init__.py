"""Cycle model for a uniform transposed-convolution accelerator.

The package splits into three strata:

* functional ground truth: layer descriptors, op counting, and two
  independent formulations of the transposed convolution (scatter-add and
  zero-insert-then-convolve) that everything else is checked against,
* the machine model: mesh configuration, tiling, overlap scheduling,
  traffic and cycle accounting, plus a per-PE event simulator for small
  layers,
* reporting: throughput, utilization, bound classification, CSV/JSON
  emission, and the command line front end.

All functional paths accumulate in plain integers and agree element-exactly
with the reference formulations, in both integer and fixed-point modes.
"""

from .accel import (AccelConfig, ResourceEstimate, adder_count, builtin_config,
                    builtin_config_names, channel_lanes, parse_config, pe_count,
                    peak_throughput, resource_estimate, tile_footprint,
                    validate_config)
from .errors import (AccumulatorOverflowError, ConfigError, DeconvSimError,
                     SchemaError, ShapeMismatchError, TraceLimitError)
from .eventsim import EventStats, MeshEventSim, simulate_layer_events
from .fixedpoint import (FxFormat, accumulation_bound, check_accumulator_range,
                         dequantize, quantize, quantize_with_count,
                         requantize_accumulator)
from .layers import (LayerDescriptor, count_ops, output_shape, sparsity,
                     validate_layer)
from .memory import (TrafficSummary, bytes_per_cycle, layer_traffic,
                     overlap_transfer_compute, transfer_cycles)
from .meshsim import CycleStats, adder_tree_reduce, simulate_layer
from .network import (NetworkDescriptor, builtin_benchmarks, builtin_names,
                      builtin_network, parse_network, serialize)
from .oracle import (contribution_counts, deconv_insert_conv,
                     deconv_scatter_add, scatter_add_instrumented, zero_insert)
from .report import (CSV_COLUMNS, LayerReport, NetworkReport, bound_class,
                     build_layer_report, build_network_report,
                     effective_throughput, emit_csv, emit_json, emit_report,
                     gops, network_sparsity_csv, sparsity_csv, sparsity_series,
                     utilization, valid_throughput)
from .scheduler import (OverlapDescriptor, TileSchedule, dump_schedule,
                        fifo_depth_requirement, map_block_to_mesh,
                        overlap_regions, schedule_overlap_messages, tile_layer)

__version__ = "0.1.0"

__all__ = [
    "AccelConfig", "ResourceEstimate", "adder_count", "builtin_config",
    "builtin_config_names", "channel_lanes", "parse_config", "pe_count",
    "peak_throughput", "resource_estimate", "tile_footprint", "validate_config",
    "AccumulatorOverflowError", "ConfigError", "DeconvSimError", "SchemaError",
    "ShapeMismatchError", "TraceLimitError",
    "EventStats", "MeshEventSim", "simulate_layer_events",
    "FxFormat", "accumulation_bound", "check_accumulator_range", "dequantize",
    "quantize", "quantize_with_count", "requantize_accumulator",
    "LayerDescriptor", "count_ops", "output_shape", "sparsity", "validate_layer",
    "TrafficSummary", "bytes_per_cycle", "layer_traffic",
    "overlap_transfer_compute", "transfer_cycles",
    "CycleStats", "adder_tree_reduce", "simulate_layer",
    "NetworkDescriptor", "builtin_benchmarks", "builtin_names",
    "builtin_network", "parse_network", "serialize",
    "contribution_counts", "deconv_insert_conv", "deconv_scatter_add",
    "scatter_add_instrumented", "zero_insert",
    "CSV_COLUMNS", "LayerReport", "NetworkReport", "bound_class",
    "build_layer_report", "build_network_report", "effective_throughput",
    "emit_csv", "emit_json", "emit_report", "gops", "network_sparsity_csv",
    "sparsity_csv", "sparsity_series", "utilization", "valid_throughput",
    "OverlapDescriptor", "TileSchedule", "dump_schedule",
    "fifo_depth_requirement", "map_block_to_mesh", "overlap_regions",
    "schedule_overlap_messages", "tile_layer",
    "__version__",
]
