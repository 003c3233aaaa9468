"""Accelerator architecture parameters, validation, and coarse resources.

The engine is T_m output-channel groups, each holding T_n x T_z PE planes of
T_r x T_c PEs. For 2D layers the depth dimension is repurposed: the T_z
planes carry extra input channels (T_n*T_z concurrent input feature maps)
and the depth FIFOs sit idle.

Two built-in configurations mirror the reference design point: both have
2048 PEs, differing in how the 64 channel-plane slots split between T_n and
T_z. Peak arithmetic throughput is pe_count * 2 ops * clock.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError, SchemaError
from .layers import LayerDescriptor, kernel3, spatial3

KIB = 1024
MIB = 1024 * 1024


@dataclass(frozen=True)
class AccelConfig:
    t_m: int = 2
    t_n: int = 16
    t_z: int = 4
    t_r: int = 4
    t_c: int = 4
    word_bits: int = 16
    frac_bits: int = 8
    clock_mhz: float = 200.0
    # assumption, not a measured value: two DDR3 channels as found on the
    # target board class; every report echoes it because bound-class
    # conclusions depend on it
    ddr_bandwidth_gbps: float = 25.6
    bandwidth_derating: float = 0.8
    input_buf_bytes: int = 2 * MIB
    weight_buf_bytes: int = 1 * MIB
    output_buf_bytes: int = 2 * MIB

    @property
    def word_bytes(self) -> int:
        return self.word_bits // 8

    def with_overrides(self, **kw) -> "AccelConfig":
        return replace(self, **kw)


_BUILTIN_CONFIGS = {
    "table2-2d": AccelConfig(t_m=2, t_n=64, t_z=1, t_r=4, t_c=4),
    "table2-3d": AccelConfig(t_m=2, t_n=16, t_z=4, t_r=4, t_c=4),
}


def builtin_config_names() -> list[str]:
    return list(_BUILTIN_CONFIGS)


def builtin_config(name: str) -> AccelConfig:
    key = name.lower()
    if key not in _BUILTIN_CONFIGS:
        raise SchemaError(
            f"unknown builtin config {name!r}; choices: {', '.join(_BUILTIN_CONFIGS)}"
        )
    return _BUILTIN_CONFIGS[key]


def pe_count(cfg: AccelConfig) -> int:
    return cfg.t_m * cfg.t_n * cfg.t_z * cfg.t_r * cfg.t_c


def adder_count(cfg: AccelConfig) -> int:
    """Adder-tree adders: T_m * T_c * T_z * log2(T_n)."""
    if cfg.t_n < 1 or cfg.t_n & (cfg.t_n - 1):
        raise ConfigError(f"T_n must be a power of two, got {cfg.t_n}")
    return cfg.t_m * cfg.t_c * cfg.t_z * int(math.log2(cfg.t_n))


def peak_throughput(cfg: AccelConfig) -> float:
    """Raw MAC peak in GOP/s (1 MAC = 2 ops per PE per cycle)."""
    return pe_count(cfg) * 2 * cfg.clock_mhz * 1e6 / 1e9


def channel_lanes(cfg: AccelConfig, dims: int) -> int:
    """Concurrent input channels: T_n for 3D, T_n*T_z for 2D (planes reused)."""
    return cfg.t_n * cfg.t_z if dims == 2 else cfg.t_n


def tile_footprint(cfg: AccelConfig, layer: LayerDescriptor) -> dict:
    """Worst-case on-chip bytes for one resident tile, per buffer.

    The output block includes the overlap halo: a full tile stamps
    (T-1)*S + K elements per axis before cropping.
    """
    k = layer.kernel
    s = layer.stride
    lanes = channel_lanes(cfg, layer.dims)
    n_act = min(lanes, layer.in_channels)
    m_act = min(cfg.t_m, layer.out_channels)
    if layer.dims == 2:
        exts = (1, cfg.t_r, cfg.t_c)
    else:
        exts = (cfg.t_z, cfg.t_r, cfg.t_c)
    exts = tuple(min(e, i) for e, i in zip(exts, spatial3(layer)))
    out_elems = 1
    for e, kk in zip(exts, kernel3(layer)):
        out_elems *= (e - 1) * s + kk
    wb = cfg.word_bytes
    return {
        "input": n_act * math.prod(exts) * wb,
        "weight": m_act * n_act * k**layer.dims * wb,
        "output": m_act * out_elems * wb,
    }


def validate_config(cfg: AccelConfig, layer: LayerDescriptor | None = None) -> list[str]:
    """All configuration problems, optionally including layer-fit checks."""
    problems = []
    for name in ("t_m", "t_n", "t_z", "t_r", "t_c"):
        if getattr(cfg, name) < 1:
            problems.append(f"{name} must be >= 1, got {getattr(cfg, name)}")
    if cfg.t_n >= 1 and cfg.t_n & (cfg.t_n - 1):
        problems.append(f"T_n must be a power of two, got {cfg.t_n}")
    if cfg.word_bits % 8 or cfg.word_bits < 8:
        problems.append(f"word_bits must be a positive multiple of 8, got {cfg.word_bits}")
    if not (0 <= cfg.frac_bits < cfg.word_bits):
        problems.append(f"frac_bits out of range: {cfg.frac_bits}")
    if cfg.clock_mhz <= 0:
        problems.append(f"clock_mhz must be positive, got {cfg.clock_mhz}")
    if cfg.ddr_bandwidth_gbps <= 0:
        problems.append(f"ddr_bandwidth_gbps must be positive, got {cfg.ddr_bandwidth_gbps}")
    if not (0 < cfg.bandwidth_derating <= 1):
        problems.append(f"bandwidth_derating must be in (0, 1], got {cfg.bandwidth_derating}")
    for name in ("input_buf_bytes", "weight_buf_bytes", "output_buf_bytes"):
        if getattr(cfg, name) < 1:
            problems.append(f"{name} must be positive, got {getattr(cfg, name)}")
    if layer is not None and not problems:
        need = tile_footprint(cfg, layer)
        have = {
            "input": cfg.input_buf_bytes,
            "weight": cfg.weight_buf_bytes,
            "output": cfg.output_buf_bytes,
        }
        for buf in ("input", "weight", "output"):
            if need[buf] > have[buf]:
                problems.append(
                    f"{buf} buffer too small for one tile: "
                    f"required {need[buf]} B, available {have[buf]} B"
                )
    return problems


def require_valid_config(cfg: AccelConfig, layer: LayerDescriptor | None = None) -> AccelConfig:
    problems = validate_config(cfg, layer)
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


@dataclass(frozen=True)
class ResourceEstimate:
    multipliers: int
    adders: int
    buffer_bits: int
    fifo_bits: int


def resource_estimate(
    cfg: AccelConfig, kernel: int = 3, stride: int = 2, dims: int = 3
) -> ResourceEstimate:
    """Coarse resource magnitudes: one multiplier and one accumulate adder
    per PE, tree adders on top, FIFO storage sized for the given kernel.

    Order-of-magnitude bookkeeping only; no LUT/FF mapping is attempted.
    """
    from .scheduler import fifo_depth_requirement

    pes = pe_count(cfg)
    depth = fifo_depth_requirement(kernel, stride, dims) + kernel**dims
    directions = 3 if dims == 3 else 2
    return ResourceEstimate(
        multipliers=pes,
        adders=pes + adder_count(cfg),
        buffer_bits=8 * (cfg.input_buf_bytes + cfg.weight_buf_bytes + cfg.output_buf_bytes),
        fifo_bits=pes * directions * depth * cfg.word_bits,
    )


_CONFIG_KEYS = {
    "t_m", "t_n", "t_z", "t_r", "t_c", "word_bits", "frac_bits",
    "clock_mhz", "ddr_bandwidth_gbps", "buffers",
}


def parse_config(source) -> AccelConfig:
    """Load an accelerator config from JSON; absent fields keep defaults."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        s = str(source)
        text = s if s.lstrip().startswith("{") else Path(s).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError("config file must hold a JSON object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise SchemaError(f"config: unknown fields {sorted(unknown)}")
    kw = {}
    for name in ("t_m", "t_n", "t_z", "t_r", "t_c", "word_bits", "frac_bits"):
        if name in obj:
            v = obj[name]
            if isinstance(v, bool) or not isinstance(v, int):
                raise SchemaError(f"config: field {name!r} must be an integer, got {v!r}")
            kw[name] = v
    for name in ("clock_mhz", "ddr_bandwidth_gbps"):
        if name in obj:
            v = obj[name]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"config: field {name!r} must be a number, got {v!r}")
            kw[name] = float(v)
    if "buffers" in obj:
        bufs = obj["buffers"]
        if not isinstance(bufs, dict) or set(bufs) - {"input", "weight", "output"}:
            raise SchemaError("config: 'buffers' must be {input, weight, output}")
        for short, name in (
            ("input", "input_buf_bytes"),
            ("weight", "weight_buf_bytes"),
            ("output", "output_buf_bytes"),
        ):
            if short in bufs:
                v = bufs[short]
                if isinstance(v, bool) or not isinstance(v, int):
                    raise SchemaError(f"config: buffers.{short} must be an integer byte count")
                kw[name] = v
    cfg = AccelConfig(**kw)
    problems = validate_config(cfg)
    if problems:
        raise SchemaError("config: " + "; ".join(problems))
    return cfg
