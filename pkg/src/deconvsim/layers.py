"""Deconvolution layer descriptors and first-order operation counts.

Conventions used package-wide:

* tensors are laid out (channel, depth, height, width); 2D layers simply
  omit the depth axis,
* ``in_size`` is (H, W) for 2D layers and (D, H, W) for 3D layers,
* kernels are uniform per axis (extent K on every spatial axis), stride S
  is uniform too, and ``crop`` trims that many border elements from every
  side of every real spatial axis of the full output,
* the full output extent per axis is ``(I - 1) * S + K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SchemaError


@dataclass
class LayerDescriptor:
    name: str
    dims: int
    in_channels: int
    out_channels: int
    in_size: tuple
    kernel: int = 3
    stride: int = 2
    crop: int = 0

    def __post_init__(self):
        # lenient on purpose: validate_layer reports problems, it does not
        # stop you from constructing a descriptor to inspect
        if isinstance(self.in_size, int):
            self.in_size = (self.in_size,) * max(self.dims, 1)
        else:
            self.in_size = tuple(int(s) for s in self.in_size)

    def require_valid(self) -> "LayerDescriptor":
        problems = validate_layer(self)
        if problems:
            raise SchemaError(f"{self.name}: " + "; ".join(problems))
        return self


def validate_layer(layer: LayerDescriptor) -> list[str]:
    """Return a list of human-readable problems, empty when the layer is sane.

    All violations are reported, not just the first.
    """
    problems = []
    if layer.dims not in (2, 3):
        problems.append(f"dims must be 2 or 3, got {layer.dims}")
        return problems  # everything downstream keys off dims
    if layer.in_channels < 1 or layer.out_channels < 1:
        problems.append(
            "positive channels required "
            f"(in={layer.in_channels}, out={layer.out_channels})"
        )
    if len(layer.in_size) != layer.dims:
        problems.append(
            f"in_size has {len(layer.in_size)} axes, expected {layer.dims}"
        )
    elif any(s < 1 for s in layer.in_size):
        problems.append(f"in_size must be positive, got {layer.in_size}")
    if layer.kernel < 1:
        problems.append(f"kernel must be >= 1, got {layer.kernel}")
    if layer.stride < 1:
        problems.append(f"stride must be >= 1, got {layer.stride}")
    elif layer.kernel >= 1 and layer.stride > layer.kernel:
        # overlap length K - S would go negative
        problems.append(
            f"K >= S required, got K={layer.kernel}, S={layer.stride}"
        )
    if layer.crop < 0:
        problems.append(f"crop must be >= 0, got {layer.crop}")
    if not problems:
        full, cropped = output_shape(layer)
        if any(c < 1 for c in cropped):
            problems.append(
                f"crop {layer.crop} leaves empty output {cropped} (full {full})"
            )
    return problems


def output_shape(layer: LayerDescriptor) -> tuple:
    """(full, cropped) output spatial shapes, one entry per real axis.

    Full extent per axis is (I - 1) * S + K; cropping trims ``crop`` from
    both borders of each axis.
    """
    full = tuple((i - 1) * layer.stride + layer.kernel for i in layer.in_size)
    cropped = tuple(f - 2 * layer.crop for f in full)
    return full, cropped


def count_ops(layer: LayerDescriptor, mode: str = "valid") -> int:
    """Multiply-accumulate operation count, 2 ops per MAC.

    ``valid`` counts only MACs fed by real input elements: every input
    element meets every kernel weight exactly once, so
    2 * Nc * Nm * prod(I) * K^dims.

    ``nominal`` is the dense-convolution equivalent over the zero-inserted,
    padded input, i.e. what a conventional convolver would execute to
    produce the same full (uncropped) output:
    2 * Nc * Nm * K^dims * prod((I-1)S + K). Throughput quoted against this
    count is the "effective" figure.
    """
    kvol = layer.kernel ** layer.dims
    base = 2 * layer.in_channels * layer.out_channels * kvol
    if mode == "valid":
        return base * math.prod(layer.in_size)
    if mode == "nominal":
        full, _ = output_shape(layer)
        return base * math.prod(full)
    raise ValueError(f"unknown count mode {mode!r}")


def sparsity(layer: LayerDescriptor) -> float:
    """Zero fraction of the zero-inserted (unpadded) input grid.

    Per axis the stretched extent is (I-1)*S + 1, of which I entries are
    real. Approaches 1 - S**-dims for large inputs.
    """
    real = math.prod(layer.in_size)
    stretched = math.prod((i - 1) * layer.stride + 1 for i in layer.in_size)
    return 1.0 - real / stretched


def spatial3(layer: LayerDescriptor) -> tuple:
    """Input size normalized to (D, H, W); 2D layers get a unit depth axis."""
    if layer.dims == 2:
        return (1,) + layer.in_size
    return layer.in_size


def kernel3(layer: LayerDescriptor) -> tuple:
    """Kernel extents normalized to (Kd, Kh, Kw); unit depth extent for 2D."""
    if layer.dims == 2:
        return (1, layer.kernel, layer.kernel)
    return (layer.kernel,) * 3


def output_shape3(layer: LayerDescriptor) -> tuple:
    """Full output normalized to (D, H, W). Unit depth for 2D layers."""
    full, _ = output_shape(layer)
    if layer.dims == 2:
        return (1,) + full
    return full


def stride3(layer: LayerDescriptor) -> tuple:
    """Stride per (D, H, W) axis; the depth axis of a 2D layer never strides."""
    if layer.dims == 2:
        return (1, layer.stride, layer.stride)
    return (layer.stride,) * 3
