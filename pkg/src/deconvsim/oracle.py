"""Reference transposed-convolution implementations.

Two independent formulations of the same operator:

* :func:`deconv_insert_conv` (oracle A) stretches the input with inserted
  zeros, pads, and runs a plain direct convolution with the spatially
  flipped kernel. This is the textbook "deconvolution as convolution over a
  zero-inserted map" gather form.
* :func:`deconv_scatter_add` (oracle B) walks input activations and stamps
  scaled kernel blocks into the output, summing where stamps overlap. This
  is the scatter form the accelerator's dataflow is built around.

Both accept either exact integers (``fx=None``) or raw fixed-point words
(``fx`` given, accumulation kept at product scale and requantized once on
write-back). Agreement between the two, and between them and the mesh
simulator, is element-exact by construction; the test suite leans on that.

Array conventions: activations are (Nc, H, W) or (Nc, D, H, W); weights are
(Nm, Nc, K, K) or (Nm, Nc, K, K, K); outputs are (Nm, ...cropped spatial).
Everything is normalized internally to a unit-depth 3D layout so the two
dimensionalities share one code path.
"""

from __future__ import annotations

import numpy as np

from .errors import AccumulatorOverflowError, ShapeMismatchError
from .fixedpoint import FxFormat, check_accumulator_range, requantize_accumulator
from .layers import LayerDescriptor, kernel3, output_shape3, spatial3, stride3


def _as_int64(arr, what: str) -> np.ndarray:
    a = np.asarray(arr)
    if not np.issubdtype(a.dtype, np.integer):
        raise ShapeMismatchError(f"{what} must be integer-typed, got {a.dtype}")
    return a.astype(np.int64)


def _check_shapes(x: np.ndarray, w: np.ndarray, layer: LayerDescriptor) -> None:
    want_x = (layer.in_channels,) + layer.in_size
    want_w = (layer.out_channels, layer.in_channels) + (layer.kernel,) * layer.dims
    if x.shape != want_x:
        raise ShapeMismatchError(f"activations {x.shape}, expected {want_x}")
    if w.shape != want_w:
        raise ShapeMismatchError(f"weights {w.shape}, expected {want_w}")


def _to3d(x: np.ndarray, w: np.ndarray, layer: LayerDescriptor):
    """Unit-depth normalization so 2D layers ride the 3D code path."""
    if layer.dims == 2:
        return x[:, None, :, :], w[:, :, None, :, :]
    return x, w


def _guard_int64(x: np.ndarray, w: np.ndarray, layer: LayerDescriptor) -> None:
    # worst-case per-output-element accumulation must stay inside int64
    mult = 1
    for k, s in zip(kernel3(layer), stride3(layer)):
        mult *= -(-k // s)  # ceil(K/S) stamps can meet at one point per axis
    mx = int(np.max(np.abs(x), initial=0))
    mw = int(np.max(np.abs(w), initial=0))
    if mx * mw * layer.in_channels * mult >= 2**62:
        raise AccumulatorOverflowError(
            "integer-mode accumulation could exceed the int64 working range"
        )


def _finish(full: np.ndarray, layer: LayerDescriptor, fx) -> np.ndarray:
    """Crop borders, then fold the accumulator scale back to words if asked."""
    p = layer.crop
    if p:
        if layer.dims == 2:
            full = full[:, :, p:-p, p:-p]
        else:
            full = full[:, p:-p, p:-p, p:-p]
    if layer.dims == 2:
        full = full[:, 0]
    if fx is not None:
        check_accumulator_range(full, fx)
        words, _ = requantize_accumulator(full, fx)
        return words
    return full.copy()


def zero_insert(x, layer: LayerDescriptor) -> np.ndarray:
    """Stretch activations with S-1 zeros between neighbors per spatial axis.

    Output extent per axis is (I-1)*S + 1 with the real activations sitting
    at multiples of S. For 3D this inserts whole zero planes between depth
    slices.
    """
    a = np.asarray(x)
    want = (layer.in_channels,) + layer.in_size
    if a.shape != want:
        raise ShapeMismatchError(f"activations {a.shape}, expected {want}")
    stretched = tuple((i - 1) * layer.stride + 1 for i in layer.in_size)
    out = np.zeros((layer.in_channels,) + stretched, dtype=a.dtype)
    out[(slice(None),) + (slice(None, None, layer.stride),) * layer.dims] = a
    return out


def deconv_insert_conv(x, w, layer: LayerDescriptor, fx: FxFormat | None = None):
    """Oracle A: zero-insert, pad by K-1, correlate with the flipped kernel.

    Padding by K-1 on every border makes the valid correlation span exactly
    the full (I-1)*S+K output; cropping then trims ``layer.crop`` per side.
    """
    x = _as_int64(x, "activations")
    w = _as_int64(w, "weights")
    _check_shapes(x, w, layer)
    _guard_int64(x, w, layer)
    x3, w3 = _to3d(x, w, layer)

    kd, kh, kw = kernel3(layer)
    sd, sh, sw = stride3(layer)
    idim, ih, iw = spatial3(layer)
    od, oh, ow = output_shape3(layer)

    stretched = np.zeros(
        (layer.in_channels, (idim - 1) * sd + 1, (ih - 1) * sh + 1, (iw - 1) * sw + 1),
        dtype=np.int64,
    )
    stretched[:, ::sd, ::sh, ::sw] = x3
    padded = np.pad(
        stretched, ((0, 0), (kd - 1, kd - 1), (kh - 1, kh - 1), (kw - 1, kw - 1))
    )
    flipped = w3[:, :, ::-1, ::-1, ::-1]

    full = np.zeros((layer.out_channels, od, oh, ow), dtype=np.int64)
    for a in range(kd):
        for b in range(kh):
            for c in range(kw):
                window = padded[:, a : a + od, b : b + oh, c : c + ow]
                full += np.einsum("cdhw,mc->mdhw", window, flipped[:, :, a, b, c])
    return _finish(full, layer, fx)


def _scatter_full(x3, w3, layer: LayerDescriptor):
    """Stamp every activation's scaled kernel block into the full output.

    Returns the uncropped accumulation plus the exact number of scalar
    multiplications performed; strided views guarantee stamps laid down in
    one kernel-offset step never collide with each other.
    """
    kd, kh, kw = kernel3(layer)
    sd, sh, sw = stride3(layer)
    idim, ih, iw = spatial3(layer)
    od, oh, ow = output_shape3(layer)

    full = np.zeros((layer.out_channels, od, oh, ow), dtype=np.int64)
    macs = 0
    per_offset = layer.out_channels * layer.in_channels * idim * ih * iw
    for a in range(kd):
        for b in range(kh):
            for c in range(kw):
                view = full[
                    :,
                    a : a + (idim - 1) * sd + 1 : sd,
                    b : b + (ih - 1) * sh + 1 : sh,
                    c : c + (iw - 1) * sw + 1 : sw,
                ]
                view += np.einsum("cdhw,mc->mdhw", x3, w3[:, :, a, b, c])
                macs += per_offset
    return full, macs


def deconv_scatter_add(x, w, layer: LayerDescriptor, fx: FxFormat | None = None):
    """Oracle B: per-activation kernel stamping with overlap summation."""
    out, _ = scatter_add_instrumented(x, w, layer, fx)
    return out


def scatter_add_instrumented(
    x, w, layer: LayerDescriptor, fx: FxFormat | None = None
):
    """Oracle B plus its exact scalar-multiplication count.

    The count is what "no invalid operations" means: it must equal
    Nc * Nm * prod(I) * K^dims, never the zero-padded nominal figure.
    """
    x = _as_int64(x, "activations")
    w = _as_int64(w, "weights")
    _check_shapes(x, w, layer)
    _guard_int64(x, w, layer)
    x3, w3 = _to3d(x, w, layer)
    full, macs = _scatter_full(x3, w3, layer)
    return _finish(full, layer, fx), macs


def contribution_counts(layer: LayerDescriptor) -> np.ndarray:
    """How many (activation, kernel-tap) pairs land on each full-output cell.

    Computed for a single channel pair; shape is the full uncropped output
    normalized to (D, H, W). Cells covered by one kernel stamp hold 1,
    overlap regions hold the stamp multiplicity.
    """
    kd, kh, kw = kernel3(layer)
    sd, sh, sw = stride3(layer)
    idim, ih, iw = spatial3(layer)
    counts = np.zeros(output_shape3(layer), dtype=np.int64)
    for a in range(kd):
        for b in range(kh):
            for c in range(kw):
                counts[
                    a : a + (idim - 1) * sd + 1 : sd,
                    b : b + (ih - 1) * sh + 1 : sh,
                    c : c + (iw - 1) * sw + 1 : sw,
                ] += 1
    return counts
