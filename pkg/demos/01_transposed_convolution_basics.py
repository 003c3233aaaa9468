"""Transposed convolution, three ways, all element-exact.

Walks a tiny 2D layer through (a) explicit scatter-add of kernel stamps,
(b) zero-insertion followed by an ordinary convolution, and (c) the mesh
simulator, and shows they produce the same tensor. Run it; the point is
to see the overlap arithmetic once with real numbers.
"""

import numpy as np

from deconvsim import (LayerDescriptor, builtin_config, deconv_insert_conv,
                       deconv_scatter_add, output_shape, simulate_layer,
                       zero_insert)

layer = LayerDescriptor(
    name="demo", dims=2, in_channels=1, out_channels=1,
    in_size=(2, 2), kernel=3, stride=2,
)

x = np.array([[[1, 2],
               [3, 4]]])
w = np.arange(9).reshape(1, 1, 3, 3)

full, cropped = output_shape(layer)
print(f"input {layer.in_size}, kernel {layer.kernel}, stride {layer.stride}")
print(f"output: full {full}, cropped {cropped}   # (I-1)*S + K per axis")
print()

# each input element stamps a scaled copy of the kernel at i*S; where
# stamps land on the same output element (here the middle column and row,
# thickness K-S = 1) the products add
a = deconv_scatter_add(x, w, layer)
print("scatter-add result:")
print(a[0])
print()

# the same thing as a dense convolution: S-1 zeros between elements,
# K-1 border padding, kernel flipped
print("zero-inserted input (before padding):")
print(zero_insert(x, layer)[0])
b = deconv_insert_conv(x, w, layer)
print()

c, stats = simulate_layer(layer, builtin_config("table2-2d"), x, w)

print(f"insert+conv == scatter: {np.array_equal(a, b)}")
print(f"mesh sim    == scatter: {np.array_equal(a, c)}")
print(f"mesh sim MACs: {stats.mac_count} "
      f"(= Nc*Nm*I*I*K*K = {1 * 1 * 4 * 9})")
