"""How much of the zero-inserted workload is actually zeros.

A dense convolution engine running a transposed convolution multiplies
mostly by inserted zeros: the fraction is 1 - prod(I) / prod((I-1)*S + 1),
which climbs toward 1 - 1/S^dims as the input grows. 3D layers waste more
than 2D ones at the same stride, which is the whole argument for skipping
the zeros in hardware.
"""

from deconvsim import builtin_network, sparsity, sparsity_series

print("stride-2 sparsity vs input edge (kernel 3):")
print(f"{'I':>4}  {'2D':>8}  {'3D':>8}")
for (n, s2), (_, s3) in zip(sparsity_series(3, 2, 2, (1, 2, 4, 8, 16, 64)),
                            sparsity_series(3, 2, 3, (1, 2, 4, 8, 16, 64))):
    print(f"{n:>4}  {s2:8.4f}  {s3:8.4f}")
print(f"{'inf':>4}  {0.75:8.4f}  {0.875:8.4f}   # 1 - 1/S^dims")
print()

for name in ("dcgan", "gp-gan", "3d-gan", "vnet"):
    net = builtin_network(name)
    series = ", ".join(f"{sparsity(l):.3f}" for l in net.layers)
    print(f"{net.name:>7} ({net.dims}D): {series}")

print()
print("every 3D benchmark layer sits above every 2D one; the accelerator")
print("turns exactly that fraction of the nominal work into skipped cycles")
