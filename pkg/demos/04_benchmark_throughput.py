"""Benchmark networks through the cycle model.

Builds the per-layer report for all four bundled networks (two 2D GANs,
two 3D volumetric nets) on the matching mesh configuration and prints the
interesting columns. The effective figure is throughput measured against
the zero-inserted dense workload; the valid figure counts only real MACs.
"""

from deconvsim import (builtin_config, builtin_network, build_network_report,
                       peak_throughput)

header = (f"{'network':>8} {'layer':>6} {'util':>7} {'gops_valid':>11} "
          f"{'gops_eff':>9} {'sparsity':>9} {'bound':>8}")

for name in ("dcgan", "gp-gan", "3d-gan", "vnet"):
    net = builtin_network(name)
    cfg = builtin_config("table2-2d" if net.dims == 2 else "table2-3d")
    rep = build_network_report(net, cfg)
    print(header)
    for lr in rep.layers:
        print(f"{lr.network:>8} {lr.layer:>6} {lr.utilization:7.4f} "
              f"{lr.gops_valid:11.1f} {lr.gops_effective:9.1f} "
              f"{lr.sparsity:9.4f} {lr.bound_class:>8}")
    s = rep.summary
    print(f"{s.network:>8} {'TOTAL':>6} {s.utilization:7.4f} "
          f"{s.gops_valid:11.1f} {s.gops_effective:9.1f} "
          f"{s.sparsity:9.4f} {s.bound_class:>8}")
    print(f"{'':>8} cycles {s.cycles_total}, "
          f"peak {peak_throughput(cfg):.1f} GOP/s, "
          f"effective {s.gops_effective / 1000:.3f} TOPS")
    print()
