"""What-if sweeps: bandwidth and the overlap-add penalty.

The report builder takes a config, so design questions are one replace()
away. Two examples: how DDR bandwidth moves the memory-bound layers of a
2D GAN, and what charging explicit cycles for overlap accumulation would
cost a 3D network. The CLI exposes the same thing as
`deconvsim sweep --param bandwidth --values ...`.
"""

from dataclasses import replace

from deconvsim import builtin_config, builtin_network, build_network_report

net = builtin_network("gp-gan")
cfg = builtin_config("table2-2d")

print(f"{net.name}: DDR bandwidth vs stalls")
print(f"{'GB/s':>6} {'util':>8} {'stall cycles':>13} {'memory-bound layers':>20}")
for bw in (3.2, 6.4, 12.8, 25.6, 51.2):
    rep = build_network_report(net, replace(cfg, ddr_bandwidth_gbps=bw))
    n_mem = sum(1 for lr in rep.layers if lr.bound_class == "memory")
    s = rep.summary
    print(f"{bw:>6} {s.utilization:8.4f} {s.cycles_stall:>13} {n_mem:>20}")
print()

net3 = builtin_network("3d-gan")
cfg3 = builtin_config("table2-3d")
print(f"{net3.name}: cycles per overlapped kernel position")
print(f"{'extra':>6} {'total cycles':>13} {'eff TOPS':>9}")
for oac in (0, 1, 2, 4):
    rep = build_network_report(net3, cfg3, overlap_add_cycles=oac)
    s = rep.summary
    print(f"{oac:>6} {s.cycles_total:>13} {s.gops_effective / 1000:9.3f}")
print()
print("overlap adds ride the MAC datapath for free in the default model;")
print("the sweep shows the cost if they did not")
