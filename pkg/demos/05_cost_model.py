"""Analytical hardware costs: shared-table lookup vs per-basis tables, and a
spline accelerator against a dense reference design.

Unit costs are synthetic relative numbers; the point is the scaling and the
orderings, not absolute micrometers.
"""

from kanedge.costs import (
    accelerator_cost,
    lookup_path_cost,
    lut_bit_count,
    mlp_baseline_cost,
)
from kanedge.kan import KanLayer, KanNetwork
from kanedge.quant import max_subcell_bits
from kanedge.splines import SplineGrid

print("lookup-path cost, per-basis tables vs one shared half-table (K=3, n=8):")
print(f"  {'G':>3} {'LD':>3} {'conv bits':>10} {'asp bits':>9} {'bit ratio':>9} {'area ratio':>10}")
for G in (8, 16, 32, 64):
    ld = max_subcell_bits(G, 8)
    conv_bits = lut_bit_count("conventional", G, 3, 8, ld, 6)
    asp_bits = lut_bit_count("asp", G, 3, 8, ld, 6)
    conv = lookup_path_cost("conventional", G, 3, 8, ld, 6, 1)
    asp = lookup_path_cost("asp", G, 3, 8, ld, 6, 1)
    print(
        f"  {G:3d} {ld:3d} {conv_bits:10d} {asp_bits:9d} "
        f"{conv_bits / asp_bits:9.1f} {conv.area / asp.area:10.1f}"
    )
print("the gap widens with G: per-basis hardware multiplies, the shared table does not")

grid = SplineGrid(5, 3, -1.0, 1.0)
net = KanNetwork([KanLayer.zeros(17, 1, grid), KanLayer.zeros(1, 14, grid)])
kan = accelerator_cost(net)
mlp = mlp_baseline_cost(190_214, 14)
print(f"\nwhole-design comparison (17x1x14 spline net, {net.n_params} parameters):")
print(f"  {'design':8s} {'params':>8} {'area':>12} {'energy':>12} {'latency':>9}")
print(f"  {'spline':8s} {net.n_params:8d} {kan.area:12.1f} {kan.energy:12.1f} {kan.latency:9.1f}")
print(f"  {'dense':8s} {190_214:8d} {mlp.area:12.1f} {mlp.energy:12.1f} {mlp.latency:9.1f}")
print(
    f"  ratios: area x{mlp.area / kan.area:.0f}, energy x{mlp.energy / kan.energy:.0f}, "
    f"latency x{mlp.latency / kan.latency:.1f}"
)
