"""A single loop, start to finish.

A 3x3 image with a dark border and a bright centre is the smallest picture
that holds a hole. Sweeping the threshold upward, the border appears at 0.1
and closes into a loop; the loop is filled when the centre enters at 1.0.
"""
import numpy as np

from gprtopo import (GrayImage, betti_curve, betti_oracle, build_sublevel_complex,
                     compute_persistence, render_shape_map)

px = np.full((3, 3), 0.1)
px[1, 1] = 1.0
img = GrayImage(px)

cx = build_sublevel_complex(img)
print("cells (vertices, edges, squares):", cx.counts())

for method in ("standard", "twist", "unionfind"):
    d = compute_persistence(cx, method)
    print(f"{method:>9}:", [(p.dim, p.birth, p.death) for p in d.pairs])

d = compute_persistence(cx)
loop = d.of_dim(1)[0]
print("loop lifetime:", loop.lifetime)
print("cycle edges:", loop.rep_cycle)

for eps in (0.05, 0.1, 0.5, 1.0):
    print(f"eps={eps}: curve b1={betti_curve(d, 1, eps)}  oracle={betti_oracle(cx, eps)}")

print("shape map:")
print(render_shape_map(d, (3, 3)).values)
