"""The three-point discrete space: flow limits, geodesics, rays and tangent spaces."""
import numpy as np

from moebspace.flow import antipodalize, integrate_flow
from moebspace.generators import gen_discrete
from moebspace.geometry import extend_ray, midpoint
from moebspace.space import MoebiusPoint, dist
from moebspace.tangent import antipodal_graph, odd_basis

np.set_printoptions(precision=6, suppress=True)

Z = gen_discrete(3)
print("rho0 =\n", Z.rho)

tr = integrate_flow(Z, [1.0, 0.0, 0.0])
print(f"flow from (1,0,0): stop={tr.stop_reason} after t={tr.times[-1]:.2f}, limit {tr.tau_final}")

a, b = MoebiusPoint(Z, [2, -2, -2]), MoebiusPoint(Z, [-2, 2, -2])
m = midpoint(a, b)
print(f"tips at distance {dist(a, b):.1f}; midpoint {m.tau}, distances {dist(a, m):.6f}, {dist(m, b):.6f}")

ray = extend_ray(Z.base_point, 0, 1.0, 4)
print("ray toward point 0:")
for k, p in enumerate(ray.points):
    print(f"  k={k}: {p.tau}  d(o, p)={dist(ray.points[0], p):.6f}")

for tau in ([0, 0, 0], [0.5, -0.5, -0.5]):
    x = antipodalize(Z, tau)
    g = antipodal_graph(x)
    print(f"at {x.tau}: antipodal edges {g.edges}, tangent dimension {odd_basis(x, g).dimension}")
