"""Antipodal graphs, odd vectors and exact straight lines at random points."""
import numpy as np

from moebspace.generators import gen_circle, random_point, rng
from moebspace.tangent import odd_basis, random_odd_vector, tangent_line_check

Z = gen_circle(8)
g = rng(0)
for seed in range(4):
    x = random_point(Z, seed)
    odd = odd_basis(x)
    edges = odd.graph.edges
    v = random_odd_vector(odd, g)
    inside = tangent_line_check(x, v, 0.5 * tangent_line_check(x, v, 0.0).t_star)
    outside = tangent_line_check(x, v, 3.0 * inside.t_star)
    print(f"seed {seed}: {len(edges)} antipodal edges, dimension {odd.dimension}, t_star {inside.t_star:.4f}")
    print(f"   inside: discrepancy change {inside.disc_excess:.1e}, distance {inside.distance:.4f}")
    print(f"   outside: deviation from straight line {outside.deviation:.4f}")
