"""Recovering -log rho0 and log-derivatives on the 16-point circle from deep rays."""
import numpy as np

from moebspace.generators import gen_circle, random_point
from moebspace.geometry import boundary_gromov_limit, busemann_estimate, hyperbolicity_delta, extend_ray

Z = gen_circle(16)
o = Z.base_point
print(f"circle-16: quasi-metric constant K = {Z.qm_constant:.6f}, log K = {np.log(Z.qm_constant):.6f}")

for xi, eta in [(0, 1), (0, 4), (0, 8), (3, 11)]:
    est = boundary_gromov_limit(o, xi, eta, depth=8, depths=[2, 4, 8])
    print(f"(xi, eta) = ({xi}, {eta}): series {np.round(est.series, 9)}  target {est.reference:.9f}")

rho2 = random_point(Z, 1)
est = busemann_estimate(o, rho2, 5, depth=8, depths=[2, 4, 8])
print(f"Busemann toward 5: series {np.round(est.series, 9)}  target {est.reference:.9f}")

pts = [o] + [p for xi in range(16) for p in extend_ray(o, xi, 1.0, 6).points[1:]]
rep = hyperbolicity_delta(pts, cap=len(pts), base_only=True)
print(f"delta_hat over {len(pts)} ray points with w = base: {rep.delta_hat:.9f} (log K gap {rep.log_gap:.1e})")
