"""Pathwise modulus of continuity and exponential sup-moments.

The double-integral functional F controls |X_t - X_s| through a logarithmic
modulus; the closed-form modulus psi is equivalent to the integral one and
submultiplicative, which turns F-control into exponential moments of the
normalized sup.
"""

import numpy as np

from heatlab import drifts, grid as g, montecarlo as mc

spec = g.make_grid(1, 256, 8 * np.pi)

# The two modulus functions are equivalent across twelve decades.
rs = np.geomspace(1e-6, 1e6, 25)
zeta, psi = mc.modulus_functions(rs)
ratio = psi / zeta
print(f"psi/zeta over [1e-6, 1e6]: min {ratio.min():.4f}, max {ratio.max():.4f}")

# Submultiplicativity psi(rs) <= sqrt(2) psi(r) psi(s).
rr = np.geomspace(1e-3, 10, 20)
_, psir = mc.modulus_functions(rr)
worst = 0.0
for i, a in enumerate(rr):
    _, pab = mc.modulus_functions(a * rr)
    worst = max(worst, (pab / (np.sqrt(2) * psir[i] * psir)).max())
print(f"submultiplicativity: worst ratio {worst:.4f} (must be <= 1)")

# Modulus inequality audit on Brownian paths: zero violations expected.
ens = mc.simulate(drifts.zero_drift(spec), 0.0, 1.0, 1e-3, 100, seed=7,
                  keep_paths=100)
violations = 0
worst = 0.0
for i in range(100):
    rep = mc.grr_verify(ens.kept_paths[i], ens.kept_times, kappa=0.1,
                        sample_pairs=50, seed=i)
    violations += rep.violations
    worst = max(worst, rep.max_ratio)
print(f"modulus inequality: {violations} violations over 100x50 pairs, "
      f"worst lhs/rhs = {worst:.3f}")

# Exponential sup-moment of the psi-normalized increments.
M, moment, ratios = mc.exp_sup_moment(ens)
print(f"E[exp(S^2/M)] = {moment:.4f} at M = {M:.2f}, "
      f"S in [{ratios.min():.2f}, {ratios.max():.2f}]")
