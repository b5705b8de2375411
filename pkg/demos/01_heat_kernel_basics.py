"""Spectral heat kernels on the periodic box.

Walks through the substrate every other capability builds on: the periodized
Gaussian, its derivatives, the semigroup, and the dilated-convolution identity
that powers the two-sided kernel estimates.
"""

import numpy as np

from heatlab import grid as g

spec = g.make_grid(d=1, n=256, L=40.0)
print(f"grid: n={spec.n}, L={spec.L}, h={spec.h}")

# The kernel is defined through the multiplier exp(-t|xi|^2/2); its mass is
# exactly 1 and its origin value matches the whole-space Gaussian once the box
# dwarfs the diffusion length.
p = g.gaussian(spec, t=1.0)
print(f"p(1, 0) = {p.values[spec.n // 2]:.10f}   (2*pi)^-1/2 = {(2 * np.pi) ** -0.5:.10f}")
print(f"mass = {p.integral():.15f}")

# Wraparound is an error, not a silent degradation.
try:
    g.gaussian(spec, t=40.0)
except Exception as exc:
    print(f"too-large time rejected: {type(exc).__name__}")

# Semigroup law and Gaussian composition, both at the 1e-10 scale.
f = g.GridField(spec, np.cos(2 * np.pi * 3 / spec.L * spec.axis_points()))
lhs = g.semigroup_apply(g.semigroup_apply(f, 0.3), 0.2)
rhs = g.semigroup_apply(f, 0.5)
print(f"semigroup defect: {np.abs(lhs.values - rhs.values).max():.2e}")

conv = g.convolve(g.gaussian(spec, 0.25), g.gaussian(spec, 0.5))
print(f"p(.25)*p(.5) vs p(.75): {np.abs(conv.values - g.gaussian(spec, 0.75).values).max():.2e}")

# The dilated identity p(c(t-s)) * p(cs) = p(ct) is the glue of the upper
# bound argument; it holds to quadrature precision.
c, t, s = 2.0, 1.0, 0.25
conv = g.convolve(g.gaussian(spec, c * (t - s)), g.gaussian(spec, c * s))
print(f"dilated identity defect: {np.abs(conv.values - g.gaussian(spec, c * t).values).max():.2e}")

# Derivative envelope: |d^mu p(t)| <= C t^{-|mu|/2} p(2t) with one constant
# for all t; we can only measure C, never derive it.
spec_fine = g.make_grid(1, 8192, 40.0)
for mu in ((1,), (2,)):
    consts = []
    for t in (0.01, 0.1, 1.0, 10.0):
        dp = np.abs(g.gaussian_deriv(spec_fine, t, mu).values)
        env = g.gaussian(spec_fine, 2 * t).values
        mask = env > 1e-13 * env.max()
        consts.append((dp[mask] / (t ** (-sum(mu) / 2) * env[mask])).max())
    print(f"measured envelope constant, |mu|={sum(mu)}: "
          f"{min(consts):.5f} .. {max(consts):.5f}")

# Exponential moments against a dilated kernel have a closed form.
val = g.gaussian_exp_moment(c=0.5, kappa=0.5, t=1.0, d=1)
print(f"exp moment: {val:.8f}  closed form sqrt(2) = {np.sqrt(2):.8f}")
