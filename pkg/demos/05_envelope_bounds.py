"""Two-sided Gaussian envelopes and the scalar machinery behind them.

The kernel is sandwiched between dilated Gaussians; the constants' growth in
the drift norms is what the whole laboratory exists to measure.  The scalar
side: beta-function bounds, the factorial-gain series inequality, and the
closed-form dominating sums for the correction-size integrals.
"""

import numpy as np

from heatlab import bounds, drifts, grid as g

# Beta function: closed form vs quadrature, and the sup that fuels the
# factorial gains.
print(f"B(1/2,1/2) = {bounds.beta_fn(0.5, 0.5):.12f}  (pi = {np.pi:.12f})")
print(f"quadrature route: {bounds.beta_fn_quadrature(0.7, 2.3):.12f} "
      f"vs {bounds.beta_fn(0.7, 2.3):.12f}")
for d in (0.25, 0.5, 1.0):
    print(f"M_delta({d}) = {bounds.m_delta(d):.4f}")

# The series lemma: sum z^k/(k!)^beta <= L exp(L z^{1/beta}).
for beta in (0.25, 0.5):
    L = bounds.series_bound_L(beta)
    print(f"beta={beta}: fitted L = {L:.3f}")

# Empirical correction-size integrals against their closed-form dominating
# sums, one fitted triple for the whole table.
spec = g.make_grid(1, 256, 8 * np.pi)
b = drifts.single_mode_drift(spec, amplitude=1.0)
table = bounds.ibound_table(b, [0.5, 1.0], k_max=2, m=96, y_points=[0.0])
print(f"I-table: C={table.C} M={table.M:.2f} K={table.K:.3f} "
      f"dominated={table.dominated()}")
for e in table.entries[:6]:
    print(f"  i={e['i']} beta={e['beta']} k={e['k']} t={e['t']}: "
          f"emp={e['empirical']:.4f} rhs={e['rhs']:.4f}")

# Envelope sweep: upper constants grow with the drift amplitude; the lower
# bootstrap composes the short-time kernel with itself.
entries = []
for amp in (1.0, 2.0):
    bb = drifts.single_mode_drift(spec, amplitude=0.25 * amp, xi0=1.5)
    for t in (0.25, 0.5, 1.0):
        entries.append(bounds.envelope_sweep_entry(bb, t, amp, K_max=12, m=96))
rep = bounds.fit_envelope(entries, c=2.0)
for r in rep.rows:
    print(f"  A={r['amplitude']} t={r['t']}: C_upper={r['C_upper']:.4f} "
          f"kappa={r['kappa']} C_lower={r['C_lower']:.4f}")
print(f"growth regression: slope={rep.slope:.3f} r2={rep.r2:.3f}")

boot = bounds.bootstrap_lower_bound(
    drifts.single_mode_drift(spec, amplitude=0.5), a=0.25, kappa=0.5, m=96)
print(f"lower bootstrap: M={boot['M']:.3f} all_ok={boot['all_ok']}")
