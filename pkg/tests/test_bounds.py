"""Scalar inequality machinery and envelope extraction."""

import numpy as np
import pytest

from heatlab import bounds, drifts, dyadic as dy, grid as g, parametrix as px
from heatlab.errors import EnvelopeViolated


def test_beta_fn_basics():
    assert abs(bounds.beta_fn(1.0, 1.0) - 1.0) < 1e-14
    assert abs(bounds.beta_fn(0.5, 0.5) - np.pi) < 1e-10
    with pytest.raises(ValueError):
        bounds.beta_fn(0.0, 1.0)
    with pytest.raises(ValueError):
        bounds.beta_fn(1.0, -0.5)


def test_beta_fn_symmetry_grid():
    vals = np.linspace(0.1, 3.0, 12)
    for b1 in vals:
        for b2 in vals:
            assert abs(bounds.beta_fn(b1, b2) - bounds.beta_fn(b2, b1)) < 1e-12


def test_beta_fn_vs_quadrature_oracle():
    for b1, b2 in ((0.7, 2.3), (0.5, 0.5), (1.3, 0.4)):
        assert abs(bounds.beta_fn(b1, b2) - bounds.beta_fn_quadrature(b1, b2)) < 1e-8


def test_m_delta():
    ds = [0.1, 0.25, 0.5, 0.75, 1.0]
    vals = [bounds.m_delta(d) for d in ds]
    assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))  # nonincreasing
    assert abs(bounds.m_delta(1.0) - 1.0) < 1e-6
    v1 = bounds.m_delta(0.25)
    v2 = bounds.m_delta(0.25, gamma_max=2 * 64 / 0.25)
    assert abs(v2 - v1) / v1 < 0.005
    # the lemma's inequality, literal: B(beta,gamma) <= M_delta * gamma^{-beta}
    delta = 0.25
    M = bounds.m_delta(delta)
    rng = np.random.default_rng(0)
    for _ in range(200):
        b1 = rng.uniform(delta, 1.0)
        g1 = rng.uniform(delta, 64 / delta)
        assert bounds.beta_fn(b1, g1) <= M * g1 ** (-b1) * (1 + 1e-9)


def test_subadditive_power_identity():
    # (a+b)^alpha <= a^alpha + b^alpha for a, b >= 0, alpha in (0,1)
    rng = np.random.default_rng(1)
    a = rng.uniform(0, 10, 300)
    b = rng.uniform(0, 10, 300)
    for alpha in (0.25, 0.5, 0.9):
        assert np.all((a + b) ** alpha <= a**alpha + b**alpha + 1e-12)


def test_series_partial():
    v0, r0 = bounds.series_partial(0.0, 0.5, 10)
    assert v0 == 1.0 and r0 == 0.0
    v, rem = bounds.series_partial(4.0, 0.5, 40)
    v2, _ = bounds.series_partial(4.0, 0.5, 80)
    # the estimate bounds the true tail and is small relative to the sum
    assert v2 - v <= rem <= 1e-3 * v
    _, rem80 = bounds.series_partial(4.0, 0.5, 80)
    assert rem80 < 1e-10 * v
    with pytest.raises(ValueError):
        bounds.series_partial(-1.0, 0.5, 10)
    with pytest.raises(ValueError):
        bounds.series_partial(1.0, 1.5, 10)


def test_series_bound_L():
    for beta in (0.25, 0.375, 0.5):
        L = bounds.series_bound_L(beta)
        assert np.isfinite(L) and L >= 1.0
        # spot-check the inequality off the fitting grid
        for z in (0.37, 3.3, 17.0, 49.0):
            lhs = bounds._log_series(z, beta)
            assert np.log(L) + L * z ** (1 / beta) >= lhs - 1e-9


def test_i_rhs():
    assert bounds.i_rhs(2, 0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.25) == 0.0
    # k=1, Y=0: single term m=1, n=0
    K, C, M, X, t, i = 2.0, 1.5, 3.0, 0.7, 0.8, 1
    val = bounds.i_rhs(1, i, 0.0, t, X, 0.0, C, M, K, 0.25)
    assert abs(val - K * t ** (-i / 2) * C * M * X * t**0.5) < 1e-12
    # re-summation in reverse order at k=6
    k, X, Y, alpha, beta_sel, t = 6, 0.9, 1.1, 0.25, 0.25, 0.7
    total = 0.0
    from scipy.special import gammaln
    for nn in range(k + 1):  # reversed roles
        mm = k - nn
        term = (C * M * X * t**0.5) ** mm / np.exp(((1 - beta_sel) / 2) * gammaln(mm + 1))
        term *= (C * M * Y * t ** ((1 - alpha) / 2)) ** nn / np.exp(
            ((1 - alpha - beta_sel) / 2) * gammaln(nn + 1))
        total += term
    total *= K * t ** (-(1 + beta_sel) / 2)
    assert abs(bounds.i_rhs(k, 1, beta_sel, t, X, Y, C, M, K, alpha) - total) < 1e-12 * total


def test_i_empirical_zero_drift(spec8pi_small):
    b0 = drifts.zero_drift(spec8pi_small)
    assert bounds.i_empirical(b0, 0.5, 1, 0, 0.0, y_points=[0.0], m=32) == 0.0


def test_ibound_table_dominance(spec8pi):
    b = drifts.single_mode_drift(spec8pi, amplitude=1.0)
    table = bounds.ibound_table(b, [0.5], k_max=2, m=48, y_points=[0.0])
    assert table.dominated()
    assert np.isfinite(table.K) and table.K > 0
    assert len(table.entries) == 2 * 2 * 2


def test_i_recursion_consistency(spec8pi):
    # I_{i,k+1}(t) <= C * int (t-s)^{-(i+b)/2} (X I_{1,k}(s) + Y[...]) ds
    # with a finite fitted constant of moderate size; n=256 keeps the grid
    # product aliasing below the ratio floor
    spec = spec8pi
    b = drifts.single_mode_drift(spec, amplitude=1.0)
    X, Y = dy.drift_norms(b)
    alpha = b.alpha
    t = 0.5
    cache = {}
    s_grid = np.array([0.125, 0.25, 0.375, 0.5]) * t / 0.5
    I10 = np.array([bounds.i_empirical(b, float(s), 1, 1, 0.0, y_points=[0.0],
                                       m=32, K_cache=cache) for s in s_grid])
    I1a = np.array([bounds.i_empirical(b, float(s), 1, 1, alpha, y_points=[0.0],
                                       m=32, K_cache=cache) for s in s_grid])
    worst = 0.0
    for i in (0, 1):
        for beta_sel in (0.0, alpha):
            lhs = bounds.i_empirical(b, t, 2, i, beta_sel, y_points=[0.0],
                                     m=32, K_cache={})
            w = (t - s_grid[:-1]) ** (-(i + beta_sel) / 2)
            integrand = w * (X * I10[:-1]
                             + Y * ((t - s_grid[:-1]) ** (-alpha / 2) * I10[:-1]
                                    + I1a[:-1]))
            rhs_int = np.trapezoid(np.append(integrand, integrand[-1]), s_grid)
            if rhs_int > 0:
                worst = max(worst, lhs / rhs_int)
    assert np.isfinite(worst)
    assert worst < 50


def test_sharp_const_drift():
    assert abs(bounds.sharp_const_drift(0.0, 2.0, 1.0, 1, "upper") - np.sqrt(2)) < 1e-14
    # frozen closed forms: sqrt(2)*e^{1/2}, (1/sqrt2)*e^{-1}
    assert abs(bounds.sharp_const_drift(1.0, 2.0, 1.0, 1, "upper") - 2.3316439815971246) < 1e-12
    assert abs(bounds.sharp_const_drift(1.0, 0.5, 1.0, 1, "lower") - 0.2601300475114445) < 1e-12
    with pytest.raises(ValueError):
        bounds.sharp_const_drift(1.0, 0.9, 1.0, 1, "upper")
    with pytest.raises(ValueError):
        bounds.sharp_const_drift(1.0, 2.0, 1.0, 1, "lower")
    with pytest.raises(ValueError):
        bounds.sharp_const_drift(1.0, 2.0, 1.0, 1, "sideways")


def _zero_drift_entries(spec, times, amps):
    entries = []
    for amp in amps:
        b = drifts.zero_drift(spec)
        for t in times:
            e = bounds.envelope_sweep_entry(b, t, amp, K_max=4, m=48)
            entries.append(e)
    return entries


def test_fit_envelope_zero_drift(spec8pi_small):
    spec = spec8pi_small
    entries = _zero_drift_entries(spec, (0.25, 0.5, 1.0), (1.0, 2.0))
    rep = bounds.fit_envelope(entries, c=2.0)
    for r in rep.rows:
        assert abs(r["C_upper"] - np.sqrt(2.0)) < 0.01  # c^{d/2}
        assert r["C_lower"] > 0
    assert rep.kappa >= 0.1
    with pytest.raises(ValueError):
        bounds.fit_envelope(entries[:2], c=2.0)


def test_fit_envelope_negative_kernel_rejected(spec8pi_small):
    entries = _zero_drift_entries(spec8pi_small, (0.25, 0.5, 1.0), (1.0, 2.0))
    entries[0]["matrix"] = entries[0]["matrix"].copy()
    entries[0]["matrix"][0, 0] = -1.0
    with pytest.raises(EnvelopeViolated):
        bounds.fit_envelope(entries, c=2.0)


def test_series_dominance_term_by_term(spec8pi):
    # |k-th summed term| <= I^0_{0,k}(t) p(ct, . - y) pointwise over the
    # resolved ratio region
    spec = spec8pi
    b = drifts.single_mode_drift(spec, amplitude=1.0)
    t, c = 0.5, 2.0
    res = px.gamma_series(b, t, 0.0, K_max=3, m=96)
    env = g.gaussian(spec, c * t).values
    cache = {}
    for k in (1, 2):
        I0k = bounds.i_empirical(b, t, k, 0, 0.0, y_points=[0.0], m=96, K_cache=cache)
        lhs = np.abs(res.term_fields[k - 1])
        mask = env > bounds.I_RATIO_FLOOR * env.max()
        assert np.all(lhs[mask] <= I0k * env[mask] * (1 + 5e-2) + 1e-12)


def test_bootstrap_lower_bound_zero_drift(spec8pi):
    # n=256 resolves the smallest composed time kappa*a/2
    boot = bounds.bootstrap_lower_bound(drifts.zero_drift(spec8pi),
                                        a=0.25, kappa=0.5, K_max=4, m=48)
    assert boot["all_ok"]
    assert boot["M"] >= 1.0
    assert boot["checks"][-1]["t"] == 1.0
