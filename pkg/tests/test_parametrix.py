"""Correction-series construction: families, series, gradients, composition."""

import numpy as np
import pytest

from heatlab import drifts, grid as g, parametrix as px
from heatlab.errors import NoDecay, QuadratureDivergence


def test_psi_first_zero_drift(spec8pi_small):
    fam = px.psi_first(drifts.zero_drift(spec8pi_small), 1.0, 0.0)
    assert np.abs(fam.fields).max() == 0.0


def test_psi_first_constant_drift_formula(spec8pi_small):
    # for b = lambda the divergence form collapses to -lambda * dp(s, .-y)
    spec = spec8pi_small
    lam = 1.3
    fam = px.psi_first(drifts.constant_drift(spec, lam), 1.0, 0.0)
    for j in (1, len(fam.s_nodes) // 2, len(fam.s_nodes) - 1):
        s = fam.s_nodes[j]
        expect = -lam * g.gaussian_deriv(spec, s, (1,)).values
        assert np.abs(fam.fields[j] - expect).max() < 1e-10


def test_psi_first_l1_singularity_scale(spec8pi_small):
    # ||Psi^1_s||_1 * sqrt(s) stays under the analytic envelope
    spec = spec8pi_small
    b = drifts.single_mode_drift(spec, amplitude=1.0, xi0=1.0)
    fam = px.psi_first(b, 1.0, 0.0)
    s = fam.s_nodes[1:]
    prod = fam.l1_norms()[1:] * np.sqrt(s)
    bound = np.sqrt(2 / np.pi) * 1.0 + np.sqrt(1.0) * 1.0  # sup|b|, sup|div b| = 1
    assert prod.max() < 2 * bound


def test_psi_next_zero_and_growth(spec8pi_small):
    spec = spec8pi_small
    z = px.psi_next(drifts.zero_drift(spec), 1.0,
                    px.psi_first(drifts.zero_drift(spec), 1.0, 0.0))
    assert np.abs(z.fields).max() == 0.0
    # integral of ||Psi^k||_1 grows no faster than t^{(1+3k)/2}
    b = drifts.single_mode_drift(spec, amplitude=1.0, xi0=1.0)
    for k in (1, 2):
        vals = []
        for t in (0.5, 1.0, 2.0):
            fam = px.psi_first(b, t, 0.0)
            for _ in range(k - 1):
                fam = px.psi_next(b, t, fam)
            vals.append(np.trapezoid(fam.l1_norms(), fam.s_nodes))
        assert vals[-1] / vals[0] < 4.0 ** ((1 + 3 * k) / 2)
        assert all(np.isfinite(vals))


def test_gamma_series_zero_drift(spec8pi):
    for t in (0.25, 1.0):
        res = px.gamma_series(drifts.zero_drift(spec8pi), t, 0.0)
        assert res.K_used == 1
        assert np.abs(res.gamma.values - g.gaussian(spec8pi, t).values).max() < 1e-8


def test_gamma_series_constant_drift(spec8pi):
    res = px.gamma_series(drifts.constant_drift(spec8pi, 1.0), 1.0, 0.0, K_max=8)
    target = g.gaussian_shifted(spec8pi, 1.0, 1.0).values
    rel = np.abs(res.gamma.values - target).max() / target.max()
    assert rel < 1e-3
    assert abs(res.gamma.integral() - 1.0) < 1e-12


def test_gamma_series_mass_and_positivity(spec8pi):
    b = drifts.single_mode_drift(spec8pi, amplitude=1.0, xi0=1.0)
    res = px.gamma_series(b, 1.0, 0.0)
    assert abs(res.gamma.integral() - 1.0) < 1e-4  # in fact machine-exact
    assert abs(res.gamma.integral() - 1.0) < 1e-12
    assert res.gamma.values.min() > -1e-10
    assert res.term_sup_norms[-1] < res.term_sup_norms[0]
    assert res.tail_estimate < 1e-2


def test_gamma_series_no_decay(spec8pi_small):
    with pytest.raises(NoDecay):
        px.gamma_series(drifts.constant_drift(spec8pi_small, 30.0), 1.0, 0.0, K_max=4)


def test_gamma_series_translation_covariance(spec8pi_small):
    spec = spec8pi_small
    b = drifts.constant_drift(spec, 0.7)
    res0 = px.gamma_series(b, 0.5, 0.0, K_max=8)
    k = 10
    y = k * spec.h
    res1 = px.gamma_series(b, 0.5, y, K_max=8)
    assert np.abs(np.roll(res0.gamma.values, k) - res1.gamma.values).max() < 1e-12


def test_gamma_grad(spec8pi):
    res0 = px.gamma_series(drifts.zero_drift(spec8pi), 1.0, 0.0)
    grad = px.gamma_grad(res0, (1,))
    assert np.abs(grad.values - g.gaussian_deriv(spec8pi, 1.0, (1,)).values).max() < 1e-10
    b = drifts.single_mode_drift(spec8pi, amplitude=1.0, xi0=1.0)
    res = px.gamma_series(b, 1.0, 0.0)
    grad = px.gamma_grad(res, (1,))
    # agrees with the spectral gradient of the summed series
    spectral = res.grad_gamma[0].values
    sup_dp = np.abs(g.gaussian_deriv(spec8pi, 1.0, (1,)).values).max()
    assert np.abs(grad.values - spectral).max() < 1e-6 * sup_dp
    # gradient envelope: sup |dGamma| / (t^{-1/2} p(ct, .)) finite
    env = g.gaussian(spec8pi, 2.0).values
    mask = env > 1e-13 * env.max()
    ratio = np.abs(grad.values[mask]) / env[mask]
    assert np.isfinite(ratio.max())
    with pytest.raises(ValueError):
        px.gamma_grad(res, (2,))


def test_gamma_grad_odd_symmetry_oracle(spec8pi):
    # even drift about the source: odd part of (Gamma - p) is the first
    # correction term up to higher-order (even) corrections
    spec = spec8pi
    b = drifts.single_mode_drift(spec, amplitude=0.5, xi0=1.0)  # cos(x), even at y=0
    res = px.gamma_series(b, 1.0, 0.0)
    v = res.gamma.values
    mirror = np.roll(v[::-1], 1)
    odd = 0.5 * (v - mirror)
    term1 = res.term_fields[0]
    scale = np.abs(term1).max()
    assert np.abs(odd - term1).max() < 0.3 * scale


def test_quadrature_divergence_detected(spec8pi_small):
    # synthetic family alternating sign per node: coarse/fine trapezoid differ O(1)
    spec = spec8pi_small
    t = 1.0
    s = px.time_nodes(t, 8)
    base = g.gaussian(spec, 0.5).values
    fields = np.stack([(-1.0) ** j * base for j in range(len(s))])
    fam = px.PsiFamily(spec=spec, t=t, y=np.asarray(0.0), k=1, s_nodes=s, fields=fields)
    with pytest.raises(QuadratureDivergence):
        px._propagate(fam)


def test_series_term_vs_family_propagation(spec8pi_small):
    # psi_next consistency: family k=2 equals -div(b * G_1) with G_1 from k=1
    spec = spec8pi_small
    b = drifts.single_mode_drift(spec, amplitude=1.0, xi0=1.0)
    fam1 = px.psi_first(b, 0.5, 0.0)
    fam2 = px.psi_next(b, 0.5, fam1)
    assert fam2.k == 2
    assert fam2.fields.shape == fam1.fields.shape
    # zero at s=0 since G_1(0) = 0
    assert np.abs(fam2.fields[0]).max() == 0.0


def test_chapman_kolmogorov_zero_and_constant(spec8pi_small):
    spec = spec8pi_small
    r0 = px.chapman_kolmogorov_residual(drifts.zero_drift(spec), 0.25, 0.5, 0.0, m=64)
    assert r0 < 1e-8
    rc = px.chapman_kolmogorov_residual(drifts.constant_drift(spec, 1.0),
                                        0.25, 0.5, 0.0, K_max=16, tol=1e-9, m=256)
    assert rc < 1e-6


def test_batched_sources_match_single(spec8pi_small):
    spec = spec8pi_small
    b = drifts.single_mode_drift(spec, amplitude=1.0, xi0=1.0)
    ys = np.array([[0.0], [5 * spec.h]])
    batch = px.gamma_series(b, 0.5, ys, K_max=6)
    one = px.gamma_series(b, 0.5, 0.0, K_max=6)
    assert np.abs(batch.gamma[0] - one.gamma.values).max() < 1e-13
    two = px.gamma_series(b, 0.5, 5 * spec.h, K_max=6)
    assert np.abs(batch.gamma[1] - two.gamma.values).max() < 1e-13


def test_export_result(tmp_path, spec8pi_small):
    res = px.gamma_series(drifts.constant_drift(spec8pi_small, 1.0), 0.5, 0.0, K_max=6)
    path = px.export_result(res, tmp_path / "kernel")
    assert path.exists()
    header = (tmp_path / "kernel.json").read_text()
    assert "K_used" in header and "tail_estimate" in header
    assert (tmp_path / "kernel.csv").read_text().startswith("x,gamma,dgamma")
