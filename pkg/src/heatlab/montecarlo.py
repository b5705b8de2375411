"""Path simulation and probabilistic cross-checks.

Euler-Maruyama under smooth (mollified) drift with counter-based randomness:
every normal increment is addressed by its absolute index (path, step,
component), so ensembles are bit-identical under any chunking or thread
schedule.  Derived statistics: kernel density estimates on the grid (the KDE
of box-wrapped samples estimates exactly the periodized transition density),
escape probabilities with Wilson intervals, and the path-modulus machinery
(double-integral functional, modulus inequality checks, exponential
sup-moments).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from . import grid as g
from .dyadic import DriftField
from .errors import DivergentF, StepTooLarge

__all__ = [
    "Ensemble",
    "GRRReport",
    "counter_normals",
    "simulate",
    "density_at",
    "escape_prob",
    "reflection_escape_oracle",
    "modulus_functions",
    "grr_verify",
    "pair_sup_ratio",
    "exp_sup_moment",
]


# -- counter-based randomness --------------------------------------------------


def _raw_uint64(seed: int, start: int, count: int) -> np.ndarray:
    """Raw 64-bit words `start .. start+count` of the keyed counter stream."""
    block, offset = divmod(start, 4)
    total = offset + count
    bg = np.random.Philox(key=seed, counter=block)
    raw = bg.random_raw(-(-total // 4) * 4)
    return raw[offset:offset + count]


def counter_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms in (0,1) addressed by absolute draw index."""
    raw = _raw_uint64(seed, start, count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def counter_normals(seed: int, start: int, count: int) -> np.ndarray:
    """Standard normals by inverse CDF on the counter stream."""
    return ndtri(counter_uniforms(seed, start, count))


# -- drift interpolation -------------------------------------------------------


def _spectral_upsample(spec: g.GridSpec, vals: np.ndarray, up: int) -> np.ndarray:
    """Zero-padded Fourier refinement of one component field (d in {1,2})."""
    F = np.fft.fftshift(np.fft.fftn(vals))
    pad = (up - 1) * spec.n // 2
    Fp = np.pad(F, [(pad, pad)] * spec.d)
    return np.fft.ifftn(np.fft.ifftshift(Fp)).real * up**spec.d


class _DriftInterp:
    """Periodic trigonometric interpolation of drift slices.

    Fields are spectrally refined by `up` and then read with linear weights;
    refined slices are cached per stored time index.
    """

    def __init__(self, b: DriftField, up: int = 16):
        self.b = b
        self.spec = b.spec
        self.up = up
        self.nf = b.spec.n * up
        self.hf = b.spec.L / self.nf
        self._cache: dict = {}

    def _fine(self, t_idx: int) -> np.ndarray:
        if t_idx not in self._cache:
            self._cache[t_idx] = np.stack([
                _spectral_upsample(self.spec, self.b.values[t_idx, c], self.up)
                for c in range(self.spec.d)
            ])
        return self._cache[t_idx]

    def eval(self, t: float, X: np.ndarray) -> np.ndarray:
        """Drift at unwrapped positions X of shape (N, d)."""
        fine = self._fine(self.b.time_index(t))
        pos = (X - (-self.spec.L / 2)) % self.spec.L
        idx = pos / self.hf
        i0 = np.floor(idx).astype(np.int64) % self.nf
        frac = idx - np.floor(idx)
        out = np.empty_like(X)
        if self.spec.d == 1:
            f = fine[0]
            a, w = i0[:, 0], frac[:, 0]
            out[:, 0] = f[a] * (1 - w) + f[(a + 1) % self.nf] * w
        else:
            a1, a2 = i0[:, 0], i0[:, 1]
            b1, b2 = (a1 + 1) % self.nf, (a2 + 1) % self.nf
            w1, w2 = frac[:, 0], frac[:, 1]
            for c in range(2):
                f = fine[c]
                out[:, c] = (f[a1, a2] * (1 - w1) * (1 - w2)
                             + f[b1, a2] * w1 * (1 - w2)
                             + f[a1, b2] * (1 - w1) * w2
                             + f[b1, b2] * w1 * w2)
        return out


# -- simulation ----------------------------------------------------------------


@dataclass
class Ensemble:
    """Simulated path collection with streamed functionals.

    Full paths are kept only for the first `keep_paths` paths (the modulus
    machinery needs them); everything else is streamed: snapshot positions at
    requested times and the running sup of |X - x0|.
    """

    spec: g.GridSpec
    N: int
    h_t: float
    T: float
    x0: np.ndarray
    seed: int
    drift_tag: str
    snapshot_times: np.ndarray
    snapshots: dict
    sup_dev: np.ndarray
    kept_paths: np.ndarray
    kept_times: np.ndarray
    meta: dict = field(default_factory=dict)

    def positions(self, t: float) -> np.ndarray:
        key = min(self.snapshots, key=lambda s: abs(s - t))
        if abs(key - t) > self.h_t / 2 + 1e-12:
            raise KeyError(f"time {t} not among stored snapshots {sorted(self.snapshots)}")
        return self.snapshots[key]


def simulate(b_smooth: DriftField, x0, T: float, h_t: float, N: int, seed: int,
             snapshot_times=None, keep_paths: int = 0, chunk: int = 1 << 20,
             upsample: int = 16) -> Ensemble:
    """Euler-Maruyama ensemble under a grid-sampled drift.

    Paths are unwrapped (positions live on the line/plane); the drift is read
    through periodic trigonometric interpolation.  Increment indexing is
    (step, path, component), so results are independent of `chunk`.
    """
    spec = b_smooth.spec
    if h_t > 1e-2 + 1e-15:
        raise ValueError(f"h_t must be <= 1e-2, got {h_t}")
    sup_b = float(np.abs(b_smooth.values).max())
    if h_t * sup_b > 0.5:
        raise StepTooLarge(f"h_t * sup|b| = {h_t * sup_b:.3g} > 0.5")
    n_steps = int(round(T / h_t))
    if abs(n_steps * h_t - T) > 1e-9:
        raise ValueError(f"T={T} must be an integer multiple of h_t={h_t}")
    d = spec.d
    x0 = np.broadcast_to(np.atleast_1d(np.asarray(x0, dtype=float)), (d,))
    if snapshot_times is None:
        snapshot_times = [T]
    snap_steps = {int(round(t / h_t)): float(t) for t in snapshot_times}
    interp = _DriftInterp(b_smooth, up=upsample)
    keep_paths = min(keep_paths, N)

    X = np.tile(x0, (N, 1))
    sup_dev = np.zeros(N)
    snapshots = {}
    kept = np.empty((keep_paths, n_steps + 1, d)) if keep_paths else np.empty((0, 0, d))
    if keep_paths:
        kept[:, 0] = X[:keep_paths]
    if 0 in snap_steps:
        snapshots[snap_steps[0]] = X.copy()
    sqdt = np.sqrt(h_t)
    for j in range(n_steps):
        t_j = j * h_t
        base = j * N * d
        for lo in range(0, N, chunk):
            hi = min(lo + chunk, N)
            xi = counter_normals(seed, base + lo * d, (hi - lo) * d).reshape(hi - lo, d)
            drift = interp.eval(t_j, X[lo:hi]) if sup_b > 0 else 0.0
            X[lo:hi] += drift * h_t + sqdt * xi
        dev = np.abs(X[:, 0] - x0[0]) if d == 1 else np.linalg.norm(X - x0, axis=1)
        np.maximum(sup_dev, dev, out=sup_dev)
        if keep_paths:
            kept[:, j + 1] = X[:keep_paths]
        if (j + 1) in snap_steps:
            snapshots[snap_steps[j + 1]] = X.copy()
    return Ensemble(
        spec=spec, N=N, h_t=h_t, T=T, x0=x0, seed=seed, drift_tag=b_smooth.tag,
        snapshot_times=np.asarray(sorted(snapshots)), snapshots=snapshots,
        sup_dev=sup_dev, kept_paths=kept,
        kept_times=h_t * np.arange(n_steps + 1),
        meta={"n_steps": n_steps, "upsample": upsample},
    )


def density_at(e: Ensemble, t: float, bandwidth: float | None = None) -> g.GridField:
    """Gaussian-kernel density estimate of the time-t positions on the grid.

    Samples are wrapped into the box (estimating the periodized density),
    linearly binned, then smoothed spectrally with a Gaussian of the given
    bandwidth (default 2h).  Mass is exactly 1.
    """
    spec = e.spec
    if bandwidth is None:
        bandwidth = 2.0 * spec.h
    X = e.positions(t)
    pos = (X - (-spec.L / 2)) % spec.L
    idx = pos / spec.h
    i0 = np.floor(idx).astype(np.int64) % spec.n
    frac = idx - np.floor(idx)
    w = 1.0 / (e.N * spec.cell)
    if spec.d == 1:
        counts = (np.bincount(i0[:, 0], weights=(1 - frac[:, 0]), minlength=spec.n)
                  + np.bincount((i0[:, 0] + 1) % spec.n, weights=frac[:, 0],
                                minlength=spec.n))
        hist = counts * w
    else:
        n = spec.n
        flat = lambda a, bb: (a % n) * n + (bb % n)
        counts = np.zeros(n * n)
        for da, wa in ((0, 1 - frac[:, 0]), (1, frac[:, 0])):
            for db, wb in ((0, 1 - frac[:, 1]), (1, frac[:, 1])):
                counts += np.bincount(flat(i0[:, 0] + da, i0[:, 1] + db),
                                      weights=wa * wb, minlength=n * n)
        hist = counts.reshape(n, n) * w
    smooth = g.ifft(spec, g.heat_multiplier(spec, bandwidth**2) * g.fft(spec, hist))
    return g.GridField(spec, smooth)


def escape_prob(e: Ensemble, K: float):
    """Fraction of paths whose discrete-time sup deviation reached K.

    Returns (p_hat, (lo, hi)) with a Wilson 95% interval.  The discrete sup
    underestimates the continuous one; the bias is conservative for
    upper-bound checks.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    hits = int((e.sup_dev >= K).sum())
    n = e.N
    p_hat = hits / n
    z = 1.959963984540054
    denom = 1 + z**2 / n
    center = (p_hat + z**2 / (2 * n)) / denom
    half = z * np.sqrt(p_hat * (1 - p_hat) / n + z**2 / (4 * n**2)) / denom
    return p_hat, (max(0.0, center - half), min(1.0, center + half))


def reflection_escape_oracle(K: float, T: float, terms: int = 64) -> float:
    """P(sup_{[0,T]} |B| >= K) for a standard Brownian motion (image series)."""
    if K <= 0:
        return 1.0
    a = K / np.sqrt(T)
    inside = 0.0
    for k in range(-terms, terms + 1):
        inside += (-1) ** k * (ndtr((2 * k + 1) * a) - ndtr((2 * k - 1) * a))
    return float(min(1.0, max(0.0, 1.0 - inside)))


# -- path modulus machinery ----------------------------------------------------


def modulus_functions(r):
    """(zeta(r), psi(r)): the integral modulus and its closed-form equivalent.

    zeta(r) = int_0^r u^{-1/2} (sqrt(log(1+u^{-2})) or 1, whichever larger) du,
    psi(r)  = sqrt(r) * sqrt(log(1/r) or 1).  zeta is evaluated by adaptive
    quadrature after the substitution u = v^2.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0):
        raise ValueError("r must be positive")
    u_star = 1.0 / np.sqrt(np.e - 1)  # where log(1+u^-2) = 1

    def zeta_one(rv):
        def f(v):
            u = v * v
            return 2.0 * max(np.sqrt(np.log1p(u**-2.0)), 1.0)

        pts = [np.sqrt(u_star)] if rv > u_star else None
        val, _ = quad(f, 0.0, np.sqrt(rv), points=pts, limit=200)
        return val

    zeta = np.array([zeta_one(rv) for rv in r_arr])
    psi = np.sqrt(r_arr) * np.sqrt(np.maximum(np.log(1.0 / r_arr), 1.0))
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(zeta[0]), float(psi[0])
    return zeta, psi


@dataclass
class GRRReport:
    """Modulus-inequality audit for one path."""

    kappa: float
    F: float
    G: float
    violations: int
    max_ratio: float
    pairs_checked: int


def _path_F(times: np.ndarray, path: np.ndarray, kappa: float) -> float:
    """Trapezoid value of the double-integral functional; diagonal integrand 1."""
    disp = path[:, None] - path[None, :] if path.ndim == 1 else np.linalg.norm(
        path[:, None, :] - path[None, :, :], axis=-1)
    dt = np.abs(times[:, None] - times[None, :])
    ratio2 = np.zeros_like(dt)
    off = dt > 0
    ratio2[off] = disp[off] ** 2 / dt[off]
    arg = kappa * ratio2
    if arg.max() > 700:
        raise DivergentF(f"integrand exponent {arg.max():.1f} overflows; reduce kappa")
    integ = np.exp(arg)
    w = np.full(len(times), times[1] - times[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return float(w @ integ @ w)


def grr_verify(path: np.ndarray, times: np.ndarray, kappa: float,
               sample_pairs: int = 50, seed: int = 0) -> GRRReport:
    """Check the pathwise modulus inequality on sampled time pairs.

    For each sampled s < t the bound
        kappa |X_t - X_s| <= 4 int_0^{t-s} u^{-1/2} sqrt(log(1 + 4(F - T^2)/u^2)) du
    is evaluated with F the trapezoid value of the exponential double
    integral; violations are counted (zero expected: the inequality is exact
    for the piecewise-linear path up to quadrature slack).
    """
    path = np.asarray(path, dtype=float)
    if path.ndim == 2 and path.shape[1] == 1:
        path = path[:, 0]
    times = np.asarray(times, dtype=float)
    T = times[-1]
    F = _path_F(times, path, kappa)
    B = max(F - T * T, 0.0)
    G = 2.0 * np.sqrt(max(F, 4.0))
    rng = np.random.default_rng(seed)
    n = len(times)
    violations = 0
    max_ratio = 0.0
    checked = 0
    for _ in range(sample_pairs):
        i, j = sorted(rng.choice(n, size=2, replace=False))
        if i == j:
            continue
        dt = times[j] - times[i]
        lhs = kappa * (abs(path[j] - path[i]) if path.ndim == 1
                       else np.linalg.norm(path[j] - path[i]))
        if B == 0.0:
            rhs = 0.0
        else:
            rhs, _ = quad(lambda v: 2.0 * np.sqrt(np.log1p(4.0 * B / v**4)),
                          0.0, np.sqrt(dt), limit=200)
            rhs *= 4.0
        checked += 1
        if rhs > 0:
            max_ratio = max(max_ratio, lhs / rhs)
            if lhs > rhs * (1 + 1e-9):
                violations += 1
        elif lhs > 1e-12:
            violations += 1
    return GRRReport(kappa=kappa, F=F, G=G, violations=violations,
                     max_ratio=max_ratio, pairs_checked=checked)


def pair_sup_ratio(path: np.ndarray, times: np.ndarray) -> float:
    """sup over s<t of |X_t - X_s| / psi(t - s) on the step grid."""
    path = np.asarray(path, dtype=float)
    if path.ndim == 2 and path.shape[1] == 1:
        path = path[:, 0]
    dt = np.abs(times[:, None] - times[None, :])
    disp = (np.abs(path[:, None] - path[None, :]) if path.ndim == 1
            else np.linalg.norm(path[:, None, :] - path[None, :, :], axis=-1))
    off = dt > 0
    psi = np.sqrt(dt[off]) * np.sqrt(np.maximum(np.log(1.0 / dt[off]), 1.0))
    return float((disp[off] / psi).max())


def exp_sup_moment(e: Ensemble, M: float | None = None):
    """Empirical E[exp((1/M) sup_pairs (|X_t-X_s|/psi(t-s))^2)] over kept paths.

    M defaults to twice the largest observed squared ratio (keeping the
    exponential finite); returns (M, moment, ratios).
    """
    if e.kept_paths.size == 0:
        raise ValueError("ensemble was simulated without kept paths")
    ratios = np.array([pair_sup_ratio(p, e.kept_times) for p in e.kept_paths])
    if M is None:
        M = float(2.0 * (ratios**2).max())
    moment = float(np.exp(ratios**2 / M).mean())
    return M, moment, ratios
