"""Drift presets spanning the norm regimes (low-block only, high-block only,
mixed, and time-varying)."""

from __future__ import annotations

import numpy as np

from . import grid as g
from .dyadic import DriftField, build_partition

__all__ = ["zero_drift", "constant_drift", "single_mode_drift",
           "multi_mode_drift", "time_varying_drift", "make_preset"]


def _grid_frequency(spec: g.GridSpec, target: float) -> float:
    """Nearest exactly-representable frequency 2*pi*k/L to `target`."""
    k = max(1, round(target * spec.L / (2 * np.pi)))
    return 2 * np.pi * k / spec.L


def zero_drift(spec: g.GridSpec, alpha: float = 0.25) -> DriftField:
    vals = np.zeros((1, spec.d) + spec.shape)
    return DriftField(spec, [0.0], vals, alpha, tag="zero")


def constant_drift(spec: g.GridSpec, lam, alpha: float = 0.25) -> DriftField:
    lam = np.broadcast_to(np.atleast_1d(np.asarray(lam, dtype=float)), (spec.d,))
    vals = np.empty((1, spec.d) + spec.shape)
    for c in range(spec.d):
        vals[0, c] = lam[c]
    return DriftField(spec, [0.0], vals, alpha, tag="constant")


def single_mode_drift(spec: g.GridSpec, amplitude: float = 1.0,
                      xi0: float | None = None, alpha: float = 0.25) -> DriftField:
    """b(x) = A cos(xi0 * x1) in every component; xi0 snaps to the grid.

    The default xi0 sits inside dyadic block 2, giving a drift with X = 0 and
    Y = A * 2^{-2 alpha} (up to a grid factor ~ 1).
    """
    if xi0 is None:
        xi0 = _grid_frequency(spec, 6.0)
    else:
        xi0 = _grid_frequency(spec, xi0)
    x1 = spec.axis_points()
    prof = amplitude * np.cos(xi0 * x1)
    if spec.d == 2:
        prof = prof[:, None] * np.ones(spec.n)[None, :]
    vals = np.stack([prof] * spec.d)[None]
    return DriftField(spec, [0.0], vals, alpha, tag=f"single-mode(xi0={xi0:g})")


def multi_mode_drift(spec: g.GridSpec, amplitude: float = 1.0, alpha: float = 0.25,
                     seed: int = 7, modes_per_block: int = 2,
                     i_max: int | None = None) -> DriftField:
    """Random Fourier sum with per-block amplitude decay 2^{-alpha*i}.

    Seeded; each active block i in 1..i_max contributes `modes_per_block`
    cosines at exact grid frequencies inside the block.
    """
    part = build_partition(spec)
    if i_max is None:
        i_max = part.j_max - 2
    rng = np.random.default_rng(seed)
    x1 = spec.axis_points()
    prof = np.zeros(spec.n)
    for i in range(1, i_max + 1):
        lo, hi = 2.0**i * 4.0 / 3.0, 2.0** (i + 1)  # where rho_i = 1
        ks = np.arange(int(np.ceil(lo * spec.L / (2 * np.pi))),
                       int(np.floor(hi * spec.L / (2 * np.pi))) + 1)
        ks = ks[(ks > 0) & (ks < spec.n // 2)]
        if len(ks) == 0:
            continue
        pick = rng.choice(ks, size=min(modes_per_block, len(ks)), replace=False)
        for k in pick:
            phase = rng.uniform(0, 2 * np.pi)
            prof += 2.0 ** (-alpha * i) * np.cos(2 * np.pi * k / spec.L * x1 + phase)
    prof *= amplitude
    if spec.d == 2:
        prof = prof[:, None] * np.ones(spec.n)[None, :]
    vals = np.stack([prof] * spec.d)[None]
    return DriftField(spec, [0.0], vals, alpha, tag=f"multi-mode(seed={seed})")


def time_varying_drift(spec: g.GridSpec, horizon: float = 1.0, amplitude: float = 1.0,
                       xi0: float | None = None, alpha: float = 0.25,
                       n_slices: int = 1024, omega: float = 1.0,
                       phase: float = 0.0) -> DriftField:
    """b(t, x) = A sin(omega*t + phase) cos(xi0 * x1); densely sampled in time.

    Dense sampling keeps the nearest-sample time quantization well below the
    spatial quadrature error.  Fast modulation (omega >> 1) suppresses the
    drift's coherent transport, which isolates the quadratic response of the
    envelope constants.
    """
    xi0 = _grid_frequency(spec, 1.0 if xi0 is None else xi0)
    x1 = spec.axis_points()
    prof = amplitude * np.cos(xi0 * x1)
    if spec.d == 2:
        prof = prof[:, None] * np.ones(spec.n)[None, :]
    times = np.linspace(0.0, horizon, n_slices + 1)
    vals = np.empty((len(times), spec.d) + spec.shape)
    for j, tt in enumerate(times):
        for c in range(spec.d):
            vals[j, c] = np.sin(omega * tt + phase) * prof
    return DriftField(spec, times, vals, alpha, tag=f"time-varying(xi0={xi0:g})")


def traveling_mode_drift(spec: g.GridSpec, amplitude: float = 1.0,
                         alpha: float = 0.25, xi0: float | None = None,
                         speed: float | None = None, horizon: float = 1.0,
                         n_slices: int = 1024) -> DriftField:
    """Traveling wave b(t, x) = A cos(xi0 (x - v t)); Y-only at every slice.

    With speed proportional to amplitude, trapped mass surfs the wave and the
    coherent displacement grows linearly in t, so the envelope constants show
    the sustained exponential growth the two-sided bounds are built to track
    (a static mode homogenizes instead and its constants saturate).
    """
    xi0 = _grid_frequency(spec, 1.5 if xi0 is None else xi0)
    if speed is None:
        speed = 0.4 * amplitude
    x1 = spec.axis_points()
    times = np.linspace(0.0, horizon, n_slices + 1)
    vals = np.empty((len(times), spec.d) + spec.shape)
    for j, tt in enumerate(times):
        prof = amplitude * np.cos(xi0 * (x1 - speed * tt))
        if spec.d == 2:
            prof = prof[:, None] * np.ones(spec.n)[None, :]
        for c in range(spec.d):
            vals[j, c] = prof
    return DriftField(spec, times, vals, alpha,
                      tag=f"traveling-mode(xi0={xi0:g},v={speed:g})")


def refreshing_mode_drift(spec: g.GridSpec, amplitude: float = 1.0,
                          alpha: float = 0.25, xi0: float | None = None,
                          refresh: float = 0.0625, horizon: float = 1.0,
                          seed: int = 7, n_slices: int = 1024) -> DriftField:
    """Single high-frequency mode whose phase re-randomizes every `refresh`.

    Y-only like the static single mode, but the periodic phase refresh keeps
    pumping the kernel instead of homogenizing away, so the envelope
    constants keep growing linearly in t (the worst-case growth the two-sided
    bounds are designed to track).  Seeded and reproducible.
    """
    if xi0 is None:
        xi0 = _grid_frequency(spec, 6.0)
    else:
        xi0 = _grid_frequency(spec, xi0)
    rng = np.random.default_rng(seed)
    x1 = spec.axis_points()
    times = np.linspace(0.0, horizon, n_slices + 1)
    n_intervals = int(np.ceil(horizon / refresh)) + 1
    phases = rng.uniform(0, 2 * np.pi, n_intervals)
    vals = np.empty((len(times), spec.d) + spec.shape)
    for j, tt in enumerate(times):
        prof = amplitude * np.cos(xi0 * x1 + phases[min(int(tt / refresh), n_intervals - 1)])
        if spec.d == 2:
            prof = prof[:, None] * np.ones(spec.n)[None, :]
        for c in range(spec.d):
            vals[j, c] = prof
    return DriftField(spec, times, vals, alpha,
                      tag=f"refreshing-mode(xi0={xi0:g},refresh={refresh:g})")


_PRESETS = {
    "zero": zero_drift,
    "constant": constant_drift,
    "single-mode": single_mode_drift,
    "multi-mode": multi_mode_drift,
    "time-varying": time_varying_drift,
    "refreshing-mode": refreshing_mode_drift,
    "traveling-mode": traveling_mode_drift,
}


def make_preset(name: str, spec: g.GridSpec, amplitude: float = 1.0,
                alpha: float = 0.25, seed: int = 7, horizon: float = 1.0,
                xi0: float | None = None) -> DriftField:
    """Build a preset drift by name (see _PRESETS for the catalogue)."""
    if name not in _PRESETS:
        raise KeyError(f"unknown drift preset {name!r}; have {sorted(_PRESETS)}")
    if name == "zero":
        return zero_drift(spec, alpha)
    if name == "constant":
        return constant_drift(spec, amplitude, alpha)
    if name == "single-mode":
        return single_mode_drift(spec, amplitude, xi0, alpha)
    if name == "multi-mode":
        return multi_mode_drift(spec, amplitude, alpha, seed)
    if name == "refreshing-mode":
        return refreshing_mode_drift(spec, amplitude, alpha, xi0,
                                     horizon=horizon, seed=seed)
    if name == "traveling-mode":
        return traveling_mode_drift(spec, amplitude, alpha, xi0, horizon=horizon)
    return time_varying_drift(spec, horizon, amplitude, xi0, alpha)
