"""Maximal average charging power P^M = max_tau E(tau)/tau.

Strategy: one coarse uniform scan of P over the search window isolates the
global peak (the curve is a 1/tau envelope times a trigonometric polynomial,
so a grid finer than the fastest oscillation cannot lose it), then
golden-section refinement polishes the bracketing interval, then a single
parabolic-interpolation step (the Brent-style tail) finishes the job:
comparison-based search stalls once P differences fall under double-precision
noise, about 1e-8 relative in tau around a flat peak, while the vertex of a
parabola through three well-separated exact evaluations lands ~1e-10 from the
stationary point.  Derivative-based polishing is deliberately avoided: P is
smooth but wildly oscillatory.

The default window is (tau_hi/grid_points, tau_hi) with tau_hi = 4*pi/w_min,
w_min the smallest nonzero charging-mode frequency: every summand of E has
period pi/w in tau, so the window covers several full periods of even the
slowest mode while the 1/tau factor damps anything later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energetics import GAP_TOL, QuenchEngine
from .model import ModelSpec

DEFAULT_GRID_POINTS = 2048
# golden-section stops when the bracket is this fraction of tau_hi
REFINE_REL_WIDTH = 1e-10
# coarse-grid values closer than this tie-break toward smaller tau
TIE_TOL = 1e-15

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PowerSummary:
    tau_max: float
    p_max: float
    e_at_tau_max: float
    search_window: tuple[float, float]
    grid_points: int
    boundary_hit: bool


def default_window(charger: ModelSpec, grid_points: int = DEFAULT_GRID_POINTS):
    """(tau_hi/grid_points, tau_hi), tau_hi = 4*pi / min nonzero mode frequency."""
    from .model import dispersion, mode_coefficients

    omega = dispersion(mode_coefficients(charger))
    live = omega[omega >= GAP_TOL]
    if live.size == 0:
        raise ValueError("charger has no gapped modes; no intrinsic time scale")
    tau_hi = 4.0 * math.pi / float(live.min())
    return (tau_hi / grid_points, tau_hi)


def golden_section_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Maximize a unimodal scalar function on [lo, hi] to bracket width < tol."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) >= tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = c if fc >= fd else d
    return x, max(fc, fd)


def maximize_power(
    battery: ModelSpec,
    charger: ModelSpec,
    beta: float,
    window: tuple[float, float] | None = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> PowerSummary:
    """Coarse scan + golden-section refinement of P(tau) over the window."""
    if grid_points < 16:
        raise ValueError(f"grid_points must be >= 16, got {grid_points}")
    engine = QuenchEngine(battery, charger, beta)
    if window is None:
        window = default_window(charger, grid_points)
    tau_lo, tau_hi = float(window[0]), float(window[1])
    if not (0.0 < tau_lo < tau_hi):
        raise ValueError(f"window must satisfy 0 < tau_lo < tau_hi, got {window}")

    taus = np.linspace(tau_lo, tau_hi, grid_points)
    powers = engine.curve(taus).power
    best = int(np.argmax(powers))
    # deterministic tie-break: earliest tau within TIE_TOL of the maximum
    ties = np.nonzero(powers >= powers[best] - TIE_TOL)[0]
    best = int(ties[0])
    boundary_hit = best == 0 or best == grid_points - 1

    lo = taus[max(best - 1, 0)]
    hi = taus[min(best + 1, grid_points - 1)]
    tau_max, p_ref = golden_section_max(
        engine.power, float(lo), float(hi), REFINE_REL_WIDTH * tau_hi
    )
    # parabolic tail: offsets large enough that the P differences carry real
    # curvature information instead of rounding noise
    h = 1e-5 * tau_max
    if tau_lo < tau_max - h and tau_max + h < tau_hi:
        f0 = engine.power(tau_max)
        fm = engine.power(tau_max - h)
        fp = engine.power(tau_max + h)
        denom = fm - 2.0 * f0 + fp
        if denom < 0.0:
            vertex = tau_max + 0.5 * h * (fm - fp) / denom
            if tau_lo <= vertex <= tau_hi and abs(vertex - tau_max) <= h:
                pv = engine.power(vertex)
                if pv >= p_ref - 4.0 * abs(p_ref) * np.finfo(float).eps:
                    tau_max, p_ref = vertex, pv
    # refinement must never lose to the scanned grid point
    if p_ref < powers[best]:
        tau_max, p_ref = float(taus[best]), float(powers[best])
    e_max = engine.energy(tau_max)
    return PowerSummary(
        tau_max=float(tau_max),
        p_max=e_max / tau_max,
        e_at_tau_max=e_max,
        search_window=(tau_lo, tau_hi),
        grid_points=grid_points,
        boundary_hit=bool(boundary_hit),
    )
