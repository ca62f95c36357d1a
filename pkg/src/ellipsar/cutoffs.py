"""Smooth cutoffs, data mutes and the travel-time region decomposition.

Everything here is built from one C-infinity transition profile.  The
artifact analysis needs three kinds of weights:

* collar cutoffs around the two degeneracy loci (the track plane x2 = 0
  and the unit level of the range ratio beta B / A), with a width eps
  chosen so the two collars only meet inside a controlled box;
* data-domain mutes: a base mute that switches on just above the
  threshold travel time and rolls off at the acquisition window edges,
  and a collar mute that suppresses samples whose ground ellipse passes
  near the critical box;
* region mutes supported strictly inside the three travel-time regions
  cut out by the critical times (before the critical circle exists,
  between the critical times, outside them).

Weights are vectorized over t (and over ground coordinates where noted);
slow time s stays scalar, matching row-by-row pipeline use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import ModeError, SelectionError
from .geometry import (
    AcquisitionConfig,
    bistatic_ranges,
    critical_circle,
    critical_times,
    ellipse_points,
    range_ratio_circle,
    ratio_threshold,
    threshold_time,
)

REGION_PRECRITICAL = "precritical"
REGION_BAND = "band"
REGION_OUTER = "outer"
REGION_BOUNDARY = "boundary"

# accepted spellings for region selectors, to keep config files terse
_REGION_ALIASES = {
    "o1": REGION_PRECRITICAL,
    "o2": REGION_BAND,
    "o3": REGION_OUTER,
    REGION_PRECRITICAL: REGION_PRECRITICAL,
    REGION_BAND: REGION_BAND,
    REGION_OUTER: REGION_OUTER,
}


@dataclass(frozen=True)
class CollarSelection:
    """Admissible collar width eps with the reference slow time and ratio level.

    s_ref is the slow time the width was selected at, k_ref the ratio
    level balancing the pencil-circle radius against the distance-to-one
    constraints.  The guarantees are r(s_ref, k_ref) > 12 eps,
    eps < (beta - 1) / 6, eps < (1 - k_ref) / 6 and eps < 1/24.
    """

    s_ref: float
    k_ref: float
    eps: float


def _phi(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    pos = v > 0.0
    out[pos] = np.exp(-1.0 / v[pos])
    return out


def bump(u, lo: float, hi: float):
    """C-infinity transition: exactly 1 for u <= lo, exactly 0 for u >= hi.

    Strictly decreasing in between, built from the standard exp(-1/v)
    glue, so all derivatives vanish at both ends.
    """
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    u_arr = np.asarray(u, dtype=float)
    v = (u_arr - lo) / (hi - lo)
    up, down = _phi(1.0 - v), _phi(v)
    out = up / (up + down)
    if np.isscalar(u) or u_arr.ndim == 0:
        return float(out)
    return out


def select_epsilon(cfg: AcquisitionConfig, s_start: float | None = None) -> CollarSelection:
    """Pick a collar width that all four admissibility constraints accept.

    Works at the single slow time s_start (default: the window start),
    which must exceed the circle onset s0.  The ratio level k_ref is the
    unique point where the growing pencil-circle radius crosses 13/6 of
    the shrinking constraint min(beta - 1, 1 - k, 1/4); bisection to
    1e-12.  The width is then 90% of the binding constraint, which keeps
    every inequality strict.

    Raises SelectionError when alpha >= -1: beta <= 1 makes the
    constraint set empty.  For -1 < alpha < 0, reparametrize with
    alpha' = 1/alpha (mirror the scene in x1 and rescale slow time) to
    land in the feasible range.
    """
    if cfg.alpha >= 0.0:
        raise SelectionError("collar widths apply only to alpha < 0 geometries")
    b = cfg.beta
    if b <= 1.0:
        raise SelectionError(
            "no admissible collar width for -1 <= alpha < 0 (beta <= 1); "
            "reparametrize with alpha' = 1/alpha, mirroring the scene in x1 "
            "and rescaling slow time, to reach alpha < -1"
        )
    s1 = cfg.s_min if s_start is None else float(s_start)
    if not s1 > cfg.s0:
        raise SelectionError(
            f"selection slow time {s1} does not exceed the circle onset {cfg.s0}"
        )
    k_lo = ratio_threshold(cfg, s1)

    def radius(k: float) -> float:
        c = range_ratio_circle(cfg, s1, k)
        return c.radius if c.kind == "circle" else 0.0

    def gap(k: float) -> float:
        return radius(k) - (13.0 / 6.0) * min(b - 1.0, 1.0 - k, 0.25)

    # radius grows from 0 while the constraint term shrinks to 0 at k = 1,
    # so the bracket always straddles the root
    k1 = float(bisect(gap, k_lo * (1.0 + 1e-12), 1.0, xtol=1e-12))
    r1 = radius(k1)
    eps = 0.9 * min(r1 / 12.0, (b - 1.0) / 6.0, (1.0 - k1) / 6.0, 1.0 / 24.0)
    return CollarSelection(s_ref=s1, k_ref=k1, eps=eps)


def psi1(sel: CollarSelection, x2):
    """Track-plane collar: 1 within eps of x2 = 0, 0 beyond 2 eps."""
    return bump(np.abs(x2), sel.eps, 2.0 * sel.eps)


def ratio_level(cfg: AcquisitionConfig, s: float, x1, x2):
    """The range ratio beta B / A at ground points (alpha < 0)."""
    a, b = bistatic_ranges(cfg, s, x1, x2)
    return cfg.beta * b / a


def psi2(cfg: AcquisitionConfig, sel: CollarSelection, s: float, x1, x2):
    """Critical-circle collar: 1 within eps of unit range ratio, 0 beyond 2 eps."""
    return bump(np.abs(ratio_level(cfg, s, x1, x2) - 1.0), sel.eps, 2.0 * sel.eps)


def in_critical_box(cfg: AcquisitionConfig, sel: CollarSelection, s: float, x1, x2,
                    multiple: float = 2.0):
    """True where both collar coordinates are under multiple * eps.

    At multiple = 2 this is exactly the support box of the product
    psi1 * psi2.
    """
    lim = multiple * sel.eps
    near_plane = np.abs(np.asarray(x2, dtype=float)) < lim
    near_circle = np.abs(ratio_level(cfg, s, x1, x2) - 1.0) < lim
    return near_plane & near_circle


def mute_f(cfg: AcquisitionConfig, s: float, t, f_margin: float = 1e-3):
    """Base data mute: off below the threshold time, off at the window edges.

    Rises smoothly over threshold * (1 + f_margin) .. (1 + 2 f_margin),
    so the degenerate closest-approach samples never enter; rolls off
    over the outer 1% of the travel-time window on each finite edge.
    """
    if not f_margin > 0.0:
        raise ValueError(f"f_margin must be positive, got {f_margin}")
    t_arr = np.asarray(t, dtype=float)
    thr = threshold_time(cfg, s)
    w = 1.0 - bump(t_arr, thr * (1.0 + f_margin), thr * (1.0 + 2.0 * f_margin))
    if np.isfinite(cfg.t_max):
        edge = 0.01 * (cfg.t_max - cfg.t_min)
        if cfg.t_min > 0.0:
            w = w * (1.0 - bump(t_arr, cfg.t_min, cfg.t_min + edge))
        w = w * bump(t_arr, cfg.t_max - edge, cfg.t_max)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(w)
    return w


def mute_g(cfg: AcquisitionConfig, sel: CollarSelection | None, s: float, t,
           n: int = 512):
    """Collar mute: kills samples whose ground ellipse grazes the critical box.

    Samples the ellipse at n points and measures, in collar widths, how
    far the closest sample stays from the box where both cutoffs are
    active: m = min over samples of max(|x2| / eps, |ratio - 1| / eps).
    The weight drops smoothly from 1 to 0 as m falls from 5 to 4.
    Identically 1 for alpha >= 0 and in the common-midpoint mode, where
    no collar machinery applies.  Travel times at or below the threshold
    have no ellipse and get weight 1 (the base mute already removes them).
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.ones_like(t_arr)
    trivial = cfg.alpha >= 0.0 or cfg.common_midpoint
    if not trivial and sel is None and cfg.beta <= 1.0:
        # no admissible collar exists for -1 < alpha < 0; the mute is void there
        trivial = True
    if trivial:
        return float(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))
    if sel is None:
        raise ValueError("collar selection required for alpha < -1")
    thr = threshold_time(cfg, s)
    live = t_arr > thr * (1.0 + 1e-12)
    if np.any(live):
        idx = np.nonzero(live)[0]
        for j in idx:
            pts = ellipse_points(cfg, s, float(t_arr[j]), n)
            ratio = ratio_level(cfg, s, pts[:, 0], pts[:, 1])
            m = np.max(
                np.stack([np.abs(pts[:, 1]) / sel.eps, np.abs(ratio - 1.0) / sel.eps]),
                axis=0,
            )
            out[j] = 1.0 - bump(float(np.min(m)), 4.0, 5.0)
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out[0])
    return out.reshape(np.shape(t))


def classify_region(cfg: AcquisitionConfig, s: float, t: float,
                    boundary_tol: float = 1e-6) -> str:
    """Which travel-time region the sample (s, t) falls in.

    "precritical" before the critical circle exists, "band" strictly
    between the critical times, "outer" otherwise, and "boundary" within
    boundary_tol (relative) of either critical time or of the circle
    onset.  Needs alpha < 0 and not the common-midpoint mode.
    """
    if cfg.alpha >= 0.0:
        raise ModeError("travel-time regions are defined only for alpha < 0")
    if cfg.common_midpoint:
        raise ModeError("travel-time regions are undefined in the common-midpoint mode")
    onset = abs(cfg.s0)
    if abs(s - onset) <= boundary_tol * onset:
        return REGION_BOUNDARY
    if critical_circle(cfg, s).kind != "circle":
        return REGION_PRECRITICAL
    t_lo, t_hi = critical_times(cfg, s)
    if abs(t - t_lo) <= boundary_tol * t_lo or abs(t - t_hi) <= boundary_tol * t_hi:
        return REGION_BOUNDARY
    if t_lo < t < t_hi:
        return REGION_BAND
    return REGION_OUTER


def _band_profile(t: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Smooth plateau supported on the middle 90% of the interval (lo, hi).

    The support ends at 0.9 of the half-width, so a whole annulus next to
    each region boundary carries exact zeros, and the rise is spread over
    a third of the half-width to keep the slope mild near the boundary.
    """
    if not hi > lo:
        return np.zeros_like(t)
    c, w = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return np.asarray(bump(np.abs(t - c), 0.55 * w, 0.9 * w))


def region_mute(cfg: AcquisitionConfig, region: str, s: float, t):
    """Smooth weight supported strictly inside one travel-time region.

    region is one of "o1"/"precritical", "o2"/"band", "o3"/"outer" or
    "none" (constant 1).  Support stays inside the open region
    intersected with the acquisition windows, clear of the boundary
    bands that classify_region reports.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if region == "none":
        out = np.ones_like(t_arr)
        return float(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))
    try:
        label = _REGION_ALIASES[region]
    except KeyError:
        raise ValueError(f"unknown region selector {region!r}") from None
    if cfg.alpha >= 0.0 or cfg.common_midpoint:
        raise ModeError("region mutes are defined only for alpha < 0, alpha != -1")

    onset = abs(cfg.s0)
    have_circle = critical_circle(cfg, s).kind == "circle"
    if label == REGION_PRECRITICAL:
        hi = min(cfg.s_max, onset)
        val = 0.0 if have_circle else float(_band_profile(np.array([s]), cfg.s_min, hi)[0])
        out = np.full_like(t_arr, val)
    elif not have_circle:
        out = np.zeros_like(t_arr)
    else:
        t_lo, t_hi = critical_times(cfg, s)
        if label == REGION_BAND:
            tau = (t_arr - t_lo) / (t_hi - t_lo)
            out = _band_profile(tau, 0.0, 1.0)
        else:
            thr = threshold_time(cfg, s)
            out = _band_profile(t_arr, max(thr, cfg.t_min), min(t_lo, cfg.t_max))
            if np.isfinite(cfg.t_max):
                out = out + _band_profile(t_arr, max(t_hi, cfg.t_min), cfg.t_max)
    if np.ndim(t) == 0:
        return float(out[0])
    return out.reshape(np.shape(t))
