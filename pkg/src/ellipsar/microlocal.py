"""Microlocal diagnostics for the elliptical scattering transform.

The forward map lifts to a relation between scene covectors and data
covectors, globally parameterized by (s, x1, x2, omega).  This module
evaluates that relation, differentiates its two projections, classifies
where the data-side projection degenerates, and predicts the partner
locations where energy from one scatterer can reappear after
backprojection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ModeError
from .geometry import (
    AcquisitionConfig,
    bistatic_ranges,
    ground_ellipse,
    range_ratio_circle,
)

__all__ = [
    "CanonicalPoint",
    "CovectorPoint",
    "DataCovector",
    "SigmaLabel",
    "canonical_image",
    "det_dpiL",
    "jacobian_piL",
    "jacobian_piR",
    "classify_sigma",
    "predict_c1",
    "predict_c2_partners",
    "predict_common_midpoint",
    "composition_residual",
]


@dataclass(frozen=True)
class CanonicalPoint:
    """A point (s, x1, x2, omega) of the canonical relation's global chart."""

    s: float
    x1: float
    x2: float
    omega: float

    def __post_init__(self) -> None:
        if not self.s > 0.0:
            raise ValueError(f"slow time must be positive, got s={self.s}")
        if self.omega == 0.0:
            raise ValueError("frequency omega must be nonzero")


@dataclass(frozen=True)
class CovectorPoint:
    """A scene point with a nonzero covector attached."""

    x: tuple[float, float]
    xi: tuple[float, float]

    def __post_init__(self) -> None:
        if self.xi[0] == 0.0 and self.xi[1] == 0.0:
            raise ValueError("covector vanishes; the scene point carries no direction")


@dataclass(frozen=True)
class DataCovector:
    """A data point (s, t) with covector components (sigma, tau)."""

    s: float
    t: float
    sigma: float
    tau: float

    def __post_init__(self) -> None:
        if self.tau == 0.0:
            raise ValueError("tau must be nonzero")


class SigmaLabel(NamedTuple):
    """Degeneracy stratum of the data-side projection at one point.

    ``both`` marks points lying on the axis and the fold circle at once;
    those are exactly the points the collar cutoffs avoid.
    """

    label: str
    both: bool


def _range_directions(cfg: AcquisitionConfig, s: float, x1: float, x2: float):
    a, b = bistatic_ranges(cfg, s, x1, x2)
    a = float(a)
    b = float(b)
    du = (x1 - cfg.alpha * s) / a
    dv = (x1 - s) / b
    return a, b, du, dv


def canonical_image(cfg: AcquisitionConfig, p: CanonicalPoint):
    """Evaluate the canonical relation at p.

    Returns the pair (data covector, scene covector).  The scene covector
    vanishes only at the point midway between the two foci, where this
    raises ValueError: nothing there is microlocally visible.
    """
    a, b, du, dv = _range_directions(cfg, p.s, p.x1, p.x2)
    t = a + b
    sigma = -p.omega * (cfg.alpha * du + dv)
    xi1 = p.omega * (du + dv)
    xi2 = p.omega * p.x2 * (1.0 / a + 1.0 / b)
    data = DataCovector(s=p.s, t=t, sigma=sigma, tau=p.omega)
    scene = CovectorPoint(x=(p.x1, p.x2), xi=(xi1, xi2))
    return data, scene


def det_dpiL(cfg: AcquisitionConfig, p: CanonicalPoint) -> float:
    """Determinant of the data-side projection differential at p.

    Vanishes to first order on the axis stratum {x2 = 0} and, for
    alpha < 0, on the fold circle where alpha/A^2 + 1/B^2 = 0.  The third
    factor is positive whenever the platforms fly above the scene, so it
    never contributes zeros.
    """
    a, b, _, _ = _range_directions(cfg, p.s, p.x1, p.x2)
    dot = (cfg.alpha * p.s - p.x1) * (p.s - p.x1) + p.x2 * p.x2 + cfg.h * cfg.h
    mix = 1.0 + dot / (a * b)
    return -p.omega * p.x2 * (cfg.alpha / (a * a) + 1.0 / (b * b)) * mix


_FD_REL = 1e-6


def _fd_jacobian(fun, coords: np.ndarray) -> np.ndarray:
    cols = []
    for i in range(coords.size):
        step = _FD_REL * max(1.0, abs(coords[i]))
        hi = coords.copy()
        lo = coords.copy()
        hi[i] += step
        lo[i] -= step
        cols.append((fun(hi) - fun(lo)) / (2.0 * step))
    return np.stack(cols, axis=1)


def jacobian_piL(cfg: AcquisitionConfig, p: CanonicalPoint) -> np.ndarray:
    """Finite-difference Jacobian of the data-side projection.

    Rows are (s, t, sigma, tau); columns are derivatives along
    (x1, x2, omega, s).  That column order orients the chart so the
    determinant agrees with det_dpiL.
    """

    def chart(v: np.ndarray) -> np.ndarray:
        x1, x2, omega, s = v
        a, b, du, dv = _range_directions(cfg, s, x1, x2)
        sigma = -omega * (cfg.alpha * du + dv)
        return np.array([s, a + b, sigma, omega])

    return _fd_jacobian(chart, np.array([p.x1, p.x2, p.omega, p.s], dtype=float))


def jacobian_piR(cfg: AcquisitionConfig, p: CanonicalPoint) -> np.ndarray:
    """Finite-difference Jacobian of the scene-side projection.

    Rows are (x1, x2, xi1, xi2); columns follow the jacobian_piL
    convention (x1, x2, omega, s).
    """

    def chart(v: np.ndarray) -> np.ndarray:
        x1, x2, omega, s = v
        a, b, du, dv = _range_directions(cfg, s, x1, x2)
        xi1 = omega * (du + dv)
        xi2 = omega * x2 * (1.0 / a + 1.0 / b)
        return np.array([x1, x2, xi1, xi2])

    return _fd_jacobian(chart, np.array([p.x1, p.x2, p.omega, p.s], dtype=float))


def classify_sigma(cfg: AcquisitionConfig, p: CanonicalPoint, tol: float = 1e-8) -> SigmaLabel:
    """Name the degeneracy stratum of the data-side projection at p.

    "Sigma1" is the axis stratum |x2| < tol.  "Sigma2" is the fold circle,
    tested scale-aware: |alpha/A^2 + 1/B^2| < tol * (|alpha|/A^2 + 1/B^2),
    since the raw quantity decays like 1/A^2 at range.  Points on both are
    reported Sigma1 with the both flag set.
    """
    a, b, _, _ = _range_directions(cfg, p.s, p.x1, p.x2)
    on_axis = abs(p.x2) < tol
    on_fold = False
    if cfg.alpha < 0.0:
        raw = cfg.alpha / (a * a) + 1.0 / (b * b)
        scale = -cfg.alpha / (a * a) + 1.0 / (b * b)
        on_fold = abs(raw) < tol * scale
    if on_axis:
        return SigmaLabel("Sigma1", on_fold)
    if on_fold:
        return SigmaLabel("Sigma2", False)
    return SigmaLabel("none", False)


def predict_c1(q: CovectorPoint) -> CovectorPoint:
    """Mirror artifact map: reflect point and covector across the x1 axis.

    An involution whose fixed points are exactly {x2 = 0, xi2 = 0}.
    """
    return CovectorPoint(x=(q.x[0], -q.x[1]), xi=(q.xi[0], -q.xi[1]))


def predict_c2_partners(cfg: AcquisitionConfig, s: float, x: tuple[float, float]) -> list:
    """Scene points whose echo at slow time s is indistinguishable from x's.

    Computes the range ratio k = beta*B/A and travel time t = A+B at x,
    then intersects the iso-range ellipse E(s, t) with the reciprocal-ratio
    circle {beta*B/A = 1/k}.  Both curves are symmetric about the x1 axis,
    so eliminating y2^2 leaves an exact quadratic in y1; real roots are
    kept when they land on both loci and are returned with each sign of
    y2 (positive first).  Empty when the reciprocal circle misses the
    ellipse, which is what happens below the critical band and above it.
    """
    beta = cfg.beta
    x1, x2 = float(x[0]), float(x[1])
    a, b = bistatic_ranges(cfg, s, x1, x2)
    a = float(a)
    b = float(b)
    k = beta * b / a
    t = a + b
    circle = range_ratio_circle(cfg, s, 1.0 / k)
    if circle.kind == "empty":
        return []

    ell = ground_ellipse(cfg, s, t)
    ae, be, ce = ell.semi_x1, ell.semi_x2, ell.center_x1

    if circle.kind == "line":
        y1 = circle.center_x1
        u = (y1 - ce) / ae
        candidates = [(y1, be * be * (1.0 - u * u), be * be)]
    else:
        cc, rc = circle.center_x1, circle.radius
        # substitute y2^2 = rc^2 - (y1 - cc)^2 into the ellipse equation
        qa = be * be - ae * ae
        qb = 2.0 * (ae * ae * cc - be * be * ce)
        qc = (be * be * ce * ce - ae * ae * cc * cc
              + ae * ae * rc * rc - ae * ae * be * be)
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            return []
        root = math.sqrt(disc)
        candidates = [((-qb - root) / (2.0 * qa), None, rc * rc),
                      ((-qb + root) / (2.0 * qa), None, rc * rc)]
        candidates = [(y1, rc * rc - (y1 - cc) ** 2, sc) for y1, _, sc in candidates]

    partners = []
    for y1, y2_sq, scale in candidates:
        if y2_sq < -1e-9 * max(1.0, scale):
            continue
        y2 = math.sqrt(max(0.0, y2_sq))
        pa, pb = bistatic_ranges(cfg, s, y1, y2)
        pa = float(pa)
        pb = float(pb)
        if abs(beta * pb / pa - 1.0 / k) > 1e-6 / k:
            continue
        if abs(pa + pb - t) > 1e-6 * t:
            continue
        if y2 == 0.0:
            partners.append((y1, 0.0))
        else:
            partners.append((y1, y2))
            partners.append((y1, -y2))
    return partners


def predict_common_midpoint(cfg: AcquisitionConfig, q: CovectorPoint):
    """Artifact images under the two extra symmetries of opposite flight.

    Returns (left-right image, rotation image): (-x1, x2, -xi1, xi2) and
    (-x1, -x2, -xi1, -xi2).  With the mirror map these generate the
    four-element artifact group of the common-midpoint mode.
    """
    if not cfg.common_midpoint:
        raise ModeError("common-midpoint artifact maps require alpha = -1")
    lam2 = CovectorPoint(x=(-q.x[0], q.x[1]), xi=(-q.xi[0], q.xi[1]))
    lam3 = CovectorPoint(x=(-q.x[0], -q.x[1]), xi=(-q.xi[0], -q.xi[1]))
    return lam2, lam3


def composition_residual(alpha, rho, phi, phi_prime):
    """Gap between the raw pairing condition and its factored form.

    Two points of one ellipse, written in prolate angles phi and
    phi_prime at radial coordinate rho, share a stationary direction when
    their isodoppler values agree.  Clearing denominators from that raw
    difference must reproduce the factored polynomial used by the partner
    predictors; the return value is raw-minus-factored and is zero up to
    rounding.  Broadcasts over array inputs.
    """
    c = np.cosh(rho)
    p = np.cos(phi)
    q = np.cos(phi_prime)
    alpha = np.asarray(alpha, dtype=float)
    dop_p = alpha * (1.0 + c * p) / (c + p) + (c * p - 1.0) / (c - p)
    dop_q = alpha * (1.0 + c * q) / (c + q) + (c * q - 1.0) / (c - q)
    raw = (dop_p - dop_q) * (c + p) * (c - p) * (c + q) * (c - q)
    bracket = (alpha + 1.0) * (c * c + p * q) - (alpha - 1.0) * c * (p + q)
    # the factored side carries a sinh^2(rho) factor; dropping it breaks
    # the identity for every rho
    factored = (p - q) * (c * c - 1.0) * bracket
    out = raw - factored
    return float(out) if np.ndim(out) == 0 else out
