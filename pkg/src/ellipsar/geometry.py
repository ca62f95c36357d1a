"""Acquisition geometry for a bistatic pair on a straight common track.

The transmitter and receiver fly along the x1 axis at height h above the
imaged plane x3 = 0, the transmitter at alpha times the receiver speed:
at slow time s they sit at (alpha*s, 0, h) and (s, 0, h).  With unit wave
speed, the scene points contributing to the data sample (s, t) are exactly
those with travel-time sum A + B = t, where A and B are the distances to
the two platforms.  That level set is an ellipsoid of revolution with the
platforms as foci; this module handles its trace on the ground plane, the
confocal coordinates adapted to it, and the circles on which the imaging
geometry degenerates.

Slow time s is scalar and positive throughout.  Ground coordinates
broadcast in the usual numpy way where that makes sense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import ConfigError, ModeError


@dataclass(frozen=True)
class AcquisitionConfig:
    """Speed ratio, flight height and the acquisition windows.

    alpha = 1 puts both platforms at the same point for every s (the
    monostatic geometry) and is rejected.  alpha = -1 is the
    common-midpoint mode where the platforms recede symmetrically from
    the origin.  The travel-time window defaults to unbounded; pipeline
    code that needs a finite data window should set t_min and t_max.
    """

    alpha: float
    h: float
    s_min: float
    s_max: float
    t_min: float = 0.0
    t_max: float = math.inf

    def __post_init__(self) -> None:
        if self.alpha == 1.0:
            raise ConfigError("alpha = 1 is the monostatic geometry; it is excluded")
        if not self.h > 0.0:
            raise ConfigError(f"flight height must be positive, got h={self.h}")
        if not 0.0 < self.s_min < self.s_max:
            raise ConfigError(
                "slow-time window must satisfy 0 < s_min < s_max, "
                f"got [{self.s_min}, {self.s_max}]"
            )
        if not 0.0 <= self.t_min < self.t_max:
            raise ConfigError(
                "travel-time window must satisfy 0 <= t_min < t_max, "
                f"got [{self.t_min}, {self.t_max}]"
            )

    @property
    def beta(self) -> float:
        """sqrt(-alpha); the natural range-ratio scale when the platforms recede."""
        if self.alpha >= 0.0:
            raise ModeError("beta = sqrt(-alpha) is defined only for alpha < 0")
        return math.sqrt(-self.alpha)

    @property
    def common_midpoint(self) -> bool:
        return self.alpha == -1.0

    @property
    def s0(self) -> float:
        """Slow time at which the rank-drop circle first acquires real radius.

        Defined for alpha < 0.  For -1 < alpha < 0 the value comes out
        negative while the circle actually appears at s = |s0|, so
        existence should always be read off the circle radius rather than
        by comparing s with s0.
        """
        b = self.beta
        return self.h * (b * b - 1.0) / (b * (b * b + 1.0))


@dataclass(frozen=True)
class GroundEllipse:
    """Trace of a travel-time ellipsoid on the ground plane.

    Axis-aligned: semi_x1 >= semi_x2 > 0 always, since the foci lie along
    the x1 direction.
    """

    center_x1: float
    semi_x1: float
    semi_x2: float


@dataclass(frozen=True)
class GroundCircle:
    """A member of the range-ratio pencil on the ground plane.

    kind is "circle", "line" (a vertical line x1 = center_x1, the
    degenerate pencil member; radius is +inf then) or "empty" (no real
    points; center_x1 and radius are nan).
    """

    kind: str
    center_x1: float
    radius: float


@dataclass(frozen=True)
class ProlateCoords:
    """Confocal coordinates (rho, phi) of a ground point, rho > 0, 0 < phi < pi."""

    rho: float
    phi: float


def platform_positions(cfg: AcquisitionConfig, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Transmitter and receiver positions at slow time s."""
    tx = np.array([cfg.alpha * s, 0.0, cfg.h])
    rx = np.array([s, 0.0, cfg.h])
    return tx, rx


def bistatic_ranges(cfg: AcquisitionConfig, s: float, x1, x2) -> tuple[np.ndarray, np.ndarray]:
    """Distances A (to transmitter) and B (to receiver) from ground points.

    x1, x2 broadcast; the returned arrays have the broadcast shape.  Both
    distances are >= h > 0, so downstream divisions by A, B are safe.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    hh = cfg.h * cfg.h
    a = np.sqrt((x1 - cfg.alpha * s) ** 2 + x2 * x2 + hh)
    b = np.sqrt((x1 - s) ** 2 + x2 * x2 + hh)
    return a, b


def threshold_time(cfg: AcquisitionConfig, s: float) -> float:
    """Smallest travel time with a nonempty ground trace at slow time s.

    At exactly this time the ellipsoid touches the ground in the single
    point ((1 + alpha) s / 2, 0); for larger t the trace is a genuine
    ellipse.
    """
    return math.hypot((cfg.alpha - 1.0) * s, 2.0 * cfg.h)


def ground_ellipse(cfg: AcquisitionConfig, s: float, t: float) -> GroundEllipse:
    """Ground trace of the travel-time level set {A + B = t}.

    Requires s > 0 and t > threshold_time(cfg, s).  The ellipsoid has
    center (1 + alpha) s / 2 on the x1 axis, major semi-axis t / 2 and
    focal half-distance |1 - alpha| s / 2 at height h; slicing at the
    ground shrinks the x1 semi-axis by the same ratio as the x2 one.
    """
    if not s > 0.0:
        raise ValueError(f"slow time must be positive, got s={s}")
    thr = threshold_time(cfg, s)
    if not t > thr:
        raise ValueError(f"travel time {t} does not exceed the threshold {thr}")
    a3 = 0.5 * t
    c3 = 0.5 * abs(1.0 - cfg.alpha) * s
    b3_sq = a3 * a3 - c3 * c3
    bg_sq = b3_sq - cfg.h * cfg.h  # > 0 exactly when t exceeds the threshold
    ag_sq = a3 * a3 * bg_sq / b3_sq
    return GroundEllipse(
        center_x1=0.5 * (1.0 + cfg.alpha) * s,
        semi_x1=math.sqrt(ag_sq),
        semi_x2=math.sqrt(bg_sq),
    )


def ellipse_points(cfg: AcquisitionConfig, s: float, t: float, n: int) -> np.ndarray:
    """n points on the ground ellipse, uniformly spaced in the axis angle.

    Returns an (n, 2) array.  Every row satisfies A + B = t to rounding
    error; the first point is the rightmost axis point and the sweep is
    counterclockwise.
    """
    if n < 1:
        raise ValueError(f"need at least one sample point, got n={n}")
    ell = ground_ellipse(cfg, s, t)
    theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    pts = np.empty((n, 2))
    pts[:, 0] = ell.center_x1 + ell.semi_x1 * np.cos(theta)
    pts[:, 1] = ell.semi_x2 * np.sin(theta)
    return pts


def prolate_from_ground(cfg: AcquisitionConfig, s: float, x1: float, x2: float) -> ProlateCoords:
    """Confocal (prolate spheroidal) coordinates of a ground point.

    cosh(rho) = (A + B) / (|1 - alpha| s) and cos(phi) = (A - B) /
    (|1 - alpha| s).  Because the ground plane sits h > 0 below the focal
    axis, rho > 0 and 0 < phi < pi strictly for every ground point.
    """
    if not s > 0.0:
        raise ValueError(f"slow time must be positive, got s={s}")
    a, b = bistatic_ranges(cfg, s, x1, x2)
    scale = abs(1.0 - cfg.alpha) * s
    ch = (float(a) + float(b)) / scale
    cphi = (float(a) - float(b)) / scale
    # Clamp against rounding before the inverse maps; both bounds are
    # attained only at points off the ground plane.
    ch = max(ch, 1.0)
    cphi = min(1.0, max(-1.0, cphi))
    return ProlateCoords(rho=math.acosh(ch), phi=math.acos(cphi))


def ground_from_prolate(cfg: AcquisitionConfig, s: float, rho: float, phi: float) -> tuple[float, float]:
    """Inverse of prolate_from_ground up to the sign of x2 (returns x2 >= 0).

    Requires the coordinates to actually meet the ground, i.e.
    (|1 - alpha| s / 2) sinh(rho) sin(phi) >= h.
    """
    kappa = 0.5 * abs(1.0 - cfg.alpha) * s
    # The x1 factor is signed: for alpha > 1 the receiver focus is the left
    # one, which flips the angular orientation.
    x1 = 0.5 * (1.0 + cfg.alpha) * s + 0.5 * (1.0 - cfg.alpha) * s * math.cosh(rho) * math.cos(phi)
    r_sq = (kappa * math.sinh(rho) * math.sin(phi)) ** 2 - cfg.h * cfg.h
    if r_sq < -1e-12 * max(1.0, kappa * kappa):
        raise ValueError("coordinates lie above the ground plane")
    x2 = math.sqrt(max(r_sq, 0.0))
    return x1, x2


def range_ratio_circle(cfg: AcquisitionConfig, s: float, k: float) -> GroundCircle:
    """Level set {beta * B / A = k} on the ground plane (alpha < 0, k > 0).

    For k != beta this is a circle centered on the x1 axis (possibly
    empty: the cylinder over the level set in space may miss the ground);
    k = beta gives the vertical line x1 = (1 - beta^2) s / 2.
    """
    if cfg.alpha >= 0.0:
        raise ModeError("the range-ratio pencil is defined only for alpha < 0")
    if not s > 0.0:
        raise ValueError(f"slow time must be positive, got s={s}")
    if not k > 0.0:
        raise ValueError(f"ratio level must be positive, got k={k}")
    b = cfg.beta
    if k == b:
        return GroundCircle(kind="line", center_x1=0.5 * (1.0 - b * b) * s, radius=math.inf)
    den = b * b - k * k
    center = b * b * s * (1.0 + k * k) / den
    r_sq = (b * s * k * (b * b + 1.0) / den) ** 2 - cfg.h * cfg.h
    if r_sq <= 0.0:
        return GroundCircle(kind="empty", center_x1=math.nan, radius=math.nan)
    return GroundCircle(kind="circle", center_x1=center, radius=math.sqrt(r_sq))


def critical_circle(cfg: AcquisitionConfig, s: float) -> GroundCircle:
    """Ground locus where the forward map's left projection drops rank off the axis.

    This is the unit-ratio member of the range-ratio pencil, beta B = A.
    Empty for alpha >= 0 (the two unit vectors can never cancel then) and
    the line x1 = 0 in the common-midpoint mode alpha = -1.
    """
    if cfg.alpha >= 0.0:
        return GroundCircle(kind="empty", center_x1=math.nan, radius=math.nan)
    return range_ratio_circle(cfg, s, 1.0)


def ratio_threshold(cfg: AcquisitionConfig, s: float) -> float:
    """Smallest ratio level k whose pencil circle meets the ground.

    Found by bisection on the squared-radius function over (0, beta); the
    bracket is valid because the squared radius is -h^2 at k -> 0 and
    grows without bound at k -> beta.
    """
    if cfg.alpha >= 0.0:
        raise ModeError("the range-ratio pencil is defined only for alpha < 0")
    if cfg.common_midpoint:
        raise ModeError("no ratio threshold in the common-midpoint mode")
    if not s > 0.0:
        raise ValueError(f"slow time must be positive, got s={s}")
    b = cfg.beta

    def r_sq(k: float) -> float:
        return (b * s * k * (b * b + 1.0) / (b * b - k * k)) ** 2 - cfg.h * cfg.h

    return float(bisect(r_sq, 1e-12 * b, b * (1.0 - 1e-12), xtol=1e-12))


def circle_endpoints(cfg: AcquisitionConfig, s: float, k: float) -> tuple[float, float]:
    """On-axis extremes (x_left, x_right) of a nonempty pencil circle.

    As k grows from the ratio threshold toward beta the circles are
    nested and growing, so x_left decreases and x_right increases.
    """
    c = range_ratio_circle(cfg, s, k)
    if c.kind != "circle":
        raise ValueError(f"pencil member at k={k} has no axis endpoints (kind={c.kind})")
    return c.center_x1 - c.radius, c.center_x1 + c.radius


def critical_axis_points(cfg: AcquisitionConfig, s: float) -> tuple[float, float]:
    """x1 positions (left, right) where the critical circle meets the track plane.

    These are the two ground points at which both degeneracies coincide.
    Requires alpha < 0, alpha != -1, and a nonempty critical circle.
    """
    if cfg.alpha >= 0.0:
        raise ModeError("no critical circle for alpha >= 0")
    if cfg.common_midpoint:
        raise ModeError("the critical locus is a line in the common-midpoint mode")
    c = critical_circle(cfg, s)
    if c.kind != "circle":
        raise ValueError(f"critical circle is empty at s={s}")
    return c.center_x1 - c.radius, c.center_x1 + c.radius


def critical_times(cfg: AcquisitionConfig, s: float) -> tuple[float, float]:
    """Travel times of the two critical axis points, sorted ascending.

    Between these times the ground ellipse crosses the critical circle;
    outside them it misses it.  Closed form: with d = -s (alpha - 1)^2 /
    (2 (alpha + 1)) and r the critical-circle radius, the two times are
    2 (beta + 1) sqrt(d (d -+ r) / (beta^2 + 1)); both radicands are
    positive since |d| > r whenever the circle exists.
    """
    if cfg.alpha >= 0.0:
        raise ModeError("no critical circle for alpha >= 0")
    if cfg.common_midpoint:
        raise ModeError("no critical times in the common-midpoint mode")
    c = critical_circle(cfg, s)
    if c.kind != "circle":
        raise ValueError(f"critical circle is empty at s={s}")
    b = cfg.beta
    d = -s * (cfg.alpha - 1.0) ** 2 / (2.0 * (cfg.alpha + 1.0))
    scale = 2.0 * (b + 1.0) / math.sqrt(b * b + 1.0)
    t_a = scale * math.sqrt(d * (d - c.radius))
    t_b = scale * math.sqrt(d * (d + c.radius))
    return (t_a, t_b) if t_a <= t_b else (t_b, t_a)
