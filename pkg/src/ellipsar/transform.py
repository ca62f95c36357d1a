"""Forward operator, backprojection and the normal operator.

The forward map integrates the scene reflectivity over the ground
ellipses of constant travel time,

    d(s, t) = m(s, t) * sum over ellipse samples of
              a0(s, x) * V(x) * w_arc(x) / |grad_x R(s, x)|,

which is the generalized Radon transform obtained from the single
scattering model after integrating out the frequency variable; a0 is the
geometric spreading amplitude and m the product of the configured data
mutes.  The remaining frequency-squared factor is exposed separately as
the second-derivative filter apply_dt2.

The adjoint is the exact transpose of this quadrature with respect to
the measure-weighted inner products (ds dt on data, dx1 dx2 on the
scene): the same ellipse samples scatter the muted data back through the
transposed bilinear stencil.  Its continuous limit is the backprojection
integral of a0 times the muted data evaluated at t = R(s, x), and the
discrete pairing <FV, d> = <V, F* d> holds to rounding error by
construction.

Scene rasters are uniform with inclusive endpoints; Image values are
indexed [i1, i2] along (x1, x2) and Sinogram values [i, j] along (s, t).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ellipe

from .cutoffs import CollarSelection, mute_f, mute_g, region_mute
from .errors import ConfigError
from .geometry import AcquisitionConfig, ground_ellipse, threshold_time

_SPREAD = 1.0 / (16.0 * math.pi**2)


@dataclass(frozen=True)
class GridSpec:
    """Uniform rasters for the scene, the aperture and fast time."""

    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float
    nx1: int
    nx2: int
    s_min: float
    s_max: float
    ns: int
    t_min: float
    t_max: float
    nt: int

    def __post_init__(self) -> None:
        for lo, hi, n, name in (
            (self.x1_min, self.x1_max, self.nx1, "x1"),
            (self.x2_min, self.x2_max, self.nx2, "x2"),
            (self.s_min, self.s_max, self.ns, "s"),
            (self.t_min, self.t_max, self.nt, "t"),
        ):
            if n < 2:
                raise ConfigError(f"{name} axis needs at least 2 samples, got {n}")
            if not lo < hi:
                raise ConfigError(f"{name} bounds must increase, got [{lo}, {hi}]")

    @property
    def x1_axis(self) -> np.ndarray:
        return np.linspace(self.x1_min, self.x1_max, self.nx1)

    @property
    def x2_axis(self) -> np.ndarray:
        return np.linspace(self.x2_min, self.x2_max, self.nx2)

    @property
    def s_axis(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.ns)

    @property
    def t_axis(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.nt)

    @property
    def dx1(self) -> float:
        return (self.x1_max - self.x1_min) / (self.nx1 - 1)

    @property
    def dx2(self) -> float:
        return (self.x2_max - self.x2_min) / (self.nx2 - 1)

    @property
    def ds(self) -> float:
        return (self.s_max - self.s_min) / (self.ns - 1)

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.nt - 1)


@dataclass
class Image:
    """Scene reflectivity sampled on the grid's raster, shape (nx1, nx2)."""

    grid: GridSpec
    values: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.values is None:
            self.values = np.zeros((self.grid.nx1, self.grid.nx2))
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nx1, self.grid.nx2):
            raise ConfigError(
                f"image shape {self.values.shape} does not match grid "
                f"({self.grid.nx1}, {self.grid.nx2})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("image values must be finite")


@dataclass
class Sinogram:
    """Data samples d(s, t) on the grid's aperture/fast-time raster, shape (ns, nt)."""

    grid: GridSpec
    values: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.values is None:
            self.values = np.zeros((self.grid.ns, self.grid.nt))
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.ns, self.grid.nt):
            raise ConfigError(
                f"sinogram shape {self.values.shape} does not match grid "
                f"({self.grid.ns}, {self.grid.nt})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("sinogram values must be finite")


def config_for_grid(grid: GridSpec, alpha: float, h: float) -> AcquisitionConfig:
    """AcquisitionConfig whose windows match the grid's aperture and time rasters."""
    return AcquisitionConfig(alpha=alpha, h=h, s_min=grid.s_min, s_max=grid.s_max,
                             t_min=grid.t_min, t_max=grid.t_max)


def amplitude(cfg: AcquisitionConfig, s: float, x1, x2):
    """Geometric spreading amplitude 1 / (16 pi^2 A B).

    The frequency-squared factor of the scattering model is not part of
    this weight; apply_dt2 stands in for it when sharper data are wanted.
    """
    hh = cfg.h * cfg.h
    a = np.sqrt((np.asarray(x1, float) - cfg.alpha * s) ** 2 + np.asarray(x2, float) ** 2 + hh)
    b = np.sqrt((np.asarray(x1, float) - s) ** 2 + np.asarray(x2, float) ** 2 + hh)
    return _SPREAD / (a * b)


def _check_consistent(cfg: AcquisitionConfig, grid: GridSpec) -> None:
    pairs = (
        (cfg.s_min, grid.s_min, "s_min"),
        (cfg.s_max, grid.s_max, "s_max"),
        (cfg.t_min, grid.t_min, "t_min"),
        (cfg.t_max, grid.t_max, "t_max"),
    )
    for a, b, name in pairs:
        if not math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12):
            raise ConfigError(f"config {name}={a} disagrees with grid {name}={b}")


def _row_mute(cfg: AcquisitionConfig, sel: CollarSelection | None, s: float,
              t_axis: np.ndarray, f_margin: float, region: str) -> np.ndarray:
    m = np.asarray(mute_f(cfg, s, t_axis, f_margin)) * np.asarray(mute_g(cfg, sel, s, t_axis))
    if region != "none":
        m = m * np.asarray(region_mute(cfg, region, s, t_axis))
    return m


def _quadrature(cfg: AcquisitionConfig, grid: GridSpec, s: float, t: float,
                n_override: int | None):
    """Ellipse sample points, arc weights and the transform kernel at (s, t).

    The kernel combines the spreading amplitude with the coarea factor:
    k = a0 * w_arc / |grad R|.  Sample count follows the circumference at
    half-pixel spacing unless overridden, never below 64.
    """
    ell = ground_ellipse(cfg, s, t)
    a, b = ell.semi_x1, ell.semi_x2
    if n_override is not None:
        n = int(n_override)
    else:
        circ = 4.0 * a * float(ellipe(1.0 - (b / a) ** 2))
        n = max(64, int(math.ceil(2.0 * circ / min(grid.dx1, grid.dx2))))
    theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    ct, st = np.cos(theta), np.sin(theta)
    x1 = ell.center_x1 + a * ct
    x2 = b * st
    w = (2.0 * math.pi / n) * np.sqrt((a * st) ** 2 + (b * ct) ** 2)
    hh = cfg.h * cfg.h
    ra = np.sqrt((x1 - cfg.alpha * s) ** 2 + x2 * x2 + hh)
    rb = np.sqrt((x1 - s) ** 2 + x2 * x2 + hh)
    grad = np.hypot((x1 - cfg.alpha * s) / ra + (x1 - s) / rb, x2 / ra + x2 / rb)
    kern = (_SPREAD / (ra * rb)) * w / grad
    return x1, x2, kern


def _gather(values: np.ndarray, grid: GridSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Bilinear sample of the image at the points; zero outside the raster."""
    fx = (x1 - grid.x1_min) / grid.dx1
    fy = (x2 - grid.x2_min) / grid.dx2
    inside = (fx >= 0.0) & (fx <= grid.nx1 - 1) & (fy >= 0.0) & (fy <= grid.nx2 - 1)
    fx = np.where(inside, fx, 0.0)
    fy = np.where(inside, fy, 0.0)
    i0 = np.minimum(fx.astype(int), grid.nx1 - 2)
    j0 = np.minimum(fy.astype(int), grid.nx2 - 2)
    wx = fx - i0
    wy = fy - j0
    v = ((1 - wx) * (1 - wy) * values[i0, j0]
         + wx * (1 - wy) * values[i0 + 1, j0]
         + (1 - wx) * wy * values[i0, j0 + 1]
         + wx * wy * values[i0 + 1, j0 + 1])
    return np.where(inside, v, 0.0)


def _scatter(acc: np.ndarray, grid: GridSpec, x1: np.ndarray, x2: np.ndarray,
             c: np.ndarray) -> None:
    """Transpose of _gather: spread coefficients onto the four pixel corners."""
    fx = (x1 - grid.x1_min) / grid.dx1
    fy = (x2 - grid.x2_min) / grid.dx2
    inside = (fx >= 0.0) & (fx <= grid.nx1 - 1) & (fy >= 0.0) & (fy <= grid.nx2 - 1)
    if not np.any(inside):
        return
    fx, fy, c = fx[inside], fy[inside], c[inside]
    i0 = np.minimum(fx.astype(int), grid.nx1 - 2)
    j0 = np.minimum(fy.astype(int), grid.nx2 - 2)
    wx = fx - i0
    wy = fy - j0
    np.add.at(acc, (i0, j0), c * (1 - wx) * (1 - wy))
    np.add.at(acc, (i0 + 1, j0), c * wx * (1 - wy))
    np.add.at(acc, (i0, j0 + 1), c * (1 - wx) * wy)
    np.add.at(acc, (i0 + 1, j0 + 1), c * wx * wy)


def spotlight_mask(grid: GridSpec, half: str, margin: float) -> np.ndarray:
    """Indicator of the chosen half-plane at distance >= margin from the x1 axis."""
    if half not in ("upper", "lower"):
        raise ConfigError(f"half must be 'upper' or 'lower', got {half!r}")
    if not margin > 0.0:
        raise ConfigError(f"spotlight margin must be positive, got {margin}")
    x2 = grid.x2_axis
    keep = x2 >= margin if half == "upper" else x2 <= -margin
    return np.broadcast_to(keep.astype(float), (grid.nx1, grid.nx2)).copy()


def _split_rows(ns: int, threads: int) -> list[range]:
    threads = max(1, min(int(threads), ns))
    bounds = np.linspace(0, ns, threads + 1).astype(int)
    return [range(bounds[i], bounds[i + 1]) for i in range(threads) if bounds[i] < bounds[i + 1]]


def forward(cfg: AcquisitionConfig, sel: CollarSelection | None, img: Image,
            grid: GridSpec, *, n: int | None = None, f_margin: float = 1e-3,
            region: str = "none", half: str | None = None, margin: float = 0.0,
            threads: int = 1) -> Sinogram:
    """Simulate data from the scene.

    Every sinogram sample is the muted ellipse quadrature described in
    the module docstring; samples whose mute product vanishes are exact
    zeros.  With half set, scene values are masked to that half-plane
    before the quadrature (spotlight acquisition).  Rows of the output
    are independent; threads > 1 computes row blocks concurrently with
    identical per-row arithmetic.
    """
    if img.grid != grid:
        raise ConfigError("image grid disagrees with the requested grid")
    _check_consistent(cfg, grid)
    values = img.values
    if half is not None:
        values = values * spotlight_mask(grid, half, margin)
    s_axis, t_axis = grid.s_axis, grid.t_axis
    out = np.zeros((grid.ns, grid.nt))

    def do_rows(rows: range) -> None:
        for i in rows:
            s = float(s_axis[i])
            m = _row_mute(cfg, sel, s, t_axis, f_margin, region)
            thr = threshold_time(cfg, s)
            row = out[i]
            for j in np.nonzero(m > 0.0)[0]:
                t = float(t_axis[j])
                if t <= thr:
                    continue
                x1, x2, kern = _quadrature(cfg, grid, s, t, n)
                row[j] = m[j] * float(np.dot(_gather(values, grid, x1, x2), kern))

    blocks = _split_rows(grid.ns, threads)
    if len(blocks) == 1:
        do_rows(blocks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            list(pool.map(do_rows, blocks))
    return Sinogram(grid=grid, values=out)


def forward_spotlight(cfg: AcquisitionConfig, sel: CollarSelection | None, img: Image,
                      grid: GridSpec, half: str, margin: float, **kwargs) -> Sinogram:
    """Forward with the scene restricted to one side of the flight track."""
    return forward(cfg, sel, img, grid, half=half, margin=margin, **kwargs)


def adjoint(cfg: AcquisitionConfig, sel: CollarSelection | None, sino: Sinogram,
            grid: GridSpec, *, n: int | None = None, f_margin: float = 1e-3,
            region: str = "none", half: str | None = None, margin: float = 0.0,
            threads: int = 1) -> Image:
    """Backproject data onto the scene raster.

    Exact transpose of forward under the ds dt / dx1 dx2 inner products:
    the muted data scatter back along the same ellipse samples with the
    same kernel, carrying the measure factor ds dt / (dx1 dx2).  With
    half set, the output is masked to that half-plane (the transpose of
    masking the scene on the way in).
    """
    if sino.grid != grid:
        raise ConfigError("sinogram grid disagrees with the requested grid")
    _check_consistent(cfg, grid)
    s_axis, t_axis = grid.s_axis, grid.t_axis
    data = sino.values
    coef = grid.ds * grid.dt / (grid.dx1 * grid.dx2)

    def do_rows(rows: range) -> np.ndarray:
        acc = np.zeros((grid.nx1, grid.nx2))
        for i in rows:
            s = float(s_axis[i])
            m = _row_mute(cfg, sel, s, t_axis, f_margin, region)
            thr = threshold_time(cfg, s)
            for j in np.nonzero(m > 0.0)[0]:
                t = float(t_axis[j])
                if t <= thr:
                    continue
                md = m[j] * data[i, j]
                if md == 0.0:
                    continue
                x1, x2, kern = _quadrature(cfg, grid, s, t, n)
                _scatter(acc, grid, x1, x2, coef * md * kern)
        return acc

    blocks = _split_rows(grid.ns, threads)
    if len(blocks) == 1:
        total = do_rows(blocks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(do_rows, blocks))
        total = parts[0]
        for part in parts[1:]:
            total = total + part
    if half is not None:
        total = total * spotlight_mask(grid, half, margin)
    return Image(grid=grid, values=total)


def normal(cfg: AcquisitionConfig, sel: CollarSelection | None, img: Image,
           grid: GridSpec, *, filter_dt2: bool = False, **kwargs) -> Image:
    """Backprojection of the simulated data (optionally sharpened in between)."""
    sino = forward(cfg, sel, img, grid, **kwargs)
    if filter_dt2:
        sino = apply_dt2(sino)
    return adjoint(cfg, sel, sino, grid, **kwargs)


def apply_dt2(sino: Sinogram) -> Sinogram:
    """Negated second difference in fast time; stands in for the omega^2 factor.

    out[:, j] = -(d[:, j+1] - 2 d[:, j] + d[:, j-1]) / dt^2 on interior
    columns, with edge columns copied from their neighbors.  Quadratic
    data t^2 therefore maps to the constant -2.
    """
    if sino.grid.nt < 3:
        raise ConfigError("second difference needs at least 3 fast-time samples")
    d = sino.values
    out = np.empty_like(d)
    dt2 = sino.grid.dt**2
    out[:, 1:-1] = -(d[:, 2:] - 2.0 * d[:, 1:-1] + d[:, :-2]) / dt2
    out[:, 0] = out[:, 1]
    out[:, -1] = out[:, -2]
    return Sinogram(grid=sino.grid, values=out)
