"""Command-line frontend for the simulation and artifact-analysis pipeline.

Subcommands: simulate, backproject, normal, predict, geometry, validate.
Exit codes: 0 success, 2 configuration error, 3 a validation check failed,
4 file or format error.  Every file-producing invocation drops a JSON run
manifest next to its output; re-running the recorded argv in serial mode
reproduces the output byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import microlocal
from .cutoffs import mute_f, select_epsilon
from .errors import ConfigError, FormatError, ModeError, SelectionError
from .geometry import (
    AcquisitionConfig,
    bistatic_ranges,
    critical_axis_points,
    critical_circle,
    critical_times,
    ellipse_points,
    ground_from_prolate,
    prolate_from_ground,
    ratio_threshold,
    threshold_time,
)
from .microlocal import CanonicalPoint, CovectorPoint
from .scene_io import (
    ParsedConfig,
    Phantom,
    build_phantom,
    load,
    parse_config,
    render_config,
    save,
)
from .transform import (
    GridSpec,
    Image,
    Sinogram,
    adjoint,
    apply_dt2,
    forward,
    normal,
)

__all__ = ["main"]


def _read_config(path) -> ParsedConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _thread_count(args) -> int:
    if args.serial:
        return 1
    if args.threads == 0:
        return os.cpu_count() or 1
    if args.threads < 0:
        raise ConfigError("--threads must be >= 0")
    return args.threads


def auto_selection(cfg: AcquisitionConfig):
    """Collar selection for the mutes: required for alpha < -1, void otherwise.

    When the aperture starts at or before the fold-circle onset the
    selection is anchored 5% of the aperture past the onset instead.
    """
    if cfg.alpha >= -1.0:
        return None
    s_start = None
    if cfg.s_min <= cfg.s0:
        s_start = cfg.s0 + 0.05 * (cfg.s_max - cfg.s_min)
    return select_epsilon(cfg, s_start=s_start)


def _parse_pair(text: str, what: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{what} must be two comma-separated numbers, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"{what} must be numeric, got {text!r}") from None


def _parse_phantom_spec(spec: str) -> list:
    """One --phantom value -> list of Phantom objects.

    Forms: none | point:CX,CY[,AMP] | disk:CX,CY,R[,AMP]
    | grid:X0,Y0,X1,Y1,NX,NY[,AMP]
    """
    if spec == "none":
        return []
    kind, _, rest = spec.partition(":")
    try:
        nums = [float(v) for v in rest.split(",")] if rest else []
    except ValueError:
        raise ConfigError(f"bad phantom spec {spec!r}") from None
    if kind == "point" and len(nums) in (2, 3):
        amp = nums[2] if len(nums) == 3 else 1.0
        return [Phantom(kind="point", centers=((nums[0], nums[1]),), amplitudes=(amp,))]
    if kind == "disk" and len(nums) in (3, 4):
        amp = nums[3] if len(nums) == 4 else 1.0
        return [Phantom(kind="disk", centers=((nums[0], nums[1]),),
                        widths=(nums[2],), amplitudes=(amp,))]
    if kind == "grid" and len(nums) in (6, 7):
        x0, y0, x1, y1 = nums[:4]
        nx, ny = int(nums[4]), int(nums[5])
        amp = nums[6] if len(nums) == 7 else 1.0
        if nx < 1 or ny < 1 or nums[4] != nx or nums[5] != ny:
            raise ConfigError(f"bad phantom lattice counts in {spec!r}")
        centers = tuple((cx, cy)
                        for cx in np.linspace(x0, x1, nx)
                        for cy in np.linspace(y0, y1, ny))
        return [Phantom(kind="grid_of_points", centers=centers,
                        amplitudes=(amp,) * len(centers))]
    raise ConfigError(
        f"bad phantom spec {spec!r}; use none, point:CX,CY[,AMP], "
        "disk:CX,CY,R[,AMP] or grid:X0,Y0,X1,Y1,NX,NY[,AMP]")


def _scene_from_args(args, grid: GridSpec) -> Image:
    vals = np.zeros((grid.nx1, grid.nx2))
    for spec in args.phantom or []:
        for ph in _parse_phantom_spec(spec):
            vals += build_phantom(ph, grid).values
    return Image(grid=grid, values=vals)


def _write_manifest(args, parsed: ParsedConfig, inputs: list, outputs: list,
                    started: float) -> None:
    manifest = {
        "command": args.command,
        "argv": list(args.raw_argv),
        "config": render_config(parsed),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": parsed.options.seed,
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
    }
    path = str(args.out) + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit_lines(args, parsed: ParsedConfig, lines: list, started: float) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        _write_manifest(args, parsed, [args.config], [args.out], started)


def _pipeline_kwargs(args, parsed: ParsedConfig) -> dict:
    return dict(n=parsed.options.ellipse_samples,
                f_margin=parsed.options.f_margin,
                region=parsed.options.region,
                half=args.spotlight,
                margin=args.margin,
                threads=_thread_count(args))


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    parsed = _read_config(args.config)
    cfg, grid = parsed.config, parsed.grid
    scene = _scene_from_args(args, grid)
    sel = auto_selection(cfg)
    sino = forward(cfg, sel, scene, grid, **_pipeline_kwargs(args, parsed))
    save(args.out, sino, cfg, sel)
    _write_manifest(args, parsed, [args.config], [args.out], started)
    return 0


def _check_header_matches(header, parsed: ParsedConfig) -> None:
    if header.grid != parsed.grid:
        raise ConfigError("input file grid does not match the config grid")
    if header.alpha != parsed.config.alpha or header.h != parsed.config.h:
        raise ConfigError("input file acquisition parameters do not match the config")


def cmd_backproject(args) -> int:
    started = time.perf_counter()
    parsed = _read_config(args.config)
    cfg, grid = parsed.config, parsed.grid
    sino, header = load(args.input, role="sinogram")
    _check_header_matches(header, parsed)
    if args.filter_name == "dt2":
        sino = apply_dt2(sino)
    sel = auto_selection(cfg)
    img = adjoint(cfg, sel, sino, grid, **_pipeline_kwargs(args, parsed))
    save(args.out, img, cfg, sel)
    _write_manifest(args, parsed, [args.config, args.input], [args.out], started)
    return 0


def cmd_normal(args) -> int:
    started = time.perf_counter()
    parsed = _read_config(args.config)
    cfg, grid = parsed.config, parsed.grid
    inputs = [args.config]
    if args.input:
        scene, header = load(args.input, role="image")
        _check_header_matches(header, parsed)
        inputs.append(args.input)
    else:
        scene = _scene_from_args(args, grid)
    sel = auto_selection(cfg)
    out = normal(cfg, sel, scene, grid, filter_dt2=(args.filter_name == "dt2"),
                 **_pipeline_kwargs(args, parsed))
    save(args.out, out, cfg, sel)
    _write_manifest(args, parsed, inputs, [args.out], started)
    return 0


def _fmt_point(p) -> str:
    return f"({p[0]:.4f}, {p[1]:.4f})"


def cmd_predict(args) -> int:
    started = time.perf_counter()
    parsed = _read_config(args.config)
    cfg = parsed.config
    x = _parse_pair(args.x, "--x")
    xi = _parse_pair(args.xi, "--xi")
    q = CovectorPoint(x=x, xi=xi)
    lines = ["# C1: mirror partner; C2: fold partners; L2/L3: midpoint reflections"]
    c1 = microlocal.predict_c1(q)
    lines.append(f"C1: {_fmt_point(c1.x)}, xi {_fmt_point(c1.xi)}")
    if cfg.common_midpoint:
        lam2, lam3 = microlocal.predict_common_midpoint(cfg, q)
        lines.append(f"L2: {_fmt_point(lam2.x)}, xi {_fmt_point(lam2.xi)}")
        lines.append(f"L3: {_fmt_point(lam3.x)}, xi {_fmt_point(lam3.xi)}")
    elif cfg.alpha < 0.0:
        if args.s is not None:
            partners = microlocal.predict_c2_partners(cfg, args.s, x)
            body = ", ".join(_fmt_point(p) for p in partners) if partners else "none"
            lines.append(f"C2: {body}")
        else:
            for s in np.linspace(cfg.s_min, cfg.s_max, args.samples):
                partners = microlocal.predict_c2_partners(cfg, float(s), x)
                body = ", ".join(_fmt_point(p) for p in partners) if partners else "none"
                lines.append(f"C2 s={s:.6g}: {body}")
    _emit_lines(args, parsed, lines, started)
    return 0


def cmd_geometry(args) -> int:
    started = time.perf_counter()
    parsed = _read_config(args.config)
    cfg = parsed.config
    s = args.s
    lines = []
    if cfg.alpha >= 0.0:
        lines.append("fold_circle: empty (no fold stratum for alpha >= 0)")
        lines.append("critical_times: undefined")
        lines.append("band: undefined")
    elif cfg.common_midpoint:
        lines.append("s0: undefined (common-midpoint mode)")
        lines.append("fold_circle: line x1=0")
        lines.append("critical_times: undefined (common-midpoint mode)")
    else:
        lines.append(f"s0: {cfg.s0:.10g}")
        circ = critical_circle(cfg, s)
        if circ.kind != "circle":
            lines.append("fold_circle: empty (s below onset)")
            lines.append("critical_times: undefined")
            lines.append("axis_points: undefined")
            lines.append("k0: undefined")
            lines.append("band: undefined")
        else:
            lines.append(f"fold_circle: center={circ.center_x1:.10g} radius={circ.radius:.10g}")
            t_lo, t_hi = critical_times(cfg, s)
            x_lo, x_hi = critical_axis_points(cfg, s)
            lines.append(f"critical_times: t_minus={t_lo:.10g} t_plus={t_hi:.10g}")
            lines.append(f"axis_points: x1_minus={x_lo:.10g} x1_plus={x_hi:.10g}")
            lines.append(f"k0: {ratio_threshold(cfg, s):.10g}")
            lines.append(f"band: ({t_lo:.10g}, {t_hi:.10g})")
    _emit_lines(args, parsed, lines, started)
    return 0


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound

    def line(self) -> str:
        word = "PASS" if self.passed else "FAIL"
        return f"{word} {self.name} measured={self.measured:.6g} bound={self.bound:.6g}"


def _validation_grid(grid: GridSpec) -> GridSpec:
    # cap the raster so validate stays interactive on big production grids,
    # and make the cross-track window symmetric for the mirror check
    half = max(abs(grid.x2_min), abs(grid.x2_max))
    return GridSpec(x1_min=grid.x1_min, x1_max=grid.x1_max,
                    x2_min=-half, x2_max=half,
                    nx1=min(grid.nx1, 48), nx2=min(grid.nx2, 49),
                    s_min=grid.s_min, s_max=grid.s_max, ns=min(grid.ns, 12),
                    t_min=grid.t_min, t_max=grid.t_max, nt=min(grid.nt, 48))


REFERENCE_CFG = AcquisitionConfig(alpha=-4.0, h=1.0, s_min=0.5, s_max=2.0)


def _suite_geometry(parsed: ParsedConfig, rng) -> list:
    cfg = REFERENCE_CFG
    checks = []

    worst = 0.0
    for cfg_i in (cfg, parsed.config):
        for _ in range(20):
            s = float(rng.uniform(cfg_i.s_min, cfg_i.s_max))
            t = threshold_time(cfg_i, s) * float(rng.uniform(1.05, 3.0))
            pts = ellipse_points(cfg_i, s, t, 64)
            a, b = bistatic_ranges(cfg_i, s, pts[:, 0], pts[:, 1])
            worst = max(worst, float(np.max(np.abs(a + b - t)) / t))
    checks.append(CheckResult("geometry.ellipse_membership", worst, 1e-10))

    worst = 0.0
    for _ in range(50):
        s = float(rng.uniform(0.5, 2.0))
        x1 = float(rng.uniform(-6.0, 6.0))
        x2 = float(rng.uniform(-4.0, 4.0))
        co = prolate_from_ground(cfg, s, x1, x2)
        y1, y2 = ground_from_prolate(cfg, s, co.rho, co.phi)
        worst = max(worst, math.hypot(y1 - x1, abs(y2) - abs(x2)))
    checks.append(CheckResult("geometry.prolate_round_trip", worst, 1e-9))

    worst = 0.0
    for _ in range(20):
        s = float(rng.uniform(0.5, 2.0))
        t_lo, t_hi = critical_times(cfg, s)
        x_lo, x_hi = critical_axis_points(cfg, s)
        a, b = bistatic_ranges(cfg, s, x_lo, 0.0)
        times = sorted([float(a + b)])
        a2, b2 = bistatic_ranges(cfg, s, x_hi, 0.0)
        times.append(float(a2 + b2))
        times.sort()
        worst = max(worst, abs(times[0] - t_lo) / t_lo, abs(times[1] - t_hi) / t_hi)
    checks.append(CheckResult("geometry.critical_times_axis_oracle", worst, 1e-9))

    worst = 0.0
    for _ in range(20):
        s = float(rng.uniform(0.5, 2.0))
        k0 = ratio_threshold(cfg, s)
        beta = cfg.beta
        coef = [cfg.h, beta * s * (beta * beta + 1.0), -cfg.h * beta * beta]
        root = (-coef[1] + math.sqrt(coef[1] ** 2 - 4.0 * coef[0] * coef[2])) / (2.0 * coef[0])
        worst = max(worst, abs(k0 - root))
    checks.append(CheckResult("geometry.ratio_threshold_root", worst, 1e-10))
    return checks


def _suite_operators(parsed: ParsedConfig, rng) -> list:
    cfg = parsed.config
    grid = _validation_grid(parsed.grid)
    cfg = AcquisitionConfig(alpha=cfg.alpha, h=cfg.h, s_min=grid.s_min, s_max=grid.s_max,
                            t_min=grid.t_min, t_max=grid.t_max)
    sel = auto_selection(cfg)
    kwargs = dict(n=64, f_margin=parsed.options.f_margin, region=parsed.options.region)
    checks = []

    v = Image(grid=grid, values=rng.standard_normal((grid.nx1, grid.nx2)))
    d = Sinogram(grid=grid, values=rng.standard_normal((grid.ns, grid.nt)))
    fv = forward(cfg, sel, v, grid, **kwargs)
    fstar = adjoint(cfg, sel, d, grid, **kwargs)
    lhs = grid.ds * grid.dt * float(np.sum(fv.values * d.values))
    rhs = grid.dx1 * grid.dx2 * float(np.sum(v.values * fstar.values))
    denom = (grid.ds * grid.dt * float(np.linalg.norm(fv.values))
             * float(np.linalg.norm(d.values)))
    residual = abs(lhs - rhs) / denom if denom > 0.0 else 0.0
    checks.append(CheckResult("operators.adjoint_pairing", residual, 1e-10))

    flipped = Image(grid=grid, values=v.values[:, ::-1].copy())
    d1 = forward(cfg, sel, v, grid, **kwargs).values
    d2 = forward(cfg, sel, flipped, grid, **kwargs).values
    scale = float(np.max(np.abs(d1))) or 1.0
    checks.append(CheckResult("operators.mirror_equivariance",
                              float(np.max(np.abs(d1 - d2))) / scale, 1e-12))

    worst = 0.0
    for i in range(grid.ns):
        m = mute_f(cfg, float(grid.s_axis[i]), grid.t_axis, f_margin=parsed.options.f_margin)
        worst = max(worst, float(np.max(np.abs(fv.values[i][m == 0.0]), initial=0.0)))
    checks.append(CheckResult("operators.muted_bins_zero", worst, 0.0))

    t_axis = grid.t_axis
    quad = Sinogram(grid=grid, values=np.tile(t_axis * t_axis, (grid.ns, 1)))
    out = apply_dt2(quad).values
    checks.append(CheckResult("operators.dt2_quadratic",
                              float(np.max(np.abs(out + 2.0))), 1e-8))
    return checks


def _suite_microlocal(parsed: ParsedConfig, rng) -> list:
    checks = []
    cfg = REFERENCE_CFG

    worst = 0.0
    count = 0
    while count < 50:
        alpha = float(rng.uniform(-6.0, 6.0))
        if abs(alpha - 1.0) < 1e-2:
            continue
        cfg_i = AcquisitionConfig(alpha=alpha, h=float(rng.uniform(0.3, 2.0)),
                                  s_min=0.1, s_max=5.0)
        p = CanonicalPoint(s=float(rng.uniform(0.2, 3.0)),
                           x1=float(rng.uniform(-6.0, 6.0)),
                           x2=float(rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 4.0)),
                           omega=1.0)
        closed = microlocal.det_dpiL(cfg_i, p)
        a, b = bistatic_ranges(cfg_i, p.s, p.x1, p.x2)
        scale = abs(alpha) / float(a) ** 2 + 1.0 / float(b) ** 2
        if abs(closed) < 1e-3 * scale * abs(p.x2):
            continue
        fd = float(np.linalg.det(microlocal.jacobian_piL(cfg_i, p)))
        worst = max(worst, abs(fd - closed) / abs(closed))
        count += 1
    checks.append(CheckResult("microlocal.det_vs_jacobian", worst, 1e-5))

    n = 2000
    alpha = rng.uniform(-6.0, 6.0, n)
    rho = rng.uniform(0.01, 5.0, n)
    phi = rng.uniform(1e-3, math.pi - 1e-3, n)
    phi_p = rng.uniform(1e-3, math.pi - 1e-3, n)
    res = microlocal.composition_residual(alpha, rho, phi, phi_p)
    rel = np.abs(res) / ((1.0 + np.abs(alpha)) * np.cosh(rho) ** 4)
    checks.append(CheckResult("microlocal.composition_identity", float(np.max(rel)), 1e-10))

    worst = 0.0
    for _ in range(20):
        s = float(rng.uniform(0.5, 2.0))
        circ = critical_circle(cfg, s)
        th = float(rng.uniform(0.1, math.pi - 0.1))
        p = CanonicalPoint(s=s, x1=circ.center_x1 + circ.radius * math.cos(th),
                           x2=circ.radius * math.sin(th), omega=1.0)
        sv = np.linalg.svd(microlocal.jacobian_piL(cfg, p), compute_uv=False)
        worst = max(worst, float(sv[-1] / sv[0]))
    checks.append(CheckResult("microlocal.fold_rank_drop", worst, 1e-7))

    worst = 0.0
    found = 0
    while found < 10:
        s = float(rng.uniform(0.5, 2.0))
        x = (float(rng.uniform(-6.0, 6.0)), float(rng.uniform(0.05, 4.0)))
        partners = microlocal.predict_c2_partners(cfg, s, x)
        if not partners:
            continue
        found += 1
        for y in partners:
            back = microlocal.predict_c2_partners(cfg, s, y)
            dist = min(math.hypot(z[0] - x[0], abs(z[1]) - x[1]) for z in back) if back else math.inf
            worst = max(worst, dist)
    checks.append(CheckResult("microlocal.partner_reciprocity", worst, 1e-5))

    p = CanonicalPoint(s=1.0, x1=2.0, x2=1.0, omega=1.0)
    _, scene = microlocal.canonical_image(cfg, p)
    frozen = abs(scene.xi[1] - (1.0 / math.sqrt(38.0) + 1.0 / math.sqrt(3.0)))
    checks.append(CheckResult("microlocal.canonical_frozen_xi2", frozen, 1e-12))
    return checks


_SUITES = {
    "geometry": _suite_geometry,
    "operators": _suite_operators,
    "microlocal": _suite_microlocal,
}


def cmd_validate(args) -> int:
    started = time.perf_counter()
    parsed = _read_config(args.config)
    rng = np.random.default_rng(parsed.options.seed)
    names = list(_SUITES) if args.suite == "all" else [args.suite]
    checks = []
    for name in names:
        checks.extend(_SUITES[name](parsed, rng))
    lines = [c.line() for c in checks]
    passed = sum(c.passed for c in checks)
    lines.append(f"validate: {passed}/{len(checks)} passed")
    _emit_lines(args, parsed, lines, started)
    return 0 if passed == len(checks) else 3


def _add_common(sp) -> None:
    sp.add_argument("--config", required=True, help="acquisition/grid config file")
    sp.add_argument("--out", help="output path")
    sp.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")
    sp.add_argument("--serial", action="store_true", help="force single-threaded, bit-reproducible runs")
    sp.add_argument("--filter", choices=["dt2"], dest="filter_name",
                    help="second difference in fast time before backprojection")
    sp.add_argument("--spotlight", choices=["upper", "lower"],
                    help="restrict the scene to one side of the flight track")
    sp.add_argument("--margin", type=float, default=0.0,
                    help="distance from the track excluded by --spotlight")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellipsar",
        description="Bistatic SAR simulation on elliptical iso-range curves.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="forward-model a phantom scene to data")
    _add_common(sp)
    sp.add_argument("--phantom", action="append",
                    help="scene element: none, point:CX,CY[,AMP], disk:CX,CY,R[,AMP], "
                         "grid:X0,Y0,X1,Y1,NX,NY[,AMP] (repeatable)")
    sp.set_defaults(func=cmd_simulate, needs_out=True)

    sp = sub.add_parser("backproject", help="backproject a data file to an image")
    _add_common(sp)
    sp.add_argument("--in", dest="input", required=True, help="sinogram dataset path")
    sp.set_defaults(func=cmd_backproject, needs_out=True)

    sp = sub.add_parser("normal", help="simulate then backproject in one run")
    _add_common(sp)
    sp.add_argument("--phantom", action="append")
    sp.add_argument("--in", dest="input", help="scene image dataset path")
    sp.set_defaults(func=cmd_normal, needs_out=True)

    sp = sub.add_parser("predict", help="tabulate artifact partner locations")
    _add_common(sp)
    sp.add_argument("--x", required=True, help="scene point X1,X2")
    sp.add_argument("--xi", default="0.0,1.0", help="covector XI1,XI2")
    sp.add_argument("--s", type=float, help="single slow time (default: sweep the aperture)")
    sp.add_argument("--samples", type=int, default=33,
                    help="aperture samples for the C2 sweep")
    sp.set_defaults(func=cmd_predict, needs_out=False)

    sp = sub.add_parser("geometry", help="tabulate the critical geometry at one slow time")
    _add_common(sp)
    sp.add_argument("--s", type=float, required=True, help="slow time")
    sp.set_defaults(func=cmd_geometry, needs_out=False)

    sp = sub.add_parser("validate", help="run the numerical invariant suites")
    _add_common(sp)
    sp.add_argument("--suite", choices=["geometry", "operators", "microlocal", "all"],
                    default="all")
    sp.set_defaults(func=cmd_validate, needs_out=False)
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    args.raw_argv = list(argv)
    if getattr(args, "needs_out", False) and not args.out:
        print("error: --out is required for this command", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, ModeError, SelectionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
