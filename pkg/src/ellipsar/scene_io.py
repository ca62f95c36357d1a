"""Phantom scenes, dataset files, image exports, and config parsing.

The on-disk dataset format is deliberately small: one ASCII header line of
key=value tokens, a blank line, then the raw little-endian float32 payload.
It round-trips bit-exactly and self-describes the grid, the acquisition
parameters, and a payload checksum.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .cutoffs import CollarSelection
from .errors import ConfigError, FormatError
from .geometry import AcquisitionConfig
from .transform import GridSpec, Image, Sinogram

__all__ = [
    "Phantom",
    "DatasetHeader",
    "RunOptions",
    "ParsedConfig",
    "build_phantom",
    "save",
    "load",
    "export_pgm",
    "export_csv",
    "parse_config",
    "render_config",
]

MAGIC = "ellipsar-dataset"
FORMAT_VERSION = 1

PHANTOM_KINDS = ("point", "disk", "grid_of_points")


@dataclass(frozen=True)
class Phantom:
    """Declarative scene: point scatterers, disks, or a lattice of points.

    Point kinds are rendered as narrow Gaussians whose width is tied to the
    pixel pitch, so a "point" integrates to its amplitude instead of
    aliasing into a single cell.  Disks take one radius per center.
    """

    kind: str
    centers: tuple = ()
    widths: tuple = ()
    amplitudes: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in PHANTOM_KINDS:
            raise ConfigError(f"unknown phantom kind {self.kind!r}; use one of {PHANTOM_KINDS}")
        for c in self.centers:
            if len(c) != 2 or not all(math.isfinite(float(v)) for v in c):
                raise ConfigError(f"phantom center {c!r} is not a finite ground point")
        if self.amplitudes:
            if len(self.amplitudes) != len(self.centers):
                raise ConfigError("need one amplitude per center")
            if not all(math.isfinite(float(a)) for a in self.amplitudes):
                raise ConfigError("phantom amplitudes must be finite")
        if self.kind == "disk":
            if len(self.widths) != len(self.centers):
                raise ConfigError("disk phantoms need one radius per center")
            if not all(float(w) > 0.0 for w in self.widths):
                raise ConfigError("disk radii must be positive")


# point scatterers are Gaussians this many pixels wide; a true one-pixel
# delta would make the curve quadrature grid-dependent
POINT_WIDTH_PIXELS = 1.5


def build_phantom(spec: Phantom, grid: GridSpec) -> Image:
    """Rasterize a phantom onto the scene grid.

    Point kinds integrate to their amplitude on the grid (to a couple of
    percent once the center sits a few pixels inside the bounds).
    """
    vals = np.zeros((grid.nx1, grid.nx2))
    if not spec.centers:
        return Image(grid=grid, values=vals)
    amps = spec.amplitudes or (1.0,) * len(spec.centers)
    x1 = grid.x1_axis[:, None]
    x2 = grid.x2_axis[None, :]
    for i, (cx, cy) in enumerate(spec.centers):
        cx, cy = float(cx), float(cy)
        if not (grid.x1_min < cx < grid.x1_max and grid.x2_min < cy < grid.x2_max):
            raise ConfigError(f"phantom center ({cx}, {cy}) lies outside the scene bounds")
        amp = float(amps[i])
        if spec.kind == "disk":
            r = float(spec.widths[i])
            vals += amp * (((x1 - cx) ** 2 + (x2 - cy) ** 2) <= r * r)
        else:
            sig1 = POINT_WIDTH_PIXELS * grid.dx1
            sig2 = POINT_WIDTH_PIXELS * grid.dx2
            g = np.exp(-0.5 * (((x1 - cx) / sig1) ** 2 + ((x2 - cy) / sig2) ** 2))
            vals += amp / (2.0 * math.pi * sig1 * sig2) * g
    return Image(grid=grid, values=vals)


@dataclass(frozen=True)
class DatasetHeader:
    """Parsed header of a dataset file."""

    role: str
    grid: GridSpec
    alpha: float
    h: float
    selection: Optional[CollarSelection]
    checksum: int


_GRID_KEYS = ("x1_min", "x1_max", "x2_min", "x2_max", "nx1", "nx2",
              "s_min", "s_max", "ns", "t_min", "t_max", "nt")
_INT_GRID_KEYS = ("nx1", "nx2", "ns", "nt")


def _header_line(role: str, grid: GridSpec, alpha: float, h: float,
                 sel: Optional[CollarSelection], checksum: int) -> str:
    tokens = [f"magic={MAGIC}", f"version={FORMAT_VERSION}", f"role={role}",
              f"alpha={alpha!r}", f"h={h!r}"]
    for key in _GRID_KEYS:
        value = getattr(grid, key)
        tokens.append(f"{key}={value!r}" if key not in _INT_GRID_KEYS else f"{key}={value}")
    if sel is None:
        tokens.append("sel=none")
    else:
        tokens.append(f"sel={sel.s_ref!r}:{sel.k_ref!r}:{sel.eps!r}")
    tokens.append(f"checksum={checksum}")
    return " ".join(tokens)


def save(path, data: Union[Image, Sinogram], cfg: AcquisitionConfig,
         sel: Optional[CollarSelection] = None) -> None:
    """Write an image or sinogram with a self-describing header.

    Payload is the array in row-major little-endian float32; the header
    records a CRC-32 of those bytes.
    """
    role = "image" if isinstance(data, Image) else "sinogram"
    payload = np.ascontiguousarray(data.values, dtype="<f4").tobytes()
    line = _header_line(role, data.grid, cfg.alpha, cfg.h, sel, zlib.crc32(payload))
    with open(path, "wb") as fh:
        fh.write(line.encode("ascii"))
        fh.write(b"\n\n")
        fh.write(payload)


def _parse_header_tokens(line: str) -> dict:
    fields = {}
    for token in line.split(" "):
        if "=" not in token:
            raise FormatError(f"corrupt header: malformed token {token!r}")
        key, _, value = token.partition("=")
        if key in fields:
            raise FormatError(f"corrupt header: duplicate key {key!r}")
        fields[key] = value
    return fields


def load(path, role: Optional[str] = None):
    """Read a dataset file back as (Image or Sinogram, DatasetHeader).

    Pass role="image" or role="sinogram" to insist on one; a file holding
    the other kind then raises a role-mismatch error.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    sep = blob.find(b"\n\n")
    if sep < 0:
        raise FormatError("corrupt header: no header/payload separator found")
    try:
        line = blob[:sep].decode("ascii")
    except UnicodeDecodeError as exc:
        raise FormatError("corrupt header: not ASCII") from exc
    fields = _parse_header_tokens(line)
    if fields.get("magic") != MAGIC:
        raise FormatError(f"corrupt header: bad magic {fields.get('magic')!r}")
    if fields.get("version") != str(FORMAT_VERSION):
        raise FormatError(
            f"version mismatch: file has {fields.get('version')!r}, reader supports {FORMAT_VERSION}")
    file_role = fields.get("role")
    if file_role not in ("image", "sinogram"):
        raise FormatError(f"corrupt header: bad role {file_role!r}")
    if role is not None and role != file_role:
        raise FormatError(f"role mismatch: wanted {role}, file holds {file_role}")
    try:
        grid = GridSpec(**{key: (int(fields[key]) if key in _INT_GRID_KEYS else float(fields[key]))
                           for key in _GRID_KEYS})
        alpha = float(fields["alpha"])
        h = float(fields["h"])
        sel_token = fields["sel"]
        checksum = int(fields["checksum"])
    except (KeyError, ValueError, ConfigError) as exc:
        raise FormatError(f"corrupt header: {exc}") from exc
    if sel_token == "none":
        sel = None
    else:
        try:
            s_ref, k_ref, eps = (float(v) for v in sel_token.split(":"))
        except ValueError as exc:
            raise FormatError(f"corrupt header: bad selection record {sel_token!r}") from exc
        sel = CollarSelection(s_ref=s_ref, k_ref=k_ref, eps=eps)

    payload = blob[sep + 2:]
    shape = (grid.nx1, grid.nx2) if file_role == "image" else (grid.ns, grid.nt)
    if len(payload) != 4 * shape[0] * shape[1] or zlib.crc32(payload) != checksum:
        raise FormatError("checksum mismatch: payload is truncated or corrupted")
    values = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
    header = DatasetHeader(role=file_role, grid=grid, alpha=alpha, h=h,
                           selection=sel, checksum=checksum)
    data = Image(grid=grid, values=values) if file_role == "image" else Sinogram(grid=grid, values=values)
    return data, header


def _values_of(data) -> np.ndarray:
    vals = np.asarray(getattr(data, "values", data), dtype=float)
    if vals.ndim != 2:
        raise ConfigError("export needs a 2-D array")
    if not np.all(np.isfinite(vals)):
        raise ConfigError("export needs finite data")
    return vals


def export_pgm(data, path, normalization: str = "minmax") -> None:
    """Write a 16-bit binary PGM (P5, big-endian samples).

    minmax maps [min, max] to [0, 65535]; absmax maps [-m, m] with
    m = max|value| so zero lands mid-gray.  A constant image (or all-zero
    under absmax) degenerates to all black by convention.
    """
    vals = _values_of(data)
    if normalization == "minmax":
        lo, hi = float(vals.min()), float(vals.max())
        scaled = np.zeros_like(vals) if hi == lo else (vals - lo) / (hi - lo)
    elif normalization == "absmax":
        m = float(np.abs(vals).max())
        scaled = np.full_like(vals, 0.0) if m == 0.0 else (vals + m) / (2.0 * m)
    else:
        raise ConfigError(f"unknown normalization {normalization!r}; use minmax or absmax")
    pixels = np.round(scaled * 65535.0).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{vals.shape[1]} {vals.shape[0]}\n65535\n".encode("ascii"))
        fh.write(pixels.tobytes())


def export_csv(data, path) -> None:
    """Write row-major CSV with 9 significant digits."""
    vals = _values_of(data)
    with open(path, "w", encoding="utf-8") as fh:
        for row in vals:
            fh.write(",".join(f"{v:.9g}" for v in row))
            fh.write("\n")


@dataclass(frozen=True)
class RunOptions:
    """Optional knobs a config file may set for pipeline runs."""

    ellipse_samples: Optional[int] = None
    f_margin: float = 1e-3
    region: str = "none"
    seed: int = 0


class ParsedConfig(NamedTuple):
    config: AcquisitionConfig
    grid: GridSpec
    options: RunOptions


_REQUIRED_KEYS = ("alpha", "h") + _GRID_KEYS
_OPTION_KEYS = ("ellipse_samples", "f_margin", "region", "seed")
_INT_KEYS = set(_INT_GRID_KEYS) | {"seed", "ellipse_samples"}
_REGIONS = ("none", "o1", "o2", "o3")


def parse_config(text: str) -> ParsedConfig:
    """Parse key=value config text ('#' starts a comment).

    All grid keys plus alpha and h are required; the option keys fall back
    to documented defaults (ellipse_samples=auto, f_margin=0.001,
    region=none, seed=0).  Errors carry the offending line number.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _REQUIRED_KEYS and key not in _OPTION_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key == "region":
            if value not in _REGIONS:
                raise ConfigError(f"line {lineno}: region must be one of {_REGIONS}, got {value!r}")
            values[key] = value
        elif key == "ellipse_samples" and value in ("auto", "none"):
            values[key] = None
        elif key in _INT_KEYS:
            try:
                values[key] = int(value, 10)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} must be an integer, got {value!r}") from None
        else:
            try:
                num = float(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} must be a number, got {value!r}") from None
            if not math.isfinite(num):
                raise ConfigError(f"line {lineno}: {key} must be finite")
            values[key] = num

    missing = [key for key in _REQUIRED_KEYS if key not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    if values.get("ellipse_samples") is not None and values["ellipse_samples"] < 8:
        raise ConfigError("ellipse_samples must be at least 8")

    cfg = AcquisitionConfig(alpha=values["alpha"], h=values["h"],
                            s_min=values["s_min"], s_max=values["s_max"],
                            t_min=values["t_min"], t_max=values["t_max"])
    grid = GridSpec(**{key: values[key] for key in _GRID_KEYS})
    options = RunOptions(
        ellipse_samples=values.get("ellipse_samples"),
        f_margin=float(values.get("f_margin", 1e-3)),
        region=values.get("region", "none"),
        seed=int(values.get("seed", 0)),
    )
    if options.f_margin <= 0.0:
        raise ConfigError("f_margin must be positive")
    return ParsedConfig(config=cfg, grid=grid, options=options)


def render_config(parsed: ParsedConfig) -> str:
    """Render a parsed config in normalized form; parse(render(p)) == p."""
    grid, options = parsed.grid, parsed.options
    lines = [f"alpha={parsed.config.alpha!r}", f"h={parsed.config.h!r}"]
    for key in _GRID_KEYS:
        value = getattr(grid, key)
        lines.append(f"{key}={value!r}" if key not in _INT_GRID_KEYS else f"{key}={value}")
    samples = "auto" if options.ellipse_samples is None else str(options.ellipse_samples)
    lines.append(f"ellipse_samples={samples}")
    lines.append(f"f_margin={options.f_margin!r}")
    lines.append(f"region={options.region}")
    lines.append(f"seed={options.seed}")
    return "\n".join(lines) + "\n"
