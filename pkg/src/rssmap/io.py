"""Text file formats: scene configs, map files, reports and traces.

All formats are UTF-8, ``\\n``-terminated and locale independent. Key/value
files use ``key = value`` lines with dotted keys; ``#`` starts a comment.
3D points are three comma-separated decimals and complex values are written
as ``magnitude@degrees``.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .forward import ComplexMap, ReflectionSet, format_gamma, parse_gamma
from .mapops import UNITS, RealMap
from .scene import (
    WALL_ORDER,
    FrequencySpec,
    RoomBox,
    RxGrid,
    SceneConfig,
    Transmitter,
    validate_scene,
)

FORMAT_VERSION = 1

SCENE_KEYS = {
    "room.size_x", "room.size_y", "room.size_z",
    "tx.pos", "tx.moment",
    "grid.origin", "grid.u_axis", "grid.v_axis",
    "grid.n_u", "grid.n_v", "grid.step_u", "grid.step_v",
    "freqs.list",
} | {f"gamma.{w.value}" for w in WALL_ORDER}

_SCENE_DEFAULTS = {
    "tx.moment": "1@0",
    "grid.u_axis": "1, 0, 0",
    "grid.v_axis": "0, 0, 1",
}


def fmt_float(x) -> str:
    return f"{float(x):.17g}"


def fmt_point(p) -> str:
    return ", ".join(fmt_float(v) for v in p)


def _read_text(path) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").split("\n")
    except FileNotFoundError:
        raise ValidationError(f"{path}: no such file") from None
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8 ({exc.reason})") from None


def parse_keyvalue(lines, allowed=None, path=""):
    """Parse ``key = value`` lines into ``{key: (value, line_number)}``."""
    out = {}
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise FormatError(f"{path}: expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (t.strip() for t in text.split("=", 1))
        if not key:
            raise FormatError(f"{path}: empty key", lineno)
        if allowed is not None and key not in allowed:
            raise FormatError(f"{path}: unknown key {key!r}", lineno)
        if key in out:
            raise FormatError(f"{path}: duplicate key {key!r}", lineno)
        out[key] = (value, lineno)
    return out


def read_keyvalue(path, allowed=None):
    return parse_keyvalue(_read_text(path), allowed, str(path))


def _float(value, key, lineno):
    try:
        x = float(value)
    except ValueError:
        raise FormatError(f"{key}: expected a number, got {value!r}", lineno) from None
    if not math.isfinite(x):
        raise FormatError(f"{key}: value must be finite", lineno)
    return x


def _int(value, key, lineno):
    try:
        return int(value)
    except ValueError:
        raise FormatError(f"{key}: expected an integer, got {value!r}", lineno) from None


def _floats(value, key, lineno, n=None):
    parts = [p for p in value.split(",") if p.strip()]
    if n is not None and len(parts) != n:
        raise FormatError(f"{key}: expected {n} comma-separated values, got {len(parts)}", lineno)
    return [_float(p, key, lineno) for p in parts]


def _complex(value, key, lineno):
    try:
        return parse_gamma(value)
    except ValidationError as exc:
        raise FormatError(f"{key}: {exc}", lineno) from None


def gammas_from_entries(entries, required=False) -> ReflectionSet | None:
    keys = [f"gamma.{w.value}" for w in WALL_ORDER]
    present = [k for k in keys if k in entries]
    if not present:
        if required:
            raise FormatError("no gamma.* entries found")
        return None
    if len(present) != 6:
        missing = sorted(set(keys) - set(present))
        raise FormatError(f"incomplete reflection set, missing {', '.join(missing)}")
    values = [_complex(entries[k][0], k, entries[k][1]) for k in keys]
    try:
        return ReflectionSet(values)
    except ValidationError as exc:
        raise FormatError(str(exc)) from None


def parse_scene(lines, path="") -> tuple[SceneConfig, ReflectionSet | None]:
    entries = parse_keyvalue(lines, SCENE_KEYS, path)
    for key, default in _SCENE_DEFAULTS.items():
        entries.setdefault(key, (default, None))
    missing = sorted(SCENE_KEYS - set(entries) - {k for k in SCENE_KEYS if k.startswith("gamma.")})
    if missing:
        raise FormatError(f"{path}: missing required keys: {', '.join(missing)}")

    def get(key, conv, *args):
        value, lineno = entries[key]
        return conv(value, key, lineno, *args)

    cfg = SceneConfig(
        room=RoomBox(get("room.size_x", _float), get("room.size_y", _float), get("room.size_z", _float)),
        tx=Transmitter(get("tx.pos", _floats, 3), get("tx.moment", _complex)),
        grid=RxGrid(
            get("grid.origin", _floats, 3),
            get("grid.u_axis", _floats, 3),
            get("grid.v_axis", _floats, 3),
            get("grid.n_u", _int),
            get("grid.n_v", _int),
            get("grid.step_u", _float),
            get("grid.step_v", _float),
        ),
        freqs=FrequencySpec(tuple(get("freqs.list", _floats))),
    )
    return validate_scene(cfg), gammas_from_entries(entries)


def read_scene(path) -> tuple[SceneConfig, ReflectionSet | None]:
    """Load a scene config; returns the scene and its ``gamma.*`` set, if any."""
    return parse_scene(_read_text(path), str(path))


def format_scene(cfg: SceneConfig, gammas: ReflectionSet | None = None) -> str:
    g = cfg.grid
    lines = [
        f"room.size_x = {fmt_float(cfg.room.size_x)}",
        f"room.size_y = {fmt_float(cfg.room.size_y)}",
        f"room.size_z = {fmt_float(cfg.room.size_z)}",
        f"tx.pos = {fmt_point(cfg.tx.position)}",
        f"tx.moment = {format_gamma(cfg.tx.dipole_moment)}",
        f"grid.origin = {fmt_point(g.origin)}",
        f"grid.u_axis = {fmt_point(g.u_axis)}",
        f"grid.v_axis = {fmt_point(g.v_axis)}",
        f"grid.n_u = {g.n_u}",
        f"grid.n_v = {g.n_v}",
        f"grid.step_u = {fmt_float(g.step_u)}",
        f"grid.step_v = {fmt_float(g.step_v)}",
        f"freqs.list = {fmt_point(cfg.freqs.frequencies)}",
    ]
    if gammas is not None:
        lines += format_gamma_lines(gammas)
    return "\n".join(lines) + "\n"


def write_scene(cfg, path, gammas=None):
    Path(path).write_text(format_scene(cfg, gammas), encoding="utf-8", newline="\n")


def format_gamma_lines(gammas: ReflectionSet, digits=17) -> list[str]:
    return [f"gamma.{w.value} = {format_gamma(g, digits)}" for w, g in gammas.items()]


def read_gammas(path) -> ReflectionSet:
    """Read the ``gamma.*`` entries of any key/value file (scene, report, sidecar)."""
    entries = read_keyvalue(path)
    try:
        return gammas_from_entries(entries, required=True)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


# -- map files ---------------------------------------------------------------

_MAP_HEADER = ("format_version", "kind", "unit", "n_u", "n_v", "step_u", "step_v",
               "frequency_hz", "provenance")
_MAP_OPTIONAL = ("origin", "u_axis", "v_axis")


def format_map(m: ComplexMap | RealMap) -> str:
    kind = "complex" if isinstance(m, ComplexMap) else "real"
    g = m.grid
    freq = "none" if m.frequency is None else fmt_float(m.frequency)
    header = [
        f"format_version = {FORMAT_VERSION}",
        f"kind = {kind}",
        f"unit = {m.unit}",
        f"n_u = {g.n_u}",
        f"n_v = {g.n_v}",
        f"step_u = {fmt_float(g.step_u)}",
        f"step_v = {fmt_float(g.step_v)}",
        f"frequency_hz = {freq}",
        f"provenance = {m.provenance}",
        f"origin = {fmt_point(g.origin)}",
        f"u_axis = {fmt_point(g.u_axis)}",
        f"v_axis = {fmt_point(g.v_axis)}",
        "data",
    ]
    flat = m.data.ravel()
    if kind == "complex":
        body = [f"{v.real:.17g} {v.imag:.17g}" for v in flat]
    else:
        body = [f"{v:.17g}" for v in flat]
    return "\n".join(header + body) + "\n"


def write_map(m: ComplexMap | RealMap, path) -> None:
    Path(path).write_text(format_map(m), encoding="utf-8", newline="\n")


def parse_map(lines, path="") -> ComplexMap | RealMap:
    try:
        data_at = next(i for i, line in enumerate(lines) if line.strip() == "data")
    except StopIteration:
        raise FormatError(f"{path}: missing 'data' line") from None
    header = parse_keyvalue(lines[:data_at], set(_MAP_HEADER + _MAP_OPTIONAL), path)
    # a newer file may use other keys, so check its version before anything else
    if "format_version" in header:
        version, vline = header["format_version"]
        if version != str(FORMAT_VERSION):
            raise FormatError(f"{path}: unknown format_version {version!r}", vline)
    missing = [k for k in _MAP_HEADER if k not in header]
    if missing:
        raise FormatError(f"{path}: missing header keys: {', '.join(missing)}")

    def get(key, conv, *args):
        value, lineno = header[key]
        return conv(value, key, lineno, *args)

    kind, kline = header["kind"]
    if kind not in ("complex", "real"):
        raise FormatError(f"{path}: kind must be 'complex' or 'real', got {kind!r}", kline)
    unit, uline = header["unit"]
    if kind == "real" and unit not in UNITS:
        raise FormatError(f"{path}: unknown unit {unit!r} for a real map", uline)
    n_u, n_v = get("n_u", _int), get("n_v", _int)
    if n_u < 1 or n_v < 1:
        raise FormatError(f"{path}: n_u and n_v must be >= 1", header["n_u"][1])
    freq_s, fline = header["frequency_hz"]
    freq = None if freq_s == "none" else _float(freq_s, "frequency_hz", fline)
    provenance = header["provenance"][0]

    def optional_point(key, default):
        return get(key, _floats, 3) if key in header else default

    grid = RxGrid(
        optional_point("origin", (0.0, 0.0, 0.0)),
        optional_point("u_axis", (1.0, 0.0, 0.0)),
        optional_point("v_axis", (0.0, 0.0, 1.0)),
        n_u, n_v, get("step_u", _float), get("step_v", _float),
    )

    body = lines[data_at + 1:]
    while body and not body[-1].strip():
        body.pop()
    expected = n_u * n_v
    first_line = data_at + 2
    if len(body) < expected:
        raise FormatError(
            f"{path}: truncated data block, expected {expected} lines, "
            f"found {len(body)} ({expected - len(body)} missing)",
            first_line + len(body),
        )
    if len(body) > expected:
        raise FormatError(
            f"{path}: dimension mismatch at line {first_line + expected}: "
            f"header declares {n_u}x{n_v} = {expected} cells, found {len(body)} lines",
            first_line + expected,
        )
    ncols = 2 if kind == "complex" else 1
    values = np.empty((expected, ncols))
    for idx, raw in enumerate(body):
        parts = raw.split()
        lineno = first_line + idx
        if len(parts) != ncols:
            raise FormatError(f"{path}: expected {ncols} value(s), got {len(parts)}", lineno)
        try:
            row = [float(p) for p in parts]
        except ValueError:
            raise FormatError(f"{path}: bad number in {raw.strip()!r}", lineno) from None
        if not all(math.isfinite(x) for x in row):
            raise FormatError(f"{path}: non-finite value", lineno)
        values[idx] = row
    try:
        if kind == "complex":
            # fill real and imaginary parts directly so signed zeros survive
            data = np.empty(expected, dtype=complex)
            data.real, data.imag = values[:, 0], values[:, 1]
            data = data.reshape(n_v, n_u)
            return ComplexMap(data, grid, freq, provenance, unit)
        return RealMap(values[:, 0].reshape(n_v, n_u), grid, unit, freq, provenance)
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from None


def read_map(path) -> ComplexMap | RealMap:
    return parse_map(_read_text(path), str(path))


def write_plot_data(m: ComplexMap | RealMap, path) -> None:
    """gnuplot-style ``u v value`` triplets, one blank line between grid rows.

    ``u`` and ``v`` are in meters from the grid origin; complex maps are
    written as magnitudes.
    """
    g = m.grid
    values = np.abs(m.data) if isinstance(m, ComplexMap) else m.data
    rows = []
    for j in range(g.n_v):
        for i in range(g.n_u):
            rows.append(f"{fmt_float(i * g.step_u)} {fmt_float(j * g.step_v)} {values[j, i]:.17g}")
        rows.append("")
    Path(path).write_text("\n".join(rows), encoding="utf-8", newline="\n")


# -- calibration report, trace and ground-truth sidecar ---------------------

def format_report(result) -> str:
    """Key/value calibration report; its ``gamma.*`` lines can be read back."""
    lines = [
        "# calibration report",
        f"rho = {fmt_float(result.rho_achieved)}",
        f"rho_initial = {fmt_float(result.initial_rho)}",
        f"evals = {result.evals_used}",
        f"restarts = {len(result.restarts)}",
        f"restart_best = {result.restart_index_of_best}",
        f"freqs.list = {fmt_point(result.frequencies)}",
        f"warning = {result.warning or 'none'}",
    ]
    lines += format_gamma_lines(result.gammas)
    for wall in WALL_ORDER:
        lines.append(f"sensitivity.{wall.value} = {fmt_float(result.sensitivity[wall])}")
    for tr in result.restarts:
        init = ", ".join(format_gamma(g) for g in tr.init)
        lines.append(f"restart.{tr.index}.init = {init}")
        lines.append(f"restart.{tr.index}.rho_init = {fmt_float(tr.init_rho)}")
        lines.append(f"restart.{tr.index}.rho = {fmt_float(tr.final_rho)}")
        lines.append(f"restart.{tr.index}.evals = {tr.evals}")
    return "\n".join(lines) + "\n"


def write_report(result, path) -> None:
    Path(path).write_text(format_report(result), encoding="utf-8", newline="\n")


def write_trace(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["restart", "eval", "rho"])
        for restart, n, rho in rows:
            writer.writerow([restart, n, fmt_float(rho)])


def format_truth(truth) -> str:
    lines = [
        "# synthetic ground truth",
        f"noise_db = {fmt_float(truth.noise_sigma_db)}",
        f"shift = {truth.pixel_shift[0]}, {truth.pixel_shift[1]}",
        f"seed = {truth.rng_seed}",
        f"freqs.list = {fmt_point(truth.frequencies)}",
    ]
    return "\n".join(lines + format_gamma_lines(truth.gammas_true)) + "\n"


def write_truth(truth, path) -> None:
    Path(path).write_text(format_truth(truth), encoding="utf-8", newline="\n")


def sidecar_path(map_path) -> Path:
    p = Path(map_path)
    return p.with_name(p.name + ".truth")

