"""Real-valued map operations: magnitude, normalization, averaging, attenuation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from .forward import ComplexMap
from .scene import RxGrid

UNITS = ("linear", "dB", "normalized")

# attenuation_map flag bits
FLAG_FLOOR = 1
FLAG_CLAMPED = 2

DB_CLAMP = 200.0
DEFAULT_FLOOR = 1e-12


@dataclass(eq=False)
class RealMap:
    """Real samples on a receiver grid, shape ``(n_v, n_u)``.

    ``unit`` is one of ``"linear"`` (magnitude), ``"dB"`` or ``"normalized"``.
    ``frequency`` is ``None`` for frequency-averaged or derived maps.
    ``flags`` is an optional per-cell bit mask set by :func:`attenuation_map`.
    """

    data: np.ndarray
    grid: RxGrid
    unit: str = "linear"
    frequency: float | None = None
    provenance: str = "simulated"
    flags: np.ndarray | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.grid.shape:
            raise ValidationError(
                f"map data shape {self.data.shape} does not match grid {self.grid.shape}"
            )
        if self.unit not in UNITS:
            raise ValidationError(f"unknown unit {self.unit!r}")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("map contains non-finite entries")
        if self.unit == "linear" and np.any(self.data < 0):
            raise ValidationError("linear-magnitude map has negative entries")


def magnitude(m: ComplexMap) -> RealMap:
    return RealMap(np.abs(m.data), m.grid, "linear", m.frequency, m.provenance)


def as_magnitude(m) -> RealMap:
    """Magnitude of a complex map; real maps are returned unchanged."""
    return magnitude(m) if isinstance(m, ComplexMap) else m


def normalize_max(m: RealMap) -> RealMap:
    """Divide by the map maximum so the new maximum is exactly 1."""
    if m.unit not in ("linear", "normalized"):
        raise ValidationError(f"normalize_max needs a linear-magnitude map, got unit {m.unit!r}")
    peak = m.data.max()
    if not peak > 0:
        raise NumericalError("degenerate map: zero maximum")
    return RealMap(m.data / peak, m.grid, "normalized", m.frequency, m.provenance)


def _check_same_grid(maps):
    first = maps[0].grid
    for i, m in enumerate(maps[1:], start=1):
        if not m.grid.same_layout(first):
            raise ValidationError(
                f"grid mismatch: map {i} is {m.grid.shape}, map 0 is {first.shape}"
            )


def freq_average(maps: Sequence[ComplexMap], coherent=False) -> RealMap:
    """Mean map magnitude across frequencies.

    With ``coherent=True`` the complex samples are averaged first and the
    modulus is taken afterwards.
    """
    if len(maps) == 0:
        raise ValidationError("freq_average needs at least one map")
    _check_same_grid(maps)
    stack = np.stack([m.data for m in maps])
    data = np.abs(stack.mean(axis=0)) if coherent else np.abs(stack).mean(axis=0)
    freq = maps[0].frequency if len(maps) == 1 else None
    return RealMap(data, maps[0].grid, "linear", freq, maps[0].provenance)


def attenuation_map(fp: RealMap, tar: RealMap, floor=DEFAULT_FLOOR) -> RealMap:
    """Per-cell ``20*log10(fp/tar)`` in dB.

    Cells where both inputs are below ``floor`` are set to 0 dB and flagged
    with ``FLAG_FLOOR``. Values beyond +-200 dB (including zero
    denominators or numerators) are clamped and flagged with ``FLAG_CLAMPED``.
    """
    _check_same_grid([fp, tar])
    for name, m in (("fp", fp), ("tar", tar)):
        if m.unit not in ("linear", "normalized"):
            raise ValidationError(f"{name} must be a linear-magnitude map, got unit {m.unit!r}")
    a, b = fp.data, tar.data
    flags = np.zeros(a.shape, dtype=np.uint8)
    below = (a < floor) & (b < floor)
    flags[below] = FLAG_FLOOR

    with np.errstate(divide="ignore", invalid="ignore"):
        db = 20.0 * (np.log10(a) - np.log10(b))
    db[below] = 0.0
    undefined = np.isnan(db)  # 0/0 with a zero floor
    db[undefined] = 0.0
    flags[undefined] |= FLAG_FLOOR
    over = np.abs(db) > DB_CLAMP
    db[over] = np.sign(db[over]) * DB_CLAMP
    flags[over] |= FLAG_CLAMPED
    return RealMap(db, fp.grid, "dB", fp.frequency, fp.provenance, flags)


def to_db(m: RealMap, floor=DEFAULT_FLOOR) -> np.ndarray:
    """``20*log10`` of a magnitude map, floored at ``floor``."""
    return 20.0 * np.log10(np.maximum(m.data, floor))
