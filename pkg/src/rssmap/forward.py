"""Image-source forward model on the receiver grid.

The total field at every grid sample is the direct dipole field plus one
first-order image per wall, each scaled by its complex reflection
coefficient. Because the sum is linear in the coefficients, the seven
per-source maps can be computed once per frequency and recombined for any
coefficient set (see :func:`basis_maps` and :func:`combine`).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .fields import dipole_ez, wavenumber
from .scene import WALL_ORDER, RxGrid, SceneConfig, WallId, image_sources

PROVENANCES = ("simulated", "measured", "synthetic")


class ReflectionSet:
    """Six complex wall reflection coefficients in ``WALL_ORDER``."""

    __slots__ = ("_gamma",)

    def __init__(self, gamma):
        if isinstance(gamma, Mapping):
            missing = [w.value for w in WALL_ORDER if w not in gamma and w.value not in gamma]
            if missing:
                raise ValidationError(f"missing reflection coefficients for {missing}")
            gamma = [gamma[w] if w in gamma else gamma[w.value] for w in WALL_ORDER]
        arr = np.array(gamma, dtype=complex).reshape(-1)
        if arr.shape != (6,):
            raise ValidationError(f"expected 6 reflection coefficients, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("reflection coefficients must be finite")
        mags = np.abs(arr)
        if np.any(mags > 1.0 + 1e-12):
            bad = WALL_ORDER[int(np.argmax(mags))].value
            raise ValidationError(f"gamma.{bad}: |gamma| must be <= 1, got {mags.max():.6g}")
        arr.flags.writeable = False
        self._gamma = arr

    @classmethod
    def uniform(cls, value) -> "ReflectionSet":
        return cls([value] * 6)

    @classmethod
    def zeros(cls) -> "ReflectionSet":
        return cls(np.zeros(6))

    @classmethod
    def from_polar(cls, magnitudes, phases_deg) -> "ReflectionSet":
        mags = np.asarray(magnitudes, dtype=float)
        phases = np.deg2rad(np.asarray(phases_deg, dtype=float))
        return cls(mags * np.exp(1j * phases))

    @property
    def gamma(self) -> np.ndarray:
        return self._gamma

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self._gamma)

    @property
    def phases_deg(self) -> np.ndarray:
        """Phases in degrees, normalized to ``[0, 360)``."""
        return np.array([_phase_deg(g) for g in self._gamma])

    def __getitem__(self, wall):
        if isinstance(wall, (int, np.integer)):
            return complex(self._gamma[wall])
        return complex(self._gamma[WALL_ORDER.index(WallId(wall))])

    def __iter__(self):
        return iter(complex(g) for g in self._gamma)

    def __len__(self):
        return 6

    def items(self):
        return [(w, complex(g)) for w, g in zip(WALL_ORDER, self._gamma)]

    def __eq__(self, other):
        if not isinstance(other, ReflectionSet):
            return NotImplemented
        return np.array_equal(self._gamma, other._gamma)

    __hash__ = None

    def __repr__(self):
        parts = ", ".join(
            f"{w.value}={abs(g):.4g}@{_phase_deg(g):.4g}" for w, g in self.items()
        )
        return f"ReflectionSet({parts})"


def _phase_deg(g) -> float:
    if g == 0:
        return 0.0
    deg = math.degrees(cmath.phase(g)) % 360.0
    return 0.0 if deg >= 360.0 else deg


@dataclass(eq=False)
class ComplexMap:
    """Complex samples on a receiver grid, shape ``(n_v, n_u)``."""

    data: np.ndarray
    grid: RxGrid
    frequency: float | None = None
    provenance: str = "simulated"
    unit: str = "V/m"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != self.grid.shape:
            raise ValidationError(
                f"map data shape {self.data.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("map contains non-finite entries")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")


def _source_positions(scene: SceneConfig):
    return [scene.tx.position] + [p for _, p in image_sources(scene.room, scene.tx)]


def basis_maps(scene: SceneConfig, f: float, offset=(0, 0)) -> np.ndarray:
    """Per-source field maps ``(direct, image_1..image_6)``, shape ``(7, n_v, n_u)``.

    ``offset`` displaces the sampling grid by whole pixels ``(du, dv)``.
    """
    k = wavenumber(f)
    pts = scene.grid.points(*offset)
    p0 = scene.tx.dipole_moment
    return np.stack([dipole_ez(src, pts, k, p0) for src in _source_positions(scene)])


def combine(basis: np.ndarray, gammas) -> np.ndarray:
    """Assemble ``direct + sum_i gamma_i * image_i`` from a basis stack.

    Accumulation order is direct first, then the images in wall order.
    """
    g = gammas.gamma if isinstance(gammas, ReflectionSet) else np.asarray(gammas, dtype=complex)
    total = basis[0].copy()
    for i in range(6):
        total += g[i] * basis[i + 1]
    return total


def total_field_map(scene: SceneConfig, gammas: ReflectionSet, f: float | None = None) -> ComplexMap:
    """Coherent direct + single-bounce field on the scene grid at frequency ``f``.

    ``f`` defaults to the scene's frequency when it lists exactly one.
    """
    if f is None:
        if len(scene.freqs) != 1:
            raise ValidationError("frequency must be given for a multi-frequency scene")
        f = scene.freqs.frequencies[0]
    data = combine(basis_maps(scene, f), gammas)
    return ComplexMap(data, scene.grid, float(f), "simulated")


def sweep_maps(scene: SceneConfig, gammas: ReflectionSet) -> list[ComplexMap]:
    """One :func:`total_field_map` per scene frequency, in order."""
    return [total_field_map(scene, gammas, f) for f in scene.freqs]


def direct_map(scene: SceneConfig, f: float) -> ComplexMap:
    return total_field_map(scene, ReflectionSet.zeros(), f)


def parse_gamma(text: str) -> complex:
    """Parse ``magnitude@degrees`` into a complex number."""
    try:
        mag_s, deg_s = text.strip().split("@")
        mag, deg = float(mag_s), float(deg_s)
    except ValueError:
        raise ValidationError(f"bad complex value {text!r}, expected magnitude@degrees") from None
    return mag * cmath.exp(1j * math.radians(deg))


def format_gamma(g: complex, digits=17) -> str:
    return f"{abs(g):.{digits}g}@{_phase_deg(g):.{digits}g}"


def parse_gamma_list(text: str) -> ReflectionSet:
    """Six comma-separated ``magnitude@degrees`` values in wall order."""
    items = [t for t in text.split(",") if t.strip()]
    return ReflectionSet([parse_gamma(t) for t in items])


# Coefficients found by fitting the image-source model to empty-room data.
BUNDLED_INITIAL_GAMMA = parse_gamma("0.203@-13.5")
BUNDLED_OPTIMIZED = ReflectionSet.from_polar(
    [0.19, 0.15, 0.11, 0.17, 0.11, 0.70],
    [95.0, 55.0, 0.0, 17.0, 243.0, 287.0],
)


