"""Room geometry, transmitter, receiver grid and image-source placement.

Coordinates are in meters with the origin at one floor corner of the room
and the axes aligned with the walls. The six boundary planes are
``x = 0``, ``x = size_x``, ``y = 0``, ``y = size_y``, ``z = 0`` and
``z = size_z``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

SPEED_OF_LIGHT = 299_792_458.0


class WallId(str, enum.Enum):
    """Wall identity, one per room boundary plane."""

    RIGHT = "right"  # x = size_x
    LEFT = "left"  # x = 0
    CEILING = "ceiling"  # z = size_z
    GROUND = "ground"  # z = 0
    BACK_RX = "back_rx"  # y = size_y
    BACK_TX = "back_tx"  # y = 0

    @property
    def axis(self) -> int:
        return _WALL_AXIS[self]


# Frozen order of the reflection coefficients (index 0 is the first image).
WALL_ORDER = (
    WallId.RIGHT,
    WallId.LEFT,
    WallId.CEILING,
    WallId.GROUND,
    WallId.BACK_RX,
    WallId.BACK_TX,
)

_WALL_AXIS = {
    WallId.RIGHT: 0,
    WallId.LEFT: 0,
    WallId.CEILING: 2,
    WallId.GROUND: 2,
    WallId.BACK_RX: 1,
    WallId.BACK_TX: 1,
}


def _point(value, name) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ValidationError(f"{name} must be a 3D point, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RoomBox:
    size_x: float
    size_y: float
    size_z: float

    @property
    def size(self) -> np.ndarray:
        return np.array([self.size_x, self.size_y, self.size_z])

    def wall_plane(self, wall: WallId) -> tuple[int, float]:
        """Return ``(axis, offset)`` of the plane of ``wall``."""
        if wall in (WallId.LEFT, WallId.GROUND, WallId.BACK_TX):
            return wall.axis, 0.0
        return wall.axis, float(self.size[wall.axis])

    def contains(self, points, strict=True) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        lo, hi = np.zeros(3), self.size
        if strict:
            inside = (p > lo) & (p < hi)
        else:
            inside = (p >= lo) & (p <= hi)
        return np.all(inside, axis=-1)


@dataclass(frozen=True)
class Transmitter:
    """Vertical (z-oriented) Hertzian dipole."""

    position: np.ndarray
    dipole_moment: complex = 1.0 + 0.0j

    def __post_init__(self):
        object.__setattr__(self, "position", _point(self.position, "tx.position"))
        object.__setattr__(self, "dipole_moment", complex(self.dipole_moment))

    def __eq__(self, other):
        if not isinstance(other, Transmitter):
            return NotImplemented
        return (np.array_equal(self.position, other.position)
                and self.dipole_moment == other.dipole_moment)

    __hash__ = None


@dataclass(frozen=True)
class RxGrid:
    """Planar receiver sampling grid.

    Sample ``(i, j)`` sits at ``origin + i*step_u*u_axis + j*step_v*v_axis``
    with ``0 <= i < n_u`` and ``0 <= j < n_v``. Map arrays built on this grid
    have shape ``(n_v, n_u)``: rows follow ``v``, columns follow ``u``.
    """

    origin: np.ndarray
    u_axis: np.ndarray
    v_axis: np.ndarray
    n_u: int
    n_v: int
    step_u: float
    step_v: float

    def __post_init__(self):
        object.__setattr__(self, "origin", _point(self.origin, "grid.origin"))
        object.__setattr__(self, "u_axis", _point(self.u_axis, "grid.u_axis"))
        object.__setattr__(self, "v_axis", _point(self.v_axis, "grid.v_axis"))
        object.__setattr__(self, "n_u", int(self.n_u))
        object.__setattr__(self, "n_v", int(self.n_v))
        object.__setattr__(self, "step_u", float(self.step_u))
        object.__setattr__(self, "step_v", float(self.step_v))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_v, self.n_u)

    @property
    def size(self) -> int:
        return self.n_u * self.n_v

    def points(self, offset_u=0, offset_v=0) -> np.ndarray:
        """Sample positions as an ``(n_v, n_u, 3)`` array.

        ``offset_u``/``offset_v`` displace the whole grid by whole pixels.
        """
        i = np.arange(self.n_u, dtype=float) + offset_u
        j = np.arange(self.n_v, dtype=float) + offset_v
        du = (i * self.step_u)[None, :, None] * self.u_axis
        dv = (j * self.step_v)[:, None, None] * self.v_axis
        return self.origin + du + dv

    def same_layout(self, other: "RxGrid") -> bool:
        return (self.n_u, self.n_v) == (other.n_u, other.n_v)

    def __eq__(self, other):
        if not isinstance(other, RxGrid):
            return NotImplemented
        return (
            (self.n_u, self.n_v, self.step_u, self.step_v)
            == (other.n_u, other.n_v, other.step_u, other.step_v)
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.u_axis, other.u_axis)
            and np.array_equal(self.v_axis, other.v_axis)
        )

    __hash__ = None


@dataclass(frozen=True)
class FrequencySpec:
    frequencies: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "frequencies", tuple(float(f) for f in np.atleast_1d(self.frequencies))
        )

    @property
    def wavelengths(self) -> np.ndarray:
        return SPEED_OF_LIGHT / np.asarray(self.frequencies)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.asarray(self.frequencies) / SPEED_OF_LIGHT

    def __len__(self):
        return len(self.frequencies)

    def __iter__(self):
        return iter(self.frequencies)


@dataclass(frozen=True)
class SceneConfig:
    room: RoomBox
    tx: Transmitter
    grid: RxGrid
    freqs: FrequencySpec = field(default_factory=lambda: FrequencySpec((2.48e9,)))


def validate_scene(cfg: SceneConfig) -> SceneConfig:
    """Check every scene invariant and return ``cfg`` unchanged.

    Raises
    ------
    ValidationError
        On the first violated invariant; the message starts with the field
        path, e.g. ``"tx.position outside room"``.
    """
    room = cfg.room
    for name in ("size_x", "size_y", "size_z"):
        value = getattr(room, name)
        if not (np.isfinite(value) and value > 0):
            raise ValidationError(f"room.{name} must be positive, got {value}")

    tx = cfg.tx
    if not room.contains(tx.position):
        raise ValidationError(f"tx.position outside room: {tuple(tx.position)}")
    if tx.dipole_moment == 0 or not np.isfinite(tx.dipole_moment):
        raise ValidationError("tx.dipole_moment must be finite and nonzero")

    grid = cfg.grid
    for name in ("u_axis", "v_axis"):
        norm = np.linalg.norm(getattr(grid, name))
        if abs(norm - 1.0) > 1e-9:
            raise ValidationError(f"grid.{name} must be unit length, got norm {norm}")
    if abs(float(np.dot(grid.u_axis, grid.v_axis))) > 1e-9:
        raise ValidationError("grid.u_axis and grid.v_axis must be orthogonal")
    if grid.n_u < 1 or grid.n_v < 1:
        raise ValidationError(f"grid.n_u and grid.n_v must be >= 1, got {grid.n_u}x{grid.n_v}")
    for name in ("step_u", "step_v"):
        value = getattr(grid, name)
        if not (np.isfinite(value) and value > 0):
            raise ValidationError(f"grid.{name} must be positive, got {value}")
    if not np.all(room.contains(grid.points())):
        raise ValidationError("grid.points outside room")

    freqs = np.asarray(cfg.freqs.frequencies)
    if freqs.size == 0:
        raise ValidationError("freqs.list must not be empty")
    if not np.all(np.isfinite(freqs) & (freqs > 0)):
        raise ValidationError("freqs.list entries must be positive")
    if np.any(np.diff(freqs) <= 0):
        raise ValidationError("freqs.list must be strictly increasing")
    return cfg


def mirror(point, room: RoomBox, wall: WallId) -> np.ndarray:
    """Mirror ``point`` across the plane of ``wall``."""
    axis, offset = room.wall_plane(wall)
    out = np.array(point, dtype=float)
    out[axis] = 2.0 * offset - out[axis]
    return out


def image_sources(room: RoomBox, tx: Transmitter) -> list[tuple[WallId, np.ndarray]]:
    """First-order image positions of ``tx``, in ``WALL_ORDER``."""
    return [(wall, mirror(tx.position, room, wall)) for wall in WALL_ORDER]


def grid_points(grid: RxGrid) -> np.ndarray:
    """Sample positions as an ``(n_u*n_v, 3)`` array, v outer and u inner."""
    return grid.points().reshape(-1, 3)


# Bundled reference geometry: x along the wall behind the Tx (5.6 m),
# y from the Tx towards the grid (3.6 m), z vertical (2.8 m).
BUNDLED_ROOM = (5.6, 3.6, 2.8)
BUNDLED_TX_POSITION = (2.8, 0.10, 1.0)
BUNDLED_GRID_WALL_OFFSET = 0.283
BUNDLED_GRID_COUNTS = (162, 80)
BUNDLED_GRID_STEP = 0.031
BUNDLED_FREQUENCY = 2.48e9
BUNDLED_BAND = tuple(2.40e9 + 10e6 * n for n in range(11))


def bundled_grid(n_u=BUNDLED_GRID_COUNTS[0], n_v=BUNDLED_GRID_COUNTS[1], step=None) -> RxGrid:
    """Vertical grid parallel to the far wall, centered on the room midplane.

    Passing smaller ``n_u``/``n_v`` keeps the same aperture and scales the
    step accordingly, e.g. ``bundled_grid(81, 40)`` gives a half-resolution
    grid.
    """
    size_x, size_y, size_z = BUNDLED_ROOM
    if step is None:
        span_u = (BUNDLED_GRID_COUNTS[0] - 1) * BUNDLED_GRID_STEP
        span_v = (BUNDLED_GRID_COUNTS[1] - 1) * BUNDLED_GRID_STEP
        step_u = span_u / (n_u - 1) if n_u > 1 else BUNDLED_GRID_STEP
        step_v = span_v / (n_v - 1) if n_v > 1 else BUNDLED_GRID_STEP
    else:
        step_u = step_v = step
    origin = (
        (size_x - (n_u - 1) * step_u) / 2,
        size_y - BUNDLED_GRID_WALL_OFFSET,
        (size_z - (n_v - 1) * step_v) / 2,
    )
    return RxGrid(origin, (1.0, 0.0, 0.0), (0.0, 0.0, 1.0), n_u, n_v, step_u, step_v)


def bundled_scene(n_u=BUNDLED_GRID_COUNTS[0], n_v=BUNDLED_GRID_COUNTS[1], frequencies=(BUNDLED_FREQUENCY,)):
    """The measurement room with the Tx centered 0.10 m from the back wall."""
    cfg = SceneConfig(
        room=RoomBox(*BUNDLED_ROOM),
        tx=Transmitter(BUNDLED_TX_POSITION, 1.0),
        grid=bundled_grid(n_u, n_v),
        freqs=FrequencySpec(tuple(frequencies)),
    )
    return validate_scene(cfg)
