"""Indoor RSS map simulation with image sources and reflection-coefficient calibration."""

from .calibrate import CalibrationConfig, CalibrationResult, calibrate, objective
from .errors import FormatError, NumericalError, RssMapError, ValidationError
from .fields import dipole_ez, wavenumber
from .forward import (
    BUNDLED_INITIAL_GAMMA,
    BUNDLED_OPTIMIZED,
    ComplexMap,
    ReflectionSet,
    basis_maps,
    sweep_maps,
    total_field_map,
)
from .mapops import RealMap, attenuation_map, freq_average, magnitude, normalize_max
from .scene import (
    WALL_ORDER,
    FrequencySpec,
    RoomBox,
    RxGrid,
    SceneConfig,
    Transmitter,
    WallId,
    grid_points,
    image_sources,
    bundled_scene,
    validate_scene,
)
from .similarity import CorrelationResult, ShiftSearch, pearson, pearson_max_shift
from .synth import SynthSpec, synth_reference

__version__ = "0.1.0"

__all__ = [
    "RssMapError", "ValidationError", "FormatError", "NumericalError",
    "dipole_ez", "wavenumber",
    "ComplexMap", "ReflectionSet", "BUNDLED_INITIAL_GAMMA", "BUNDLED_OPTIMIZED",
    "basis_maps", "sweep_maps", "total_field_map",
    "RealMap", "attenuation_map", "freq_average", "magnitude", "normalize_max",
    "FrequencySpec", "RoomBox", "RxGrid", "SceneConfig", "Transmitter", "WallId", "WALL_ORDER",
    "grid_points", "image_sources", "bundled_scene", "validate_scene",
    "CorrelationResult", "ShiftSearch", "pearson", "pearson_max_shift",
    "CalibrationConfig", "CalibrationResult", "calibrate", "objective",
    "SynthSpec", "synth_reference",
]
