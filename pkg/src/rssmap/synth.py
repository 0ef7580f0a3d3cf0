"""Synthetic reference maps from known reflection coefficients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .forward import ReflectionSet, basis_maps, combine
from .mapops import RealMap
from .scene import SceneConfig, validate_scene


@dataclass(frozen=True)
class SynthSpec:
    scene: SceneConfig
    gammas_true: ReflectionSet
    noise_sigma_db: float = 0.0
    pixel_shift: tuple[int, int] = (0, 0)
    rng_seed: int = 0
    frequency: float | None = None
    average_frequencies: bool = False


@dataclass(frozen=True)
class GroundTruth:
    """Sidecar record kept apart from the map so it cannot leak into a fit."""

    gammas_true: ReflectionSet
    noise_sigma_db: float
    pixel_shift: tuple[int, int]
    rng_seed: int
    frequencies: tuple[float, ...]


def _frequencies(spec: SynthSpec):
    freqs = spec.scene.freqs.frequencies
    if spec.average_frequencies:
        return tuple(freqs)
    if spec.frequency is not None:
        return (float(spec.frequency),)
    if len(freqs) != 1:
        raise ValidationError("frequency must be given for a multi-frequency scene")
    return (freqs[0],)


def synth_reference(spec: SynthSpec) -> tuple[RealMap, GroundTruth]:
    """Magnitude of the forward model with optional shift and log-normal noise.

    A pixel shift ``(du, dv)`` samples the field on the grid displaced by
    ``(-du, -dv)`` pixels, so the result is the clean map moved by ``+du``
    along ``u`` and ``+dv`` along ``v``; ``pearson_max_shift(clean, shifted)``
    then peaks at ``(-du, -dv)``. Noise multiplies each cell by
    ``10**(n/20)`` with ``n ~ Normal(0, noise_sigma_db)``.
    """
    scene = validate_scene(spec.scene)
    if not spec.noise_sigma_db >= 0:
        raise ValidationError("noise_sigma_db must be >= 0")
    du, dv = (int(s) for s in spec.pixel_shift)
    if abs(du) > scene.grid.n_u - 1 or abs(dv) > scene.grid.n_v - 1:
        raise ValidationError(f"pixel_shift {spec.pixel_shift} exceeds grid bounds")
    freqs = _frequencies(spec)

    mags = [np.abs(combine(basis_maps(scene, f, offset=(-du, -dv)), spec.gammas_true))
            for f in freqs]
    data = mags[0] if len(mags) == 1 else np.mean(mags, axis=0)

    if spec.noise_sigma_db > 0:
        rng = np.random.default_rng(spec.rng_seed)
        noise_db = rng.normal(0.0, spec.noise_sigma_db, size=data.shape)
        data = data * 10.0 ** (noise_db / 20.0)

    freq = freqs[0] if len(freqs) == 1 else None
    ref = RealMap(data, scene.grid, "linear", freq, "synthetic")
    truth = GroundTruth(spec.gammas_true, float(spec.noise_sigma_db), (du, dv), int(spec.rng_seed), freqs)
    return ref, truth
