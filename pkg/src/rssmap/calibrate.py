"""Fit per-wall reflection coefficients to a reference magnitude map.

The twelve real unknowns are the magnitude (bounded to ``[0, 1]``) and phase
(wrapped to ``[0, 360)`` degrees) of each wall coefficient. The objective is
the negative Pearson correlation between the reference and the modeled
field magnitude, optionally averaged over a frequency list. Each restart runs
a bounded Nelder-Mead search that is relaunched from its own optimum until
the objective stops improving.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import NumericalError, ValidationError
from .forward import ReflectionSet, basis_maps, total_field_map
from .mapops import RealMap, freq_average, magnitude
from .scene import WALL_ORDER, SceneConfig
from .similarity import ShiftSearch, pearson, pearson_max_shift

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibrationConfig:
    init_magnitude: float = 0.2
    init_phase_deg: float = 0.0
    restarts: int = 8
    max_objective_evals: int = 20000  # per restart
    convergence_tol: float = 1e-6
    use_shift_max: bool = False
    rng_seed: int = 0
    average_frequencies: bool = False
    shift_search: ShiftSearch = field(default_factory=ShiftSearch)

    def validate(self) -> "CalibrationConfig":
        if not 0 <= self.init_magnitude <= 1:
            raise ValidationError("init_magnitude must be in [0, 1]")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.max_objective_evals < 1:
            raise ValidationError("max_objective_evals must be >= 1")
        if not self.convergence_tol > 0:
            raise ValidationError("convergence_tol must be positive")
        return self


@dataclass(frozen=True)
class RestartTrace:
    index: int
    init: ReflectionSet
    init_rho: float
    final_rho: float
    evals: int


@dataclass(frozen=True)
class CalibrationResult:
    gammas: ReflectionSet
    rho_achieved: float
    evals_used: int
    restart_index_of_best: int
    restarts: tuple[RestartTrace, ...]
    initial_rho: float
    sensitivity: dict
    frequencies: tuple[float, ...]
    warning: str | None = None
    # (restart, eval, rho) rows, filled when tracing was requested
    trace: tuple = ()


class Basis:
    """Per-source field maps for one or more frequencies.

    ``maps`` has shape ``(n_freq, 7, n_v*n_u)``; index 0 along the second
    axis is the direct field, 1..6 the images in wall order.
    """

    def __init__(self, scene: SceneConfig, frequencies):
        self.scene = scene
        self.frequencies = tuple(float(f) for f in frequencies)
        self.shape = scene.grid.shape
        self.maps = np.stack(
            [basis_maps(scene, f).reshape(7, -1) for f in self.frequencies]
        )
        self._direct = self.maps[:, 0]
        self._images = np.ascontiguousarray(self.maps[:, 1:])

    def model_magnitude(self, gamma: np.ndarray) -> np.ndarray:
        """Frequency-averaged ``|direct + sum gamma_i image_i|``, flattened."""
        acc = None
        for direct, images in zip(self._direct, self._images):
            mag = np.abs(direct + gamma @ images)
            acc = mag if acc is None else acc + mag
        if len(self.frequencies) > 1:
            acc = acc / len(self.frequencies)
        return acc

    def sensitivity(self) -> dict:
        """Mean image-field magnitude relative to the mean direct magnitude, per wall."""
        mags = np.abs(self.maps).mean(axis=(0, 2))
        return {wall: float(mags[i + 1] / mags[0]) for i, wall in enumerate(WALL_ORDER)}


def _to_gamma(x: np.ndarray) -> np.ndarray:
    mags = np.clip(x[:6], 0.0, 1.0)
    return mags * np.exp(1j * np.deg2rad(np.mod(x[6:], 360.0)))


def _to_reflection_set(x: np.ndarray) -> ReflectionSet:
    return ReflectionSet.from_polar(np.clip(x[:6], 0.0, 1.0), np.mod(x[6:], 360.0))


class Objective:
    """Negative correlation between a reference map and the basis model."""

    def __init__(self, reference: RealMap, basis: Basis, cfg: CalibrationConfig):
        ref = np.asarray(reference.data, dtype=float)
        if ref.shape != basis.shape:
            raise ValidationError(
                f"reference shape {ref.shape} does not match scene grid {basis.shape}"
            )
        self.reference = ref
        self.basis = basis
        self.cfg = cfg
        if ref.min() == ref.max():
            raise NumericalError("constant map: correlation undefined")
        centered = ref.ravel() - ref.mean()
        self._ref_unit = centered / np.sqrt(np.sum(centered * centered))
        self.evals = 0

    def rho(self, gamma: np.ndarray) -> float:
        self.evals += 1
        model = self.basis.model_magnitude(gamma)
        if self.cfg.use_shift_max:
            try:
                return pearson_max_shift(
                    self.reference, model.reshape(self.basis.shape), self.cfg.shift_search
                ).rho
            except NumericalError:
                return -1.0
        if model.min() == model.max():
            return -1.0
        centered = model - model.mean()
        return float(np.dot(self._ref_unit, centered) / np.sqrt(np.sum(centered * centered)))

    def __call__(self, gammas) -> float:
        gamma = gammas.gamma if isinstance(gammas, ReflectionSet) else np.asarray(gammas, complex)
        return -self.rho(gamma)


def objective(reference: RealMap, basis: Basis, gammas: ReflectionSet, cfg: CalibrationConfig | None = None) -> float:
    """``-rho(reference, |model(gammas)|)``; a constant model map scores +1."""
    return Objective(reference, basis, cfg or CalibrationConfig())(gammas)


def working_frequencies(scene: SceneConfig, reference: RealMap, cfg: CalibrationConfig, frequency=None):
    if cfg.average_frequencies:
        return tuple(scene.freqs.frequencies)
    if frequency is None:
        frequency = reference.frequency
    if frequency is None:
        if len(scene.freqs) != 1:
            raise ValidationError(
                "reference has no frequency and the scene lists several; "
                "pass a frequency or enable frequency averaging"
            )
        frequency = scene.freqs.frequencies[0]
    return (float(frequency),)


def _local_search(fun, x0, bounds, budget, tol):
    """Nelder-Mead relaunched from its own optimum until it stops improving."""
    x, fx, used = np.asarray(x0, float), fun(x0), 1
    launches = 0
    while used < budget:
        res = minimize(
            fun, x, method="Nelder-Mead", bounds=bounds,
            options=dict(maxfev=budget - used, xatol=1e-7, fatol=tol * 1e-3, adaptive=True),
        )
        used += res.nfev
        launches += 1
        gain = fx - res.fun
        if res.fun < fx:
            x, fx = res.x, res.fun
        if launches >= 2 and gain <= tol:
            break
    return x, fx, used


def calibrate(
    scene: SceneConfig,
    reference: RealMap,
    cfg: CalibrationConfig | None = None,
    frequency: float | None = None,
    record_trace: bool = False,
) -> CalibrationResult:
    """Maximize the correlation between ``reference`` and the image-source model.

    Restart 0 starts from ``cfg.init_magnitude``/``cfg.init_phase_deg`` on
    every wall; the remaining restarts draw magnitudes uniformly in
    ``[0, 0.5]`` and phases in ``[0, 360)`` from ``cfg.rng_seed``. The best
    restart wins (highest correlation, then lowest index).
    """
    cfg = (cfg or CalibrationConfig()).validate()
    if reference.unit not in ("linear", "normalized"):
        raise ValidationError(f"reference must be a magnitude map, got unit {reference.unit!r}")
    freqs = working_frequencies(scene, reference, cfg, frequency)
    basis = Basis(scene, freqs)
    obj = Objective(reference, basis, cfg)

    rng = np.random.default_rng(cfg.rng_seed)
    starts = [np.concatenate([np.full(6, cfg.init_magnitude), np.full(6, cfg.init_phase_deg % 360.0)])]
    for _ in range(1, cfg.restarts):
        starts.append(np.concatenate([rng.uniform(0.0, 0.5, 6), rng.uniform(0.0, 360.0, 6)]))

    bounds = [(0.0, 1.0)] * 6 + [(None, None)] * 6
    trace_rows = []
    traces = []
    best_x, best_f, best_idx = None, np.inf, -1
    initial_rho = None
    for idx, x0 in enumerate(starts):
        count = [0]

        def fun(x, _idx=idx, _count=count):
            val = -obj.rho(_to_gamma(x))
            _count[0] += 1
            if record_trace:
                trace_rows.append((_idx, _count[0], -val))
            return val

        start_rho = -fun(x0)
        if idx == 0:
            initial_rho = start_rho
        x, fx, _ = _local_search(fun, x0, bounds, cfg.max_objective_evals, cfg.convergence_tol)
        traces.append(RestartTrace(idx, _to_reflection_set(x0), start_rho, -fx, count[0]))
        log.debug("restart %d: rho %.6f -> %.9f in %d evals", idx, start_rho, -fx, count[0])
        if fx < best_f:
            best_x, best_f, best_idx = x, fx, idx

    gammas = _to_reflection_set(best_x)
    rho = _independent_rho(scene, reference, gammas, freqs, cfg)
    warning = None
    if not rho > initial_rho:
        warning = "no improvement over the initial point"
    return CalibrationResult(
        gammas=gammas,
        rho_achieved=rho,
        evals_used=obj.evals,
        restart_index_of_best=best_idx,
        restarts=tuple(traces),
        initial_rho=initial_rho,
        sensitivity=basis.sensitivity(),
        frequencies=freqs,
        warning=warning,
        trace=tuple(trace_rows),
    )


def _independent_rho(scene, reference, gammas, freqs, cfg) -> float:
    """Correlation recomputed from scratch, without the cached basis."""
    model = model_map(scene, gammas, freqs)
    if cfg.use_shift_max:
        return pearson_max_shift(reference, model, cfg.shift_search).rho
    return pearson(reference, model)


def model_map(scene: SceneConfig, gammas: ReflectionSet, frequencies) -> RealMap:
    """Magnitude (frequency-averaged when several) of the forward model."""
    maps = [total_field_map(scene, gammas, f) for f in frequencies]
    return freq_average(maps) if len(maps) > 1 else magnitude(maps[0])
