"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed even without ``-s``.
"""

import math
import time

import numpy as np
import pytest

from oracles import ez_mp, mirror_all, pearson_plain, shift_search_plain
from rssmap import io
from rssmap.calibrate import Basis, CalibrationConfig, calibrate
from rssmap.cli import main
from rssmap.fields import dipole_ez, wavenumber
from rssmap.forward import BUNDLED_INITIAL_GAMMA, BUNDLED_OPTIMIZED, ReflectionSet, total_field_map
from rssmap.mapops import RealMap, attenuation_map, magnitude
from rssmap.scene import BUNDLED_BAND, WALL_ORDER, RxGrid, bundled_scene
from rssmap.similarity import ShiftSearch, overlap, pearson, pearson_max_shift
from rssmap.synth import SynthSpec, synth_reference

INIT_MAG = abs(BUNDLED_INITIAL_GAMMA)
INIT_PHASE = math.degrees(np.angle(BUNDLED_INITIAL_GAMMA))


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line, then fail the test if any check failed."""

    def report(number, title, checks):
        ok = all(passed for passed, _ in checks)
        details = "; ".join(text for _, text in checks)
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({details})")
        failed = [text for passed, text in checks if not passed]
        assert not failed, failed

    return report


def _phase_error(a, b):
    return np.abs((np.asarray(a) - np.asarray(b) + 180.0) % 360.0 - 180.0)


def _round_trip(n_u, n_v):
    scene = bundled_scene(n_u, n_v)
    reference = magnitude(total_field_map(scene, BUNDLED_OPTIMIZED))
    start = time.perf_counter()
    result = calibrate(scene, reference, CalibrationConfig(restarts=8))
    elapsed = time.perf_counter() - start
    walls = [i for i, w in enumerate(WALL_ORDER) if result.sensitivity[w] >= 0.05]
    mag_err = np.abs(result.gammas.magnitudes - BUNDLED_OPTIMIZED.magnitudes)[walls].max()
    phase_err = _phase_error(result.gammas.phases_deg, BUNDLED_OPTIMIZED.phases_deg)[walls].max()
    return result, elapsed, len(walls), mag_err, phase_err


@pytest.mark.slow
def test_criterion_1_round_trip_closure(verdict):
    checks = []
    for (n_u, n_v), budget in [((162, 80), 120.0), ((81, 40), 10.0)]:
        result, elapsed, n_walls, mag_err, phase_err = _round_trip(n_u, n_v)
        tag = f"{n_u}x{n_v}"
        checks += [
            (result.rho_achieved >= 0.999, f"{tag} rho={result.rho_achieved:.9f}"),
            (mag_err <= 0.02, f"{tag} max |dGamma|={mag_err:.1e} over {n_walls} walls"),
            (phase_err <= 5.0, f"{tag} max dphase={phase_err:.1e} deg"),
            (elapsed <= budget, f"{tag} {elapsed:.1f}s <= {budget:.0f}s"),
        ]
    verdict(1, "round-trip calibration closure", checks)


def _benchmarks():
    """Synthetic references covering noise, misalignment and frequency averaging."""
    scene = bundled_scene(41, 20)
    band = bundled_scene(41, 20, BUNDLED_BAND)
    rng = np.random.default_rng(2024)
    cases = [
        ("optimized", SynthSpec(scene, BUNDLED_OPTIMIZED), {}),
        ("noise 2 dB", SynthSpec(scene, BUNDLED_OPTIMIZED, noise_sigma_db=2.0, rng_seed=11), {}),
        ("noise 6 dB", SynthSpec(scene, BUNDLED_OPTIMIZED, noise_sigma_db=6.0, rng_seed=12), {}),
        ("shift (2,-1)", SynthSpec(scene, BUNDLED_OPTIMIZED, pixel_shift=(2, -1)),
         {"use_shift_max": True, "shift_search": ShiftSearch(3, 3)}),
        ("band average", SynthSpec(band, BUNDLED_OPTIMIZED, average_frequencies=True),
         {"average_frequencies": True}),
    ]
    for k in range(3):
        truth = ReflectionSet.from_polar(rng.uniform(0.05, 0.8, 6), rng.uniform(0, 360, 6))
        cases.append((f"random truth {k}", SynthSpec(scene, truth, noise_sigma_db=1.0, rng_seed=k), {}))
    return cases


@pytest.mark.slow
def test_criterion_2_monotone_improvement(verdict):
    checks = []
    for name, spec, extra in _benchmarks():
        reference, _ = synth_reference(spec)
        cfg = CalibrationConfig(init_magnitude=INIT_MAG, init_phase_deg=INIT_PHASE, restarts=3,
                                max_objective_evals=4000, **extra)
        result = calibrate(spec.scene, reference, cfg)
        checks.append((result.rho_achieved > result.initial_rho,
                       f"{name}: {result.initial_rho:.3f}->{result.rho_achieved:.3f}"))
    verdict(2, "improvement over uniform 0.203 at -13.5 deg", checks)


def test_criterion_3_field_kernel(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        while True:
            src, obs = rng.uniform(-5, 5, 3), rng.uniform(-5, 5, 3)
            if np.linalg.norm(obs - src) > 0.01:
                break
        f = rng.uniform(0.5e9, 6e9)
        got = complex(dipole_ez(src, obs, wavenumber(f)))
        want = ez_mp(src, obs, f)
        worst = max(worst, abs(got - want) / abs(want))

    k = wavenumber(2.48e9)
    recip = 0.0
    for _ in range(200):
        a, b = rng.uniform(-3, 3, 3), rng.uniform(-3, 3, 3)
        ab, ba = complex(dipole_ez(a, b, k)), complex(dipole_ez(b, a, k))
        recip = max(recip, abs(ab - ba) / abs(ab))

    r = np.linspace(100, 1000, 901) / k
    obs = np.stack([r, np.zeros_like(r), np.zeros_like(r)], axis=-1)
    er = np.abs(dipole_ez((0.0, 0.0, 0.0), obs, k)) * r
    spread = (er.max() - er.min()) / er.mean()
    verdict(3, "field kernel", [
        (worst <= 1e-10, f"max rel err vs mpmath {worst:.1e}"),
        (recip <= 4 * np.finfo(float).eps, f"reciprocity {recip:.1e}"),
        (spread <= 2e-4, f"broadside |E|r spread {spread:.2e}"),
    ])


def test_criterion_4_linearity(verdict, scene):
    f = scene.freqs.frequencies[0]
    k = wavenumber(f)
    pts = scene.grid.points()
    sources = mirror_all(scene.tx.position, (scene.room.size_x, scene.room.size_y, scene.room.size_z))
    direct = dipole_ez(scene.tx.position, pts, k)
    basis = Basis(scene, [f])
    rng = np.random.default_rng(4)
    worst_map = worst_fast = 0.0
    for _ in range(100):
        gammas = ReflectionSet.from_polar(rng.uniform(0, 1, 6), rng.uniform(0, 360, 6))
        # evaluate every image as a dipole whose moment already carries its coefficient
        expected = direct.copy()
        for g, src in zip(gammas.gamma, sources):
            expected += dipole_ez(src, pts, k, g)
        got = total_field_map(scene, gammas).data
        worst_map = max(worst_map, np.linalg.norm(got - expected) / np.linalg.norm(expected))
        fast = basis.model_magnitude(gammas.gamma).reshape(scene.grid.shape)
        worst_fast = max(worst_fast, np.linalg.norm(fast - np.abs(expected)) / np.linalg.norm(expected))
    verdict(4, "linearity identity", [
        (worst_map <= 1e-12, f"total_field_map rel err {worst_map:.1e}"),
        (worst_fast <= 1e-12, f"calibration basis rel err {worst_fast:.1e}"),
    ])


def _grid(n_u, n_v):
    return RxGrid((0, 0, 0), (1, 0, 0), (0, 0, 1), n_u, n_v, 0.01, 0.01)


def test_criterion_5_similarity(verdict):
    rng = np.random.default_rng(5)
    affine = 0.0
    for _ in range(200):
        a, b = rng.normal(size=(20, 30)), rng.normal(size=(20, 30))
        scale, offset = rng.uniform(0.1, 10), rng.uniform(-10, 10)
        affine = max(affine, abs(pearson(a, scale * b + offset) - pearson(a, b)))

    dominated = True
    for _ in range(50):
        a, b = rng.normal(size=(12, 15)), rng.normal(size=(12, 15))
        dominated &= pearson_max_shift(a, b).rho >= pearson(a, b)

    planted_ok, worst_rho = True, 0.0
    for _ in range(20):
        big = rng.normal(size=(26, 32))
        a = big[3:-3, 3:-3]
        for du in range(-3, 4):
            for dv in range(-3, 4):
                # b[j - dv, i - du] == a[j, i] on the overlap
                b = big[3 + dv:big.shape[0] - 3 + dv, 3 + du:big.shape[1] - 3 + du]
                res = pearson_max_shift(a, b, ShiftSearch(3, 3))
                planted_ok &= res.best_shift == (du, dv)
                worst_rho = max(worst_rho, abs(res.rho - 1.0))

    exhaustive_ok = True
    for _ in range(40):
        n_u, n_v = rng.integers(3, 17, 2)
        a, b = rng.normal(size=(n_v, n_u)), rng.normal(size=(n_v, n_u))
        search = ShiftSearch(int(rng.integers(0, n_u)), int(rng.integers(0, n_v)), rng.uniform(0.1, 1.0))
        got = pearson_max_shift(a, b, search)
        want = shift_search_plain(a.tolist(), b.tolist(), search.max_shift_u, search.max_shift_v,
                                  search.min_overlap_fraction)
        same_rho = abs(got.rho - want[0]) <= 1e-12
        av, bv = overlap(a, b, *got.best_shift)
        tie = abs(pearson_plain(av.ravel().tolist(), bv.ravel().tolist()) - want[0]) <= 1e-11
        exhaustive_ok &= same_rho and (got.best_shift == want[1] or tie)

    verdict(5, "similarity", [
        (affine <= 1e-12, f"affine invariance {affine:.1e}"),
        (dominated, "rho_max >= rho"),
        (planted_ok and worst_rho <= 1e-9, f"planted shifts, |rho-1| <= {worst_rho:.1e}"),
        (exhaustive_ok, "exhaustive search equivalence"),
    ])


def test_criterion_6_attenuation_algebra(verdict):
    rng = np.random.default_rng(6)
    g = _grid(8, 5)
    fp = RealMap(rng.uniform(0.01, 100, (5, 8)), g)
    tar = RealMap(rng.uniform(0.01, 100, (5, 8)), g)
    forward, backward = attenuation_map(fp, tar).data, attenuation_map(tar, fp).data
    antisym = np.abs(forward + backward).max()
    c = 37.5
    scaled = attenuation_map(RealMap(c * fp.data, g), RealMap(c * tar.data, g)).data
    scale = np.abs(scaled - forward).max()
    ones = np.ones((5, 8))
    spot = [
        attenuation_map(RealMap(ones * x, g), RealMap(ones, g)).data.max() - want
        for x, want in [(1.0, 0.0), (2.0, 20 * math.log10(2)), (10.0, 20.0)]
    ]
    spot_err = max(abs(s) for s in spot)
    verdict(6, "attenuation algebra", [
        (antisym <= 1e-9, f"antisymmetry {antisym:.1e} dB"),
        (scale <= 1e-9, f"scale invariance {scale:.1e} dB"),
        (spot_err <= 1e-9 and abs(20 * math.log10(2) - 6.0206) < 1e-4,
         f"0 / 6.0206 / 20 dB spot values {spot_err:.1e} dB"),
    ])


def test_criterion_7_determinism(verdict, tmp_path, half_scene):
    scene_file = tmp_path / "half.cfg"
    io.write_scene(half_scene, scene_file)
    reports = []
    for run in range(2):
        ref, rep = tmp_path / f"ref{run}.map", tmp_path / f"report{run}.txt"
        assert main(["synth", "--scene", str(scene_file), "--gammas-true", "optimized",
                     "--noise-db", "2", "--shift", "1", "0", "--seed", "42", "--out", str(ref)]) == 0
        assert main(["calibrate", "--scene", str(scene_file), "--reference", str(ref),
                     "--restarts", "3", "--seed", "9", "--out", str(rep)]) == 0
        reports.append((ref.read_bytes(), rep.read_bytes()))
    verdict(7, "determinism", [
        (reports[0][0] == reports[1][0], "reference maps identical"),
        (reports[0][1] == reports[1][1], f"reports identical ({len(reports[0][1])} bytes)"),
    ])
