import csv

import numpy as np
import pytest

from rssmap import io
from rssmap.calibrate import CalibrationConfig, calibrate
from rssmap.cli import main
from rssmap.forward import BUNDLED_OPTIMIZED, ReflectionSet, parse_gamma_list, total_field_map
from rssmap.mapops import attenuation_map, freq_average, magnitude
from rssmap.scene import bundled_scene
from rssmap.similarity import pearson, pearson_max_shift
from rssmap.synth import SynthSpec, synth_reference

TRUE = "0.19@95,0.15@55,0.11@0,0.17@17,0.11@243,0.70@287"


@pytest.fixture
def scene_file(tmp_path, small_scene):
    path = tmp_path / "small.cfg"
    io.write_scene(small_scene, path, BUNDLED_OPTIMIZED)
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_simulate_matches_library(tmp_path, scene_file):
    out = tmp_path / "sim.map"
    assert run("simulate", "--scene", scene_file, "--out", out) == 0
    # the file stores magnitude@degrees, so compare with the coefficients as read back
    scene, gammas = io.read_scene(scene_file)
    expected = total_field_map(scene, gammas)
    assert io.read_map(out).data.tobytes() == expected.data.tobytes()


def test_simulate_explicit_gammas_override_scene(tmp_path, scene_file, small_scene):
    out = tmp_path / "zero.map"
    assert run("simulate", "--scene", scene_file, "--gammas", "zero", "--out", out) == 0
    expected = total_field_map(small_scene, ReflectionSet.zeros())
    np.testing.assert_array_equal(io.read_map(out).data, expected.data)


def test_simulate_band_writes_one_map_per_frequency(tmp_path, capsys):
    out = tmp_path / "band.map"
    gammas = tmp_path / "g.txt"
    gammas.write_text("\n".join(io.format_gamma_lines(BUNDLED_OPTIMIZED)) + "\n")
    scene = bundled_scene(11, 6, (2.40e9, 2.45e9, 2.50e9))
    io.write_scene(scene, tmp_path / "band.cfg")
    assert run("simulate", "--scene", tmp_path / "band.cfg", "--gammas", gammas, "--out", out) == 0
    names = capsys.readouterr().out.split()
    gammas = io.read_gammas(tmp_path / "g.txt")
    assert [p.rsplit("/", 1)[-1] for p in names] == ["band_00.map", "band_01.map", "band_02.map"]
    for name, f in zip(names, scene.freqs):
        m = io.read_map(name)
        assert m.frequency == f
        np.testing.assert_array_equal(m.data, total_field_map(scene, gammas, f).data)


def test_attenuate_identical_maps_is_zero(tmp_path, scene_file):
    sim = tmp_path / "sim.map"
    run("simulate", "--scene", scene_file, "--out", sim)
    out = tmp_path / "att.map"
    assert run("attenuate", "--fp", sim, "--tar", sim, "--out", out) == 0
    att = io.read_map(out)
    assert att.unit == "dB"
    assert np.all(att.data == 0)


def test_attenuate_matches_library(tmp_path, scene_file, small_scene):
    fp, tar = tmp_path / "fp.map", tmp_path / "tar.map"
    run("simulate", "--scene", scene_file, "--out", fp)
    run("simulate", "--scene", scene_file, "--gammas", "initial", "--out", tar)
    out = tmp_path / "att.map"
    assert run("attenuate", "--fp", fp, "--tar", tar, "--out", out) == 0
    expected = attenuation_map(magnitude(io.read_map(fp)), magnitude(io.read_map(tar)))
    np.testing.assert_array_equal(io.read_map(out).data, expected.data)


def test_correlate_self(tmp_path, scene_file, capsys):
    sim = tmp_path / "sim.map"
    run("simulate", "--scene", scene_file, "--out", sim)
    capsys.readouterr()
    assert run("correlate", "--a", sim, "--b", sim) == 0
    out = capsys.readouterr().out.strip()
    assert out == "rho=1.000000000 rho_max=1.000000000 shift=0,0 overlap=210"


def test_correlate_matches_library(tmp_path, scene_file, capsys):
    a, b = tmp_path / "a.map", tmp_path / "b.map"
    run("simulate", "--scene", scene_file, "--out", a)
    run("simulate", "--scene", scene_file, "--gammas", "initial", "--out", b)
    capsys.readouterr()
    assert run("correlate", "--a", a, "--b", b, "--max-shift", 3, 2) == 0
    ma, mb = magnitude(io.read_map(a)), magnitude(io.read_map(b))
    from rssmap.similarity import ShiftSearch

    best = pearson_max_shift(ma, mb, ShiftSearch(3, 2))
    expected = (
        f"rho={pearson(ma, mb):.9f} rho_max={best.rho:.9f} "
        f"shift={best.best_shift[0]},{best.best_shift[1]} overlap={best.overlap_cells}"
    )
    assert capsys.readouterr().out.strip() == expected


def test_synth_matches_library(tmp_path, scene_file, small_scene):
    out = tmp_path / "ref.map"
    argv = ["synth", "--scene", scene_file, "--gammas-true", TRUE, "--noise-db", 1.5,
            "--shift", 1, -1, "--seed", 7, "--out", out]
    assert run(*argv) == 0
    gammas = parse_gamma_list(TRUE)
    ref, truth = synth_reference(SynthSpec(small_scene, gammas, 1.5, (1, -1), 7))
    back = io.read_map(out)
    assert back.provenance == "synthetic"
    assert back.data.tobytes() == ref.data.tobytes()
    assert io.sidecar_path(out).read_text() == io.format_truth(truth)
    sidecar = io.read_keyvalue(io.sidecar_path(out))
    assert sidecar["noise_db"][0] == "1.5"
    assert sidecar["shift"][0] == "1, -1"


def test_synth_calibrate_pipeline(tmp_path, scene_file, small_scene):
    ref = tmp_path / "ref.map"
    run("synth", "--scene", scene_file, "--gammas-true", "optimized", "--out", ref)
    report, trace = tmp_path / "report.txt", tmp_path / "trace.csv"
    argv = ["calibrate", "--scene", scene_file, "--reference", ref, "--restarts", 2,
            "--max-evals", 3000, "--seed", 3, "--trace", trace, "--out", report]
    assert run(*argv) == 0

    cfg = CalibrationConfig(restarts=2, max_objective_evals=3000, rng_seed=3)
    result = calibrate(small_scene, magnitude(io.read_map(ref)), cfg)
    assert report.read_text() == io.format_report(result)

    entries = io.read_keyvalue(report)
    assert float(entries["rho"][0]) == result.rho_achieved > 0.99
    assert int(entries["restarts"][0]) == 2
    assert entries["warning"][0] == "none"
    # magnitude@degrees text costs at most an ulp or so per component
    np.testing.assert_allclose(io.read_gammas(report).gamma, result.gammas.gamma, rtol=1e-15, atol=1e-20)

    with open(trace, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["restart", "eval", "rho"]
    assert {r[0] for r in rows[1:]} == {"0", "1"}
    assert len(rows) - 1 == result.evals_used


def test_calibrate_report_is_reproducible(tmp_path, scene_file):
    ref = tmp_path / "ref.map"
    run("synth", "--scene", scene_file, "--gammas-true", TRUE, "--noise-db", 2, "--seed", 5, "--out", ref)
    texts = []
    for k in range(2):
        out = tmp_path / f"r{k}.txt"
        assert run("calibrate", "--scene", scene_file, "--reference", ref, "--restarts", 2,
                   "--max-evals", 1500, "--out", out) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]


def test_freq_average_matches_library(tmp_path):
    scene = bundled_scene(11, 6, (2.40e9, 2.45e9))
    io.write_scene(scene, tmp_path / "s.cfg", BUNDLED_OPTIMIZED)
    run("simulate", "--scene", tmp_path / "s.cfg", "--out", tmp_path / "m.map")
    inputs = [tmp_path / "m_00.map", tmp_path / "m_01.map"]
    maps = [io.read_map(p) for p in inputs]
    for coherent in (False, True):
        out = tmp_path / f"avg{coherent}.map"
        extra = ["--coherent"] if coherent else []
        assert run("freq-average", "--in", *inputs, *extra, "--out", out) == 0
        np.testing.assert_array_equal(io.read_map(out).data, freq_average(maps, coherent).data)


def test_freq_average_needs_complex(tmp_path, scene_file):
    sim = tmp_path / "sim.map"
    run("simulate", "--scene", scene_file, "--out", sim)
    run("attenuate", "--fp", sim, "--tar", sim, "--out", tmp_path / "a.map")
    assert run("freq-average", "--in", sim, tmp_path / "a.map", "--out", tmp_path / "x.map") == 2


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["simulate", "--out", "x.map"],
        ["correlate", "--a", "a.map"],
        ["calibrate", "--scene", "bundled", "--reference", "r.map", "--out", "r", "--restarts", "two"],
        ["synth", "--scene", "bundled", "--gammas-true", "zero", "--out", "x", "--shift", "1"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "rssmap" in capsys.readouterr().err


def test_data_errors_exit_2(tmp_path, scene_file, capsys):
    assert run("correlate", "--a", tmp_path / "missing.map", "--b", tmp_path / "missing.map") == 2
    bad = tmp_path / "bad.map"
    bad.write_text("format_version = 9\ndata\n")
    assert run("attenuate", "--fp", bad, "--tar", bad, "--out", tmp_path / "o.map") == 2
    assert "format_version" in capsys.readouterr().err
    bad_scene = tmp_path / "bad.cfg"
    bad_scene.write_text(scene_file.read_text().replace("room.size_x", "room.sizex"))
    assert run("simulate", "--scene", bad_scene, "--out", tmp_path / "o.map") == 2
    assert run("simulate", "--scene", scene_file, "--gammas", "1.5@0,0,0,0,0,0", "--out", tmp_path / "o.map") == 2
    ref = tmp_path / "ref.map"
    run("simulate", "--scene", scene_file, "--out", ref)
    assert run("calibrate", "--scene", scene_file, "--reference", ref, "--restarts", 0, "--out", tmp_path / "r") == 2
    assert run("correlate", "--a", ref, "--b", ref, "--max-shift", 50, 0) == 2


def test_numerical_errors_exit_3(tmp_path, scene_file, capsys):
    flat = tmp_path / "flat.map"
    sim = tmp_path / "sim.map"
    run("simulate", "--scene", scene_file, "--out", sim)
    m = magnitude(io.read_map(sim))
    io.write_map(type(m)(np.ones_like(m.data), m.grid), flat)
    assert run("correlate", "--a", flat, "--b", sim) == 3
    assert "constant map" in capsys.readouterr().err


def test_builtin_scene_names(tmp_path):
    out = tmp_path / "half.map"
    assert run("simulate", "--scene", "bundled-half", "--gammas", "optimized", "--out", out) == 0
    assert io.read_map(out).data.shape == (40, 81)


def test_plot_outputs(tmp_path, scene_file):
    sim = tmp_path / "sim.map"
    assert run("simulate", "--scene", scene_file, "--out", sim, "--plot", "--emit-plot-data") == 0
    assert (tmp_path / "sim.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert len((tmp_path / "sim.dat").read_text().strip().split("\n\n")) == 10
    report = tmp_path / "rep.txt"
    assert run("calibrate", "--scene", scene_file, "--reference", sim, "--restarts", 1,
               "--max-evals", 300, "--out", report, "--plot") == 0
    assert (tmp_path / "rep.png").stat().st_size > 1000
