"""Command-line interface.

Each subcommand wraps one library operation. Exit codes: 0 success, 1 usage
error, 2 data or validation error, 3 numerical failure. Diagnostics go to
stderr; ``correlate`` prints its result to stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .calibrate import CalibrationConfig, calibrate, model_map
from .errors import NumericalError, RssMapError, ValidationError
from .forward import (
    BUNDLED_INITIAL_GAMMA,
    BUNDLED_OPTIMIZED,
    ComplexMap,
    ReflectionSet,
    parse_gamma_list,
    total_field_map,
)
from .mapops import as_magnitude, attenuation_map, freq_average
from .scene import BUNDLED_BAND, bundled_scene
from .similarity import ShiftSearch, pearson, pearson_max_shift
from .synth import SynthSpec, synth_reference

log = logging.getLogger("rssmap")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

BUILTIN_SCENES = {
    "bundled": lambda: bundled_scene(),
    "bundled-band": lambda: bundled_scene(frequencies=BUNDLED_BAND),
    "bundled-half": lambda: bundled_scene(81, 40),
}
BUILTIN_GAMMAS = {
    "initial": lambda: ReflectionSet.uniform(BUNDLED_INITIAL_GAMMA),
    "optimized": lambda: BUNDLED_OPTIMIZED,
    "zero": ReflectionSet.zeros,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def load_scene(arg):
    """Scene and its optional ``gamma.*`` set from a file or a builtin name."""
    if arg in BUILTIN_SCENES:
        return BUILTIN_SCENES[arg](), None
    return io.read_scene(arg)


def load_gammas(arg, fallback=None) -> ReflectionSet:
    if arg is None:
        if fallback is None:
            raise ValidationError("no reflection coefficients: pass --gammas or add gamma.* to the scene")
        return fallback
    if arg in BUILTIN_GAMMAS:
        return BUILTIN_GAMMAS[arg]()
    if Path(arg).exists() or "@" not in arg:
        return io.read_gammas(arg)
    return parse_gamma_list(arg)


def _side_outputs(args, m, out, title):
    if getattr(args, "emit_plot_data", False):
        io.write_plot_data(m, Path(out).with_suffix(".dat"))
    if getattr(args, "plot", False):
        from .plots import plot_map

        plot_map(m, Path(out).with_suffix(".png"), title)


def cmd_simulate(args):
    scene, scene_gammas = load_scene(args.scene)
    gammas = load_gammas(args.gammas, scene_gammas)
    freqs = [args.freq] if args.freq is not None else list(scene.freqs)
    out = Path(args.out)
    for idx, f in enumerate(freqs):
        path = out if len(freqs) == 1 else out.with_name(f"{out.stem}_{idx:02d}{out.suffix}")
        m = total_field_map(scene, gammas, f)
        io.write_map(m, path)
        _side_outputs(args, m, path, f"|E_z| at {f / 1e9:.4g} GHz")
        print(path)
    return EXIT_OK


def cmd_attenuate(args):
    fp = as_magnitude(io.read_map(args.fp))
    tar = as_magnitude(io.read_map(args.tar))
    m = attenuation_map(fp, tar, floor=args.floor)
    io.write_map(m, args.out)
    n_flag = int((m.flags != 0).sum())
    if n_flag:
        log.warning("%d cells were floored or clamped", n_flag)
    _side_outputs(args, m, args.out, "attenuation")
    return EXIT_OK


def cmd_correlate(args):
    a = as_magnitude(io.read_map(args.a))
    b = as_magnitude(io.read_map(args.b))
    rho = pearson(a, b)
    search = ShiftSearch(args.max_shift[0], args.max_shift[1], args.min_overlap)
    best = pearson_max_shift(a, b, search)
    print(
        f"rho={rho:.9f} rho_max={best.rho:.9f} "
        f"shift={best.best_shift[0]},{best.best_shift[1]} overlap={best.overlap_cells}"
    )
    return EXIT_OK


def cmd_calibrate(args):
    scene, _ = load_scene(args.scene)
    reference = as_magnitude(io.read_map(args.reference))
    cfg = CalibrationConfig(
        init_magnitude=args.init_mag,
        init_phase_deg=args.init_phase,
        restarts=args.restarts,
        max_objective_evals=args.max_evals,
        convergence_tol=args.tol,
        use_shift_max=args.shift_max,
        rng_seed=args.seed,
        average_frequencies=args.avg_freqs,
        shift_search=ShiftSearch(args.max_shift[0], args.max_shift[1], args.min_overlap),
    )
    result = calibrate(scene, reference, cfg, frequency=args.freq, record_trace=args.trace is not None)
    io.write_report(result, args.out)
    if args.trace:
        io.write_trace(result.trace, args.trace)
    if args.plot:
        from .plots import plot_calibration

        initial = ReflectionSet.from_polar([cfg.init_magnitude] * 6, [cfg.init_phase_deg] * 6)
        plot_calibration(
            reference,
            model_map(scene, initial, result.frequencies),
            model_map(scene, result.gammas, result.frequencies),
            result,
            Path(args.out).with_suffix(".png"),
        )
    if result.warning:
        log.warning(result.warning)
    log.info("rho = %.9f (restart %d)", result.rho_achieved, result.restart_index_of_best)
    return EXIT_OK


def cmd_synth(args):
    scene, _ = load_scene(args.scene)
    spec = SynthSpec(
        scene=scene,
        gammas_true=load_gammas(args.gammas_true),
        noise_sigma_db=args.noise_db,
        pixel_shift=tuple(args.shift),
        rng_seed=args.seed,
        frequency=args.freq,
        average_frequencies=args.avg_freqs,
    )
    ref, truth = synth_reference(spec)
    io.write_map(ref, args.out)
    io.write_truth(truth, io.sidecar_path(args.out))
    _side_outputs(args, ref, args.out, "synthetic reference")
    return EXIT_OK


def cmd_freq_average(args):
    maps = [io.read_map(p) for p in args.inputs]
    for p, m in zip(args.inputs, maps):
        if not isinstance(m, ComplexMap):
            raise ValidationError(f"{p}: freq-average needs complex maps")
    m = freq_average(maps, coherent=args.coherent)
    io.write_map(m, args.out)
    _side_outputs(args, m, args.out, f"average of {len(maps)} frequencies")
    return EXIT_OK


def _shift_args(p, default=5):
    p.add_argument("--max-shift", nargs=2, type=int, default=(default, default), metavar=("U", "V"),
                   help="shift search radius in pixels (default: %(default)s)")
    p.add_argument("--min-overlap", type=float, default=0.5,
                   help="minimum overlap fraction for a shift (default: %(default)s)")


def _plot_args(p, data=True):
    p.add_argument("--plot", action="store_true", help="also render a PNG next to the output")
    if data:
        p.add_argument("--emit-plot-data", action="store_true",
                       help="also write gnuplot 'u v value' triplets next to the output")


def build_parser():
    parser = _Parser(
        prog="rssmap",
        description="Simulate indoor field maps, compare them and fit wall reflection coefficients.",
        epilog="exit codes: 0 success, 1 usage error, 2 data or validation error, 3 numerical failure",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="forward image-source field map(s)")
    p.add_argument("--scene", required=True, help="scene file or builtin: " + ", ".join(BUILTIN_SCENES))
    p.add_argument("--gammas", help="gamma file, inline 'm@deg,...' list or builtin: " + ", ".join(BUILTIN_GAMMAS))
    p.add_argument("--freq", type=float, help="frequency in Hz (default: every scene frequency)")
    p.add_argument("--out", required=True)
    _plot_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("attenuate", help="attenuation map 20*log10(|fp|/|tar|)")
    p.add_argument("--fp", required=True, help="target-free map")
    p.add_argument("--tar", required=True, help="target-present map")
    p.add_argument("--floor", type=float, default=1e-12, help="noise floor (linear)")
    p.add_argument("--out", required=True)
    _plot_args(p)
    p.set_defaults(func=cmd_attenuate)

    p = sub.add_parser("correlate", help="Pearson correlation and its maximum over shifts")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    _shift_args(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("calibrate", help="fit wall reflection coefficients to a reference map")
    p.add_argument("--scene", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--avg-freqs", action="store_true", help="average the model over every scene frequency")
    p.add_argument("--freq", type=float, help="working frequency in Hz")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-evals", type=int, default=20000, help="objective budget per restart")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--init-mag", type=float, default=0.2)
    p.add_argument("--init-phase", type=float, default=0.0)
    p.add_argument("--shift-max", action="store_true", help="maximize the shift-searched correlation")
    _shift_args(p)
    p.add_argument("--trace", help="CSV file receiving (restart, eval, rho) rows")
    p.add_argument("--out", required=True, help="report file")
    _plot_args(p, data=False)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("synth", help="synthetic reference map from known coefficients")
    p.add_argument("--scene", required=True)
    p.add_argument("--gammas-true", required=True)
    p.add_argument("--noise-db", type=float, default=0.0)
    p.add_argument("--shift", nargs=2, type=int, default=(0, 0), metavar=("U", "V"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--freq", type=float)
    p.add_argument("--avg-freqs", action="store_true")
    p.add_argument("--out", required=True)
    _plot_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("freq-average", help="mean magnitude over frequency maps")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--coherent", action="store_true", help="average complex values before the modulus")
    p.add_argument("--out", required=True)
    _plot_args(p)
    p.set_defaults(func=cmd_freq_average)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RssMapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
