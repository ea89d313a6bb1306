"""Command-line interface: ``harmonica <command> ...``.

Exit codes: 0 success, 1 solver or integrator failure, 2 input error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .decomposition import decompose, extract_potential, is_harmonic, random_game, random_harmonic, random_potential
from .dynamics import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    detect_recurrence,
    distance_to_nearest_vertex,
    integrate,
    write_trajectory_csv,
)
from .exceptions import DimensionError, HarmonicaError, IntegrationError, SolverError
from .experiments import ExperimentConfig, initial_point, run_mixture, sample_divergence, volume_report
from .game import DEFAULT_TOL, dumps_game, game_to_dict, loads_game

EXIT_OK, EXIT_FAILURE, EXIT_INPUT = 0, 1, 2


class InputError(HarmonicaError):
    pass


def read_game(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return loads_game(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except (DimensionError, ValueError) as exc:
        raise InputError(f"{path}: invalid game: {exc}") from exc


def emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def parse_shape(text):
    try:
        shape = tuple(int(s) for s in text.replace("x", ",").split(",") if s.strip())
    except ValueError as exc:
        raise InputError(f"bad shape {text!r}; use e.g. 2,2,2") from exc
    if not shape or any(n < 2 for n in shape):
        raise InputError(f"bad shape {text!r}; every player needs >= 2 actions")
    return shape


def parse_profile(text, game):
    """Parse ``"0.3,0.7;0.5,0.5"`` into per-player blocks."""
    try:
        blocks = [np.array([float(v) for v in part.split(",")]) for part in text.split(";")]
    except ValueError as exc:
        raise InputError(f"bad profile {text!r}") from exc
    if len(blocks) != game.num_players or any(b.size != n for b, n in zip(blocks, game.action_counts)):
        raise InputError(f"profile {text!r} does not match action counts {game.action_counts}")
    if any(np.any(b <= 0) or abs(b.sum() - 1) > 1e-9 for b in blocks):
        raise InputError(f"profile {text!r} must be an interior probability vector per player")
    return [b / b.sum() for b in blocks]


def cmd_decompose(args):
    game = read_game(args.game)
    res = decompose(game, solver_tol=args.solver_tol, max_iter=args.max_iter, method=args.method)
    out = {
        "phi": [float(v) for v in res.potential_fn.ravel()],
        "potential_game": game_to_dict(res.potential_game),
        "harmonic_game": game_to_dict(res.harmonic_game),
        "residuals": {
            "harmonicity": res.residual_harmonicity,
            "solver": res.solver_stats,
        },
        "metadata": {
            "actions": [int(n) for n in game.action_counts],
            "harmonic_within_tol": res.residual_harmonicity <= args.tol,
            "tol": args.tol,
            "version": __version__,
        },
    }
    emit(dump_json(out), args.out)
    return EXIT_OK


def cmd_simulate(args):
    game = read_game(args.game)
    if args.x0:
        x0 = parse_profile(args.x0, game)
    else:
        x0 = initial_point(game.action_counts, args.seed if args.seed is not None else 0)
    rec = integrate(
        game, x0, t_end=args.t_end, n_samples=args.n_samples, rtol=args.rtol, atol=args.atol, method=args.method
    )
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            write_trajectory_csv(rec, fh)
    report = {
        "t_end": float(rec.times[-1]),
        "x0": [float(v) for v in np.concatenate(x0)],
        "final_state": [float(v) for v in rec.states[-1]],
        "final_vertex_distance": distance_to_nearest_vertex(rec.final),
        "energy_drift": float(np.abs(rec.energy - rec.energy[0]).max()),
        "max_abs_divergence": float(np.abs(rec.divergence).max()),
        "regret": [float(r) for r in rec.regret],
        "rtol": args.rtol,
        "atol": args.atol,
    }
    if args.recurrence:
        t_max = args.t_max if args.t_max is not None else args.t_end
        rep = detect_recurrence(game, x0, args.eps, t_max, rtol=args.rtol, atol=args.atol)
        report["recurrence"] = rep.to_dict()
    emit(dump_json(report), args.report)
    return EXIT_OK


def cmd_mixture(args):
    lambdas = [k / args.steps for k in range(args.steps + 1)] if args.lambdas is None else [
        float(v) for v in args.lambdas.split(",")
    ]
    config = ExperimentConfig(
        seed=args.seed if args.seed is not None else 0,
        lambda_grid=lambdas,
        t_end=args.t_end,
        epsilon=args.eps,
        rtol=args.rtol,
        atol=args.atol,
        output_dir=args.out_dir,
    )
    rows = run_mixture(config, workers=args.workers)
    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir, "mixture.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_json({"rows": rows, "seed": config.seed, "t_end": config.t_end, "epsilon": config.epsilon}))
    sys.stdout.write("lambda   verdict        returns  energy_drift  vertex_dist  pure\n")
    for r in rows:
        sys.stdout.write(
            f"{r['lambda']:.4f}   {r['verdict']:<13}  {r['returns']:>7d}  {r['energy_drift']:12.4e}"
            f"  {r['final_vertex_distance']:11.4e}  {r['converged_to_pure']}\n"
        )
    return EXIT_OK


def cmd_generate(args):
    shape = parse_shape(args.shape)
    seed = args.seed if args.seed is not None else 0
    if args.game_class == "harmonic":
        game = random_harmonic(shape, seed, args.scale)
        if not is_harmonic(game, args.tol):
            raise SolverError("generated game failed the harmonicity check")
    elif args.game_class == "potential":
        game = random_potential(shape, seed, args.scale)
        phi, violation = extract_potential(game, args.tol)
        if phi is None:
            raise SolverError(f"generated game is not an exact potential game (violation {violation:.3e})")
    else:
        game = random_game(shape, seed, args.scale)
    emit(dumps_game(game), args.out)
    return EXIT_OK


def cmd_div(args):
    game = read_game(args.game)
    rows = sample_divergence(game, args.points, args.seed if args.seed is not None else 0)
    worst = max(abs(r["analytic"] - r["finite_difference"]) for r in rows)
    emit(dump_json({"samples": rows, "max_abs_difference": worst}), args.out)
    return EXIT_OK


def cmd_volume(args):
    rows = volume_report(args.max_m, args.points)
    emit(dump_json({"volumes": rows}), args.out)
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="absolute tolerance for checks (default %(default)s)")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--rtol", type=float, default=DEFAULT_RTOL, help="integrator relative tolerance (default %(default)s)")
    common.add_argument("--atol", type=float, default=DEFAULT_ATOL, help="integrator absolute tolerance (default %(default)s)")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    parser = argparse.ArgumentParser(prog="harmonica", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="potential + harmonic decomposition of a game")
    p.add_argument("game")
    p.add_argument("--solver-tol", type=float, default=1e-12, help="relative residual target (default %(default)s)")
    p.add_argument("--max-iter", type=int, default=1000, help="conjugate gradient iterations (default %(default)s)")
    p.add_argument("--method", choices=["auto", "dense", "cg"], default="auto")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("simulate", parents=[common], help="integrate exponential-weights dynamics")
    p.add_argument("game")
    p.add_argument("--x0", help='initial profile, e.g. "0.3,0.7;0.5,0.5" (default: random interior point drawn from --seed, 0 if unset)')
    p.add_argument("--t-end", type=float, default=100.0, help="final time (default %(default)s)")
    p.add_argument("--n-samples", type=int, default=1001, help="output samples (default %(default)s)")
    p.add_argument("--method", choices=["scores", "effective"], default="scores")
    p.add_argument("--csv", help="write the trajectory CSV here")
    p.add_argument("--report", help="write the JSON report here (default stdout)")
    p.add_argument("--recurrence", action="store_true", help="also run the recurrence detector")
    p.add_argument("--eps", type=float, default=1e-2, help="recurrence ball radius (default %(default)s)")
    p.add_argument("--t-max", type=float, default=None, help="recurrence horizon (default --t-end)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mixture", parents=[common], help="lambda sweep between the shipped 2x2x2 games")
    p.add_argument("--lambdas", help="comma-separated lambda values (default 0, 1/7, ..., 1)")
    p.add_argument("--steps", type=int, default=7, help="grid steps when --lambdas is absent (default %(default)s)")
    p.add_argument("--t-end", type=float, default=100.0, help="horizon per run (default %(default)s)")
    p.add_argument("--eps", type=float, default=1e-2, help="recurrence ball radius (default %(default)s)")
    p.add_argument("--out-dir", default=".", help="directory for mixture.json (default %(default)s)")
    p.add_argument("--workers", type=int, default=None, help="worker processes (capped by HARMONICA_THREADS)")
    p.set_defaults(func=cmd_mixture)

    p = sub.add_parser("generate", parents=[common], help="random game of a given class")
    p.add_argument("--shape", required=True, help="action counts, e.g. 2,2,2")
    p.add_argument("--class", dest="game_class", choices=["harmonic", "potential", "random"], default="random")
    p.add_argument("--scale", type=float, default=1.0, help="payoff scale (default %(default)s)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("div", parents=[common], help="analytic vs numerical divergence at random points")
    p.add_argument("game")
    p.add_argument("--points", type=int, default=20, help="number of sample points (default %(default)s)")
    p.set_defaults(func=cmd_div)

    p = sub.add_parser("volume", parents=[common], help="closed-form vs quadrature simplex volumes")
    p.add_argument("--max-m", type=int, default=3, help="largest dimension (default %(default)s)")
    p.add_argument("--points", type=int, default=16, help="quadrature nodes per axis (default %(default)s)")
    p.set_defaults(func=cmd_volume)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, DimensionError) as exc:
        print(f"harmonica: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, IntegrationError) as exc:
        print(f"harmonica: failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"harmonica: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
