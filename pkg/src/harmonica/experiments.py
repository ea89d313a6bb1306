"""Desk-scale experiments behind the command-line tools."""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decomposition import random_interior_profile
from .dynamics import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    detect_recurrence,
    distance_to_nearest_vertex,
    integrate,
    replicator_vector_field,
)
from .fixtures import mixture
from .game import reduce
from .geometry import (
    replicator_divergence_analytic,
    shah_divergence,
    simplex_volume_numeric,
    simplex_volume_shah,
)

PURE_TOL = 1e-3


def worker_count(requested=None):
    cap = os.environ.get("HARMONICA_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


@dataclass
class ExperimentConfig:
    seed: int = 0
    shape: tuple = (2, 2, 2)
    lambda_grid: list = field(default_factory=lambda: [k / 7 for k in range(8)])
    t_end: float = 100.0
    epsilon: float = 1e-2
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    output_dir: str = "."

    def __post_init__(self):
        if any(not 0.0 <= lam <= 1.0 for lam in self.lambda_grid):
            raise ValueError("lambda values must lie in [0, 1]")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if tuple(self.shape) != (2, 2, 2):
            raise ValueError("the mixture experiment uses the shipped 2x2x2 tables")


def initial_point(shape, seed):
    return random_interior_profile(shape, np.random.default_rng(seed))


def mixture_row(lam, config):
    game = mixture(lam)
    x0 = initial_point(config.shape, config.seed)
    rec = integrate(game, x0, t_end=config.t_end, n_samples=2001, rtol=config.rtol, atol=config.atol)
    rep = detect_recurrence(game, x0, config.epsilon, config.t_end, rtol=config.rtol, atol=config.atol)
    dist = distance_to_nearest_vertex(rec.final)
    return {
        "lambda": float(lam),
        "verdict": rep.verdict,
        "recurrent": rep.verdict == "recurrent",
        "returns": len(rep.return_times),
        "energy_drift": float(np.abs(rec.energy - rec.energy[0]).max()),
        "final_vertex_distance": dist,
        "converged_to_pure": dist < PURE_TOL,
        "max_regret": float(rec.regret.max()),
    }


def _row_star(args):
    return mixture_row(*args)


def run_mixture(config, workers=1):
    """One summary row per lambda in ``config.lambda_grid``."""
    jobs = [(lam, config) for lam in config.lambda_grid]
    workers = worker_count(workers)
    if workers == 1 or len(jobs) == 1:
        return [mixture_row(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_row_star, jobs))


def sample_divergence(game, n_points=20, seed=0):
    """Analytic vs finite-difference Shahshahani divergence at random interior points."""
    rng = np.random.default_rng(seed)
    F = replicator_vector_field(game)
    rows = []
    for _ in range(n_points):
        x = random_interior_profile(game.action_counts, rng)
        analytic = replicator_divergence_analytic(game, x)
        numeric = shah_divergence(F, reduce(x), jacobian_mode="finite-difference")
        rows.append({"x": [float(v) for v in np.concatenate(x)], "analytic": analytic, "finite_difference": numeric})
    return rows


def volume_report(max_m=3, quadrature_points=16):
    rows = []
    for m in range(1, max_m + 1):
        exact = simplex_volume_shah(m)
        q = simplex_volume_numeric(m, quadrature_points)
        rows.append({
            "m": m,
            "closed_form": exact,
            "quadrature": q.value,
            "abs_error": abs(q.value - exact),
            "converged": q.converged,
        })
    return rows
