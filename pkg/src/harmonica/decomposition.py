"""Potential / harmonic decomposition of finite games on the response graph.

The response graph has one node per pure profile; two profiles are joined when
they differ in exactly one player's action. A game induces a flow on its edges
(the deviation payoff differences). Projecting that flow onto gradient flows in
the least-squares sense gives the potential part; what remains has zero net
flow at every node, i.e. it is harmonic.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._validation import check_tol
from .exceptions import SolverError
from .game import DEFAULT_TOL, Game
from .geometry import replicator_divergence_analytic

DENSE_MAX_PROFILES = 2000


def harmonicity_defect(game):
    """Net deviation incentive ``F(a) = sum_i sum_b [u_i(b; a_-i) - u_i(a)]`` at every pure profile."""
    F = np.zeros(game.action_counts)
    for i, u in enumerate(game.payoffs):
        F += u.sum(axis=i, keepdims=True) - game.action_counts[i] * u
    return F


def is_harmonic(game, tol=DEFAULT_TOL):
    return float(np.abs(harmonicity_defect(game)).max()) <= check_tol(tol)


def multilinear_extension(tensor, x):
    """``sum_a x_a tensor(a)`` for a function on pure profiles."""
    t = np.asarray(tensor, dtype=float)
    for j in range(t.ndim - 1, -1, -1):
        t = np.tensordot(t, np.asarray(x[j], dtype=float), axes=([j], [0]))
    return float(t)


def random_interior_profile(action_counts, rng):
    """Draw a point uniformly from the interior of the product of simplices."""
    return [rng.dirichlet(np.ones(n)) for n in action_counts]


def is_incompressible(game, samples=16, tol=DEFAULT_TOL, seed=0):
    """True iff the replicator field of ``game`` is Shahshahani divergence-free.

    The divergence equals half the multilinear extension of the harmonicity
    defect, so the exact certificate is ``max |F| <= tol``. The divergence is
    also evaluated at ``samples`` random interior points as a redundant check.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    tol = check_tol(tol)
    rng = np.random.default_rng(seed)
    sampled = all(
        abs(replicator_divergence_analytic(game, random_interior_profile(game.action_counts, rng)))
        <= tol
        for _ in range(samples)
    )
    return sampled and float(np.abs(harmonicity_defect(game)).max()) <= tol


def potential_violation(game, phi):
    """Largest mismatch between a player's deviation gain and the change in ``phi``."""
    phi = np.asarray(phi, dtype=float)
    return max(float(np.ptp(u - phi, axis=i).max()) for i, u in enumerate(game.payoffs))


def extract_potential(game, tol=DEFAULT_TOL):
    """Recover an exact potential by integrating deviations along coordinate paths.

    The path from ``(0, ..., 0)`` to ``a`` changes player 0's action first, then
    player 1's, and so on, so ``phi(0, ..., 0) = 0``.

    Returns ``(phi, violation)``; ``phi`` is None when ``game`` is not an exact
    potential game within ``tol``.
    """
    tol = check_tol(tol)
    N = game.num_players
    phi = np.zeros(game.action_counts)
    for k, u in enumerate(game.payoffs):
        head = (slice(None),) * k
        tail = (slice(0, 1),) * (N - k - 1)
        after = u[head + (slice(None),) + tail]
        before = u[head + (slice(0, 1),) + tail]
        phi = phi + (after - before)
    violation = potential_violation(game, phi)
    return (phi if violation <= tol else None), violation


def laplacian_matvec(phi, action_counts):
    """Apply the response-graph Laplacian: ``(L phi)(a) = sum_i sum_b [phi(a) - phi(b; a_-i)]``."""
    out = np.zeros_like(phi)
    for i, n in enumerate(action_counts):
        out += n * phi - phi.sum(axis=i, keepdims=True)
    return out


def laplacian_dense(action_counts):
    """Dense response-graph Laplacian in row-major profile order."""
    size = int(np.prod(action_counts))
    L = np.zeros((size, size))
    for i, n in enumerate(action_counts):
        factor = np.ones((1, 1))
        for j, nj in enumerate(action_counts):
            block = n * np.eye(nj) - np.ones((nj, nj)) if j == i else np.eye(nj)
            factor = np.kron(factor, block)
        L += factor
    return L


def conjugate_gradient(matvec, b, precond_diag, tol=1e-12, max_iter=1000, x0=None):
    """Jacobi-preconditioned conjugate gradient for a symmetric positive semi-definite system.

    Stops when ``||b - A x|| <= tol * ||b||``. Returns ``(x, iterations, relative_residual)``.
    Raises :class:`SolverError` if ``max_iter`` is exhausted first.
    """
    b_norm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if b_norm == 0.0:
        return x, 0, 0.0
    r = b - matvec(x)
    z = r / precond_diag
    p = z.copy()
    rz = np.vdot(r, z)
    rel = np.linalg.norm(r) / b_norm
    for it in range(1, max_iter + 1):
        if rel <= tol:
            return x, it - 1, rel
        Ap = matvec(p)
        alpha = rz / np.vdot(p, Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        rel = np.linalg.norm(r) / b_norm
        z = r / precond_diag
        rz_new = np.vdot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if rel <= tol:
        return x, max_iter, rel
    raise SolverError(
        f"conjugate gradient did not converge in {max_iter} iterations (relative residual {rel:.3e})",
        residual=rel,
        iterations=max_iter,
    )


@dataclass
class DecompositionResult:
    """Potential + harmonic split of a game.

    ``potential_game`` gives every player the payoff ``potential_fn``;
    ``harmonic_game`` is the original game minus that.
    """

    potential_fn: np.ndarray
    potential_game: Game
    harmonic_game: Game
    residual_harmonicity: float
    solver_stats: dict = field(default_factory=dict)


def solve_potential(game, solver_tol=1e-12, max_iter=1000, method="auto"):
    """Least-squares potential of ``game``: solves ``L phi = -F`` with ``phi(0, ..., 0) = 0``."""
    shape = game.action_counts
    d = -harmonicity_defect(game)
    # the right-hand side sums to zero exactly in exact arithmetic
    d -= d.mean()
    if method == "auto":
        method = "dense" if game.num_profiles <= DENSE_MAX_PROFILES else "cg"
    if method == "dense":
        L = laplacian_dense(shape)
        # pin phi(0) = 0: drop the first row and column, the rest is SPD
        c = cho_factor(L[1:, 1:])
        phi = np.zeros(game.num_profiles)
        phi[1:] = cho_solve(c, d.ravel()[1:])
        phi = phi.reshape(shape)
        res = laplacian_matvec(phi, shape) - d
        d_norm = np.linalg.norm(d)
        rel = float(np.linalg.norm(res) / d_norm) if d_norm > 0 else 0.0
        stats = {"method": "dense", "iterations": 0, "residual": rel}
    elif method == "cg":
        diag = float(sum(n - 1 for n in shape))
        flat_matvec = lambda v: laplacian_matvec(v.reshape(shape), shape).ravel()  # noqa: E731
        phi, iters, rel = conjugate_gradient(
            flat_matvec, d.ravel(), np.full(game.num_profiles, diag), tol=solver_tol, max_iter=max_iter
        )
        phi = phi.reshape(shape)
        phi = phi - phi.flat[0]
        stats = {"method": "cg", "iterations": int(iters), "residual": float(rel)}
    else:
        raise ValueError(f"unknown method {method!r}")
    return phi, stats


def decompose(game, solver_tol=1e-12, max_iter=1000, method="auto"):
    """Split ``game`` into a potential game and a harmonic game.

    ``method`` is ``"dense"`` (Cholesky), ``"cg"`` (matrix-free conjugate
    gradient) or ``"auto"`` (dense for small games).
    """
    phi, stats = solve_potential(game, solver_tol=solver_tol, max_iter=max_iter, method=method)
    potential_game = Game(np.broadcast_to(phi, game.payoffs.shape))
    harmonic_game = Game(game.payoffs - potential_game.payoffs)
    residual = float(np.abs(harmonicity_defect(harmonic_game)).max())
    return DecompositionResult(phi, potential_game, harmonic_game, residual, stats)


def random_game(shape, seed=None, scale=1.0):
    rng = np.random.default_rng(seed)
    shape = tuple(int(n) for n in shape)
    return Game(rng.uniform(-scale, scale, size=(len(shape),) + shape))


def random_harmonic(shape, seed=None, scale=1.0):
    """Harmonic component of a game with i.i.d. uniform payoffs in ``[-scale, scale]``."""
    return decompose(random_game(shape, seed, scale)).harmonic_game


def random_potential(shape, seed=None, scale=1.0, non_strategic=True):
    """Random exact potential game ``u_i = phi + f_i(a_-i)``.

    With ``non_strategic=False`` the extra terms ``f_i`` are omitted and every
    player's payoff equals ``phi``.
    """
    rng = np.random.default_rng(seed)
    shape = tuple(int(n) for n in shape)
    phi = rng.uniform(-scale, scale, size=shape)
    payoffs = np.empty((len(shape),) + shape)
    for i in range(len(shape)):
        payoffs[i] = phi
        if non_strategic:
            f_shape = shape[:i] + (1,) + shape[i + 1 :]
            payoffs[i] = payoffs[i] + rng.uniform(-scale, scale, size=f_shape)
    return Game(payoffs)


def potential_value(phi, x):
    """Multilinear extension of a potential function at a mixed profile."""
    return multilinear_extension(phi, x)


def divergence_from_defect(game, x):
    """Half the multilinear extension of the harmonicity defect at ``x``."""
    return 0.5 * multilinear_extension(harmonicity_defect(game), x)

