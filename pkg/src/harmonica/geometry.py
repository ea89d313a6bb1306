"""Shahshahani geometry on products of simplices.

Effective coordinates of one player are ``x~ = (x_1, ..., x_m)`` with
``x_0 = 1 - sum(x~)``. The metric there is ``G~_{lk} = delta_{lk}/x~_l + 1/x_0``.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import roots_jacobi

from ._validation import check_eff_block, check_eff_profile, check_mixed_profile
from .exceptions import BoundaryError, DimensionError
from .game import embed, payoff_field


def metric_eff(xt_i):
    """Shahshahani metric of one player in effective coordinates."""
    xt_i = check_eff_block(xt_i)
    x0 = 1.0 - xt_i.sum()
    return np.diag(1.0 / xt_i) + 1.0 / x0


def metric_eff_inverse(xt_i):
    """Inverse metric ``diag(x~) - x~ x~^T`` (Sherman-Morrison)."""
    xt_i = check_eff_block(xt_i)
    return np.diag(xt_i) - np.outer(xt_i, xt_i)


def metric_eff_det(xt_i):
    """Closed-form determinant ``1 / (x_0 prod x~)``."""
    xt_i = check_eff_block(xt_i)
    return 1.0 / ((1.0 - xt_i.sum()) * np.prod(xt_i))


def shah_inner(x_i, z, w):
    """Shahshahani inner product of tangent vectors at a full-coordinate point."""
    x_i = np.asarray(x_i, dtype=float)
    return float(np.sum(np.asarray(z) * np.asarray(w) / x_i))


def _fd_partials(f, x, i, h=1e-6):
    xi = x[i]
    grad = np.empty_like(xi)
    for a in range(xi.size):
        step = min(h, 0.5 * xi[a]) if xi[a] > 0 else h
        xp = [b.copy() for b in x]
        xm = [b.copy() for b in x]
        xp[i][a] += step
        xm[i][a] -= step
        grad[a] = (f(xp) - f(xm)) / (2 * step)
    return grad


def shah_gradient(f, x, i, partials=None):
    """Shahshahani gradient of a scalar function with respect to player ``i``'s block.

    ``f`` maps a list of blocks to a float and must be defined on a
    neighbourhood of the simplex (e.g. a multilinear extension).
    ``partials(x)`` may return the Euclidean partial derivatives of ``f``
    with respect to ``x[i]``; otherwise central differences are used.

    Returns ``x_a (d_a f - sum_b x_b d_b f)``, a tangent vector (sums to 0).
    """
    x = [np.asarray(b, dtype=float) for b in x]
    if not 0 <= i < len(x):
        raise DimensionError(f"player index {i} out of range")
    xi = x[i]
    if np.any(xi <= 0.0):
        raise BoundaryError(f"block {i} is not interior: {xi}")
    d = np.asarray(partials(x), dtype=float) if partials is not None else _fd_partials(f, x, i)
    return xi * (d - np.dot(xi, d))


@dataclass(frozen=True)
class EffVectorField:
    """Vector field on the product of open corners of cube.

    ``field(xt)`` returns a list of per-player blocks. ``jacobian(xt)``, when
    given, returns the nested block Jacobian ``J[i][j] = d F_i / d x~_j``.
    """

    field: Callable
    jacobian: Optional[Callable] = None

    def __call__(self, xt):
        return self.field(xt)


def _log_sqrt_det_grad(xt_i):
    # d/dx~_l of log sqrt(det G~) = (1/x_0 - 1/x~_l) / 2
    x0 = 1.0 - xt_i.sum()
    return 0.5 * (1.0 / x0 - 1.0 / xt_i)


def fd_step(xt_i):
    """Central-difference step for one effective block, scaled to the boundary distance."""
    x0 = 1.0 - xt_i.sum()
    return float(np.clip(1e-6 * min(xt_i.min(), x0), 1e-9, 1e-6))


def shah_divergence(F, xt, jacobian_mode="analytic"):
    """Shahshahani divergence of an effective vector field.

    The divergence of a product manifold splits per player, so each term is
    ``sum_l d_l F_l + sum_l F_l d_l log sqrt(det G~)`` for one player's block.

    ``jacobian_mode`` is ``"analytic"`` (requires ``F.jacobian``) or
    ``"finite-difference"``.
    """
    xt = [check_eff_block(b) for b in xt]
    values = [np.asarray(b, dtype=float) for b in F(xt)]
    if any(not np.all(np.isfinite(v)) for v in values):
        raise ValueError("vector field returned non-finite values")
    if jacobian_mode == "analytic":
        if getattr(F, "jacobian", None) is None:
            raise ValueError("analytic mode requires a field with a jacobian")
        jac = F.jacobian(xt)
        diag = [np.trace(np.asarray(jac[i][i])) for i in range(len(xt))]
    elif jacobian_mode == "finite-difference":
        diag = []
        for i, b in enumerate(xt):
            h = fd_step(b)
            total = 0.0
            for l in range(b.size):
                xp = [c.copy() for c in xt]
                xm = [c.copy() for c in xt]
                xp[i][l] += h
                xm[i][l] -= h
                total += (np.asarray(F(xp)[i])[l] - np.asarray(F(xm)[i])[l]) / (2 * h)
            diag.append(total)
    else:
        raise ValueError(f"unknown jacobian_mode {jacobian_mode!r}")
    div = 0.0
    for b, v, d in zip(xt, values, diag):
        div += d + float(np.dot(v, _log_sqrt_det_grad(b)))
    return float(div)


def replicator_divergence_analytic(game, x, check_tol=1e-10):
    """Closed-form Shahshahani divergence of the replicator field at ``x``.

    Two expressions are evaluated: ``1/2 sum_i sum_a (v_ia - u_i)`` and the
    barycentric form ``-1/2 sum_i n_i v_i . (x_i - b_i)``. They must agree.
    """
    x = check_mixed_profile(game, x, interior=True)
    return _divergence_forms(game, x, check_tol)


def _divergence_forms(game, x, check_tol=1e-10):
    # polynomial in x, so also meaningful on the boundary
    v = payoff_field(game, x)
    direct = 0.0
    bary = 0.0
    scale = 1.0
    for vi, xi in zip(v, x):
        n = vi.size
        ui = float(np.dot(vi, xi))
        direct += 0.5 * float(np.sum(vi - ui))
        bary -= 0.5 * n * float(np.dot(vi, xi - 1.0 / n))
        scale = max(scale, float(np.abs(vi).max()) * n)
    if abs(direct - bary) > check_tol * scale:
        raise ArithmeticError(f"divergence forms disagree: {direct} vs {bary}")
    return direct


def replicator_divergence_eff(game, xt):
    """Same as :func:`replicator_divergence_analytic`, taking effective coordinates."""
    xt = check_eff_profile(game, xt)
    return replicator_divergence_analytic(game, embed(xt))


def simplex_volume_shah(m):
    """Shahshahani volume of the open m-simplex: ``pi^((m+1)/2) / Gamma((m+1)/2)``."""
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    m = int(m)
    k = m // 2
    if m % 2:
        # Gamma(k + 1) = k!
        return math.pi ** (k + 1) / math.factorial(k)
    # Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!)
    return math.pi**k * (4**k * math.factorial(k)) / math.factorial(2 * k)


def _stick_breaking_volume(m, n):
    """Gauss-Jacobi quadrature of sqrt(det G~) over the corner of cube.

    Stick-breaking ``x~_k = u_k prod_{j<k}(1-u_j)`` maps the unit cube onto the
    corner; the integrand then factors as ``prod_j u_j^{-1/2} (1-u_j)^{(m-j-1)/2}``
    and the Jacobi weight of each axis absorbs exactly that factor.
    """
    nodes, weights = [], []
    for j in range(1, m + 1):
        alpha = (m - j - 1) / 2.0  # exponent on (1 - u)
        t, w = roots_jacobi(n, alpha, -0.5)
        nodes.append((t + 1.0) / 2.0)
        # dt = 2 du, (1 - t) = 2 (1 - u), (1 + t) = 2 u
        weights.append(w / 2.0 ** (alpha - 0.5 + 1.0))
    grids = np.meshgrid(*nodes, indexing="ij")
    W = np.ones_like(grids[0])
    for k, w in enumerate(weights):
        shape = [1] * m
        shape[k] = -1
        W = W * w.reshape(shape)
    u = [g.ravel() for g in grids]
    W = W.ravel()
    xt = []
    rest = np.ones_like(u[0])
    jac = np.ones_like(u[0])
    for k in range(m):
        xt.append(u[k] * rest)
        jac = jac * rest
        rest = rest * (1.0 - u[k])
    sqrt_det = 1.0 / np.sqrt(rest * np.prod(np.vstack(xt), axis=0))
    weight = np.ones_like(u[0])
    for j in range(1, m + 1):
        weight = weight * u[j - 1] ** -0.5 * (1.0 - u[j - 1]) ** ((m - j - 1) / 2.0)
    return float(np.sum(W * sqrt_det * jac / weight))


@dataclass
class QuadratureResult:
    value: float
    error_estimate: float
    points: int
    converged: bool


def simplex_volume_numeric(m, quadrature_points=16, tol=1e-10):
    """Numerical Shahshahani volume of the open m-simplex by Gauss-Jacobi quadrature.

    The rule with ``quadrature_points`` nodes per axis is compared against one
    with twice as many; ``converged`` is False if they differ by more than ``tol``.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    if quadrature_points < 1:
        raise ValueError("quadrature_points must be positive")
    coarse = _stick_breaking_volume(int(m), int(quadrature_points))
    fine = _stick_breaking_volume(int(m), 2 * int(quadrature_points))
    err = abs(fine - coarse)
    return QuadratureResult(fine, err, 2 * int(quadrature_points), err <= tol)


def simplex_volume_truncated(m, eps):
    """Shahshahani volume of the shrunken region ``{x~ >= eps, x_0 >= eps}`` (m = 1 or 2).

    Uses adaptive quadrature; always below the full volume.
    """
    from scipy.integrate import dblquad, quad

    if m == 1:
        val, _ = quad(lambda s: 1.0 / np.sqrt(s * (1.0 - s)), eps, 1.0 - eps, limit=200)
        return float(val)
    if m == 2:
        if 3 * eps >= 1:
            return 0.0
        val, _ = dblquad(
            lambda y, x: 1.0 / np.sqrt(x * y * (1.0 - x - y)),
            eps,
            1.0 - 2 * eps,
            lambda x: eps,
            lambda x: 1.0 - eps - x,
        )
        return float(val)
    raise ValueError("truncated volume is implemented for m = 1 and m = 2 only")
