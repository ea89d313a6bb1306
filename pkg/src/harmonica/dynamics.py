"""Exponential-weights / replicator dynamics and their diagnostics.

The default integrator works in score space: ``dy_i/dt = v_i(logit(y))``,
up to a per-player shift that the logit map ignores.
Mixed strategies are recovered through the logit map, so trajectories can
never leave the interior of the strategy space. An alternative stepper
integrates the replicator field directly in effective coordinates.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from ._validation import check_eff_profile, check_mixed_profile, check_player
from .exceptions import BoundaryError, IntegrationError
from .game import _contract, eff_payoff_field, eff_payoff_jacobian, embed, payoff_field, reduce
from .geometry import EffVectorField, _divergence_forms, metric_eff_det, replicator_divergence_analytic

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


def _split(vec, sizes):
    return np.split(np.asarray(vec, dtype=float), np.cumsum(sizes)[:-1])


def logit(y):
    """Logit choice map, one softmax per player block."""
    out = []
    for b in y:
        b = np.asarray(b, dtype=float)
        if not np.all(np.isfinite(b)):
            raise ValueError("scores must be finite")
        e = np.exp(b - b.max())
        out.append(e / e.sum())
    return out


def replicator_field(game, x):
    """Replicator field ``x_a (v_a - <x, v>)`` per player; boundary points allowed."""
    x = check_mixed_profile(game, x)
    v = payoff_field(game, x)
    return [xi * (vi - np.dot(xi, vi)) for xi, vi in zip(x, v)]


def eff_replicator_field(game, xt):
    """Replicator field in effective coordinates: ``x~_l (v~_l - <x~, v~>)``."""
    xt = check_eff_profile(game, xt)
    vt = eff_payoff_field(game, xt)
    return [b * (w - np.dot(b, w)) for b, w in zip(xt, vt)]


def eff_replicator_jacobian(game, xt):
    """Nested block Jacobian ``J[i][j] = d xi~_i / d x~_j`` of the effective replicator field."""
    xt = check_eff_profile(game, xt)
    vt = eff_payoff_field(game, xt)
    dv = eff_payoff_jacobian(game, xt)
    N = game.num_players
    J = [[None] * N for _ in range(N)]
    for i in range(N):
        b, w = xt[i], vt[i]
        ginv = np.diag(b) - np.outer(b, b)
        for j in range(N):
            if i == j:
                J[i][j] = np.diag(w - np.dot(b, w)) - np.outer(b, w)
            else:
                J[i][j] = ginv @ dv[i][j]
    return J


def replicator_vector_field(game):
    """The effective replicator field of ``game`` as an :class:`EffVectorField`."""
    return EffVectorField(
        lambda xt: eff_replicator_field(game, xt),
        lambda xt: eff_replicator_jacobian(game, xt),
    )


def constant_of_motion(game, x):
    """``E(x) = sum_i n_i KL(b_i || x_i)``, conserved by the dynamics of harmonic games."""
    x = check_mixed_profile(game, x, interior=True)
    return float(sum(-np.log(xi).sum() - xi.size * np.log(xi.size) for xi in x))


def _energy_from_scores(y_blocks):
    # log x_a = y_a - logsumexp(y), which stays accurate near the boundary
    total = 0.0
    for y in y_blocks:
        n = y.size
        total += -(y - logsumexp(y)).sum() - n * np.log(n)
    return total


@dataclass
class TrajectoryRecord:
    """Sampled trajectory of the dynamics plus per-sample diagnostics.

    ``states`` has one row per sample time holding the concatenated mixed
    profile. ``cumulative_field`` holds ``int_0^t v(x(s)) ds`` and
    ``cumulative_payoff`` holds ``int_0^t u_i(x(s)) ds``; together they give
    the regret at every sample time.
    """

    action_counts: tuple
    times: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    divergence: np.ndarray
    cumulative_field: np.ndarray
    cumulative_payoff: np.ndarray
    regret: np.ndarray
    scores: Optional[np.ndarray] = None
    logvol: Optional[np.ndarray] = None
    method: str = "scores"

    def profile(self, k):
        return _split(self.states[k], self.action_counts)

    @property
    def final(self):
        return self.profile(-1)

    def __len__(self):
        return self.times.size


def _time_grid(t_end, n_samples, t_eval):
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.ndim != 1 or t_eval.size < 1 or np.any(np.diff(t_eval) <= 0):
            raise ValueError("t_eval must be strictly increasing")
        return t_eval
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    return np.linspace(0.0, t_end, int(n_samples))


def _check_solution(sol):
    if not sol.success:
        raise IntegrationError(f"integration failed: {sol.message}")
    if not np.all(np.isfinite(sol.y)):
        raise IntegrationError("integration produced non-finite values")


def _field_unchecked(game, x):
    return [_contract(game.payoffs[i], x, skip=(i,)) for i in range(game.num_players)]


def _softmax(y):
    e = np.exp(y - y.max())
    return e / e.sum()


def _score_rhs(game):
    sizes = game.action_counts
    n_total = sum(sizes)

    # scores advance by v_i - u_i(x); logit ignores the per-player shift, and the
    # centred scores stay equal to log x + const, so they do not grow with t
    def rhs(t, state):
        x = [_softmax(b) for b in _split(state[:n_total], sizes)]
        v = _field_unchecked(game, x)
        u = [np.dot(vi, xi) for vi, xi in zip(v, x)]
        return np.concatenate([vi - ui for vi, ui in zip(v, u)] + [u])

    return rhs


def _effective_rhs(game):
    sizes = game.eff_dims
    d = sum(sizes)

    def rhs(t, state):
        xt = _split(state[:d], sizes)
        x = [np.concatenate(([1.0 - b.sum()], b)) for b in xt]
        v = _field_unchecked(game, x)
        vt = [vi[1:] - vi[0] for vi in v]
        xi = [b * (w - np.dot(b, w)) for b, w in zip(xt, vt)]
        u = [np.dot(vi, xi_) for vi, xi_ in zip(v, x)]
        return np.concatenate(xi + v + [u])

    return rhs


def integrate(
    game,
    x0,
    t_end=None,
    n_samples=1001,
    t_eval=None,
    rtol=DEFAULT_RTOL,
    atol=DEFAULT_ATOL,
    method="scores",
    solver="RK45",
    scores0=None,
):
    """Integrate the learning dynamics from ``x0`` and sample diagnostics.

    ``method="scores"`` integrates payoff scores and maps them through the
    logit map (initial scores ``log x0`` unless ``scores0`` is given). Each
    player's scores are shifted by the running mean payoff ``int u_i dt``,
    which leaves ``logit(y)`` unchanged but keeps the scores bounded; the
    cumulative payoff field is recovered as ``y - y0 + int u_i dt``. ``method="effective"`` integrates the replicator field in
    effective coordinates. ``solver`` is passed to :func:`scipy.integrate.solve_ivp`;
    the default ``"RK45"`` is the Dormand-Prince 5(4) pair.
    """
    grid = _time_grid(t_end, n_samples, t_eval)
    sizes = game.action_counts
    N = game.num_players
    n_total = sum(sizes)
    t_span = (0.0, float(grid[-1]))
    if method == "scores":
        if scores0 is None:
            x0 = check_mixed_profile(game, x0, interior=True)
            y0 = [np.log(b) for b in x0]
        else:
            y0 = [np.asarray(b, dtype=float) for b in _split(np.concatenate(scores0), sizes)]
        state0 = np.concatenate(y0 + [np.zeros(N)])
        sol = solve_ivp(_score_rhs(game), t_span, state0, method=solver, t_eval=grid, rtol=rtol, atol=atol)
        _check_solution(sol)
        Y = sol.y[:n_total].T
        states = np.vstack([np.concatenate(logit(_split(row, sizes))) for row in Y])
        cum_pay = sol.y[n_total:].T
        cum_field = Y - Y[0] + np.repeat(cum_pay, sizes, axis=1)
        energy = np.array([_energy_from_scores(_split(row, sizes)) for row in Y])
        scores = Y
    elif method == "effective":
        if scores0 is not None:
            raise ValueError("scores0 only applies to method='scores'")
        x0 = check_mixed_profile(game, x0, interior=True)
        xt0 = reduce(x0)
        d = sum(game.eff_dims)
        state0 = np.concatenate(xt0 + [np.zeros(n_total + N)])
        sol = solve_ivp(_effective_rhs(game), t_span, state0, method=solver, t_eval=grid, rtol=rtol, atol=atol)
        _check_solution(sol)
        states = np.vstack([np.concatenate(embed(_split(row, game.eff_dims))) for row in sol.y[:d].T])
        cum_field = sol.y[d : d + n_total].T
        cum_pay = sol.y[d + n_total :].T
        energy = np.array([constant_of_motion(game, _split(row, sizes)) for row in states])
        scores = None
    else:
        raise ValueError(f"unknown method {method!r}")
    divergence = np.array([_divergence_forms(game, _split(row, sizes)) for row in states])
    record = TrajectoryRecord(
        action_counts=tuple(sizes),
        times=sol.t,
        states=states,
        energy=energy,
        divergence=divergence,
        cumulative_field=cum_field,
        cumulative_payoff=cum_pay,
        regret=np.zeros(N),
        scores=scores,
        method=method,
    )
    record.regret = np.array([regret(record, game, i) for i in range(N)])
    return record


def regret_series(record, game, i):
    """Regret of player ``i`` at every sample time of ``record``.

    Uses the integrated cumulative payoffs when present; otherwise falls back
    to the trapezoid rule on the sample grid.
    """
    i = check_player(game, i)
    if len(record) == 0:
        raise ValueError("empty trajectory")
    sizes = record.action_counts
    offset = sum(sizes[:i])
    if record.cumulative_field is not None and record.cumulative_payoff is not None:
        cum_v = record.cumulative_field[:, offset : offset + sizes[i]]
        cum_u = record.cumulative_payoff[:, i]
    else:
        v = np.array([payoff_field(game, record.profile(k))[i] for k in range(len(record))])
        u = np.einsum("ta,ta->t", v, record.states[:, offset : offset + sizes[i]])
        dt = np.diff(record.times)[:, None]
        cum_v = np.vstack([np.zeros(sizes[i]), np.cumsum(0.5 * dt * (v[1:] + v[:-1]), axis=0)])
        cum_u = np.concatenate([[0.0], np.cumsum(0.5 * dt[:, 0] * (u[1:] + u[:-1]))])
    return cum_v.max(axis=1) - cum_u


def regret(record, game, i):
    """Regret of player ``i`` at the final time of ``record``."""
    return float(regret_series(record, game, i)[-1])


def regret_bound(x0):
    """Regret bound of exponential weights started at ``x0``: ``max_i -log min_a x0_ia`` per player.

    Equals ``log |A_i|`` for a uniform start (zero initial scores).
    """
    return np.array([-np.log(np.min(b)) for b in x0])


@dataclass
class VolumeRecord:
    """Log Shahshahani volume of an infinitesimal box carried by the flow.

    ``logvol_jacobian`` comes from propagating the flow Jacobian;
    ``logvol_divergence`` from accumulating the divergence along the orbit.
    """

    times: np.ndarray
    states: np.ndarray
    logvol_jacobian: np.ndarray
    logvol_divergence: np.ndarray

    @property
    def max_discrepancy(self):
        return float(np.abs(self.logvol_jacobian - self.logvol_divergence).max())

    @property
    def drift(self):
        return float(np.abs(self.logvol_jacobian - self.logvol_jacobian[0]).max())


def _assemble(blocks):
    return np.block(blocks)


def volume_tracker(
    game, xt0, t_end, n_samples=501, t_eval=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, solver="RK45"
):
    """Track the Shahshahani volume element along the replicator flow from ``xt0``.

    Integrates the variational equation ``dJ/dt = (d xi~ / d x~) J`` alongside
    the flow in effective coordinates, and, independently, the integral of the
    closed-form divergence. Both give ``log(sqrt(det G~(x~(t))) det J(t))``.
    """
    xt0 = check_eff_profile(game, xt0)
    grid = _time_grid(t_end, n_samples, t_eval)
    sizes = game.eff_dims
    d = sum(sizes)

    def rhs(t, state):
        xt = _split(state[:d], sizes)
        Jflow = state[d : d + d * d].reshape(d, d)
        A = _assemble(eff_replicator_jacobian(game, xt))
        field_ = np.concatenate(eff_replicator_field(game, xt))
        div = replicator_divergence_analytic(game, embed(xt))
        return np.concatenate([field_, (A @ Jflow).ravel(), [div]])

    state0 = np.concatenate(xt0 + [np.eye(d).ravel(), [0.0]])
    try:
        sol = solve_ivp(rhs, (0.0, float(grid[-1])), state0, method=solver, t_eval=grid, rtol=rtol, atol=atol)
    except BoundaryError as exc:
        raise IntegrationError(f"volume tracking reached the boundary of the strategy space: {exc}") from exc
    _check_solution(sol)
    log_sqrt_det = lambda xt: 0.5 * sum(np.log(metric_eff_det(b)) for b in xt)  # noqa: E731
    base = log_sqrt_det(xt0)
    lv_jac = np.empty(sol.t.size)
    states = []
    for k, row in enumerate(sol.y.T):
        xt = _split(row[:d], sizes)
        states.append(np.concatenate(embed(xt)))
        sign, logdet = np.linalg.slogdet(row[d : d + d * d].reshape(d, d))
        if sign <= 0:
            raise IntegrationError("flow Jacobian lost orientation")
        lv_jac[k] = log_sqrt_det(xt) + logdet
    lv_div = base + sol.y[-1]
    return VolumeRecord(sol.t, np.vstack(states), lv_jac, lv_div)


@dataclass
class RecurrenceReport:
    """Observed returns of a trajectory to the ``epsilon``-ball around its start."""

    epsilon: float
    t_max: float
    return_times: list = field(default_factory=list)
    return_distances: list = field(default_factory=list)
    first_exit: Optional[float] = None
    envelope_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min_distance_envelope: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min_returns: int = 3

    @property
    def verdict(self):
        return "recurrent" if len(self.return_times) >= self.min_returns else "not-observed"

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "t_max": self.t_max,
            "verdict": self.verdict,
            "first_exit": self.first_exit,
            "return_times": [float(t) for t in self.return_times],
            "return_distances": [float(r) for r in self.return_distances],
            "envelope": {
                "t": [float(t) for t in self.envelope_times],
                "min_distance": [float(v) for v in self.min_distance_envelope],
            },
        }


def detect_recurrence(
    game,
    x0,
    epsilon,
    t_max,
    grid_step=0.01,
    rtol=DEFAULT_RTOL,
    atol=DEFAULT_ATOL,
    min_returns=3,
    envelope_points=500,
):
    """Count returns of the score-space trajectory to the Euclidean ``epsilon``-ball around ``x0``.

    A return is counted when the distance drops below ``epsilon`` after the
    orbit has left the ``2 epsilon``-ball. Distance minima found on a grid
    of spacing ``grid_step`` are refined on the dense output, so brief passes
    through the ball between grid points are not missed.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    x0 = check_mixed_profile(game, x0, interior=True)
    sizes = game.action_counts
    n_total = sum(sizes)
    target = np.concatenate(x0)
    state0 = np.concatenate([np.log(b) for b in x0] + [np.zeros(game.num_players)])
    sol = solve_ivp(
        _score_rhs(game), (0.0, float(t_max)), state0, method="RK45", rtol=rtol, atol=atol, dense_output=True
    )
    _check_solution(sol)

    def profiles(t):
        Y = np.atleast_2d(sol.sol(t)[:n_total].T)
        out = np.empty_like(Y)
        start = 0
        for n in sizes:
            blk = Y[:, start : start + n]
            e = np.exp(blk - blk.max(axis=1, keepdims=True))
            out[:, start : start + n] = e / e.sum(axis=1, keepdims=True)
            start += n
        return out

    def dist(t):
        return np.linalg.norm(profiles(t) - target, axis=1)

    n_grid = max(int(np.ceil(t_max / grid_step)) + 1, 3)
    ts = np.linspace(0.0, t_max, n_grid)
    ds = dist(ts)
    report = RecurrenceReport(float(epsilon), float(t_max), min_returns=min_returns)
    away = False
    for k in range(1, n_grid):
        if not away:
            if ds[k] > 2 * epsilon:
                away = True
                if report.first_exit is None:
                    report.first_exit = float(ts[k])
            continue
        is_min = k < n_grid - 1 and ds[k] <= ds[k - 1] and ds[k] <= ds[k + 1]
        if not is_min or ds[k] > 4 * epsilon:
            continue
        res = minimize_scalar(
            lambda t: float(dist(t)[0]), bounds=(ts[k - 1], ts[k + 1]), method="bounded",
            options={"xatol": 1e-10},
        )
        t_star, d_star = float(res.x), float(res.fun)
        if ds[k] < d_star:
            t_star, d_star = float(ts[k]), float(ds[k])
        if d_star < epsilon:
            report.return_times.append(t_star)
            report.return_distances.append(d_star)
            away = False
    if report.first_exit is not None:
        after = ts >= report.first_exit
        running = np.minimum.accumulate(ds[after])
        idx = np.unique(np.linspace(0, running.size - 1, min(envelope_points, running.size)).astype(int))
        report.envelope_times = ts[after][idx]
        report.min_distance_envelope = running[idx]
    return report


def interior_rest_point(game, xt_init, newton_tol=1e-12, max_iter=100):
    """Damped Newton iteration for a zero of the effective payoff field.

    Steps are least-squares solutions of the linearized system, so singular
    Jacobians (continua of equilibria) are handled. A step that would leave
    the open corner of cube is halved until it stays inside. Returns the
    effective profile, or None if no interior zero was reached.
    """
    xt = check_eff_profile(game, xt_init)
    sizes = game.eff_dims
    for _ in range(max_iter):
        residual = np.concatenate(eff_payoff_field(game, xt))
        if np.abs(residual).max() <= newton_tol:
            return xt
        J = _assemble(eff_payoff_jacobian(game, xt))
        step, *_ = np.linalg.lstsq(J, -residual, rcond=None)
        if not np.any(step):
            return None
        flat = np.concatenate(xt)
        scale = 1.0
        for _ in range(60):
            cand = _split(flat + scale * step, sizes)
            if all(np.all(b > 0) and b.sum() < 1 for b in cand):
                break
            scale *= 0.5
        else:
            return None
        xt = cand
    residual = np.concatenate(eff_payoff_field(game, xt))
    return xt if np.abs(residual).max() <= newton_tol else None


def distance_to_nearest_vertex(x):
    """Euclidean distance from a mixed profile to the closest pure profile."""
    total = 0.0
    for b in x:
        b = np.asarray(b, dtype=float)
        vertex = np.zeros_like(b)
        vertex[np.argmax(b)] = 1.0
        total += float(np.sum((b - vertex) ** 2))
    return float(np.sqrt(total))


def write_trajectory_csv(record, fh):
    """Write ``t, x_<player>_<action>..., energy, divergence`` rows."""
    cols = ["t"] + [f"x_{i}_{a}" for i, n in enumerate(record.action_counts) for a in range(n)]
    cols += ["energy", "divergence"]
    fh.write(",".join(cols) + "\n")
    for k in range(len(record)):
        row = [record.times[k], *record.states[k], record.energy[k], record.divergence[k]]
        fh.write(",".join(repr(float(v)) for v in row) + "\n")
