"""scikit-learn style wrappers around the functional API.

The estimators take a :class:`~harmonica.game.Game` as ``X``. Hyper-parameters
live in ``__init__`` so ``get_params``/``set_params``/``clone`` work as usual;
fitted state uses the trailing-underscore convention.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_mixed_profile
from .decomposition import decompose
from .dynamics import DEFAULT_ATOL, DEFAULT_RTOL, detect_recurrence, integrate
from .game import Game


def check_game(X):
    if isinstance(X, Game):
        return X
    return Game(X)


class HodgeDecomposer(TransformerMixin, BaseEstimator):
    """Potential/harmonic decomposition as a transformer.

    ``transform`` returns an array of shape ``(2, N, n_1, ..., n_N)`` holding
    the potential and harmonic payoff tensors; ``inverse_transform`` adds them
    back together.
    """

    def __init__(self, solver_tol=1e-12, max_iter=1000, method="auto"):
        self.solver_tol = solver_tol
        self.max_iter = max_iter
        self.method = method

    def fit(self, X, y=None):
        game = check_game(X)
        result = decompose(game, solver_tol=self.solver_tol, max_iter=self.max_iter, method=self.method)
        self.result_ = result
        self.potential_fn_ = result.potential_fn
        self.potential_game_ = result.potential_game
        self.harmonic_game_ = result.harmonic_game
        self.residual_harmonicity_ = result.residual_harmonicity
        self.solver_stats_ = result.solver_stats
        self.action_counts_ = game.action_counts
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        game = check_game(X)
        if game.action_counts != self.action_counts_:
            raise ValueError(f"expected a game of shape {self.action_counts_}, got {game.action_counts}")
        res = decompose(game, solver_tol=self.solver_tol, max_iter=self.max_iter, method=self.method)
        return np.stack([res.potential_game.payoffs, res.harmonic_game.payoffs])

    def inverse_transform(self, Xt):
        Xt = np.asarray(Xt, dtype=float)
        return Game(Xt[0] + Xt[1])


class ReplicatorDynamics(BaseEstimator):
    """Exponential-weights learning on a fixed game.

    ``fit(game, x0)`` integrates from ``x0`` (the barycenter by default) and
    stores the :class:`~harmonica.dynamics.TrajectoryRecord` as ``trajectory_``.
    ``predict(times)`` returns the mixed profiles at the requested times.
    """

    def __init__(self, t_end=100.0, n_samples=1001, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                 method="scores", solver="RK45"):
        self.t_end = t_end
        self.n_samples = n_samples
        self.rtol = rtol
        self.atol = atol
        self.method = method
        self.solver = solver

    def _run(self, game, x0, **kw):
        return integrate(game, x0, rtol=self.rtol, atol=self.atol, method=self.method, solver=self.solver, **kw)

    def fit(self, X, x0=None):
        game = check_game(X)
        x0 = game.barycenter() if x0 is None else check_mixed_profile(game, x0, interior=True)
        rec = self._run(game, x0, t_end=self.t_end, n_samples=self.n_samples)
        self.game_ = game
        self.x0_ = x0
        self.trajectory_ = rec
        self.regret_ = rec.regret
        self.energy_drift_ = float(np.abs(rec.energy - rec.energy[0]).max())
        return self

    def predict(self, times):
        check_is_fitted(self, "trajectory_")
        times = np.atleast_1d(np.asarray(times, dtype=float))
        grid = np.unique(np.concatenate([[0.0], times]))
        rec = self._run(self.game_, self.x0_, t_eval=grid)
        return rec.states[np.searchsorted(grid, times)]


class RecurrenceDetector(BaseEstimator):
    """Observational Poincare recurrence test; ``predict`` returns the verdict."""

    def __init__(self, epsilon=1e-2, t_max=500.0, grid_step=0.01, rtol=DEFAULT_RTOL,
                 atol=DEFAULT_ATOL, min_returns=3):
        self.epsilon = epsilon
        self.t_max = t_max
        self.grid_step = grid_step
        self.rtol = rtol
        self.atol = atol
        self.min_returns = min_returns

    def fit(self, X, x0=None):
        game = check_game(X)
        if x0 is None:
            rng = np.random.default_rng(0)
            x0 = [rng.dirichlet(np.ones(n)) for n in game.action_counts]
        self.report_ = detect_recurrence(
            game, x0, self.epsilon, self.t_max, grid_step=self.grid_step,
            rtol=self.rtol, atol=self.atol, min_returns=self.min_returns,
        )
        self.verdict_ = self.report_.verdict
        return self

    def predict(self, X=None):
        check_is_fitted(self, "report_")
        return self.verdict_
