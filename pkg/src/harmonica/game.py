"""Finite normal-form games stored as dense payoff tensors.

A game with N players and action counts ``(n_1, ..., n_N)`` keeps one payoff
tensor per player, stacked into a single array of shape ``(N, n_1, ..., n_N)``.
Mixed profiles are lists of per-player probability vectors ("blocks");
effective profiles drop each player's action 0 and live in the open corner of
cube ``{x~ > 0, sum(x~) < 1}``.
"""

import json

import numpy as np

from ._validation import (
    SIMPLEX_TOL,
    check_eff_profile,
    check_mixed_profile,
    check_player,
    check_tol,
)
from .exceptions import BoundaryError, DimensionError

DEFAULT_TOL = 1e-9


class Game:
    """A finite game in normal form.

    Parameters
    ----------
    payoffs : array_like
        Either an array of shape ``(N, n_1, ..., n_N)`` or a sequence of N
        arrays each of shape ``(n_1, ..., n_N)``; ``payoffs[i][a]`` is the
        payoff of player ``i`` at pure profile ``a``.

    Games are immutable: the payoff array is stored read-only.
    """

    __slots__ = ("_payoffs",)

    def __init__(self, payoffs):
        u = np.array(payoffs, dtype=float)
        if u.ndim < 2:
            raise DimensionError("payoffs must have shape (N, n_1, ..., n_N)")
        n_players = u.shape[0]
        if u.ndim != n_players + 1:
            raise DimensionError(
                f"{n_players} payoff tensors must each have {n_players} axes, got shape {u.shape[1:]}"
            )
        if any(n < 2 for n in u.shape[1:]):
            raise DimensionError(f"every player needs at least 2 actions, got {u.shape[1:]}")
        if not np.all(np.isfinite(u)):
            raise ValueError("payoffs must be finite")
        u.setflags(write=False)
        self._payoffs = u

    @classmethod
    def from_flat(cls, action_counts, flat_payoffs):
        """Build a game from per-player flat arrays in row-major profile order."""
        action_counts = tuple(int(n) for n in action_counts)
        if len(flat_payoffs) != len(action_counts):
            raise DimensionError(
                f"expected {len(action_counts)} payoff arrays, got {len(flat_payoffs)}"
            )
        size = int(np.prod(action_counts))
        tensors = []
        for i, flat in enumerate(flat_payoffs):
            flat = np.asarray(flat, dtype=float)
            if flat.shape != (size,):
                raise DimensionError(
                    f"payoff array of player {i} has {flat.size} entries, expected {size}"
                )
            tensors.append(flat.reshape(action_counts))
        return cls(np.stack(tensors))

    @classmethod
    def zeros(cls, action_counts):
        action_counts = tuple(action_counts)
        return cls(np.zeros((len(action_counts),) + action_counts))

    @property
    def payoffs(self):
        return self._payoffs

    @property
    def num_players(self):
        return self._payoffs.shape[0]

    @property
    def action_counts(self):
        return self._payoffs.shape[1:]

    @property
    def num_profiles(self):
        return int(np.prod(self.action_counts))

    @property
    def eff_dims(self):
        """Effective dimension ``m_i = n_i - 1`` of each player's strategy space."""
        return tuple(n - 1 for n in self.action_counts)

    def barycenter(self):
        return [np.full(n, 1.0 / n) for n in self.action_counts]

    def __repr__(self):
        return f"Game(action_counts={self.action_counts})"

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return self._payoffs.shape == other._payoffs.shape and np.array_equal(
            self._payoffs, other._payoffs
        )

    __hash__ = None

    def _check_same_shape(self, other):
        if not isinstance(other, Game):
            raise TypeError(f"expected a Game, got {type(other).__name__}")
        if other.action_counts != self.action_counts:
            raise DimensionError(
                f"shape mismatch: {self.action_counts} vs {other.action_counts}"
            )

    def __add__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        self._check_same_shape(other)
        return Game(self._payoffs + other._payoffs)

    def __sub__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        self._check_same_shape(other)
        return Game(self._payoffs - other._payoffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return Game(float(scalar) * self._payoffs)

    __rmul__ = __mul__

    def __neg__(self):
        return Game(-self._payoffs)


def _contract(tensor, blocks, skip=()):
    """Contract ``tensor`` against ``blocks`` along every axis not in ``skip``.

    Axes are contracted from last to first so remaining axis numbers stay valid.
    """
    t = tensor
    for j in range(len(blocks) - 1, -1, -1):
        if j in skip:
            continue
        t = np.tensordot(t, blocks[j], axes=([j], [0]))
    return t


def mixed_payoff(game, x, i):
    """Expected payoff of player ``i`` at mixed profile ``x``."""
    i = check_player(game, i)
    x = check_mixed_profile(game, x)
    return float(_contract(game.payoffs[i], x))


def payoff_field(game, x):
    """Payoff field: ``v[i][a] = u_i(a; x_{-i})`` for every player and action.

    Block ``i`` does not depend on ``x[i]``.
    """
    x = check_mixed_profile(game, x)
    return [_contract(game.payoffs[i], x, skip=(i,)) for i in range(game.num_players)]


def embed(xt):
    """Map effective coordinates to the interior of the product of simplices."""
    out = []
    for k, b in enumerate(xt):
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if np.any(b <= 0.0) or b.sum() >= 1.0:
            raise BoundaryError(f"effective block {k} is not in the open corner of cube: {b}")
        out.append(np.concatenate(([1.0 - b.sum()], b)))
    return out


def reduce(x):
    """Drop action 0 of each interior block; inverse of :func:`embed`."""
    out = []
    for k, b in enumerate(x):
        b = np.asarray(b, dtype=float)
        if b.ndim != 1 or b.size < 2:
            raise DimensionError(f"block {k} must be a 1-d array with at least 2 entries")
        if np.any(b <= 0.0) or abs(b.sum() - 1.0) > SIMPLEX_TOL:
            raise BoundaryError(f"block {k} is not an interior probability vector: {b}")
        out.append(b[1:].copy())
    return out


def eff_payoff_field(game, xt):
    """Effective payoff field ``v~[i][l] = v[i][l] - v[i][0]`` for ``l = 1..m_i``."""
    xt = check_eff_profile(game, xt)
    v = payoff_field(game, embed(xt))
    return [vi[1:] - vi[0] for vi in v]


def eff_payoff_jacobian(game, xt):
    """Jacobian of the effective payoff field with respect to effective coordinates.

    Returns a nested list ``J`` with ``J[i][j]`` of shape ``(m_i, m_j)`` holding
    ``d v~_{i l} / d x~_{j k}``. Diagonal blocks vanish because ``v_i`` does not
    depend on ``x_i``.
    """
    xt = check_eff_profile(game, xt)
    x = embed(xt)
    N = game.num_players
    m = game.eff_dims
    jac = [[np.zeros((m[i], m[j])) for j in range(N)] for i in range(N)]
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            M = _contract(game.payoffs[i], x, skip=(i, j))
            if j < i:
                M = M.T
            # rows: own action of i, cols: action of j
            jac[i][j] = M[1:, 1:] - M[1:, :1] - M[:1, 1:] + M[0, 0]
    return jac


def deviation_spread(tensors, axis_of):
    """Largest own-deviation payoff difference of each player.

    ``tensors[i]`` is scanned along axis ``axis_of(i)``; the returned value is
    ``max_{a, b_i} |t_i(b_i; a_{-i}) - t_i(a)|``.
    """
    return max(float(np.ptp(t, axis=axis_of(i)).max()) for i, t in enumerate(tensors))


def is_non_strategic(game, tol=DEFAULT_TOL):
    """True iff no player can change their payoff by a unilateral deviation."""
    tol = check_tol(tol)
    return deviation_spread(game.payoffs, lambda i: i) <= tol


def is_strategically_equivalent(g, h, tol=DEFAULT_TOL):
    """True iff ``g`` and ``h`` have the same unilateral deviation differences."""
    tol = check_tol(tol)
    g._check_same_shape(h)
    return deviation_spread(g.payoffs - h.payoffs, lambda i: i) <= tol


def game_to_dict(game):
    return {
        "players": game.num_players,
        "actions": [int(n) for n in game.action_counts],
        "payoffs": [[float(v) for v in u.ravel()] for u in game.payoffs],
    }


def game_from_dict(data):
    try:
        n_players = int(data["players"])
        actions = [int(n) for n in data["actions"]]
        payoffs = data["payoffs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DimensionError(f"malformed game description: {exc}") from exc
    if len(actions) != n_players:
        raise DimensionError(f"'players' is {n_players} but {len(actions)} action counts given")
    return Game.from_flat(actions, payoffs)


def dumps_game(game):
    """Serialize to the canonical JSON format (byte-stable)."""
    return json.dumps(game_to_dict(game), separators=(",", ":")) + "\n"


def loads_game(text):
    return game_from_dict(json.loads(text))


def save_game(game, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_game(game))


def load_game(path):
    with open(path, encoding="utf-8") as fh:
        return loads_game(fh.read())
