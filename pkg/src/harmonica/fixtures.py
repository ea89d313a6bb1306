"""Reference games used in examples, tests and experiments."""

import numpy as np

from .game import Game


def matching_pennies(scale=1.0):
    u1 = scale * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return Game([u1, -u1])


def prisoners_dilemma():
    """Prisoner's Dilemma with ``u_1 = (2, 0, 3, 1)``, ``u_2 = (2, 3, 0, 1)`` in row-major order.

    Action 1 (defect) is dominant; exact potential ``(-1, 0, 0, 1)``.
    """
    return Game.from_flat((2, 2), [[2, 0, 3, 1], [2, 3, 0, 1]])


def harmonic_2x3(a=1.0, b=2.0):
    """Harmonic, non-zero-sum 2x3 game ``u_2 = -(2/3) u_1``."""
    u1 = np.array([[a, b, -a - b], [-a, -b, a + b]], dtype=float)
    return Game([u1, -2.0 / 3.0 * u1])


def single_player_two_actions():
    """One player, payoffs ``u(A) = 0`` and ``u(B) = 1``."""
    return Game([[0.0, 1.0]])


def _table_222(values):
    # listed in the order [0,0,0], [1,0,0], [0,1,0], [1,1,0], [0,0,1], ...
    u = np.zeros((2, 2, 2))
    for k, v in enumerate(values):
        u[k & 1, (k >> 1) & 1, (k >> 2) & 1] = v
    return u


def mixture_potential_222():
    """Potential 2x2x2 game of the potential/harmonic mixture experiment."""
    return Game(
        [
            _table_222([-14, -8, -18, -7, 13, 8, -8, 1]),
            _table_222([-16, -16, 2, 7, 6, 0, -1, 7]),
            _table_222([-7, 0, 2, 8, 8, 4, -8, -4]),
        ]
    )


def mixture_harmonic_222():
    """Harmonic 2x2x2 game of the potential/harmonic mixture experiment."""
    return Game(
        [
            _table_222([7, 2, 1, 7, -29, -6, 24, 0]),
            _table_222([-15, -3, -10, 2, 23, -9, 0, 4]),
            _table_222([-8, 4, 1, -6, -8, -6, 0, 5]),
        ]
    )


def mixture(lam):
    """``lam * potential + (1 - lam) * harmonic`` for the shipped 2x2x2 tables."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return lam * mixture_potential_222() + (1.0 - lam) * mixture_harmonic_222()


FIXTURES = {
    "matching_pennies": matching_pennies,
    "prisoners_dilemma": prisoners_dilemma,
    "harmonic_2x3": harmonic_2x3,
    "mixture_potential_222": mixture_potential_222,
    "mixture_harmonic_222": mixture_harmonic_222,
}
