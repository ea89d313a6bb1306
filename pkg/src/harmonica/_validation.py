"""Input validation helpers shared by the public functions and estimators."""

import numbers

import numpy as np

from .exceptions import BoundaryError, DimensionError

SIMPLEX_TOL = 1e-12


def check_player(game, i):
    if not isinstance(i, numbers.Integral) or not 0 <= i < game.num_players:
        raise DimensionError(f"player index {i!r} out of range for {game.num_players} players")
    return int(i)


def _as_blocks(x, sizes, name):
    if isinstance(x, np.ndarray) and x.ndim == 1 and x.size == sum(sizes):
        x = np.split(x, np.cumsum(sizes)[:-1])
    try:
        blocks = [np.asarray(b, dtype=float) for b in x]
    except (TypeError, ValueError) as exc:
        raise DimensionError(f"{name} must be a sequence of 1-d arrays") from exc
    if len(blocks) != len(sizes):
        raise DimensionError(f"{name} has {len(blocks)} blocks, expected {len(sizes)}")
    for k, (b, n) in enumerate(zip(blocks, sizes)):
        if b.shape != (n,):
            raise DimensionError(f"{name} block {k} has shape {b.shape}, expected ({n},)")
    return blocks


def check_mixed_profile(game, x, interior=False, tol=SIMPLEX_TOL):
    """Validate a mixed profile for ``game`` and return it as a list of float arrays.

    Accepts either a sequence of per-player blocks or one flat concatenated vector.
    """
    blocks = _as_blocks(x, game.action_counts, "mixed profile")
    for k, b in enumerate(blocks):
        if not np.all(np.isfinite(b)):
            raise DimensionError(f"mixed profile block {k} has non-finite entries")
        if np.any(b < -tol) or abs(b.sum() - 1.0) > tol:
            raise DimensionError(f"mixed profile block {k} is not a probability vector: {b}")
        if interior and np.any(b <= 0.0):
            raise BoundaryError(f"mixed profile block {k} is not interior: {b}")
    return blocks


def check_eff_profile(game, xt):
    """Validate a point of the open corner of cube (effective coordinates)."""
    blocks = _as_blocks(xt, [n - 1 for n in game.action_counts], "effective profile")
    for k, b in enumerate(blocks):
        if not np.all(np.isfinite(b)):
            raise DimensionError(f"effective profile block {k} has non-finite entries")
        if np.any(b <= 0.0) or b.sum() >= 1.0:
            raise BoundaryError(f"effective profile block {k} is not in the open corner of cube: {b}")
    return blocks


def check_eff_block(xt_i):
    xt_i = np.atleast_1d(np.asarray(xt_i, dtype=float))
    if xt_i.ndim != 1 or xt_i.size == 0:
        raise DimensionError("effective block must be a non-empty 1-d array")
    if np.any(xt_i <= 0.0) or xt_i.sum() >= 1.0 or not np.all(np.isfinite(xt_i)):
        raise BoundaryError(f"effective block is not in the open corner of cube: {xt_i}")
    return xt_i


def check_tol(tol, name="tol"):
    if not np.isfinite(tol) or tol < 0:
        raise ValueError(f"{name} must be a finite non-negative number, got {tol!r}")
    return float(tol)
