import io

import numpy as np
import pytest

from harmonica import fixtures
from harmonica.decomposition import multilinear_extension, random_game, random_harmonic, random_potential
from harmonica.dynamics import (
    TrajectoryRecord,
    constant_of_motion,
    detect_recurrence,
    distance_to_nearest_vertex,
    eff_replicator_field,
    eff_replicator_jacobian,
    integrate,
    interior_rest_point,
    logit,
    regret_bound,
    regret_series,
    replicator_field,
    volume_tracker,
    write_trajectory_csv,
)
from harmonica.exceptions import BoundaryError, DimensionError, IntegrationError
from harmonica.game import eff_payoff_field, embed, reduce
from harmonica.geometry import metric_eff_inverse

from conftest import random_profile


def kl(p, q):
    return float(np.sum(p * np.log(p / q)))


class TestLogit:
    def test_examples(self):
        assert np.allclose(logit([[0.0, 0.0]])[0], [0.5, 0.5])
        assert np.allclose(logit([[0.0, np.log(3)]])[0], [0.25, 0.75])
        x = logit([[1000.0, 1000.0 + np.log(2)]])[0]
        assert np.all(np.isfinite(x))
        assert np.allclose(x, [1 / 3, 2 / 3])

    def test_non_finite(self):
        with pytest.raises(ValueError):
            logit([[np.inf, 0.0]])


class TestReplicatorField:
    def test_pure_profiles(self):
        g = random_game((2, 3), seed=0)
        for a in range(2):
            for b in range(3):
                x = [np.eye(2)[a], np.eye(3)[b]]
                assert all(not np.any(blk) for blk in replicator_field(g, x))

    def test_matching_pennies_barycenter(self, mp):
        assert all(np.allclose(b, 0) for b in replicator_field(mp, mp.barycenter()))

    def test_single_player(self):
        g = fixtures.single_player_two_actions()
        for xB in (0.1, 0.5, 0.8):
            xi = replicator_field(g, [[1 - xB, xB]])[0]
            assert np.allclose(xi, [-(1 - xB) * xB, xB - xB**2], atol=1e-15)

    def test_tangent(self, rng):
        g = random_game((3, 2, 4), seed=1)
        for _ in range(10):
            for blk in replicator_field(g, random_profile(g.action_counts, rng)):
                assert abs(blk.sum()) < 1e-12

    def test_shape_mismatch(self, mp):
        with pytest.raises(DimensionError):
            replicator_field(mp, [[0.5, 0.5]])


class TestEffReplicatorField:
    def test_two_by_two_logistic(self, rng):
        g = random_game((2, 2), seed=2)
        for _ in range(5):
            xt = [rng.uniform(0.05, 0.95, 1), rng.uniform(0.05, 0.95, 1)]
            xi = eff_replicator_field(g, xt)
            vt = eff_payoff_field(g, xt)
            for i in range(2):
                assert xi[i][0] == pytest.approx(xt[i][0] * (1 - xt[i][0]) * vt[i][0], abs=1e-15)

    def test_metric_gradient_identity(self, rng):
        worst = 0.0
        for k in range(1000):
            shape = [(2, 2), (2, 3), (3, 3), (2, 2, 2)][k % 4]
            g = random_game(shape, seed=k)
            xt = reduce(random_profile(shape, rng))
            xi = eff_replicator_field(g, xt)
            vt = eff_payoff_field(g, xt)
            for b, f, w in zip(xt, xi, vt):
                worst = max(worst, np.abs(f - metric_eff_inverse(b) @ w).max())
        assert worst < 1e-12

    def test_matches_full_coordinates(self, rng):
        g = random_game((3, 4, 2), seed=3)
        x = random_profile(g.action_counts, rng)
        full = replicator_field(g, x)
        eff = eff_replicator_field(g, reduce(x))
        for a, b in zip(full, eff):
            assert np.allclose(a[1:], b, atol=1e-14)

    def test_matching_pennies_barycenter(self, mp):
        assert all(np.allclose(b, 0) for b in eff_replicator_field(mp, [[0.5], [0.5]]))

    def test_boundary(self, mp):
        with pytest.raises(BoundaryError):
            eff_replicator_field(mp, [[0.0], [0.5]])

    def test_jacobian_matches_finite_differences(self, rng):
        g = random_game((3, 2, 3), seed=4)
        xt = reduce(random_profile(g.action_counts, rng))
        J = eff_replicator_jacobian(g, xt)
        h = 1e-6
        for j, b in enumerate(xt):
            for k in range(b.size):
                xp = [c.copy() for c in xt]
                xm = [c.copy() for c in xt]
                xp[j][k] += h
                xm[j][k] -= h
                fp, fm = eff_replicator_field(g, xp), eff_replicator_field(g, xm)
                for i in range(3):
                    assert np.allclose(J[i][j][:, k], (fp[i] - fm[i]) / (2 * h), atol=1e-8)


class TestConstantOfMotion:
    def test_barycenter(self):
        g = random_game((2, 3, 4), seed=0)
        assert constant_of_motion(g, g.barycenter()) == pytest.approx(0.0, abs=1e-14)

    def test_two_by_two_value(self, pd):
        x = [np.array([0.75, 0.25]), np.array([0.75, 0.25])]
        b = np.array([0.5, 0.5])
        expected = 2 * kl(b, x[0]) + 2 * kl(b, x[1])
        assert constant_of_motion(pd, x) == pytest.approx(expected, rel=1e-14)
        assert constant_of_motion(pd, x) == pytest.approx(0.5753641449, rel=1e-9)

    def test_nonnegative(self, rng):
        g = random_game((3, 2), seed=1)
        for _ in range(50):
            assert constant_of_motion(g, random_profile(g.action_counts, rng)) > 0

    def test_boundary(self, pd):
        with pytest.raises(BoundaryError):
            constant_of_motion(pd, [[1.0, 0.0], [0.5, 0.5]])


class TestIntegrate:
    def test_matching_pennies_energy(self, mp):
        rec = integrate(mp, embed([[0.3], [0.3]]), t_end=100)
        assert np.abs(rec.energy - rec.energy[0]).max() < 1e-7
        assert np.abs(rec.divergence).max() < 1e-14

    def test_prisoners_dilemma_converges(self, pd, rng):
        rec = integrate(pd, random_profile((2, 2), rng), t_end=50)
        assert distance_to_nearest_vertex(rec.final) < 1e-3
        assert np.argmax(rec.final[0]) == 1 and np.argmax(rec.final[1]) == 1

    def test_mixture_potential_end_converges(self, rng):
        rec = integrate(fixtures.mixture(1.0), random_profile((2, 2, 2), rng), t_end=100)
        assert distance_to_nearest_vertex(rec.final) < 1e-3

    def test_scores_and_effective_agree(self, rng):
        for shape, seed in [((2, 2), 0), ((2, 3), 1), ((2, 2, 2), 2)]:
            g = random_game(shape, seed=seed)
            x0 = random_profile(shape, rng)
            a = integrate(g, x0, t_end=10, n_samples=201)
            b = integrate(g, x0, t_end=10, n_samples=201, method="effective")
            assert np.abs(a.states - b.states).max() < 1e-6
            assert np.abs(a.regret - b.regret).max() < 1e-6

    def test_simplex_invariance_harmonic(self, rng):
        g = random_harmonic((2, 3, 2), seed=3)
        rec = integrate(g, random_profile(g.action_counts, rng), t_end=100)
        assert rec.states.min() > 1e-12
        for k in range(len(rec)):
            assert all(abs(b.sum() - 1) < 1e-10 for b in rec.profile(k))

    def test_potential_is_lyapunov(self, rng):
        g = random_potential((2, 3, 2), seed=4, non_strategic=False)
        phi = g.payoffs[0]
        rec = integrate(g, random_profile(g.action_counts, rng), t_end=30, n_samples=301)
        values = np.array([multilinear_extension(phi, rec.profile(k)) for k in range(len(rec))])
        assert np.all(np.diff(values) > -1e-9)
        assert values[-1] > values[0]

    def test_potential_energy_not_conserved(self, pd):
        rec = integrate(pd, embed([[0.3], [0.3]]), t_end=20)
        assert np.abs(rec.energy - rec.energy[0]).max() > 1e-2

    def test_t_eval(self, mp):
        rec = integrate(mp, mp.barycenter(), t_eval=[0.0, 0.5, 2.0])
        assert np.array_equal(rec.times, [0.0, 0.5, 2.0])
        assert np.allclose(rec.states, 0.5)

    def test_validation(self, mp):
        with pytest.raises(ValueError):
            integrate(mp, mp.barycenter(), t_end=-1)
        with pytest.raises(ValueError):
            integrate(mp, mp.barycenter(), t_eval=[1.0, 0.5])
        with pytest.raises(ValueError):
            integrate(mp, mp.barycenter(), t_end=1, method="euler")
        with pytest.raises(BoundaryError):
            integrate(mp, [[1.0, 0.0], [0.5, 0.5]], t_end=1)


class TestRegret:
    def test_pure_equilibrium_constant_trajectory(self, pd):
        # a record frozen at the pure equilibrium (D, D)
        t = np.linspace(0, 5, 11)
        states = np.tile([0.0, 1.0, 0.0, 1.0], (t.size, 1))
        rec = TrajectoryRecord((2, 2), t, states, np.zeros(t.size), np.zeros(t.size), None, None, np.zeros(2))
        for i in range(2):
            assert regret_series(rec, pd, i).max() <= 0.0

    def test_trapezoid_fallback_agrees(self, rng):
        g = random_game((2, 3), seed=5)
        rec = integrate(g, random_profile(g.action_counts, rng), t_end=10, n_samples=4001)
        exact = regret_series(rec, g, 1)
        rec.cumulative_field = None
        approx = regret_series(rec, g, 1)
        assert np.abs(exact - approx).max() < 1e-5

    def test_uniform_start_bound(self, mp, pd):
        for g in (mp, pd, fixtures.harmonic_2x3(), random_game((3, 3), seed=6)):
            rec = integrate(g, g.barycenter(), t_end=50)
            for i, n in enumerate(g.action_counts):
                assert regret_series(rec, g, i).max() <= np.log(n) + 1e-6

    def test_general_start_bound(self, mp, rng):
        x0 = embed([[0.05], [0.7]])
        rec = integrate(mp, x0, t_end=100)
        bound = regret_bound(x0)
        assert np.allclose(bound, [-np.log(0.05), -np.log(0.3)])
        for i in range(2):
            assert regret_series(rec, mp, i).max() <= bound[i] + 1e-6

    def test_bad_player(self, mp):
        rec = integrate(mp, mp.barycenter(), t_end=1, n_samples=3)
        with pytest.raises(DimensionError):
            regret_series(rec, mp, 5)


class TestVolume:
    def test_harmonic_preserves(self):
        g = fixtures.mixture_harmonic_222()
        vr = volume_tracker(g, [[0.3], [0.6], [0.45]], t_end=50)
        assert vr.drift < 1e-5
        assert vr.max_discrepancy < 1e-5

    def test_prisoners_dilemma_contracts(self, pd):
        vr = volume_tracker(pd, [[0.5], [0.5]], t_end=10)
        assert vr.logvol_jacobian[-1] < vr.logvol_jacobian[0] - 0.1
        assert vr.max_discrepancy < 1e-5
        tail = vr.logvol_jacobian[len(vr.times) // 2 :]
        assert np.all(np.diff(tail) < 0)

    def test_boundary_reported(self, pd):
        with pytest.raises(IntegrationError):
            volume_tracker(pd, [[0.5], [0.5]], t_end=50)


class TestRecurrence:
    def test_matching_pennies(self, mp):
        rep = detect_recurrence(mp, embed([[0.3], [0.3]]), 1e-3, 200)
        assert rep.verdict == "recurrent"
        assert np.all(np.diff(rep.return_times) > 0)
        assert all(d < 1e-3 for d in rep.return_distances)
        # closed orbit: consecutive returns are one period apart
        gaps = np.diff(rep.return_times)
        assert np.allclose(gaps, gaps[0], rtol=1e-4)

    def test_prisoners_dilemma(self, pd):
        rep = detect_recurrence(pd, embed([[0.3], [0.3]]), 1e-3, 200)
        assert rep.verdict == "not-observed"
        assert rep.return_times == []
        assert rep.first_exit is not None

    def test_envelope_monotone(self, mp):
        rep = detect_recurrence(mp, embed([[0.2], [0.4]]), 1e-2, 50)
        assert np.all(np.diff(rep.min_distance_envelope) <= 0)
        d = rep.to_dict()
        assert d["verdict"] == rep.verdict and len(d["envelope"]["t"]) == rep.envelope_times.size

    def test_validation(self, mp):
        with pytest.raises(ValueError):
            detect_recurrence(mp, mp.barycenter(), 0.0, 10)
        with pytest.raises(ValueError):
            detect_recurrence(mp, mp.barycenter(), 0.1, -1)


class TestRestPoint:
    def test_matching_pennies(self, mp):
        xt = interior_rest_point(mp, [[0.2], [0.7]])
        assert np.allclose(np.concatenate(xt), [0.5, 0.5], atol=1e-12)

    def test_two_by_three_family(self):
        g = fixtures.harmonic_2x3(1.0, 2.0)
        xt = interior_rest_point(g, [[0.4], [0.3, 0.3]])
        assert xt is not None
        assert max(np.abs(b).max() for b in eff_payoff_field(g, xt)) <= 1e-10

    def test_prisoners_dilemma_absent(self, pd):
        assert interior_rest_point(pd, [[0.5], [0.5]]) is None


def test_distance_to_nearest_vertex():
    assert distance_to_nearest_vertex([[1.0, 0.0], [0.0, 1.0]]) == 0.0
    assert distance_to_nearest_vertex([[0.9, 0.1]]) == pytest.approx(np.sqrt(0.02))


def test_csv(mp):
    rec = integrate(mp, embed([[0.3], [0.3]]), t_end=1, n_samples=5)
    buf = io.StringIO()
    write_trajectory_csv(rec, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x_0_0,x_0_1,x_1_0,x_1_1,energy,divergence"
    assert len(lines) == 6
    row = [float(v) for v in lines[1].split(",")]
    assert row[0] == 0.0 and row[1:5] == pytest.approx([0.7, 0.3, 0.7, 0.3])
