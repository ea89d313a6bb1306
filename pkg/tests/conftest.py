import itertools

import numpy as np
import pytest

from harmonica import fixtures

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def record_criterion():
    def record(name, ok, detail=""):
        ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return ok

    return record


# ---- brute-force oracles: enumerate pure profiles explicitly ----


def profiles(action_counts):
    return list(itertools.product(*[range(n) for n in action_counts]))


def prob(x, alpha):
    return float(np.prod([x[j][a] for j, a in enumerate(alpha)]))


def brute_mixed_payoff(game, x, i):
    return sum(game.payoffs[i][alpha] * prob(x, alpha) for alpha in profiles(game.action_counts))


def brute_payoff_field(game, x):
    out = []
    for i, n in enumerate(game.action_counts):
        v = np.zeros(n)
        for alpha in profiles(game.action_counts):
            w = np.prod([x[j][a] for j, a in enumerate(alpha) if j != i])
            v[alpha[i]] += game.payoffs[i][alpha] * w
        out.append(v)
    return out


def brute_defect(game):
    F = np.zeros(game.action_counts)
    for alpha in profiles(game.action_counts):
        total = 0.0
        for i, n in enumerate(game.action_counts):
            for b in range(n):
                dev = alpha[:i] + (b,) + alpha[i + 1 :]
                total += game.payoffs[i][dev] - game.payoffs[i][alpha]
        F[alpha] = total
    return F


def brute_laplacian(action_counts):
    nodes = profiles(action_counts)
    index = {a: k for k, a in enumerate(nodes)}
    L = np.zeros((len(nodes), len(nodes)))
    for a in nodes:
        for i, n in enumerate(action_counts):
            for b in range(n):
                if b == a[i]:
                    continue
                nb = a[:i] + (b,) + a[i + 1 :]
                L[index[a], index[a]] += 1
                L[index[a], index[nb]] -= 1
    return L


def random_profile(action_counts, rng):
    return [rng.dirichlet(np.ones(n)) for n in action_counts]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mp():
    return fixtures.matching_pennies()


@pytest.fixture
def pd():
    return fixtures.prisoners_dilemma()


HARMONIC_FIXTURES = {
    "matching_pennies": fixtures.matching_pennies,
    "harmonic_2x3": fixtures.harmonic_2x3,
    "mixture_harmonic_222": fixtures.mixture_harmonic_222,
}
