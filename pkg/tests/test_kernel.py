import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bifurk.empirics import Subtree, node_average
from bifurk.errors import InvalidDistribution, TreeOverflow
from bifurk.kernel import (
    Categorical,
    Dirac,
    FiniteKernel,
    Gaussian,
    exact_gen_second_moment,
    induced_step,
    iterate_q,
    simulate_tmc,
    stationary_distribution,
)

from oracles import brute_gen_second_moment, tree_enumeration_second_moment

SWAP = FiniteKernel.swap()


def test_swap_simulation():
    lin = simulate_tmc(SWAP, Dirac(0), 2, seed=1)
    assert lin.dense().tolist() == [0, 1, 1, 0, 0, 0, 0]


def test_constant_pair_simulation():
    lin = simulate_tmc(FiniteKernel.constant_pair(), Dirac(1), 3, seed=4)
    d = lin.to_dict()
    assert all(d[n] == 1 for n in d if n % 2 == 0)
    assert all(d[n] == 0 for n in d if n % 2 == 1 and n > 1)


def test_depth_zero_is_root_draw():
    lin = simulate_tmc(SWAP, Categorical([0, 1], [0.5, 0.5]), 0, seed=3)
    assert len(lin) == 1 and lin[1] in (0.0, 1.0)


def test_simulation_deterministic_and_seed_sensitive():
    k = FiniteKernel.random(3, np.random.default_rng(0))
    root = Categorical([0, 1, 2], [0.2, 0.3, 0.5])
    a = simulate_tmc(k, root, 8, seed=17)
    b = simulate_tmc(k, root, 8, seed=17)
    c = simulate_tmc(k, root, 8, seed=18)
    assert a == b and a != c


def test_simulation_prefix_consistent_across_depths():
    k = FiniteKernel.random(2, np.random.default_rng(1))
    deep = simulate_tmc(k, Dirac(0), 9, seed=2).dense()
    shallow = simulate_tmc(k, Dirac(0), 5, seed=2).dense()
    assert np.array_equal(deep[: shallow.size], shallow)


def test_simulation_overflow():
    with pytest.raises(TreeOverflow):
        simulate_tmc(SWAP, Dirac(0), 63, seed=0)


def test_swap_subtree_means():
    lin = simulate_tmc(SWAP, Dirac(0), 2, seed=0)
    assert node_average(lin, lambda x: x, Subtree(1))[0] == 2 / 3
    assert node_average(lin, lambda x: x, Subtree(2))[0] == 2 / 7


def test_pair_frequencies_match_table():
    k = FiniteKernel.random(3, np.random.default_rng(2))
    lin = simulate_tmc(k, Dirac(1), 16, seed=9)
    mothers, x, y, z = lin.triangles()
    sel = x == 1
    counts = np.zeros((3, 3))
    np.add.at(counts, (y[sel].astype(int), z[sel].astype(int)), 1)
    freq = counts / sel.sum()
    assert np.abs(freq - k.table[1]).max() < 5 * np.sqrt(0.25 / sel.sum())


def test_table_validation():
    with pytest.raises(InvalidDistribution):
        FiniteKernel(np.full((2, 2, 2), 0.3))
    bad = np.zeros((2, 4))
    bad[:, 0] = 1.0
    bad[0, 0], bad[0, 1] = 1.5, -0.5
    with pytest.raises(InvalidDistribution):
        FiniteKernel(bad)
    with pytest.raises(ValueError):
        FiniteKernel(SWAP.table, states=[1.0, 0.0])


def test_marginals_row_stochastic():
    k = FiniteKernel.random(4, np.random.default_rng(3))
    for M in (k.P0, k.P1, k.Q):
        assert np.allclose(M.sum(axis=1), 1.0, atol=1e-12)


def test_induced_step_swap():
    rng = np.random.default_rng(0)
    assert np.all(induced_step(SWAP, np.zeros(50), rng) == 1)
    assert np.all(induced_step(SWAP, np.ones(50), rng) == 0)


def test_induced_step_law_is_q():
    k = FiniteKernel.random(3, np.random.default_rng(4))
    draws = induced_step(k, np.full(100_000, 2.0), np.random.default_rng(5))
    freq = np.bincount(draws.astype(int), minlength=3) / draws.size
    assert 0.5 * np.abs(freq - k.Q[2]).sum() < 0.01


def test_iterate_q_swap():
    f = np.array([0.0, 1.0])
    assert iterate_q(SWAP, f, 0).tolist() == [0.0, 1.0]
    assert iterate_q(SWAP, f, 1).tolist() == [1.0, 0.0]
    assert iterate_q(SWAP, f, 2).tolist() == [0.0, 1.0]
    with pytest.raises(ValueError):
        iterate_q(SWAP, f, -1)


def test_exact_second_moment_basic_cases():
    k = FiniteKernel.random(3, np.random.default_rng(6))
    nu = np.array([0.1, 0.6, 0.3])
    f = np.array([2.0, -1.0, 0.5])
    assert exact_gen_second_moment(k, nu, f, 0) == pytest.approx(nu @ f**2, abs=1e-15)
    for q in range(6):
        assert exact_gen_second_moment(k, nu, np.full(3, 1.7), q) == pytest.approx(1.7**2)


def test_exact_second_moment_swap_full_enumeration():
    f = np.array([0.0, 1.0])
    for q in range(4):
        want = tree_enumeration_second_moment(SWAP.table, [1, 0], f, q)
        assert abs(exact_gen_second_moment(SWAP, [1, 0], f, q) - want) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_exact_second_moment_matches_oracles(seed, m):
    rng = np.random.default_rng(seed)
    k = FiniteKernel.random(m, rng)
    nu = rng.dirichlet(np.ones(m))
    f = rng.normal(size=m)
    for q in range(3):
        exact = exact_gen_second_moment(k, nu, f, q)
        assert abs(exact - brute_gen_second_moment(k.table, nu, f, q)) <= 1e-12
        assert abs(exact - tree_enumeration_second_moment(k.table, nu, f, q)) <= 1e-12


def test_exact_second_moment_centered_decays():
    k = FiniteKernel.random(3, np.random.default_rng(7))
    pi = stationary_distribution(k)
    f = np.array([1.0, -2.0, 0.5])
    f = f - pi @ f
    assert exact_gen_second_moment(k, [1, 0, 0], f, 40) < 1e-6


def test_exact_second_moment_validates_nu():
    with pytest.raises(InvalidDistribution):
        exact_gen_second_moment(SWAP, [0.5, 0.6], np.zeros(2), 1)


def test_stationary_distribution():
    assert np.allclose(stationary_distribution(SWAP), [0.5, 0.5])
    k = FiniteKernel.random(3, np.random.default_rng(8))
    pi = stationary_distribution(k)
    assert np.allclose(pi @ k.Q, pi, atol=1e-12)


def test_root_distributions():
    u = np.random.default_rng(0).random((100_000, 2))
    g = Gaussian(1.0, 4.0).sample(u)
    assert abs(g.mean() - 1.0) < 0.03 and abs(g.var() - 4.0) < 0.1
    c = Categorical([0, 5], [0.25, 0.75]).sample(u[:, :1])
    assert abs((c == 5).mean() - 0.75) < 0.01
    assert np.all(Dirac(2.5).sample(u) == 2.5)
    with pytest.raises(InvalidDistribution):
        Categorical([0, 1], [0.5, 0.6])
