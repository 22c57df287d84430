import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mwejoint import treecrf as crf
from mwejoint.tensor import DegenerateInputError, Tensor
from oracles import brute_crf, brute_trees, central_diff, rel_error

REGIMES = [crf.PROJECTIVE, crf.NONPROJECTIVE]


def random_scores(rng, n, spread=2.0):
    return rng.uniform(-spread, spread, (n + 1, n))


@pytest.mark.parametrize("regime", REGIMES)
def test_single_token(regime):
    s = np.array([[1.7], [0.0]])
    assert crf.log_partition(s, regime) == pytest.approx(1.7, abs=1e-15)
    assert crf.marginals(s, regime)[0, 0] == pytest.approx(1.0)
    assert crf.map_tree(s, regime) == [0]
    loss, grad = crf.nll(s, [0], regime)
    assert loss == 0.0 and np.allclose(grad, 0.0)


@pytest.mark.parametrize("regime", REGIMES)
def test_two_tokens_zero_scores(regime):
    s = np.zeros((3, 2))
    assert crf.log_partition(s, regime) == pytest.approx(math.log(2), abs=1e-14)
    mu = crf.marginals(s, regime)
    # feasible arcs: 0->1, 0->2, 1->2, 2->1 ; self-arcs impossible
    assert mu[0, 0] == pytest.approx(0.5) and mu[0, 1] == pytest.approx(0.5)
    assert mu[2, 0] == pytest.approx(0.5) and mu[1, 1] == pytest.approx(0.5)
    loss, grad = crf.nll(s, [0, 1], regime)
    assert loss == pytest.approx(math.log(2), abs=1e-14)
    assert grad[0, 0] == pytest.approx(-0.5)


def test_three_tokens_zero_scores():
    s = np.zeros((4, 3))
    assert crf.log_partition(s, crf.NONPROJECTIVE) == pytest.approx(math.log(9), abs=1e-14)
    assert crf.log_partition(s, crf.PROJECTIVE) == pytest.approx(math.log(7), abs=1e-14)


def test_dominant_arc():
    s = np.zeros((3, 2))
    s[0, 0] = 5.0
    for regime in REGIMES:
        assert crf.map_tree(s, regime) == [0, 1]


@pytest.mark.parametrize("n, counts", [(1, (1, 1)), (2, (2, 2)), (3, (7, 9)), (4, (30, 64)), (5, (143, 625))])
def test_enumerate_trees_counts(n, counts):
    assert len(crf.enumerate_trees(n, crf.PROJECTIVE)) == counts[0] == len(brute_trees(n, True))
    assert len(crf.enumerate_trees(n, crf.NONPROJECTIVE)) == counts[1] == len(brute_trees(n, False))
    assert set(crf.enumerate_trees(n, crf.PROJECTIVE)) == set(brute_trees(n, True))


def test_enumerate_trees_limit():
    with pytest.raises(ValueError):
        crf.enumerate_trees(8)


@pytest.mark.parametrize("regime", REGIMES)
def test_against_enumeration(regime):
    rng = np.random.default_rng(11)
    for n in range(1, 6):
        for _ in range(20):
            s = random_scores(rng, n)
            logz, mu, best = brute_crf(s, regime == crf.PROJECTIVE)
            assert abs(crf.log_partition(s, regime) - logz) <= 1e-8
            assert np.max(np.abs(crf.marginals(s, regime) - mu)) <= 1e-8
            heads = crf.map_tree(s, regime)
            assert crf.tree_score(s, heads) == pytest.approx(best, abs=1e-12)
            trees = crf.enumerate_trees(n, regime)
            total = sum(math.exp(crf.tree_score(s, t) - logz) for t in trees)
            assert total == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("regime", REGIMES)
def test_marginal_columns_sum_to_one(regime):
    rng = np.random.default_rng(12)
    for n in (3, 8, 15):
        mu = crf.marginals(random_scores(rng, n), regime)
        assert np.allclose(mu.sum(axis=0), 1.0, atol=1e-10)


@pytest.mark.parametrize("regime", REGIMES)
def test_nll_gradient(regime):
    rng = np.random.default_rng(13)
    for n in range(1, 5):
        for _ in range(5):
            s = random_scores(rng, n)
            trees = crf.enumerate_trees(n, regime)
            gold = list(trees[int(rng.integers(len(trees)))])
            loss, grad = crf.nll(s, gold, regime)
            assert loss >= 0
            indicator = np.zeros_like(s)
            indicator[gold, np.arange(n)] = 1
            assert np.array_equal(grad, crf.marginals(s, regime) - indicator)
            numeric = central_diff(lambda: crf.nll(s, gold, regime)[0], s)
            assert rel_error(grad, numeric) <= 1e-6


def test_nll_positive_when_several_trees():
    rng = np.random.default_rng(14)
    s = random_scores(rng, 3)
    assert crf.nll(s, [0, 1, 2], crf.NONPROJECTIVE)[0] > 0


def test_nll_on_tape():
    rng = np.random.default_rng(15)
    x = Tensor(random_scores(rng, 4), requires_grad=True)
    loss = crf.nll_tensor(x, [2, 0, 2, 3])
    loss.backward()
    assert np.array_equal(x.grad, crf.nll(x.data, [2, 0, 2, 3])[1])


def test_projective_regime_refuses_crossing_gold():
    s = np.zeros((5, 4))
    gold = [3, 4, 0, 3]        # arcs 3->1 and 4->2 cross
    assert not crf.is_projective(gold)
    with pytest.raises(crf.RegimeMismatch):
        crf.nll(s, gold, crf.PROJECTIVE)
    assert crf.nll(s, gold, crf.NONPROJECTIVE)[0] == pytest.approx(math.log(len(crf.enumerate_trees(4))))


def test_projective_bounded_by_nonprojective():
    rng = np.random.default_rng(16)
    for n in range(1, 9):
        s = random_scores(rng, n)
        assert crf.log_partition(s, crf.PROJECTIVE) <= crf.log_partition(s, crf.NONPROJECTIVE) + 1e-12


@pytest.mark.parametrize("regime", REGIMES)
def test_large_scores_are_stable(regime):
    rng = np.random.default_rng(17)
    s = random_scores(rng, 6, spread=400.0)
    logz, mu, best = brute_crf(s, regime == crf.PROJECTIVE)
    assert crf.log_partition(s, regime) == pytest.approx(logz, rel=1e-12)
    assert np.max(np.abs(crf.marginals(s, regime) - mu)) <= 1e-8
    assert np.all(np.isfinite(crf.marginals(s, regime)))


@pytest.mark.parametrize("regime", REGIMES)
def test_map_tree_longer_sentences_is_valid(regime):
    rng = np.random.default_rng(18)
    for n in (10, 25):
        heads = crf.map_tree(random_scores(rng, n), regime)
        assert crf.is_single_root_tree(heads)
        if regime == crf.PROJECTIVE:
            assert crf.is_projective(heads)


def test_contract_errors():
    with pytest.raises(DegenerateInputError):
        crf.log_partition(np.zeros((1, 0)))
    bad = np.zeros((3, 2))
    bad[0, 1] = np.nan
    with pytest.raises(ValueError, match="finite"):
        crf.log_partition(bad)
    with pytest.raises(ValueError):
        crf.log_partition(np.zeros((2, 2)))


def test_tree_distribution():
    rng = np.random.default_rng(19)
    s = random_scores(rng, 4)
    dist = crf.TreeDistribution(s)
    probs = [math.exp(dist.log_prob(t)) for t in crf.enumerate_trees(4)]
    assert all(0 < p <= 1 for p in probs)
    assert sum(probs) == pytest.approx(1.0, abs=1e-12)
    assert dist.argmax == crf.map_tree(s)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.floats(0.1, 500.0), st.integers(0, 2**32 - 1))
def test_distribution_properties(n, spread, seed):
    s = np.random.default_rng(seed).uniform(-spread, spread, (n + 1, n))
    for regime in REGIMES:
        mu = crf.marginals(s, regime)
        assert np.all(mu >= -1e-12) and np.all(mu <= 1 + 1e-12)
        assert np.allclose(mu.sum(axis=0), 1.0, atol=1e-9)
        assert mu[0].sum() == pytest.approx(1.0, abs=1e-9)
        heads = crf.map_tree(s, regime)
        assert crf.is_single_root_tree(heads)
        assert crf.tree_score(s, heads) <= crf.log_partition(s, regime) + 1e-9
    assert crf.log_partition(s, crf.PROJECTIVE) <= crf.log_partition(s, crf.NONPROJECTIVE) + 1e-9 * max(1, spread)
