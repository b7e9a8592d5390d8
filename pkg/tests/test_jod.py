import numpy as np
import pytest
from scipy.stats import norm
from sklearn.base import clone

from holocgh._validation import DataError
from holocgh.estimators import JodScaler
from holocgh.jod import (
    SIGMA,
    JodResult,
    bootstrap_ci,
    jod_ztest,
    read_votes_csv,
    scale_jod,
    screen_outliers,
)


def simulate(q, n_obs, repeats, seed):
    """Per-observer votes drawn from the Thurstone Case V model."""
    rng = np.random.default_rng(seed)
    q = np.asarray(q, dtype=float)
    n = q.size
    v = np.zeros((n_obs, n, n))
    for i in range(n):
        for j in range(i + 1, n):
            p = norm.cdf((q[j] - q[i]) / SIGMA)
            k = rng.binomial(repeats, p, n_obs)
            v[:, i, j] = k
            v[:, j, i] = repeats - k
    return v


def test_sigma():
    assert norm.cdf(1 / SIGMA) == pytest.approx(0.75)


def test_75_percent_is_one_jod():
    v = np.array([[0, 7500], [2500, 0]])
    res = scale_jod(v)
    assert res.scores[1] - res.scores[0] == pytest.approx(1.0, abs=0.02)
    assert res.scores.sum() == pytest.approx(0, abs=1e-12)


def test_recovery():
    truth = np.array([-1.0, 0.0, 1.0])
    v = simulate(truth, 500, 3, seed=0)
    res = scale_jod(v)
    np.testing.assert_allclose(res.scores, truth, atol=0.1)


def test_ztest_identity_covariance():
    res = JodResult(np.array([np.sqrt(2), 0.0]), np.eye(2))
    z, p = jod_ztest(res, 0, 1)
    assert z == pytest.approx(1.0)
    assert p == pytest.approx(0.3173, abs=1e-4)
    assert jod_ztest(res, 1, 0)[0] == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        jod_ztest(res, 1, 1)
    with pytest.raises(FloatingPointError):
        jod_ztest(JodResult(np.zeros(2), np.ones((2, 2))), 0, 1)


def test_covariance_matches_difference_variance():
    v = simulate([-0.5, 0.0, 0.5], 200, 2, seed=1).sum(axis=0)
    res = scale_jod(v)
    assert np.allclose(res.covariance, res.covariance.T)
    assert np.all(np.linalg.eigvalsh(res.covariance) > -1e-12)
    # mean-anchored scores: the covariance annihilates the all-ones vector
    np.testing.assert_allclose(res.covariance @ np.ones(3), 0, atol=1e-10)


def test_symmetries():
    rng = np.random.default_rng(2)
    v = simulate([0.3, -0.7, 0.1, 0.9], 30, 2, seed=3).sum(axis=0)
    base = scale_jod(v).scores
    # swapping winner and loser negates the scale
    np.testing.assert_allclose(scale_jod(v.T).scores, -base, atol=1e-8)
    perm = rng.permutation(4)
    np.testing.assert_allclose(scale_jod(v[np.ix_(perm, perm)]).scores, base[perm], atol=1e-8)
    # balanced votes give equal scores
    even = np.full((3, 3), 5.0)
    np.fill_diagonal(even, 0)
    np.testing.assert_allclose(scale_jod(even).scores, 0, atol=1e-10)


def test_pseudo_votes_shrink_unanimous_pairs():
    v = np.array([[0, 10, 10], [0, 0, 10], [0, 0, 0]], dtype=float)
    spreads = [np.ptp(scale_jod(v, pseudo_votes=a).scores) for a in (0.25, 0.5, 1.0, 2.0)]
    assert np.all(np.isfinite(spreads))
    assert np.all(np.diff(spreads) < 0)


def test_disconnected_graph():
    v = np.zeros((4, 4))
    v[0, 1] = v[1, 0] = 3
    v[2, 3] = 4
    with pytest.raises(DataError, match="disconnected"):
        scale_jod(v)


def test_vote_validation():
    with pytest.raises(DataError):
        scale_jod(np.array([[1, 2], [3, 0]]))
    with pytest.raises(DataError):
        scale_jod(np.array([[0, -2], [3, 0]]))
    with pytest.raises(DataError):
        scale_jod(np.zeros((2, 3)))


def test_bootstrap_deterministic_and_covers_truth():
    truth = np.array([-0.5, 0.0, 0.5])
    v = simulate(truth, 40, 4, seed=4)
    a = bootstrap_ci(v, n_samples=100, seed=7, return_samples=True)
    b = bootstrap_ci(v, n_samples=100, seed=7, return_samples=True)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    lo, hi = a[:2]
    assert np.all(lo <= hi)
    assert np.all((lo <= truth + 0.05) & (truth - 0.05 <= hi))


def test_bootstrap_collapses_for_identical_observers():
    one = simulate([-0.5, 0.5, 0.0], 1, 6, seed=5)
    v = np.repeat(one, 10, axis=0)
    lo, hi = bootstrap_ci(v, n_samples=50, seed=0)
    np.testing.assert_allclose(lo, hi, atol=1e-9)
    with pytest.raises(DataError):
        bootstrap_ci(one, n_samples=10)


def test_inverted_observer_is_flagged():
    v = simulate([-1.0, 0.0, 1.0, 0.5], 20, 4, seed=6)
    v[13] = v[13].transpose()
    assert screen_outliers(v) == [13]
    assert screen_outliers(v[:2]) == []


def test_read_votes_csv(tmp_path):
    p = tmp_path / "votes.csv"
    p.write_text("observer,option_i,option_j,chosen\n"
                 "a,ours,base,ours\n"
                 "a,ours,base,ours\n"
                 "b,base,ours,base\n"
                 "# comment\n"
                 "b,ours,base,ours\n")
    options, observers, votes = read_votes_csv(p)
    assert options == ["ours", "base"] and observers == ["a", "b"]
    agg = votes.sum(axis=0)
    assert agg[1, 0] == 3 and agg[0, 1] == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("a,x,y,z\n")
    with pytest.raises(DataError):
        read_votes_csv(bad)


def test_jod_scaler():
    v = simulate([-1.0, 0.0, 1.0], 20, 4, seed=8)
    v[3] = v[3].transpose()
    est = JodScaler(n_bootstrap=30, seed=1, exclude_outliers=True)
    assert clone(est).get_params()["n_bootstrap"] == 30
    est.fit(v)
    assert est.outliers_ == [3]
    assert est.result_.ci_low.shape == (3,)
    np.testing.assert_allclose(est.transform(), est.scores_)
    ref = scale_jod(np.delete(v, 3, axis=0)).scores
    np.testing.assert_allclose(est.scores_, ref)
