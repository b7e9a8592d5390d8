"""Thurstone Case V scaling of pairwise-comparison votes in JOD units.

``votes[i, j]`` counts how often option ``j`` was preferred over option
``i``. One JOD separates two options that are told apart 75% of the time,
so the probit spread is ``sigma = 1 / Phi^-1(0.75)``.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.special import log_ndtr, ndtri
from scipy.stats import norm

from ._validation import DataError

__all__ = [
    "SIGMA",
    "JodResult",
    "check_votes",
    "scale_jod",
    "jod_ztest",
    "bootstrap_ci",
    "screen_outliers",
    "read_votes_csv",
]

SIGMA = 1.0 / ndtri(0.75)


@dataclass(frozen=True)
class JodResult:
    scores: np.ndarray
    covariance: np.ndarray
    ci_low: np.ndarray = None
    ci_high: np.ndarray = None
    log_likelihood: float = float("nan")
    iterations: int = 0


def check_votes(votes):
    v = np.asarray(votes, dtype=float)
    if v.ndim not in (2, 3) or v.shape[-1] != v.shape[-2] or v.shape[-1] < 2:
        raise DataError(f"votes must be (n, n) or (observers, n, n) with n >= 2, got {v.shape}")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise DataError("votes must be finite and nonnegative")
    if np.any(np.diagonal(v, axis1=-2, axis2=-1) != 0):
        raise DataError("vote matrices must have a zero diagonal")
    return v


def _components(v):
    adj = (v + v.T) > 0
    return connected_components(adj, directed=False)


def _loglik(q, v):
    d = (q[None, :] - q[:, None]) / SIGMA
    return float(np.sum(v * log_ndtr(d)))


def _grad_hess(q, v):
    d = (q[None, :] - q[:, None]) / SIGMA
    lam = np.exp(norm.logpdf(d) - log_ndtr(d))  # inverse Mills ratio
    gw = v * lam / SIGMA
    g = gw.sum(axis=0) - gw.sum(axis=1)
    hw = -v * lam * (d + lam) / SIGMA ** 2
    info = hw + hw.T  # observed information, Laplacian-like
    info[np.diag_indices_from(info)] = -info.sum(axis=1)
    return g, info


def _initial(v):
    n = v.shape[0]
    tot = v + v.T
    rows, rhs = [], []
    for i in range(n):
        for j in range(i + 1, n):
            if tot[i, j] > 0:
                p = np.clip(v[i, j] / tot[i, j], 1e-3, 1 - 1e-3)
                r = np.zeros(n)
                r[j], r[i] = 1.0, -1.0
                rows.append(r)
                rhs.append(SIGMA * ndtri(p))
    q = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)[0]
    return q - q.mean()


def scale_jod(votes, pseudo_votes=0.5, tol=1e-10, max_iter=200):
    """Maximum-likelihood JOD scores, mean-anchored at zero."""
    v = check_votes(votes)
    if v.ndim == 3:
        v = v.sum(axis=0)
    ncomp, labels = _components(v)
    if ncomp > 1:
        groups = [np.flatnonzero(labels == k).tolist() for k in range(ncomp)]
        raise DataError(f"comparison graph is disconnected; components: {groups}")
    compared = (v + v.T) > 0
    v = v + pseudo_votes * compared
    q = _initial(v)
    ll = _loglik(q, v)
    it = 0
    for it in range(1, max_iter + 1):
        g, h = _grad_hess(q, v)
        step = np.linalg.pinv(h) @ g  # h is the (PSD) observed information
        step -= step.mean()
        t = 1.0
        while True:
            q_new = q + t * step
            ll_new = _loglik(q_new, v)
            if ll_new >= ll - 1e-12 or t < 1e-8:
                break
            t *= 0.5
        q, ll_old, ll = q_new, ll, ll_new
        if np.max(np.abs(t * step)) < tol or abs(ll - ll_old) < tol * max(1.0, abs(ll)):
            break
    _, h = _grad_hess(q, v)
    cov = np.linalg.pinv(h)
    cov = 0.5 * (cov + cov.T)
    return JodResult(q - q.mean(), cov, log_likelihood=ll, iterations=it)


def jod_ztest(result, i, j):
    """Two-tailed z-test for ``q_i - q_j``; returns ``(z, p)``."""
    if i == j:
        raise ValueError("i and j must differ")
    c = result.covariance
    var = c[i, i] + c[j, j] - 2.0 * c[i, j]
    if not var > 0:
        raise FloatingPointError(f"non-positive variance {var:g} for the score difference")
    z = (result.scores[i] - result.scores[j]) / np.sqrt(var)
    return float(z), float(2.0 * norm.sf(abs(z)))


def bootstrap_ci(observer_votes, n_samples=500, seed=0, alpha=0.05, pseudo_votes=0.5,
                 return_samples=False):
    """Percentile CIs from resampling observers with replacement."""
    v = check_votes(observer_votes)
    if v.ndim != 3 or v.shape[0] < 2:
        raise DataError("bootstrap needs per-observer votes from at least 2 observers")
    n_obs = v.shape[0]
    children = np.random.SeedSequence(seed).spawn(int(n_samples))
    samples = np.empty((int(n_samples), v.shape[1]))
    for k, ss in enumerate(children):
        rng = np.random.default_rng(ss)
        for _ in range(100):
            pick = rng.integers(0, n_obs, n_obs)
            agg = v[pick].sum(axis=0)
            if _components(agg)[0] == 1:
                break
        samples[k] = scale_jod(agg, pseudo_votes).scores
    lo = np.percentile(samples, 100 * alpha / 2, axis=0)
    hi = np.percentile(samples, 100 * (1 - alpha / 2), axis=0)
    return (lo, hi, samples) if return_samples else (lo, hi)


def screen_outliers(observer_votes, pseudo_votes=0.5, k=1.5):
    """Observers whose mean log-likelihood under the group model is unusually low."""
    v = check_votes(observer_votes)
    if v.ndim != 3 or v.shape[0] < 3:
        return []
    q = scale_jod(v.sum(axis=0), pseudo_votes).scores
    d = (q[None, :] - q[:, None]) / SIGMA
    logp = log_ndtr(d)
    counts = v.sum(axis=(1, 2))
    ll = np.array([np.sum(vo * logp) / c if c > 0 else np.nan for vo, c in zip(v, counts)])
    valid = np.isfinite(ll)
    q1, q3 = np.percentile(ll[valid], [25, 75])
    cut = q1 - k * (q3 - q1)
    return [int(i) for i in np.flatnonzero(valid & (ll < cut))]


def read_votes_csv(path):
    """Parse ``observer,option_i,option_j,chosen`` rows.

    Returns ``(options, observers, votes)`` with votes shaped
    ``(observers, n, n)``.
    """
    options, observers, rows = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, 1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and [c.strip().lower() for c in row] == \
                    ["observer", "option_i", "option_j", "chosen"]:
                continue
            if len(row) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            obs, a, b, chosen = (c.strip() for c in row)
            if chosen not in (a, b) or a == b:
                raise DataError(f"{path}:{lineno}: chosen option {chosen!r} not in pair ({a}, {b})")
            for name, lst in ((obs, observers), (a, options), (b, options)):
                if name not in lst:
                    lst.append(name)
            rows.append((obs, a, b, chosen))
    if len(options) < 2:
        raise DataError(f"{path}: need at least two options")
    votes = np.zeros((len(observers), len(options), len(options)))
    for obs, a, b, chosen in rows:
        o, ia, ib = observers.index(obs), options.index(a), options.index(b)
        if chosen == b:
            votes[o, ia, ib] += 1
        else:
            votes[o, ib, ia] += 1
    return options, observers, votes
