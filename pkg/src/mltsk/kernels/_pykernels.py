"""Pure numpy implementations of the hot kernels.

Every reduction runs over a leading (non-contiguous) axis so numpy adds the
terms sequentially in index order, mirroring the compiled loops.
"""

import numpy as np

# elements per temporary block in the broadcast kernels
_BLOCK = 1 << 22


def _chunks(n, per_item):
    step = max(1, _BLOCK // max(1, per_item))
    for start in range(0, n, step):
        yield slice(start, min(n, start + step))


def firing_strengths(X, centers, widths):
    """Normalized firing strengths, K x N, from log-space rule activations."""
    D, N = X.shape
    K = centers.shape[0]
    out = np.empty((K, N))
    cT = centers.T[:, :, None]
    wT = widths.T[:, :, None]
    for sl in _chunks(N, D * K):
        t = (X[:, None, sl] - cT) / wT
        loga = -0.5 * np.sum(t * t, axis=0)
        mx = np.max(loga, axis=0)
        dead = mx == -np.inf
        if dead.any():
            mx = np.where(dead, 0.0, mx)
        e = np.exp(loga - mx)
        s = np.sum(e, axis=0)
        blk = e / s
        if dead.any():
            blk[:, dead] = 1.0 / K
        out[:, sl] = blk
    return out


def fuzzy_map(X, centers, widths):
    D, N = X.shape
    K = centers.shape[0]
    mu = firing_strengths(X, centers, widths)
    G = np.empty((K, D + 1, N))
    G[:, 0, :] = mu
    G[:, 1:, :] = mu[:, None, :] * X[None, :, :]
    return G.reshape(K * (D + 1), N)


def fcm_memberships(Xt, centers, m):
    """FCM membership update.

    Returns ``(U, d2)`` where ``d2[j, k]`` is the squared distance from point
    ``j`` to center ``k``. Points sitting on a center get crisp membership,
    shared evenly when several centers coincide with them.
    """
    N, D = Xt.shape
    K = centers.shape[0]
    d2 = np.empty((N, K))
    XT = Xt.T
    for sl in _chunks(N, D * K):
        diff = XT[:, sl, None] - centers.T[:, None, :]
        d2[sl] = np.sum(diff * diff, axis=0)
    dmin = d2.min(axis=1, keepdims=True)
    crisp = dmin[:, 0] == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = dmin / d2
    expo = 1.0 / (m - 1.0)
    w = ratio if expo == 1.0 else ratio ** expo
    if crisp.any():
        w[crisp] = (d2[crisp] == 0.0).astype(np.float64)
    s = np.zeros(N)
    for k in range(K):
        s += w[:, k]
    U = w / s[:, None]
    return U, d2


def soft_threshold(Z, theta):
    Z = np.asarray(Z, dtype=np.float64)
    return np.where(Z > theta, Z - theta, np.where(Z < -theta, Z + theta, 0.0))


def label_ranks(scores):
    """Ranks per column (1 = highest); ties go to the lower label index."""
    L, N = scores.shape
    order = np.argsort(-scores, axis=0, kind="stable")
    ranks = np.empty((L, N), dtype=np.int64)
    np.put_along_axis(ranks, order, np.arange(1, L + 1)[:, None], axis=0)
    return ranks


def instance_metrics(scores, truth):
    """Per-instance AP, OE, RL and CV; NaN marks an instance a metric skips."""
    L, N = scores.shape
    rel = truth != 0
    nrel = rel.sum(axis=0)
    ranks = label_ranks(scores)
    order = np.argsort(ranks, axis=0)
    rel_sorted = np.take_along_axis(rel, order, axis=0)
    cum = np.cumsum(rel_sorted, axis=0)
    prec_sorted = cum / np.arange(1, L + 1)[:, None]
    prec = np.empty((L, N))
    np.put_along_axis(prec, order, prec_sorted, axis=0)
    prec = np.where(rel, prec, 0.0)
    ap_sum = np.zeros(N)
    for l in range(L):
        ap_sum += prec[l]

    has = nrel > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        ap = np.where(has, ap_sum / nrel, np.nan)
    top = order[0]
    oe = np.where(has, (~rel[top, np.arange(N)]).astype(np.float64), np.nan)
    maxrank = np.where(rel, ranks, 0).max(axis=0)
    cv = np.where(has, (maxrank - 1) / L, np.nan)

    rl = np.full(N, np.nan)
    mixed = has & (nrel < L)
    for sl in _chunks(N, L * L):
        s = scores[:, sl]
        r = rel[:, sl]
        # bad[l, l'] for relevant l and irrelevant l' with s[l] <= s[l']
        bad = (s[:, None, :] <= s[None, :, :]) & r[:, None, :] & ~r[None, :, :]
        nbad = bad.sum(axis=(0, 1))
        npairs = nrel[sl] * (L - nrel[sl])
        with np.errstate(invalid="ignore", divide="ignore"):
            rl[sl] = np.where(mixed[sl], nbad / npairs, np.nan)
    return ap, oe, rl, cv
