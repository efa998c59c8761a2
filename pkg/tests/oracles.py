"""Independent reference implementations used only by the tests.

They are deliberately naive: explicit inverses, double loops and
brute-force scans, sharing no code with the package.
"""
import math

import numpy as np


def se_kernel(a, b, sigma, l1, l2):
    out = np.empty((len(a), len(b)))
    for i, p in enumerate(a):
        for j, q in enumerate(b):
            r2 = ((p[0] - q[0]) / l1) ** 2 + ((p[1] - q[1]) / l2) ** 2
            out[i, j] = sigma ** 2 * math.exp(-0.5 * r2)
    return out


def _se_kernel_ld(a, b, sigma, l1, l2):
    a = np.asarray(a, np.longdouble)
    b = np.asarray(b, np.longdouble)
    r2 = (((a[:, None, 0] - b[None, :, 0]) / np.longdouble(l1)) ** 2
          + ((a[:, None, 1] - b[None, :, 1]) / np.longdouble(l2)) ** 2)
    return np.longdouble(sigma) ** 2 * np.exp(-r2 / 2)


def gauss_jordan_inverse(M):
    """Explicit inverse by Gauss-Jordan elimination with partial pivoting."""
    n = len(M)
    A = np.hstack([np.asarray(M, np.longdouble), np.eye(n, dtype=np.longdouble)])
    for c in range(n):
        p = c + int(np.argmax(np.abs(A[c:, c])))
        A[[c, p]] = A[[p, c]]
        A[c] /= A[c, c]
        f = A[:, c].copy()
        f[c] = 0
        A -= f[:, None] * A[c][None, :]
    return A[:, n:]


def dense_posterior(X, y, Q, sigma, l1, l2, noise):
    """Posterior mean and variance through an explicit matrix inverse.

    Computed in extended precision: ``sigma^2 - k' K^-1 k`` cancels badly
    where the posterior variance is tiny, and a float64 inverse would then
    be less accurate than the Cholesky solve it is meant to check.
    """
    K = _se_kernel_ld(X, X, sigma, l1, l2) + np.longdouble(noise) * np.eye(len(X), dtype=np.longdouble)
    Kinv = gauss_jordan_inverse(K)
    Ks = _se_kernel_ld(X, Q, sigma, l1, l2)
    mean = Ks.T @ Kinv @ np.asarray(y, np.longdouble)
    var = np.longdouble(sigma) ** 2 - np.einsum("ij,ik,kj->j", Ks, Kinv, Ks)
    return mean.astype(float), var.astype(float)


def dense_nlml(X, y, sigma, l1, l2, noise):
    K = se_kernel(X, X, sigma, l1, l2) + noise * np.eye(len(X))
    sign, logdet = np.linalg.slogdet(K)
    assert sign > 0
    return 0.5 * y @ np.linalg.inv(K) @ y + 0.5 * logdet + 0.5 * len(y) * math.log(2 * math.pi)


def brute_voronoi(points, generators):
    """Nearest generator by explicit scan; the lowest index wins ties."""
    out = np.empty(len(points), dtype=int)
    for i, p in enumerate(points):
        best, best_d = 0, math.inf
        for j, g in enumerate(generators):
            d = (p[0] - g[0]) ** 2 + (p[1] - g[1]) ** 2
            if d < best_d:
                best, best_d = j, d
        out[i] = best
    return out


def polyline_length(points):
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        total += math.sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2)
    return total


def beta_formula(t, grid_size=16900, delta=0.1):
    return 2.0 * math.sqrt(t) * math.log(grid_size * math.pi ** 2 / (6.0 * delta))


def uct_score(q, n, parent_n, c=2.0):
    return q / n + c * math.sqrt(math.log(parent_n) / n)


def detection_replay(trajectories, maxima, radius):
    """Replay every (robot, step, maximum) triple in time order."""
    events = sorted((t, r, x, y) for r, traj in enumerate(trajectories) for t, x, y in traj)
    seen = set()
    out = {}
    for t, _, x, y in events:
        for j, m in enumerate(maxima):
            if j not in seen and math.hypot(x - m[0], y - m[1]) <= radius:
                seen.add(j)
                out.setdefault(len(seen), t)
    return out


def random_hyper(rng):
    """Random but well-conditioned hyperparameters for oracle comparisons."""
    from hotspot_ipp.gp import Hyperparameters  # container only

    return Hyperparameters(float(rng.uniform(0.2, 3.0)),
                           (float(rng.uniform(0.3, 4.0)), float(rng.uniform(0.3, 4.0))),
                           float(10 ** rng.uniform(-4, -1)))
