"""Independent reference computations used to pin expected test values.

Each oracle deliberately takes a different path than the library code it
checks: quadrature instead of continued fractions, extended-precision normal
equations instead of pivoted QR, exhaustive enumeration instead of Kruskal,
and bulk per-angle refits instead of the closed-form maximum.
"""

import itertools
import math

import numpy as np


def simpson_t_two_sided(t: float, dof: int, panels: int = 20000) -> float:
    """Two-sided Student-t tail by composite Simpson integration of the density."""
    t = abs(float(t))
    if t == 0.0:
        return 1.0
    log_c = (
        math.lgamma((dof + 1) / 2.0)
        - math.lgamma(dof / 2.0)
        - 0.5 * math.log(dof * math.pi)
    )
    c = math.exp(log_c)

    def density(x: float) -> float:
        return c * (1.0 + x * x / dof) ** (-(dof + 1) / 2.0)

    h = t / panels
    total = density(0.0) + density(t)
    for i in range(1, panels):
        total += density(i * h) * (4.0 if i % 2 else 2.0)
    integral = total * h / 3.0
    return 1.0 - 2.0 * integral


def normal_equations_fit(x: np.ndarray, y: np.ndarray, dps: int = 50):
    """OLS through the normal equations at extended precision (mpmath).

    Returns (beta, std_errors, p_values) as float arrays, with dof = n - d - 1
    to match the centered-design convention.
    """
    from mpmath import mp

    with mp.workdps(dps):
        n, d = x.shape
        X = mp.matrix(x.tolist())
        yv = mp.matrix([float(v) for v in y])
        xtx = X.T * X
        xty = X.T * yv
        beta = mp.lu_solve(xtx, xty)
        resid = yv - X * beta
        rss = sum(resid[i] ** 2 for i in range(n))
        dof = n - d - 1
        s2 = rss / dof
        inv = xtx**-1
        se = [mp.sqrt(s2 * inv[j, j]) for j in range(d)]
        p = []
        for j in range(d):
            tj = beta[j] / se[j]
            xj = dof / (dof + tj**2)
            p.append(mp.betainc(mp.mpf(dof) / 2, mp.mpf(1) / 2, 0, xj, regularized=True))
        return (
            np.array([float(b) for b in beta]),
            np.array([float(v) for v in se]),
            np.array([float(v) for v in p]),
        )


def refit_sweep(x: np.ndarray, y_centered: np.ndarray, m: int):
    """Per-angle OLS coefficients at angles i*180/m, via one bulk lstsq call.

    Every column of the target block is an independent least-squares fit of
    the projection at that angle; numpy's SVD-based lstsq is a different
    solve path than the library's pivoted QR.
    """
    angles = np.arange(m) * 180.0 / m
    rad = np.radians(angles)
    targets = np.outer(y_centered[:, 0], np.cos(rad)) + np.outer(
        y_centered[:, 1], np.sin(rad)
    )
    coef, *_ = np.linalg.lstsq(x, targets, rcond=None)
    return angles, coef  # coef has shape (d, m)


def _pruefer_to_edges(seq, k):
    degree = [1] * k
    for node in seq:
        degree[node] += 1
    edges = []
    for node in seq:
        for leaf in range(k):
            if degree[leaf] == 1:
                edges.append((leaf, node))
                degree[leaf] -= 1
                degree[node] -= 1
                break
    tail = [i for i in range(k) if degree[i] == 1]
    edges.append((tail[0], tail[1]))
    return edges


def min_spanning_weight(centers) -> float:
    """Minimum total weight over all labeled spanning trees (Pruefer enumeration)."""
    pts = np.asarray(centers, dtype=float)
    k = len(pts)
    if k == 1:
        return 0.0
    if k == 2:
        return float(np.linalg.norm(pts[0] - pts[1]))
    best = math.inf
    for seq in itertools.product(range(k), repeat=k - 2):
        edges = _pruefer_to_edges(seq, k)
        weight = sum(float(np.linalg.norm(pts[a] - pts[b])) for a, b in edges)
        best = min(best, weight)
    return best


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ez = np.exp(eta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_penalized_gradient(x, labels, intercept, coef, penalty):
    """Gradient of the penalized log-likelihood at the given parameters."""
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels, dtype=float)
    design = np.column_stack([np.ones(len(labels)), x])
    beta = np.concatenate([[intercept], np.asarray(coef, dtype=float)])
    prob = _sigmoid(design @ beta)
    ridge = np.concatenate([[0.0], np.full(len(coef), penalty)])
    return design.T @ (labels - prob) - ridge * beta
