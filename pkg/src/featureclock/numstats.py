"""Self-contained numerical kernel used by the clock builders.

Column standardization, ordinary least squares with classical t-tests,
Student-t tail probabilities, and a small deterministic PCA. Every routine is
a pure function of its inputs: no caching, no shared mutable state, safe to
call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ComputationError

# Sample standard deviations at or below this are treated as zero variance:
# standardization leaves such columns centered only and callers drop them.
EPS_VAR = 1e-12

# Relative tolerance for the numerical rank of a design matrix.
RANK_TOL = 1e-10

# A regression counts as an exact fit when the residual variance falls below
# EXACT_FIT_EPS * (mean(y^2) + 1). t statistics are meaningless there, so
# p-values are pinned to 0 (|beta| > 1e-10) or 1 (idle feature).
EXACT_FIT_EPS = 1e-14

_BETA_TOL = 1e-12
_BETA_MAX_ITER = 300


def as_matrix(values, *, name: str = "matrix", min_rows: int = 1, min_cols: int = 1) -> np.ndarray:
    """Validate a 2-D array of finite floats and return it as float64."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise ComputationError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_rows or arr.shape[1] < min_cols:
        raise ComputationError(
            f"{name} must be at least {min_rows}x{min_cols}, got {arr.shape[0]}x{arr.shape[1]}"
        )
    if not np.all(np.isfinite(arr)):
        raise ComputationError(f"{name} contains NaN or infinite values")
    return arr


def center_columns(m) -> np.ndarray:
    """Subtract each column's mean. Two passes keep residual means near machine zero."""
    x = as_matrix(m)
    centered = x - x.mean(axis=0)
    centered -= centered.mean(axis=0)
    return centered


def standardize_columns(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center columns and scale to unit sample (n-1) standard deviation.

    Returns ``(standardized, means, stds)``. Columns with std <= EPS_VAR are
    centered but not scaled; callers detect them through the returned stds
    and decide whether to drop the feature.
    """
    x = as_matrix(m, min_rows=2, name="matrix")
    means = x.mean(axis=0)
    stds = x.std(axis=0, ddof=1)
    centered = x - means
    centered -= centered.mean(axis=0)
    safe = np.where(stds > EPS_VAR, stds, 1.0)
    return centered / safe, means, stds


def _householder_qr(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[np.ndarray | None]]:
    """Householder QR with greedy column pivoting.

    Returns ``(r, perm, reflectors)`` with x[:, perm] = Q R. Q is never formed;
    apply the reflectors with :func:`_apply_qt`. Column norms are recomputed at
    every step, which is exact and cheap at the widths this package handles.
    """
    a = np.array(x, dtype=float)
    n, d = a.shape
    perm = np.arange(d)
    reflectors: list[np.ndarray | None] = []
    for k in range(min(n, d)):
        sub = a[k:, k:]
        norms = np.sqrt((sub * sub).sum(axis=0))
        j = k + int(np.argmax(norms))
        if j != k:
            a[:, [k, j]] = a[:, [j, k]]
            perm[[k, j]] = perm[[j, k]]
        col = a[k:, k]
        normx = float(np.linalg.norm(col))
        if normx == 0.0:
            reflectors.append(None)
            continue
        v = col.copy()
        v[0] += normx if v[0] >= 0 else -normx
        v /= np.linalg.norm(v)
        a[k:, k:] -= 2.0 * np.outer(v, v @ a[k:, k:])
        reflectors.append(v)
    r = np.triu(a[: min(n, d), :])
    return r, perm, reflectors


def _apply_qt(reflectors: list[np.ndarray | None], y: np.ndarray) -> np.ndarray:
    """Apply Q^T from the stored Householder reflectors to a vector."""
    out = np.array(y, dtype=float)
    for k, v in enumerate(reflectors):
        if v is None:
            continue
        out[k:] -= 2.0 * v * float(v @ out[k:])
    return out


def _solve_upper(r: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Back substitution for an upper-triangular system."""
    d = r.shape[0]
    z = np.zeros_like(b, dtype=float)
    for i in range(d - 1, -1, -1):
        z[i] = (b[i] - r[i, i + 1 :] @ z[i + 1 :]) / r[i, i]
    return z


@dataclass(frozen=True)
class RegressionFit:
    """Per-feature least-squares results on centered data (intercept absorbed)."""

    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    dof: int
    residual_variance: float


def ols_fit(x, y) -> RegressionFit:
    """Least squares of a centered target on a centered/standardized design.

    The solve goes through a rank-revealing pivoted QR, never an explicit
    inverse. Standard errors come from s^2 * diag((X^T X)^-1) with
    s^2 = RSS / dof and dof = n - d - 1 (one degree lost to the centering that
    absorbed the intercept). p-values are two-sided Student-t tails.
    """
    x = as_matrix(x, name="design matrix")
    yv = np.asarray(y, dtype=float).ravel()
    n, d = x.shape
    if yv.shape[0] != n:
        raise ComputationError(f"target length {yv.shape[0]} does not match {n} rows")
    if not np.all(np.isfinite(yv)):
        raise ComputationError("target contains NaN or infinite values")
    if n < d + 2:
        raise ComputationError(
            f"insufficient observations: n={n} but need at least d+2={d + 2}"
        )

    r, perm, reflectors = _householder_qr(x)
    diag = np.abs(np.diag(r))
    tol = RANK_TOL * math.sqrt(float((x * x).sum()))
    rank = int(np.sum(diag > tol))
    if rank < d:
        dependent = sorted(int(perm[i]) for i in range(rank, d))
        raise ComputationError(
            f"design matrix is rank deficient (rank {rank} of {d}); "
            f"offending columns: {dependent}"
        )

    qty = _apply_qt(reflectors, yv)[:d]
    solution = _solve_upper(r[:, :d], qty)
    beta = np.empty(d)
    beta[perm] = solution

    residuals = yv - x @ beta
    rss = float(residuals @ residuals)
    dof = n - d - 1
    s2 = rss / dof

    # diag((X^T X)^-1) = row sums of squares of R^-1, mapped back through perm
    rinv = _solve_upper(r[:, :d], np.eye(d))
    unscaled = (rinv * rinv).sum(axis=1)
    xtx_inv_diag = np.empty(d)
    xtx_inv_diag[perm] = unscaled

    se = np.sqrt(s2 * xtx_inv_diag)
    t = np.divide(beta, se, out=np.zeros_like(beta), where=se > 0)

    if s2 < EXACT_FIT_EPS * (float((yv * yv).mean()) + 1.0):
        p = np.where(np.abs(beta) > 1e-10, 0.0, 1.0)
    else:
        p = np.array([student_t_two_sided_p(float(tv), dof) for tv in t])

    return RegressionFit(beta, se, t, p, dof, s2)


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, by the modified Lentz method."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_TOL:
            return h
    raise ComputationError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), evaluated through the continued fraction.

    The symmetric form is used when x > (a+1)/(a+b+2), where the fraction
    converges faster.
    """
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, dof: int) -> float:
    """P(|T| >= |t|) for a Student-t variable with the given degrees of freedom."""
    if dof < 1:
        raise ComputationError(f"degrees of freedom must be >= 1, got {dof}")
    if not math.isfinite(t):
        raise ComputationError("t statistic must be finite")
    x = dof / (dof + t * t)
    p = regularized_incomplete_beta(dof / 2.0, 0.5, x)
    return min(1.0, max(0.0, p))


def normal_two_sided_p(z: float) -> float:
    """P(|Z| >= |z|) for a standard normal variable."""
    if not math.isfinite(z):
        raise ComputationError("z statistic must be finite")
    return math.erfc(abs(z) / math.sqrt(2.0))


def _jacobi_eigh(sym: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps until the off-diagonal Frobenius norm drops below 1e-12 (relative
    to the matrix norm when that norm exceeds 1, so the loop terminates on any
    scale). Returns (eigenvalues, eigenvectors as columns).
    """
    a = np.array(sym, dtype=float)
    d = a.shape[0]
    vectors = np.eye(d)
    tol = 1e-12 * max(1.0, math.sqrt(float((a * a).sum())))
    for _ in range(100):
        off = math.sqrt(float((a * a).sum() - (np.diag(a) ** 2).sum()))
        if off < tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vec_p = vectors[:, p].copy()
                vec_q = vectors[:, q].copy()
                vectors[:, p] = c * vec_p - s * vec_q
                vectors[:, q] = s * vec_p + c * vec_q
    return np.diag(a).copy(), vectors


@dataclass(frozen=True)
class PcaModel:
    """Top-2 principal directions of a data matrix.

    components holds two unit-norm loading rows; the sign convention makes
    each row's largest-magnitude entry positive, so results are reproducible.
    """

    components: np.ndarray
    explained_variance: np.ndarray
    mean: np.ndarray

    def transform(self, x) -> np.ndarray:
        """Project rows onto the two principal directions (scores)."""
        arr = as_matrix(x, name="matrix")
        return (arr - self.mean) @ self.components.T


def pca_2d(x) -> PcaModel:
    """Two-component PCA by Jacobi eigendecomposition of the sample covariance."""
    arr = as_matrix(x, name="matrix")
    n, d = arr.shape
    if d < 2:
        raise ComputationError(f"pca_2d needs at least 2 features, got {d}")
    if n < 3:
        raise ComputationError(f"pca_2d needs at least 3 rows, got {n}")
    mean = arr.mean(axis=0)
    centered = arr - mean
    cov = (centered.T @ centered) / (n - 1)
    eigenvalues, eigenvectors = _jacobi_eigh(cov)
    order = np.argsort(-eigenvalues, kind="stable")[:2]
    components = eigenvectors[:, order].T.copy()
    for row in components:
        lead = int(np.argmax(np.abs(row)))
        if row[lead] < 0:
            row *= -1.0
    components /= np.linalg.norm(components, axis=1, keepdims=True)
    explained = np.maximum(eigenvalues[order], 0.0)
    return PcaModel(components, explained, mean)
