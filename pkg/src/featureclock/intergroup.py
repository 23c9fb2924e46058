"""Inter-group clocks: which features separate two groups of points.

Each spanning-tree edge between group centers gets a binary logistic
regression over the two groups' standardized features. Significant
coefficients become arrows along the line joining the centers: a positive
coefficient points at the group encoded as class 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .clockcore import ClockArrow
from .errors import ClockWarning, ComputationError
from .grouping import GroupingResult, MstEdges
from .ingest import Dataset, RunConfig
from .numstats import EPS_VAR, as_matrix, normal_two_sided_p, standardize_columns

# Ridge on the coefficients (never the intercept). Keeps the fit finite and
# flagged instead of divergent when the two groups are linearly separable.
L2_PENALTY = 1e-6

_MAX_ITER = 100
_STEP_TOL = 1e-10


@dataclass(frozen=True)
class LogisticFit:
    """Penalized logistic regression results with Wald tests per feature."""

    coefficients: np.ndarray
    intercept: float
    std_errors: np.ndarray
    wald_z: np.ndarray
    p_values: np.ndarray
    converged: bool
    iterations: int


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ez = np.exp(eta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_fit(x, labels, *, penalty: float = L2_PENALTY) -> LogisticFit:
    """Fit class probabilities by iteratively reweighted least squares.

    Maximizes the log-likelihood minus (penalty/2)*||coefficients||^2; the
    intercept is unpenalized. Iterations stop when the largest parameter
    update falls below 1e-10 or after 100 rounds, in which case the result is
    returned with ``converged=False`` and a warning (quasi-separation).
    Standard errors come from the inverse penalized Fisher information.
    """
    xm = as_matrix(x, name="design matrix")
    yv = np.asarray(labels, dtype=float).ravel()
    n, d = xm.shape
    if yv.shape[0] != n:
        raise ComputationError(f"got {yv.shape[0]} labels for {n} rows")
    classes = np.unique(yv)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise ComputationError("labels must be coded 0/1")
    if classes.size < 2:
        raise ComputationError("logistic regression needs both classes present")
    if n < d + 2:
        raise ComputationError(
            f"insufficient observations: n={n} but need at least d+2={d + 2}"
        )

    design = np.column_stack([np.ones(n), xm])
    ridge = np.full(d + 1, penalty)
    ridge[0] = 0.0
    beta = np.zeros(d + 1)
    converged = False
    iterations = 0
    for iterations in range(1, _MAX_ITER + 1):
        prob = _sigmoid(design @ beta)
        weight = np.clip(prob * (1.0 - prob), 1e-12, None)
        gradient = design.T @ (yv - prob) - ridge * beta
        fisher = design.T @ (design * weight[:, None]) + np.diag(ridge)
        try:
            step = np.linalg.solve(fisher, gradient)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(fisher, gradient, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            break
        beta = beta + step
        if float(np.max(np.abs(step))) < _STEP_TOL:
            converged = True
            break
    if not converged:
        warnings.warn(
            "logistic fit did not converge (groups may be linearly separable); "
            "coefficients and tests are reported as-is",
            ClockWarning,
            stacklevel=2,
        )

    prob = _sigmoid(design @ beta)
    weight = np.clip(prob * (1.0 - prob), 1e-12, None)
    fisher = design.T @ (design * weight[:, None]) + np.diag(ridge)
    try:
        covariance = np.linalg.inv(fisher)
    except np.linalg.LinAlgError:  # unpenalized fit under separation
        covariance = np.linalg.pinv(fisher)
    se = np.sqrt(np.maximum(np.diag(covariance)[1:], 0.0))
    coef = beta[1:]
    z = np.divide(coef, se, out=np.zeros_like(coef), where=se > 0)
    p = np.array([normal_two_sided_p(float(zj)) for zj in z])
    return LogisticFit(coef, float(beta[0]), se, z, p, converged, iterations)


@dataclass(frozen=True)
class IntergroupClock:
    """Arrows along the segment joining two group centers."""

    edge: tuple[int, int]
    edge_names: tuple[str, str]
    centers: tuple[tuple[float, float], tuple[float, float]]
    anchor: tuple[float, float]
    axis_angle_deg: float
    arrows: tuple[ClockArrow, ...]
    converged: bool


def build_intergroup_clocks(
    dataset: Dataset,
    grouping: GroupingResult,
    mst: MstEdges,
    config: RunConfig | None = None,
) -> list[IntergroupClock]:
    """One clock per MST edge, fitted on the two endpoint groups.

    Features are standardized over the union of the two groups. Arrows keep
    features with Wald p below alpha, resolved along the center-to-center
    axis; positive coefficients point at the second group of the edge.
    Edges whose groups are too small are skipped with a warning.
    """
    config = config or RunConfig()
    x = as_matrix(dataset.X, name="X")
    d = x.shape[1]
    names = dataset.feature_names
    by_id = {g.id: g for g in grouping.groups}
    need = max(d + 2, 5)

    clocks: list[IntergroupClock] = []
    for a, b, _length in mst.edges:
        ga, gb = by_id[a], by_id[b]
        if len(ga.members) < need or len(gb.members) < need:
            small = ga.name if len(ga.members) < need else gb.name
            warnings.warn(
                f"skipping edge {ga.name!r}-{gb.name!r}: group {small!r} has fewer "
                f"than {need} members",
                ClockWarning,
                stacklevel=2,
            )
            continue

        rows = list(ga.members) + list(gb.members)
        labels = np.concatenate([np.zeros(len(ga.members)), np.ones(len(gb.members))])
        xu = x[rows]
        stds = xu.std(axis=0, ddof=1)
        kept = [j for j in range(d) if stds[j] > EPS_VAR]
        if not kept:
            warnings.warn(
                f"skipping edge {ga.name!r}-{gb.name!r}: every feature is constant",
                ClockWarning,
                stacklevel=2,
            )
            continue
        if len(kept) < d:
            dropped = [names[j] for j in range(d) if stds[j] <= EPS_VAR]
            warnings.warn(
                f"edge {ga.name!r}-{gb.name!r}: dropping zero-variance features: "
                f"{', '.join(dropped)}",
                ClockWarning,
                stacklevel=2,
            )
        xs, _, _ = standardize_columns(xu[:, kept])
        fit = logistic_fit(xs, labels)

        dx = gb.center[0] - ga.center[0]
        dy = gb.center[1] - ga.center[1]
        axis = math.degrees(math.atan2(dy, dx)) % 360.0
        if axis >= 360.0:  # -tiny % 360 rounds up to 360 in floats
            axis = 0.0
        ux = math.cos(math.radians(axis))
        uy = math.sin(math.radians(axis))
        anchor = (
            (ga.center[0] + gb.center[0]) / 2.0,
            (ga.center[1] + gb.center[1]) / 2.0,
        )

        arrows = []
        for slot, j in enumerate(kept):
            p = float(fit.p_values[slot])
            if p >= config.alpha:
                continue
            coef = float(fit.coefficients[slot])
            beta0 = coef * ux
            beta90 = coef * uy
            angle = axis if coef >= 0 else (axis + 180.0) % 360.0
            arrows.append(
                ClockArrow(names[j], beta0, beta90, abs(coef), angle, p, p, True)
            )
        arrows.sort(key=lambda arrow: -arrow.magnitude)
        if config.top_k is not None:
            arrows = arrows[: config.top_k]
        if not arrows:
            warnings.warn(
                f"edge {ga.name!r}-{gb.name!r}: no significant features at "
                f"alpha={config.alpha}",
                ClockWarning,
                stacklevel=2,
            )
        clocks.append(
            IntergroupClock(
                (a, b),
                (ga.name, gb.name),
                (ga.center, gb.center),
                anchor,
                axis,
                tuple(arrows),
                fit.converged,
            )
        )

    if not clocks:
        raise ComputationError("no inter-group clocks: every MST edge was skipped")
    return clocks
