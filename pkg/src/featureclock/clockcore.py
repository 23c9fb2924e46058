"""Clock construction from an embedding and its high-dimensional features.

A clock summarizes, per feature, the direction in the 2D embedding along
which that feature's linear influence is strongest. Two regressions (targets:
the x and y coordinates of the centered embedding) give the coefficient pair
(beta0, beta90) per feature; the strongest contribution has magnitude
sqrt(beta0^2 + beta90^2) at the full-quadrant angle of that pair, so no sweep
over angles is needed. A sweep is still available, both derived analytically
from the axis pair and as literal per-angle refits for cross-checking.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ClockWarning, ComputationError, GroupTooSmallError
from .ingest import Dataset, RunConfig
from .numstats import (
    EPS_VAR,
    RegressionFit,
    as_matrix,
    center_columns,
    ols_fit,
    standardize_columns,
)


def unit_vector(angle_deg: float) -> tuple[float, float]:
    """Unit direction for an angle in degrees; exact on the four axes."""
    a = angle_deg % 360.0
    if a == 0.0:
        return 1.0, 0.0
    if a == 90.0:
        return 0.0, 1.0
    if a == 180.0:
        return -1.0, 0.0
    if a == 270.0:
        return 0.0, -1.0
    rad = math.radians(a)
    return math.cos(rad), math.sin(rad)


@dataclass(frozen=True)
class ProjectionFactor:
    """Scalar coordinates of 2D points projected onto the line at angle_deg."""

    angle_deg: float
    values: np.ndarray


def project_at_angle(y_centered, angle_deg: float) -> ProjectionFactor:
    """Project centered embedding points onto the line at the given angle.

    0 degrees reproduces the x column and 90 degrees the y column exactly.
    """
    if not 0.0 <= angle_deg < 180.0:
        raise ComputationError(f"projection angle must be in [0, 180), got {angle_deg}")
    y = as_matrix(y_centered, name="embedding")
    if y.shape[1] != 2:
        raise ComputationError(f"embedding must have 2 columns, got {y.shape[1]}")
    ux, uy = unit_vector(angle_deg)
    return ProjectionFactor(angle_deg, y[:, 0] * ux + y[:, 1] * uy)


def fit_axis_regressions(x_std, y_centered) -> tuple[RegressionFit, RegressionFit]:
    """Fit the two independent regressions against the x- and y-axis projections."""
    fits = []
    for angle in (0.0, 90.0):
        target = project_at_angle(y_centered, angle)
        try:
            fits.append(ols_fit(x_std, target.values))
        except ComputationError as exc:
            raise ComputationError(f"{angle:.0f}-degree axis fit failed: {exc}") from exc
    return fits[0], fits[1]


def max_contribution(beta0: float, beta90: float) -> tuple[float, float]:
    """Strongest contribution reachable over all projection angles.

    Returns (magnitude, angle_deg) with the angle in [0, 360); the zero pair
    maps to (0, 0) by convention.
    """
    if not (math.isfinite(beta0) and math.isfinite(beta90)):
        raise ComputationError("coefficients must be finite")
    magnitude = math.hypot(beta0, beta90)
    if magnitude == 0.0:
        return 0.0, 0.0
    angle = math.degrees(math.atan2(beta90, beta0)) % 360.0
    if angle >= 360.0:  # -tiny % 360 rounds up to 360 in floats
        angle = 0.0
    return magnitude, angle


def circle_sweep(x_std, y_centered, m: int, *, refit: bool = False):
    """Coefficient of every feature at each of m projection angles i*180/m.

    By default the sweep is derived from the two axis fits through
    beta_theta = beta0*cos(theta) + beta90*sin(theta); with ``refit=True``
    every angle gets its own least-squares fit (slower, used to cross-check
    the identity). Returns, per feature, a list of (angle_deg, coefficient).
    """
    if m < 2:
        raise ComputationError(f"need at least 2 projection lines, got {m}")
    angles = [i * 180.0 / m for i in range(m)]
    if refit:
        columns = []
        for angle in angles:
            target = project_at_angle(y_centered, angle)
            columns.append(ols_fit(x_std, target.values).coefficients)
        coef = np.column_stack(columns)
    else:
        fit0, fit90 = fit_axis_regressions(x_std, y_centered)
        cos = np.array([unit_vector(a)[0] for a in angles])
        sin = np.array([unit_vector(a)[1] for a in angles])
        coef = np.outer(fit0.coefficients, cos) + np.outer(fit90.coefficients, sin)
    return [
        [(angles[i], float(coef[j, i])) for i in range(m)]
        for j in range(coef.shape[0])
    ]


@dataclass(frozen=True)
class ClockArrow:
    """One feature's strongest contribution and its significance evidence."""

    feature: str
    beta0: float
    beta90: float
    magnitude: float
    angle_deg: float
    p0: float
    p90: float
    significant: bool


@dataclass(frozen=True)
class Clock:
    """A clock glyph: anchored, scaled, with arrows sorted by impact."""

    variant: str
    anchor: tuple[float, float]
    scale: float
    arrows: tuple[ClockArrow, ...]
    members: tuple[int, ...]
    circles: dict[str, tuple[tuple[float, float], ...]] | None = None
    group: str | None = None


def _is_significant(p0: float, p90: float, alpha: float, rule: str) -> bool:
    if rule == "and":
        return max(p0, p90) < alpha
    return min(p0, p90) < alpha


def build_clock(
    x,
    y,
    member_idx,
    config: RunConfig | None = None,
    *,
    variant: str = "global",
    group: str | None = None,
    feature_names=None,
) -> Clock:
    """Assemble a clock over the given member rows.

    Standardizes the members' features (constant features are dropped with a
    warning), centers their embedding coordinates, fits the two axis
    regressions, and keeps the significant arrows sorted by magnitude. The
    anchor is the members' embedding centroid unless the config overrides it;
    the scale is half the members' bounding-box diagonal.
    """
    config = config or RunConfig()
    x = as_matrix(x, name="X")
    y = as_matrix(y, name="Y")
    if y.shape[1] != 2:
        raise ComputationError(f"embedding must have 2 columns, got {y.shape[1]}")
    if x.shape[0] != y.shape[0]:
        raise ComputationError(
            f"X has {x.shape[0]} rows but the embedding has {y.shape[0]}"
        )
    n, d = x.shape
    names = list(feature_names) if feature_names is not None else [f"f{j}" for j in range(d)]
    if len(names) != d:
        raise ComputationError(f"got {len(names)} feature names for {d} features")

    members = tuple(sorted(dict.fromkeys(int(i) for i in member_idx)))
    if not members:
        raise ComputationError("member set is empty")
    if members[0] < 0 or members[-1] >= n:
        raise ComputationError(f"member indices must be in [0, {n}), got {members[0]}..{members[-1]}")
    label = group if group is not None else variant

    rows = list(members)
    xm = x[rows]
    ym = y[rows]
    if len(members) < 3:
        raise GroupTooSmallError(
            f"group {label!r} too small for clock: {len(members)} points"
        )

    stds = xm.std(axis=0, ddof=1)
    keep = stds > EPS_VAR
    kept = [j for j in range(d) if keep[j]]
    if not kept:
        raise ComputationError(f"group {label!r}: every feature is constant")
    if len(kept) < d:
        dropped = [names[j] for j in range(d) if not keep[j]]
        warnings.warn(
            f"group {label!r}: dropping zero-variance features: {', '.join(dropped)}",
            ClockWarning,
            stacklevel=2,
        )
    if len(members) < len(kept) + 2:
        raise GroupTooSmallError(
            f"group {label!r} too small for clock: {len(members)} points for "
            f"{len(kept)} features (need at least {len(kept) + 2})"
        )

    xk = xm[:, kept]
    if config.standardize_x:
        xs, _, _ = standardize_columns(xk)
    else:
        xs = center_columns(xk)
    yc = center_columns(ym) if config.center_y else ym.copy()

    fit0, fit90 = fit_axis_regressions(xs, yc)
    b0 = fit0.coefficients.copy()
    b90 = fit90.coefficients.copy()
    if config.standardize_betas:
        pooled = float(np.concatenate([b0, b90]).std(ddof=1))
        if pooled > EPS_VAR:
            b0 /= pooled
            b90 /= pooled

    slot = {j: i for i, j in enumerate(kept)}
    arrows_all = []
    for j in range(d):
        if keep[j]:
            i = slot[j]
            magnitude, angle = max_contribution(float(b0[i]), float(b90[i]))
            p0 = float(fit0.p_values[i])
            p90 = float(fit90.p_values[i])
            arrows_all.append(
                ClockArrow(
                    names[j],
                    float(b0[i]),
                    float(b90[i]),
                    magnitude,
                    angle,
                    p0,
                    p90,
                    _is_significant(p0, p90, config.alpha, config.significance_rule),
                )
            )
        else:
            arrows_all.append(ClockArrow(names[j], 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, False))

    significant = [a for a in arrows_all if a.significant]
    significant.sort(key=lambda a: -a.magnitude)
    if config.top_k is not None:
        significant = significant[: config.top_k]
    if not significant:
        warnings.warn(
            f"clock for group {label!r}: no significant features at alpha={config.alpha}",
            ClockWarning,
            stacklevel=2,
        )

    anchor = config.anchor if config.anchor is not None else (
        float(ym[:, 0].mean()),
        float(ym[:, 1].mean()),
    )
    span_x = float(ym[:, 0].max() - ym[:, 0].min())
    span_y = float(ym[:, 1].max() - ym[:, 1].min())
    scale = 0.5 * math.hypot(span_x, span_y)
    if scale <= 0.0:
        scale = 1.0

    circles = None
    out_variant = variant
    if config.circles:
        m = max(2, int(round(180.0 / config.theta_step_deg)))
        sweep = circle_sweep(xs, yc, m)
        circles = {names[j]: tuple(sweep[slot[j]]) for j in kept}
        out_variant = "circles"

    return Clock(out_variant, anchor, scale, tuple(significant), members, circles, group)


def build_global_clock(dataset: Dataset, config: RunConfig | None = None) -> Clock:
    """Clock over every point of the dataset."""
    n = dataset.X.shape[0]
    return build_clock(
        dataset.X,
        dataset.Y,
        range(n),
        config,
        variant="global",
        feature_names=dataset.feature_names,
    )


def build_local_clocks(dataset: Dataset, grouping, config: RunConfig | None = None) -> list[Clock]:
    """One clock per non-noise group; undersized groups are skipped with a warning."""
    config = config or RunConfig()
    if grouping.labels.shape[0] != dataset.X.shape[0]:
        raise ComputationError(
            f"grouping covers {grouping.labels.shape[0]} points "
            f"but the dataset has {dataset.X.shape[0]}"
        )
    if not grouping.groups:
        raise ComputationError("no usable groups")
    clocks = []
    for grp in grouping.groups:
        try:
            clocks.append(
                build_clock(
                    dataset.X,
                    dataset.Y,
                    grp.members,
                    config,
                    variant="local",
                    group=grp.name,
                    feature_names=dataset.feature_names,
                )
            )
        except GroupTooSmallError as exc:
            warnings.warn(f"skipping group {grp.name!r}: {exc}", ClockWarning, stacklevel=2)
    if not clocks:
        raise ComputationError("all groups too small for local clocks")
    return clocks
