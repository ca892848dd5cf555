"""Stencil weights for scattered 2D points.

Solves the homogeneous 4 x n moment system whose rows kill the first moments,
the mixed second moment, and the imbalance between the two pure second
moments. A unit-norm null vector of that system turns scattered samples into
a Laplacian estimate that generalizes the classical 5-point formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration, ZeroDenominator

# residual of the returned null vector relative to the largest singular value
NULL_SPACE_TOL = 1e-8
# |denominator| relative to the mean squared point radius
DENOMINATOR_TOL = 1e-10
_DUPLICATE_TOL = 1e-14


@dataclass
class PointSet2D:
    """Scattered stencil points with their originating vertex ids."""

    points: np.ndarray
    source_ids: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        self.source_ids = np.asarray(self.source_ids, dtype=np.int64).reshape(-1)
        if len(self.points) != len(self.source_ids):
            raise ValueError("points and source_ids differ in length")
        if len(self.points) > 1:
            d = np.abs(self.points[:, None, :] - self.points[None, :, :]).max(axis=2)
            np.fill_diagonal(d, np.inf)
            if d.min() < _DUPLICATE_TOL:
                raise ValueError("duplicate stencil points")

    def __len__(self):
        return len(self.points)


@dataclass
class ConfigurationSolution:
    """Unit-norm weights alpha with bookkeeping.

    denominator = sum alpha_i (x_i^2 + y_i^2) (normalized positive),
    second_moment = sum alpha_i x_i^2, residuals are the four moment-row
    values at alpha.
    """

    alphas: np.ndarray
    selected: np.ndarray
    denominator: float
    residuals: np.ndarray
    second_moment: float


def build_configuration_matrix(ps):
    """Rows [x], [y], [x y], [x^2 - y^2] over the point set."""
    x = ps.points[:, 0]
    y = ps.points[:, 1]
    return np.vstack([x, y, x * y, x * x - y * y])


def _select_closest(points, ids, target):
    """Indices of the ``target`` points closest to the origin, ties by id."""
    r2 = points[:, 0] ** 2 + points[:, 1] ** 2
    order = np.lexsort((ids, r2))
    return order[:target]


def select_neighbors(ps, target=5):
    """Keep the ``target`` points closest to the origin (ties by source id).

    Sets with at most ``target`` points are returned unchanged; the caller is
    expected to extend the ring instead.
    """
    if len(ps) == 0:
        raise ValueError("empty point set")
    if len(ps) <= target:
        return ps
    keep = _select_closest(ps.points, ps.source_ids, target)
    return PointSet2D(ps.points[keep], ps.source_ids[keep])


def _canonical_sign(alpha):
    tol = 1e-12 * np.abs(alpha).max()
    for a in alpha:
        if abs(a) > tol:
            return alpha if a > 0 else -alpha
    return alpha


def solve_configuration(ps, policy="min-norm-null-vector"):
    """Unit-norm weights minimizing the moment residual over the point set.

    The weights are the right singular direction of the smallest singular
    value of the 4 x n moment matrix (for n > 4 an exact null vector exists).
    Degenerate null spaces fall back to the deterministic LAPACK direction
    with the sign fixed so the first non-negligible entry is positive; the
    whole vector is then flipped if needed so the denominator is positive.

    Raises DegenerateConfiguration when no near-null direction exists
    (residual above NULL_SPACE_TOL times the matrix norm) and ZeroDenominator
    when the denominator vanishes relative to the mean squared radius. Both
    signal the caller to extend the ring; ZeroDenominator is a subclass of
    DegenerateConfiguration.
    """
    if policy != "min-norm-null-vector":
        raise ValueError("unknown policy %r" % (policy,))
    n = len(ps)
    if n < 4:
        raise DegenerateConfiguration("need at least 4 stencil points, got %d" % n)
    m = build_configuration_matrix(ps)
    _, s, vh = np.linalg.svd(m)
    alpha = vh[-1]
    smax = float(s[0])
    residuals = m @ alpha
    if smax == 0.0 or np.linalg.norm(residuals) > NULL_SPACE_TOL * smax:
        raise DegenerateConfiguration(
            "no null vector for the configuration matrix (n=%d)" % n
        )
    alpha = _canonical_sign(alpha)
    x2 = ps.points[:, 0] ** 2
    y2 = ps.points[:, 1] ** 2
    denom = float(alpha @ (x2 + y2))
    if denom < 0.0:
        alpha = -alpha
        denom = -denom
    if denom < DENOMINATOR_TOL * float(np.mean(x2 + y2)):
        raise ZeroDenominator("stencil denominator vanishes (n=%d)" % n)
    return ConfigurationSolution(
        alphas=alpha,
        selected=ps.source_ids.copy(),
        denominator=denom,
        residuals=m @ alpha,
        second_moment=float(alpha @ x2),
    )


def solve_max_denominator(ps):
    """Constraint-satisfying weights with the largest possible denominator.

    Projects the squared-radius vector onto the null space of the moment
    matrix and normalizes. Among all unit-norm null vectors this choice
    maximizes sum alpha_i r_i^2 (any 5-point sub-stencil solution embeds into
    the null space by zero padding, so it is never worse than one). Serves as
    the deterministic rescue for nearly-degenerate closest-point stencils;
    invariant under rotation and scaling of the points.
    """
    n = len(ps)
    if n < 5:
        raise DegenerateConfiguration("need at least 5 points, got %d" % n)
    m = build_configuration_matrix(ps)
    _, s, vh = np.linalg.svd(m)
    if s[0] == 0.0:
        raise DegenerateConfiguration("zero moment matrix")
    null_rows = [vh[j] for j in range(4) if s[j] <= NULL_SPACE_TOL * s[0]]
    basis = np.vstack(list(vh[4:]) + null_rows)
    r2 = ps.points[:, 0] ** 2 + ps.points[:, 1] ** 2
    z = basis.T @ (basis @ r2)
    denom = float(np.linalg.norm(z))
    if denom < DENOMINATOR_TOL * float(r2.mean()):
        raise ZeroDenominator("stencil denominator vanishes (n=%d)" % n)
    alpha = z / denom
    return ConfigurationSolution(
        alphas=alpha,
        selected=ps.source_ids.copy(),
        denominator=float(alpha @ r2),
        residuals=m @ alpha,
        second_moment=float(alpha @ ps.points[:, 0] ** 2),
    )


def laplacian_from_configuration(sol, values, center):
    """Laplacian estimate 4 sum alpha_i (f_i - f_0) / denominator."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != sol.alphas.shape:
        raise ValueError("values are not aligned with the selected points")
    if sol.denominator == 0.0:
        raise ZeroDenominator("stencil denominator vanishes")
    return 4.0 * float(sol.alphas @ (values - center)) / sol.denominator


def solve_many(xs, ys):
    """Vectorized twin of solve_configuration for stacks of 5-point stencils.

    Parameters are (m, 5) coordinate arrays. Returns (alphas, denominators,
    ok, kinds): rows failing the solve carry ok=False and a failure kind
    ("degenerate-configuration" or "zero-denominator"). Thresholds and sign
    conventions match solve_configuration exactly.
    """
    m = len(xs)
    if m == 0:
        return (
            np.zeros((0, 5)),
            np.zeros(0),
            np.zeros(0, dtype=bool),
            np.zeros(0, dtype=object),
        )
    mats = np.stack([xs, ys, xs * ys, xs * xs - ys * ys], axis=1)
    _, s, vh = np.linalg.svd(mats)
    alpha = vh[:, -1, :].copy()
    res = np.einsum("mij,mj->mi", mats, alpha)
    smax = s[:, 0]
    degenerate = (smax == 0.0) | (
        np.linalg.norm(res, axis=1) > NULL_SPACE_TOL * smax
    )

    # duplicate points inside one stencil are rejected like PointSet2D does
    dup = np.zeros(m, dtype=bool)
    for i in range(5):
        for j in range(i + 1, 5):
            close = np.maximum(
                np.abs(xs[:, i] - xs[:, j]), np.abs(ys[:, i] - ys[:, j])
            ) < _DUPLICATE_TOL
            dup |= close
    degenerate |= dup

    tol = 1e-12 * np.abs(alpha).max(axis=1)
    lead = np.argmax(np.abs(alpha) > tol[:, None], axis=1)
    sign = np.sign(alpha[np.arange(m), lead])
    sign[sign == 0] = 1.0
    alpha *= sign[:, None]

    r2 = xs * xs + ys * ys
    denom = np.einsum("mi,mi->m", alpha, r2)
    neg = denom < 0
    alpha[neg] = -alpha[neg]
    denom = np.abs(denom)
    zero = denom < DENOMINATOR_TOL * r2.mean(axis=1)

    ok = ~(degenerate | zero)
    kinds = np.empty(m, dtype=object)
    kinds[degenerate] = "degenerate-configuration"
    kinds[zero & ~degenerate] = "zero-denominator"
    return alpha, denom, ok, kinds
