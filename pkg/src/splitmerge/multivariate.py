"""Merging vector-valued group estimates: coordinatewise and geometric median.

:func:`geometric_median` minimizes the summed Euclidean distance to the
group estimates with the classic reweighting iteration, including the
fixed-point correction that handles iterates landing exactly on a data
point, so it is safe on degenerate inputs (collinear clouds fall back to an
exact 1-D median along the line and are flagged).

:func:`proximity_certificate` turns a merged cloud into a computable
a-posteriori radius: any candidate point whose objective value is within
``gap`` of optimal lies within :meth:`ProximityCertificate.radius` of the
true minimizer.  Its spectral ingredient is :func:`sym_eigenvalues`, a
self-contained cyclic Jacobi eigensolver for symmetric matrices up to
64 x 64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .losses import LossSpec
from .univariate import LocalEstimates, merge_m_estimator, merge_median

__all__ = [
    "GeometricMedianResult",
    "ProximityCertificate",
    "as_point_cloud",
    "merge_coordinatewise",
    "geometric_median",
    "sym_eigenvalues",
    "proximity_certificate",
    "proximity_radius",
]

_COLLISION_REL_EPS = 1e-14
_COLLINEAR_REL_EPS = 1e-12
_JACOBI_REL_TARGET = 1e-13
_JACOBI_MAX_SWEEPS = 100
_JACOBI_MAX_DIM = 64


def as_point_cloud(points) -> np.ndarray:
    """Validate and return points as a float array of shape (k, m)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"expected a 2-D array of points, got shape {pts.shape}")
    if pts.shape[0] < 1 or pts.shape[1] < 1:
        raise ValueError(f"need at least one point of dimension >= 1, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def merge_coordinatewise(
    points,
    losses: "LossSpec | Sequence[LossSpec]",
    scales: "float | Sequence[float] | None" = None,
) -> np.ndarray:
    """Merge each coordinate independently with its own robust loss.

    ``losses`` may be a single :class:`LossSpec` (applied to every
    coordinate) or one per coordinate; likewise ``scales`` (``None`` means
    a MAD scale per coordinate).  Absolute-value coordinates reduce to the
    exact coordinatewise median.
    """
    pts = as_point_cloud(points)
    k, m = pts.shape
    if isinstance(losses, LossSpec):
        loss_list = [losses] * m
    else:
        loss_list = list(losses)
        if len(loss_list) != m:
            raise ValueError(f"need one loss per coordinate ({m}), got {len(loss_list)}")
    if scales is None or isinstance(scales, (int, float)):
        scale_list = [scales] * m
    else:
        scale_list = list(scales)
        if len(scale_list) != m:
            raise ValueError(f"need one scale per coordinate ({m}), got {len(scale_list)}")
    sizes = np.ones(k, dtype=np.int64)
    out = np.empty(m)
    for i in range(m):
        column = LocalEstimates(pts[:, i], sizes, "raw")
        if loss_list[i].kind == "absolute_value":
            out[i] = merge_median(column)
        else:
            scale = None if scale_list[i] is None else float(scale_list[i])
            out[i] = merge_m_estimator(column, loss_list[i], scale=scale).point
    return out


@dataclass(frozen=True)
class GeometricMedianResult:
    """Outcome of :func:`geometric_median`.

    ``weights`` expresses the returned point as a convex combination of the
    input points (the final reweighting), ``objective_history`` records the
    objective after the starting point and each iteration, and
    ``collinear`` marks clouds solved exactly as a 1-D median along their
    common line (including any cloud of one or two points).
    """

    point: np.ndarray
    value: float
    iterations: int
    converged: bool
    collinear: bool
    weights: np.ndarray
    objective_history: np.ndarray


def _objective(pts: np.ndarray, z: np.ndarray) -> float:
    return float(np.linalg.norm(pts - z, axis=1).sum())


def _collinear_median(pts: np.ndarray, centroid: np.ndarray) -> GeometricMedianResult:
    """Exact geometric median of points on a common line: the 1-D median
    along the line (midpoint convention for even counts)."""
    k = pts.shape[0]
    centered = pts - centroid
    singular = np.linalg.svd(centered, compute_uv=False)
    weights = np.zeros(k)
    if singular.size == 0 or singular[0] == 0.0:
        # All points identical.
        weights[:] = 1.0 / k
        point = pts[0].copy()
    else:
        direction = np.linalg.svd(centered, full_matrices=False)[2][0]
        t = centered @ direction
        order = np.argsort(t, kind="stable")
        mid = k // 2
        if k % 2 == 1:
            weights[order[mid]] = 1.0
        else:
            weights[order[mid - 1]] = 0.5
            weights[order[mid]] = 0.5
        point = centroid + float(np.median(t)) * direction
    value = _objective(pts, point)
    return GeometricMedianResult(
        point, value, 0, True, True, weights, np.array([value])
    )


def geometric_median(
    points, *, tol: float = 1e-10, max_iter: int = 1000
) -> GeometricMedianResult:
    """Point minimizing the sum of Euclidean distances to ``points``.

    Starts from the coordinatewise mean and applies the inverse-distance
    reweighting iteration; when an iterate collides with one or more data
    points the step is replaced by the damped fixed-point correction, which
    either certifies that data point as the minimizer or steps off it while
    still descending.  The objective never increases along the iteration.

    Terminates when consecutive iterates differ by at most
    ``tol * (1 + |iterate|)`` (``converged=True``) or after ``max_iter``
    iterations (``converged=False``).
    """
    pts = as_point_cloud(points)
    if not (isinstance(tol, float) and tol > 0):
        raise ValueError(f"tol must be a positive float, got {tol!r}")
    if not (isinstance(max_iter, int) and max_iter >= 1):
        raise ValueError(f"max_iter must be a positive integer, got {max_iter!r}")
    k, m = pts.shape
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    spread = np.linalg.norm(centered, axis=1)
    scale = float(spread.max())

    singular = np.linalg.svd(centered, compute_uv=False)
    if (
        m == 1
        or k <= 2
        or scale == 0.0
        or singular[1] <= _COLLINEAR_REL_EPS * singular[0]
    ):
        return _collinear_median(pts, centroid)

    collision_eps = _COLLISION_REL_EPS * scale
    z = centroid
    value = _objective(pts, z)
    history = [value]
    weights = np.full(k, 1.0 / k)
    converged = False
    iterations = 0

    for iteration in range(1, max_iter + 1):
        iterations = iteration
        diffs = pts - z
        dists = np.linalg.norm(diffs, axis=1)
        hit = dists <= collision_eps
        if np.any(hit):
            eta = float(np.count_nonzero(hit))
            rest = ~hit
            inv = 1.0 / dists[rest]
            residual = (diffs[rest] * inv[:, None]).sum(axis=0)
            r = float(np.linalg.norm(residual))
            if r <= eta:
                # The colliding data point satisfies the optimality
                # condition: snap to it and stop.
                nearest = int(np.argmin(dists))
                z = pts[nearest].copy()
                weights = np.zeros(k)
                weights[nearest] = 1.0
                history.append(_objective(pts, z))
                converged = True
                break
            smooth = (pts[rest] * inv[:, None]).sum(axis=0) / inv.sum()
            damping = eta / r
            z_new = (1.0 - damping) * smooth + damping * z
            weights = np.zeros(k)
            weights[rest] = (1.0 - damping) * inv / inv.sum()
            weights[hit] = damping / eta
        else:
            inv = 1.0 / dists
            weights = inv / inv.sum()
            z_new = weights @ pts
        step = float(np.linalg.norm(z_new - z))
        reference = 1.0 + float(np.linalg.norm(z))
        z = z_new
        history.append(_objective(pts, z))
        if step <= tol * reference:
            converged = True
            break

    return GeometricMedianResult(
        z.copy(), history[-1], iterations, converged, False, weights,
        np.asarray(history),
    )


# ---------------------------------------------------------------------------
# symmetric eigenvalues (cyclic Jacobi)
# ---------------------------------------------------------------------------


def sym_eigenvalues(matrix) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, descending, via cyclic Jacobi sweeps.

    Accepts matrices up to 64 x 64; asymmetric input (beyond roundoff,
    relative tolerance 1e-12) raises ``ValueError``.  Sweeps stop once the
    off-diagonal Frobenius mass drops below ``1e-13`` times the matrix
    Frobenius norm.
    """
    a = np.array(matrix, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    m = a.shape[0]
    if m < 1:
        raise ValueError("matrix must be at least 1 x 1")
    if m > _JACOBI_MAX_DIM:
        raise ValueError(f"matrices up to {_JACOBI_MAX_DIM} x {_JACOBI_MAX_DIM} are supported")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    magnitude = float(np.max(np.abs(a))) if a.size else 0.0
    if float(np.max(np.abs(a - a.T))) > 1e-12 * max(1.0, magnitude):
        raise ValueError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    if m == 1:
        return np.array([a[0, 0]])
    frobenius = math.sqrt(float((a * a).sum()))
    if frobenius == 0.0:
        return np.zeros(m)
    target = _JACOBI_REL_TARGET * frobenius

    def _off_mass() -> float:
        off_diag = a - np.diag(np.diag(a))
        return math.sqrt(float((off_diag * off_diag).sum()))

    for _ in range(_JACOBI_MAX_SWEEPS):
        if _off_mass() <= target:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                sign = 1.0 if theta >= 0.0 else -1.0
                t = sign / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                new_p = c * col_p - s * col_q
                new_q = s * col_p + c * col_q
                a[:, p] = new_p
                a[p, :] = new_p
                a[:, q] = new_q
                a[q, :] = new_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
    if _off_mass() > target:
        raise ArithmeticError("Jacobi sweeps failed to reduce the off-diagonal mass")

    return np.sort(np.diag(a))[::-1].copy()


# ---------------------------------------------------------------------------
# a-posteriori proximity certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProximityCertificate:
    """Certified localization of the geometric-median objective's minimizer.

    Built from a point cloud via :func:`proximity_certificate`.  ``a`` is
    the per-point residual spread (the non-leading eigenvalue mass of the
    scatter matrix, divided by the number of points; the conservative
    normalization), ``a_sum`` the unnormalized eigenvalue mass, and ``b``
    the moment ratio ``(20 m1^3 + 6 m1 m2 + m3) / a``.  Any point whose
    mean objective value exceeds the minimum by at most ``gap`` lies within
    :meth:`radius` of the minimizer.
    """

    center: np.ndarray
    m1: float
    m2: float
    m3: float
    eigenvalues: np.ndarray
    a: float
    a_sum: float
    b: float

    def radius(self, gap: float) -> float:
        """Radius of the ball (around the minimizer) certified for ``gap``."""
        if isinstance(gap, bool) or not isinstance(gap, (int, float, np.floating)):
            raise ValueError(f"gap must be a number, got {gap!r}")
        gap = float(gap)
        if not math.isfinite(gap) or gap < 0.0:
            raise ValueError(f"gap must be finite and >= 0, got {gap}")
        if gap == 0.0:
            return 0.0
        b2 = self.b * self.b
        return (
            gap * b2 + math.sqrt(gap * gap * b2 * b2 + 2.0 * self.a * gap * b2 * self.b)
        ) / self.a


def proximity_certificate(points) -> ProximityCertificate:
    """Compute the :class:`ProximityCertificate` of a point cloud.

    Requires the cloud to spread in at least two directions (the
    non-leading eigenvalue mass of its scatter matrix must be positive);
    clouds on a single line have no two-sided localization and raise
    ``ValueError``.
    """
    pts = as_point_cloud(points)
    k, m = pts.shape
    if m < 2:
        raise ValueError("proximity certificate needs dimension >= 2")
    center = pts.mean(axis=0)
    centered = pts - center
    dists = np.linalg.norm(centered, axis=1)
    m1 = float(dists.mean())
    m2 = float((dists**2).mean())
    m3 = float((dists**3).mean())
    scatter = (centered.T @ centered) / k
    eigenvalues = sym_eigenvalues(scatter)
    a_sum = float(eigenvalues[1:].sum())
    a = a_sum / k
    if a <= 0.0:
        raise ValueError(
            "proximity certificate needs points spreading in at least two directions"
        )
    b = (20.0 * m1**3 + 6.0 * m1 * m2 + m3) / a
    return ProximityCertificate(center, m1, m2, m3, eigenvalues, a, a_sum, b)


def proximity_radius(points, gap: float) -> float:
    """Shorthand for ``proximity_certificate(points).radius(gap)``."""
    return proximity_certificate(points).radius(gap)
