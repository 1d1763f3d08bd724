"""Closed-form deviation bounds for merged group estimates.

Every bound function returns a :class:`BoundReport` carrying the bound
itself, the probability with which it may fail, and — where the guarantee
only holds under a side condition — the computed condition value, the
threshold it is compared against, and whether it holds.  Reported failure
probabilities are the raw formula values (e.g. ``4 * exp(-2s)``), which can
exceed 1 for very small ``s``.

The univariate results bound ``|merged - truth|`` for the median-of-means /
M-estimator merges; the multivariate ones bound coordinatewise errors or
(for the geometric-median result) a normalized Euclidean distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .losses import LossSpec

__all__ = [
    "BoundReport",
    "CoordinatewiseBoundReport",
    "GroupProfile",
    "normal_cdf",
    "normal_quantile",
    "harmonic_mean",
    "zeta_exact",
    "bound_legacy",
    "bound_theorem1",
    "bound_theorem2",
    "bound_corollary1",
    "bound_corollary2",
    "bound_theorem5",
    "bound_theorem7",
    "bound_corollary5",
    "c1_constant",
    "c2_constant",
    "delta_squared",
]

_ZETA_TOL = 1e-12
_MAX_BISECT = 200


def normal_cdf(x: float) -> float:
    """Standard normal CDF (documented erf-based implementation)."""
    return float(special.ndtr(x))


def normal_quantile(p: float) -> float:
    """Standard normal quantile; requires 0 < p < 1."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    return float(special.ndtri(p))


def _as_float(name: str, value, *, minimum: float | None = None, strict: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise ValueError(f"{name} must be a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ValueError(f"{name} must be finite, got {out}")
    if minimum is not None:
        if strict and out <= minimum:
            raise ValueError(f"{name} must be > {minimum}, got {out}")
        if not strict and out < minimum:
            raise ValueError(f"{name} must be >= {minimum}, got {out}")
    return out


def _as_int(name: str, value, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    out = int(value)
    if out < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {out}")
    return out


def _c_rho_of(loss: "LossSpec | float") -> float:
    if isinstance(loss, LossSpec):
        return loss.c_rho
    return _as_float("c_rho", loss, minimum=0.0)


@dataclass(frozen=True)
class BoundReport:
    """A deviation bound plus its failure probability and side condition.

    ``condition_value`` is compared against ``threshold``; the guarantee is
    vacuous when ``condition_holds`` is false (the bound value is still the
    formula output).  Methods without a side condition leave the condition
    fields ``None``.
    """

    method: str
    bound: float
    failure_probability: float
    condition_value: float | None = None
    condition_holds: bool | None = None
    threshold: float | None = None

    def to_mapping(self) -> dict[str, object]:
        return {
            "method": self.method,
            "bound": self.bound,
            "failure_probability": self.failure_probability,
            "condition_value": self.condition_value,
            "condition_holds": self.condition_holds,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class CoordinatewiseBoundReport:
    """Per-coordinate deviation bounds sharing one condition and failure prob."""

    method: str
    bounds: np.ndarray
    failure_probability: float
    condition_value: float
    condition_holds: bool
    threshold: float

    @property
    def bound(self) -> float:
        """Sup-norm bound: the largest coordinatewise bound."""
        return float(np.max(self.bounds))

    def to_mapping(self) -> dict[str, object]:
        return {
            "method": self.method,
            "bounds": [float(b) for b in self.bounds],
            "bound": self.bound,
            "failure_probability": self.failure_probability,
            "condition_value": self.condition_value,
            "condition_holds": self.condition_holds,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class GroupProfile:
    """Per-group scales and normal-approximation errors.

    ``sigmas[j]`` is the scale of group j's estimate (for group means,
    sigma / sqrt(group size)); ``gs[j]`` bounds how far that estimate's
    law is from the matching normal.
    """

    sigmas: np.ndarray
    gs: np.ndarray

    def __post_init__(self) -> None:
        sigmas = np.asarray(self.sigmas, dtype=float)
        gs = np.asarray(self.gs, dtype=float)
        if sigmas.ndim != 1 or gs.ndim != 1 or sigmas.shape != gs.shape:
            raise ValueError("sigmas and gs must be 1-D arrays of equal length")
        if sigmas.size < 1:
            raise ValueError("profile needs at least one group")
        if not np.all(np.isfinite(sigmas)) or np.any(sigmas <= 0):
            raise ValueError("all sigmas must be finite and > 0")
        if not np.all(np.isfinite(gs)) or np.any(gs < 0):
            raise ValueError("all gs must be finite and >= 0")
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "gs", gs)

    @classmethod
    def uniform(cls, k: int, sigma: float, g: float) -> "GroupProfile":
        """k identical groups with scale ``sigma`` and approximation error ``g``."""
        k = _as_int("k", k)
        return cls(np.full(k, float(sigma)), np.full(k, float(g)))

    @property
    def k(self) -> int:
        return self.sigmas.size


def harmonic_mean(sigmas) -> tuple[float, np.ndarray]:
    """Harmonic mean H of the scales and the weights ``alpha_j = H / sigma_j``.

    The weights satisfy ``sum(alpha) == k`` and drive all merged-median
    bounds: small-scale groups get proportionally larger weight.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.ndim != 1 or sigmas.size < 1:
        raise ValueError("sigmas must be a non-empty 1-D array")
    if not np.all(np.isfinite(sigmas)) or np.any(sigmas <= 0):
        raise ValueError("all sigmas must be finite and > 0")
    h = sigmas.size / float(np.sum(1.0 / sigmas))
    return h, h / sigmas


def zeta_exact(sigma: float, shift: float) -> float:
    """Solve ``normal_cdf(z / sigma) = 1/2 + shift`` for z >= 0 by bisection.

    Requires ``0 <= shift < 1/2`` (the equation has no finite solution
    otherwise).  Bisection runs to a relative bracket width of 1e-12.
    """
    sigma = _as_float("sigma", sigma, minimum=0.0, strict=True)
    shift = _as_float("shift", shift, minimum=0.0)
    if shift >= 0.5:
        raise ValueError(f"shift must be < 1/2 for a finite solution, got {shift}")
    if shift == 0.0:
        return 0.0
    target = 0.5 + shift
    lo, hi = 0.0, sigma
    for _ in range(_MAX_BISECT):
        if normal_cdf(hi / sigma) >= target:
            break
        hi *= 2.0
    for _ in range(_MAX_BISECT):
        if hi - lo <= _ZETA_TOL * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid / sigma) >= target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# univariate bounds
# ---------------------------------------------------------------------------


def bound_legacy(sigma: float, n_total: int, k: int) -> BoundReport:
    """Baseline median-of-means bound ``2 sigma sqrt(6e) sqrt(k / n_total)``.

    Holds with failure probability ``exp(-k)``; no side condition.
    """
    sigma = _as_float("sigma", sigma, minimum=0.0, strict=True)
    n_total = _as_int("n_total", n_total)
    k = _as_int("k", k)
    if k > n_total:
        raise ValueError(f"k must be <= n_total, got k={k}, n_total={n_total}")
    bound = 2.0 * sigma * math.sqrt(6.0 * math.e) * math.sqrt(k / n_total)
    return BoundReport("legacy", bound, math.exp(-k))


def bound_theorem1(profile: GroupProfile, s: float, *, exact: bool = False) -> BoundReport:
    """Deviation bound for the weighted-median merge of group estimates.

    With ``B = mean(gs) + sqrt(s/k)``, the merged estimate deviates from
    the truth by at most ``3 * H * B`` (harmonic mean H of the scales) with
    failure probability ``4 exp(-2s)``, provided
    ``max_j alpha_j * B <= 0.33``.

    With ``exact=True`` the linearized ``3 H B`` is replaced by the sharp
    value ``max_j zeta_j`` where each ``zeta_j`` solves
    ``normal_cdf(zeta_j / sigma_j) = 1/2 + alpha_j * B``; this needs
    ``alpha_j * B < 1/2`` for every group, otherwise the bound is ``inf``.
    """
    s = _as_float("s", s, minimum=0.0)
    h, alpha = harmonic_mean(profile.sigmas)
    k = profile.k
    b = float(np.mean(profile.gs)) + math.sqrt(s / k)
    condition_value = float(np.max(alpha)) * b
    if exact:
        method = "theorem1_exact"
        if condition_value >= 0.5:
            bound = math.inf
        else:
            bound = max(
                zeta_exact(float(sig), float(a) * b)
                for sig, a in zip(profile.sigmas, alpha)
            )
    else:
        method = "theorem1"
        bound = 3.0 * h * b
    return BoundReport(
        method,
        bound,
        4.0 * math.exp(-2.0 * s),
        condition_value=condition_value,
        condition_holds=condition_value <= 0.33,
        threshold=0.33,
    )


def bound_theorem2(profile: GroupProfile, s: float, loss: "LossSpec | float") -> BoundReport:
    """Deviation bound for the M-estimator merge with curvature ``c_rho``.

    With ``T = sqrt(s/k) + 2 * mean(gs)`` and per-group inflation
    ``e_j = exp((c_rho / sigma_j)^2)``, the merged estimate deviates by at
    most ``3 * H * max_j e_j * T`` with failure probability ``4 exp(-2s)``,
    provided ``max_j alpha_j * e_j * T <= 0.33``.  Passing the
    absolute-value loss (``c_rho = 0``) recovers the median-merge bound.
    """
    s = _as_float("s", s, minimum=0.0)
    c_rho = _c_rho_of(loss)
    h, alpha = harmonic_mean(profile.sigmas)
    k = profile.k
    t = math.sqrt(s / k) + 2.0 * float(np.mean(profile.gs))
    inflation = np.exp((c_rho / profile.sigmas) ** 2)
    condition_value = float(np.max(alpha * inflation)) * t
    bound = 3.0 * h * float(np.max(inflation)) * t
    return BoundReport(
        "theorem2",
        bound,
        4.0 * math.exp(-2.0 * s),
        condition_value=condition_value,
        condition_holds=condition_value <= 0.33,
        threshold=0.33,
    )


def bound_corollary1(sigma: float, rho3: float, n: int, k: int, s: float) -> BoundReport:
    """Median-of-means bound driven by the third absolute central moment.

    ``n`` is the per-group size (``N = n * k``).  With the normalized
    moment ``r = rho3 / sigma^3``::

        bound     = sigma * (1.43 * r / n + 3 * sqrt(s / (k * n)))
        condition = 0.4748 * r / sqrt(n) + sqrt(s / k) <= 0.33

    The bound fails with probability at most ``4 exp(-2s)``.
    """
    sigma = _as_float("sigma", sigma, minimum=0.0, strict=True)
    rho3 = _as_float("rho3", rho3, minimum=0.0)
    n = _as_int("n", n)
    k = _as_int("k", k)
    s = _as_float("s", s, minimum=0.0)
    r = rho3 / sigma**3
    bound = sigma * (1.43 * r / n + 3.0 * math.sqrt(s / (k * n)))
    condition_value = 0.4748 * r / math.sqrt(n) + math.sqrt(s / k)
    return BoundReport(
        "corollary1",
        bound,
        4.0 * math.exp(-2.0 * s),
        condition_value=condition_value,
        condition_holds=condition_value <= 0.33,
        threshold=0.33,
    )


def bound_corollary2(
    sigma: float,
    rho: float,
    delta: float,
    n: int,
    k: int,
    s: float,
    *,
    c1: float = 0.33,
    c2: float = 3.0,
) -> BoundReport:
    """Median-of-means bound needing only a ``2 + delta`` absolute moment.

    ``rho`` is ``E|X - mean|^(2 + delta)`` and ``0 < delta <= 1``.  With
    ``r = rho / sigma^(2 + delta)``::

        bound     = c2 * sigma * (r / n^((1 + delta) / 2) + sqrt(s / (n * k)))
        condition = r / n^(delta / 2) + sqrt(s / k) <= c1

    failing with probability at most ``4 exp(-2s)``.  ``c1`` and ``c2``
    default to the constants used throughout this module but are exposed
    because sharper pairs exist for specific ``delta``.
    """
    sigma = _as_float("sigma", sigma, minimum=0.0, strict=True)
    rho = _as_float("rho", rho, minimum=0.0)
    delta = _as_float("delta", delta)
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    n = _as_int("n", n)
    k = _as_int("k", k)
    s = _as_float("s", s, minimum=0.0)
    c1 = _as_float("c1", c1, minimum=0.0, strict=True)
    c2 = _as_float("c2", c2, minimum=0.0, strict=True)
    r = rho / sigma ** (2.0 + delta)
    bound = c2 * sigma * (r / n ** ((1.0 + delta) / 2.0) + math.sqrt(s / (n * k)))
    condition_value = r / n ** (delta / 2.0) + math.sqrt(s / k)
    return BoundReport(
        "corollary2",
        bound,
        4.0 * math.exp(-2.0 * s),
        condition_value=condition_value,
        condition_holds=condition_value <= c1,
        threshold=c1,
    )


# ---------------------------------------------------------------------------
# multivariate bounds
# ---------------------------------------------------------------------------


def bound_theorem5(
    sigmas, c_rhos, g_m: float, k: int, s: float
) -> CoordinatewiseBoundReport:
    """Coordinatewise bounds for the componentwise M-estimator merge.

    ``sigmas[i]`` is the scale of coordinate i's group estimates and
    ``c_rhos`` the matching loss curvature(s) (scalar broadcasts).  With
    ``T = sqrt(s/k) + 2 * g_m`` and ``e_i = exp((c_rho_i / sigma_i)^2)``,
    coordinate i deviates by at most ``3 * e_i * sigma_i * T``; all
    coordinates hold simultaneously with failure probability
    ``4 * m * exp(-2s)`` provided ``max_i e_i * T <= 0.33``.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.ndim != 1 or sigmas.size < 1:
        raise ValueError("sigmas must be a non-empty 1-D array")
    if not np.all(np.isfinite(sigmas)) or np.any(sigmas <= 0):
        raise ValueError("all sigmas must be finite and > 0")
    if isinstance(c_rhos, LossSpec):
        c_rhos = c_rhos.c_rho
    c_rhos = np.broadcast_to(np.asarray(c_rhos, dtype=float), sigmas.shape).copy()
    if not np.all(np.isfinite(c_rhos)) or np.any(c_rhos < 0):
        raise ValueError("all c_rho values must be finite and >= 0")
    g_m = _as_float("g_m", g_m, minimum=0.0)
    k = _as_int("k", k)
    s = _as_float("s", s, minimum=0.0)
    m = sigmas.size
    t = math.sqrt(s / k) + 2.0 * g_m
    inflation = np.exp((c_rhos / sigmas) ** 2)
    bounds = 3.0 * inflation * sigmas * t
    condition_value = float(np.max(inflation)) * t
    return CoordinatewiseBoundReport(
        "theorem5",
        bounds,
        4.0 * m * math.exp(-2.0 * s),
        condition_value=condition_value,
        condition_holds=condition_value <= 0.33,
        threshold=0.33,
    )


def c2_constant(m: int) -> float:
    """Dimension constant ``sqrt(m + 2 sqrt((m - 1) ln 4))``."""
    m = _as_int("m", m)
    return math.sqrt(m + 2.0 * math.sqrt((m - 1) * math.log(4.0)))


def c1_constant(m: int, variant: str = "proof") -> float:
    """Dimension constant multiplying the ``1/sqrt(k)`` term of the
    geometric-median bound.

    Two published forms circulate; the ``"proof"`` variant
    ``6 (m + 4) sqrt(ln(4 e^2.5)) * c2_constant(m)`` is the one the
    guarantee's derivation actually supports and is the default, while
    ``"displayed"`` is the smaller ``6 sqrt(ln(4 e^2.5) (m + 4)) *
    c2_constant(m)``.
    """
    m = _as_int("m", m)
    log_term = math.log(4.0) + 2.5
    if variant == "proof":
        return 6.0 * (m + 4) * math.sqrt(log_term) * c2_constant(m)
    if variant == "displayed":
        return 6.0 * math.sqrt(log_term * (m + 4)) * c2_constant(m)
    raise ValueError(f"variant must be 'proof' or 'displayed', got {variant!r}")


def bound_theorem7(
    m: int,
    k: int,
    s: float,
    g_s: float,
    inv_sqrt_norm: float,
    *,
    variant: str = "proof",
) -> BoundReport:
    """Deviation bound for the geometric-median merge, in normalized units.

    The guarantee controls ``tanh(D)`` where ``D`` is the normalized
    distance between the merged point and the truth.  With::

        rhs = 26.8 * inv_sqrt_norm * (c1 / sqrt(k) + c2 * (sqrt(s / (4k)) + g_s))

    and ``c1 = c1_constant(m, variant)``, ``c2 = c2_constant(m)``: when
    ``rhs <= 1/2`` the linearization ``tanh(x) >= 0.83 x`` applies and
    ``D <= rhs / 0.83`` (condition holds); otherwise the exact inversion
    ``D <= artanh(rhs)`` is reported, which is vacuous once ``rhs >= 1``.
    Fails with probability at most ``exp(-2s)``.  Requires ``m >= 2``.
    """
    m = _as_int("m", m, minimum=2)
    k = _as_int("k", k)
    s = _as_float("s", s, minimum=0.0)
    g_s = _as_float("g_s", g_s, minimum=0.0)
    inv_sqrt_norm = _as_float("inv_sqrt_norm", inv_sqrt_norm, minimum=0.0, strict=True)
    c1 = c1_constant(m, variant)
    c2 = c2_constant(m)
    rhs = 26.8 * inv_sqrt_norm * (c1 / math.sqrt(k) + c2 * (math.sqrt(s / (4.0 * k)) + g_s))
    if rhs <= 0.5:
        bound = rhs / 0.83
        holds = True
    else:
        bound = math.atanh(min(rhs, 1.0 - 1e-12))
        holds = False
    return BoundReport(
        "theorem7",
        bound,
        math.exp(-2.0 * s),
        condition_value=rhs,
        condition_holds=holds,
        threshold=0.5,
    )


def bound_corollary5(
    d: int,
    n: int,
    k: int,
    s: float,
    third_moment: float,
    sqrt_norm: float,
    sqrt_cond: float,
    *,
    variant: str = "proof",
) -> BoundReport:
    """Euclidean-norm bound for the geometric-median merge of group means.

    ``third_moment`` is the whitened third moment ``E || Sigma^{-1/2}
    (X - mean) ||^3``, ``sqrt_norm = || Sigma^{1/2} ||`` and ``sqrt_cond``
    its condition number.  With ``c1 = c1_constant(d, variant)``,
    ``c2 = c2_constant(d)`` and ``g = 400 d^{1/4} third_moment / sqrt(n)``::

        bound     = 32.4 * sqrt_norm * sqrt_cond
                    * (c1 / sqrt(k n) + c2 * (sqrt(s / (4 k n)) + 400 d^{1/4} third_moment / n))
        condition = sqrt_cond * (c1 / sqrt(k) + c2 * (sqrt(s / (4k)) + g)) <= 0.037

    failing with probability at most ``exp(-2s)``.  Requires ``d >= 2``.
    """
    d = _as_int("d", d, minimum=2)
    n = _as_int("n", n)
    k = _as_int("k", k)
    s = _as_float("s", s, minimum=0.0)
    third_moment = _as_float("third_moment", third_moment, minimum=0.0)
    sqrt_norm = _as_float("sqrt_norm", sqrt_norm, minimum=0.0, strict=True)
    sqrt_cond = _as_float("sqrt_cond", sqrt_cond, minimum=1.0)
    c1 = c1_constant(d, variant)
    c2 = c2_constant(d)
    tail = 400.0 * d**0.25 * third_moment
    g_s = tail / math.sqrt(n)
    condition_value = sqrt_cond * (
        c1 / math.sqrt(k) + c2 * (math.sqrt(s / (4.0 * k)) + g_s)
    )
    bound = (
        32.4
        * sqrt_norm
        * sqrt_cond
        * (c1 / math.sqrt(k * n) + c2 * (math.sqrt(s / (4.0 * k * n)) + tail / n))
    )
    return BoundReport(
        "corollary5",
        bound,
        math.exp(-2.0 * s),
        condition_value=condition_value,
        condition_holds=condition_value <= 0.037,
        threshold=0.037,
    )


# ---------------------------------------------------------------------------
# asymptotic merge variance
# ---------------------------------------------------------------------------


def delta_squared(loss: LossSpec) -> float:
    """Asymptotic variance inflation of the M-estimator merge under
    normal group estimates.

    For the absolute-value loss this is exactly ``pi / 2`` (the classic
    median-vs-mean efficiency factor).  For the Huber loss with threshold
    M it is ``E rho'(Z)^2 / (E rho''(Z))^2`` for standard normal Z::

        E rho'(Z)^2 = 2 Phi(M) - 1 - 2 M phi(M) + 2 M^2 (1 - Phi(M))
        E rho''(Z)  = 2 Phi(M) - 1

    which decreases to 1 as M grows (the merge approaches the mean).
    """
    if not isinstance(loss, LossSpec):
        raise TypeError(f"expected a LossSpec, got {loss!r}")
    if loss.kind == "absolute_value":
        return math.pi / 2.0
    m = loss.threshold
    assert m is not None
    phi_m = math.exp(-0.5 * m * m) / math.sqrt(2.0 * math.pi)
    inner = 2.0 * normal_cdf(m) - 1.0
    numerator = inner - 2.0 * m * phi_m + 2.0 * m * m * (1.0 - normal_cdf(m))
    return numerator / (inner * inner)
