"""Benchmark distribution families: sampling, analytic moments, contamination.

Five families are supported, chosen to span light and heavy tails:

========== ==================== =========================================
kind       parameters           notes
========== ==================== =========================================
normal     mean, stddev         all moments finite
lomax      alpha, lambda        shifted Pareto on [0, inf); tail index alpha
pareto     shape, scale         support [scale, inf); tail index shape
student_t  dof                  symmetric about 0; tail index dof
half_t     dof                  |T_dof|; support [0, inf); tail index dof
========== ==================== =========================================

:func:`true_moments` returns the analytic mean/variance/median (``None``
where the integral diverges) plus absolute central moments ``E|X - mean|^p``
— in closed form where one exists, otherwise by adaptive quadrature with the
result flagged as numeric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import integrate, special

__all__ = [
    "DistSpec",
    "MomentValue",
    "MomentReport",
    "ContaminationSpec",
    "sample",
    "contaminate",
    "true_moments",
    "pdf",
    "support",
    "tail_index",
]

_FAMILY_PARAMS: dict[str, tuple[str, ...]] = {
    "normal": ("mean", "stddev"),
    "lomax": ("alpha", "lambda"),
    "pareto": ("shape", "scale"),
    "student_t": ("dof",),
    "half_t": ("dof",),
}

# Parameters that must be strictly positive, by family.
_POSITIVE = {
    "normal": ("stddev",),
    "lomax": ("alpha", "lambda"),
    "pareto": ("shape", "scale"),
    "student_t": ("dof",),
    "half_t": ("dof",),
}

_QUAD_REL_TOL = 1e-10
_QUAD_LIMIT = 400


@dataclass(frozen=True)
class DistSpec:
    """A distribution family tag plus its parameter values.

    Use the named constructors (:meth:`normal`, :meth:`lomax`, ...) rather
    than the raw dataclass fields; they enforce the per-family parameter
    names and positivity constraints.
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        names = _FAMILY_PARAMS.get(self.kind)
        if names is None:
            raise ValueError(
                f"unknown distribution kind {self.kind!r}; "
                f"expected one of {sorted(_FAMILY_PARAMS)}"
            )
        if len(self.params) != len(names):
            raise ValueError(
                f"{self.kind} takes parameters {names}, got {len(self.params)} values"
            )
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        for name, value in zip(names, self.params):
            if not math.isfinite(value):
                raise ValueError(f"{self.kind} parameter {name!r} must be finite, got {value}")
            if name in _POSITIVE[self.kind] and value <= 0:
                raise ValueError(f"{self.kind} parameter {name!r} must be > 0, got {value}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def normal(cls, mean: float = 0.0, stddev: float = 1.0) -> "DistSpec":
        return cls("normal", (mean, stddev))

    @classmethod
    def lomax(cls, alpha: float, lam: float = 1.0) -> "DistSpec":
        return cls("lomax", (alpha, lam))

    @classmethod
    def pareto(cls, shape: float, scale: float = 1.0) -> "DistSpec":
        return cls("pareto", (shape, scale))

    @classmethod
    def student_t(cls, dof: float) -> "DistSpec":
        return cls("student_t", (dof,))

    @classmethod
    def half_t(cls, dof: float) -> "DistSpec":
        return cls("half_t", (dof,))

    # -- accessors ---------------------------------------------------------

    @property
    def param_names(self) -> tuple[str, ...]:
        return _FAMILY_PARAMS[self.kind]

    def param(self, name: str) -> float:
        try:
            return self.params[self.param_names.index(name)]
        except ValueError:
            raise KeyError(f"{self.kind} has no parameter {name!r}") from None

    # -- serialization -----------------------------------------------------

    def as_mapping(self) -> dict[str, float | str]:
        """Flat mapping ``{"kind": ..., <param>: value, ...}`` (JSON/TOML friendly)."""
        out: dict[str, float | str] = {"kind": self.kind}
        for name, value in zip(self.param_names, self.params):
            out[name] = value
        return out

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object]) -> "DistSpec":
        """Inverse of :meth:`as_mapping`; rejects unknown or missing keys."""
        data = dict(mapping)
        kind = data.pop("kind", None)
        if not isinstance(kind, str):
            raise ValueError("distribution mapping needs a string 'kind' entry")
        names = _FAMILY_PARAMS.get(kind)
        if names is None:
            raise ValueError(
                f"unknown distribution kind {kind!r}; expected one of {sorted(_FAMILY_PARAMS)}"
            )
        missing = [n for n in names if n not in data]
        if missing:
            raise ValueError(f"{kind} distribution is missing parameters {missing}")
        extra = sorted(set(data) - set(names))
        if extra:
            raise ValueError(f"{kind} distribution got unknown parameters {extra}")
        values = []
        for name in names:
            value = data[name]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"{kind} parameter {name!r} must be a number, got {value!r}")
            values.append(float(value))
        return cls(kind, tuple(values))


@dataclass(frozen=True)
class ContaminationSpec:
    """Replace ``count`` sample entries with draws from ``outlier``."""

    count: int
    outlier: DistSpec

    def __post_init__(self) -> None:
        if not isinstance(self.count, (int, np.integer)) or isinstance(self.count, bool):
            raise ValueError("contamination count must be an integer")
        if self.count < 0:
            raise ValueError(f"contamination count must be >= 0, got {self.count}")
        object.__setattr__(self, "count", int(self.count))


def sample(spec: DistSpec, size, rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. samples from ``spec`` with the given shape.

    ``size`` may be an int or a shape tuple; multi-dimensional shapes give
    independent draws per entry (vector data is i.i.d. per coordinate).
    Heavy-tailed families use inverse-CDF transforms of uniforms so the
    draw is a pure function of the generator state.
    """
    kind = spec.kind
    if kind == "normal":
        mean, stddev = spec.params
        return rng.normal(mean, stddev, size)
    if kind == "lomax":
        alpha, lam = spec.params
        u = rng.random(size)
        return lam * ((1.0 - u) ** (-1.0 / alpha) - 1.0)
    if kind == "pareto":
        shape, scale = spec.params
        u = rng.random(size)
        return scale * (1.0 - u) ** (-1.0 / shape)
    if kind == "student_t":
        (dof,) = spec.params
        return rng.standard_t(dof, size)
    if kind == "half_t":
        (dof,) = spec.params
        return np.abs(rng.standard_t(dof, size))
    raise AssertionError(f"unhandled kind {kind!r}")


def contaminate(x: np.ndarray, spec: ContaminationSpec, rng: np.random.Generator) -> np.ndarray:
    """Return a copy of ``x`` with ``spec.count`` rows replaced by outliers.

    Replacement positions are drawn uniformly without replacement along the
    first axis; for 2-D input the whole row is replaced (each coordinate an
    independent outlier draw).  The input array is never modified.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2):
        raise ValueError(f"expected a 1-D or 2-D sample array, got ndim={x.ndim}")
    n = x.shape[0]
    if spec.count > n:
        raise ValueError(f"cannot replace {spec.count} entries of a sample of size {n}")
    out = x.copy()
    if spec.count == 0:
        return out
    positions = rng.choice(n, size=spec.count, replace=False)
    if out.ndim == 1:
        out[positions] = sample(spec.outlier, spec.count, rng)
    else:
        out[positions] = sample(spec.outlier, (spec.count, out.shape[1]), rng)
    return out


# ---------------------------------------------------------------------------
# densities and analytic moments
# ---------------------------------------------------------------------------


def support(spec: DistSpec) -> tuple[float, float]:
    """Open interval outside which the density vanishes."""
    if spec.kind == "normal":
        return (-math.inf, math.inf)
    if spec.kind == "lomax":
        return (0.0, math.inf)
    if spec.kind == "pareto":
        return (spec.param("scale"), math.inf)
    if spec.kind == "student_t":
        return (-math.inf, math.inf)
    if spec.kind == "half_t":
        return (0.0, math.inf)
    raise AssertionError(spec.kind)


def tail_index(spec: DistSpec) -> float:
    """Largest p such that ``E|X|^q`` is finite for all q < p (``inf`` for normal)."""
    if spec.kind == "normal":
        return math.inf
    if spec.kind == "lomax":
        return spec.param("alpha")
    if spec.kind == "pareto":
        return spec.param("shape")
    return spec.param("dof")


def _t_pdf(x: np.ndarray, dof: float) -> np.ndarray:
    lognorm = (
        special.gammaln((dof + 1.0) / 2.0)
        - special.gammaln(dof / 2.0)
        - 0.5 * math.log(dof * math.pi)
    )
    return np.exp(lognorm - 0.5 * (dof + 1.0) * np.log1p(x * x / dof))


def pdf(spec: DistSpec, x) -> np.ndarray:
    """Probability density of ``spec`` evaluated elementwise (0 off-support)."""
    x = np.asarray(x, dtype=float)
    if spec.kind == "normal":
        mean, stddev = spec.params
        z = (x - mean) / stddev
        return np.exp(-0.5 * z * z) / (stddev * math.sqrt(2.0 * math.pi))
    if spec.kind == "lomax":
        alpha, lam = spec.params
        inside = x >= 0
        dens = np.zeros_like(x)
        dens[inside] = (alpha / lam) * (1.0 + x[inside] / lam) ** (-(alpha + 1.0))
        return dens
    if spec.kind == "pareto":
        shape, scale = spec.params
        inside = x >= scale
        dens = np.zeros_like(x)
        dens[inside] = shape * scale**shape / x[inside] ** (shape + 1.0)
        return dens
    if spec.kind == "student_t":
        (dof,) = spec.params
        return _t_pdf(x, dof)
    if spec.kind == "half_t":
        (dof,) = spec.params
        inside = x >= 0
        dens = np.zeros_like(x)
        dens[inside] = 2.0 * _t_pdf(x[inside], dof)
        return dens
    raise AssertionError(spec.kind)


def _t_abs_moment(dof: float, p: float) -> float:
    """Closed form for E|T_dof|^p, valid for 0 < p < dof."""
    return math.exp(
        0.5 * p * math.log(dof)
        + special.gammaln((p + 1.0) / 2.0)
        + special.gammaln((dof - p) / 2.0)
        - 0.5 * math.log(math.pi)
        - special.gammaln(dof / 2.0)
    )


def _normal_abs_moment(stddev: float, p: float) -> float:
    """Closed form for E|X - mean|^p when X ~ normal(mean, stddev)."""
    return stddev**p * math.exp(
        0.5 * p * math.log(2.0) + special.gammaln((p + 1.0) / 2.0) - 0.5 * math.log(math.pi)
    )


@dataclass(frozen=True)
class MomentValue:
    """A moment value plus a flag saying whether it came from quadrature."""

    value: float | None
    numeric: bool


@dataclass(frozen=True)
class MomentReport:
    """Analytic moments for one :class:`DistSpec`.

    ``mean``, ``variance`` and ``median`` are ``None`` where the defining
    integral diverges.  Absolute central moments come from
    :meth:`abs_central_moment`; use :meth:`abs_central_moment_info` to also
    learn whether the value required a numeric fallback.
    """

    spec: DistSpec
    mean: float | None
    variance: float | None
    median: float

    @property
    def stddev(self) -> float | None:
        return None if self.variance is None else math.sqrt(self.variance)

    def abs_central_moment(self, p: float) -> float | None:
        """``E|X - mean|^p``, or ``None`` when it diverges (p >= tail index)."""
        return self.abs_central_moment_info(p).value

    def abs_central_moment_info(self, p: float) -> MomentValue:
        """Like :meth:`abs_central_moment` but flags numeric-quadrature results."""
        if not (isinstance(p, (int, float)) and math.isfinite(p) and p > 0):
            raise ValueError(f"moment order p must be a finite positive number, got {p!r}")
        p = float(p)
        if self.mean is None or p >= tail_index(self.spec):
            return MomentValue(None, False)
        spec = self.spec
        if spec.kind == "normal":
            return MomentValue(_normal_abs_moment(spec.param("stddev"), p), False)
        if spec.kind == "student_t":
            return MomentValue(_t_abs_moment(spec.param("dof"), p), False)
        return MomentValue(self._quad_abs_central(p), True)

    def _quad_abs_central(self, p: float) -> float:
        """Adaptive quadrature of |x - mean|^p * pdf over the full support.

        The integral is split at the mean, where the integrand has a kink;
        each half (one of which may stretch to infinity) is handled by the
        adaptive routine on its own.
        """
        spec = self.spec
        center = self.mean
        assert center is not None
        lo, hi = support(spec)

        def integrand(x: float) -> float:
            return abs(x - center) ** p * float(pdf(spec, x))

        total = 0.0
        if lo < center:
            left, _ = integrate.quad(
                integrand, lo, center, epsabs=0.0, epsrel=_QUAD_REL_TOL, limit=_QUAD_LIMIT
            )
            total += left
        right_lo = max(lo, center)
        right, _ = integrate.quad(
            integrand, right_lo, hi, epsabs=0.0, epsrel=_QUAD_REL_TOL, limit=_QUAD_LIMIT
        )
        return total + right


def true_moments(spec: DistSpec) -> MomentReport:
    """Analytic mean, variance and median of ``spec`` (``None`` if divergent)."""
    kind = spec.kind
    if kind == "normal":
        mean, stddev = spec.params
        return MomentReport(spec, mean, stddev * stddev, mean)
    if kind == "lomax":
        alpha, lam = spec.params
        mean = lam / (alpha - 1.0) if alpha > 1.0 else None
        variance = (
            lam * lam * alpha / ((alpha - 1.0) ** 2 * (alpha - 2.0)) if alpha > 2.0 else None
        )
        median = lam * (2.0 ** (1.0 / alpha) - 1.0)
        return MomentReport(spec, mean, variance, median)
    if kind == "pareto":
        shape, scale = spec.params
        mean = shape * scale / (shape - 1.0) if shape > 1.0 else None
        variance = (
            scale * scale * shape / ((shape - 1.0) ** 2 * (shape - 2.0)) if shape > 2.0 else None
        )
        median = scale * 2.0 ** (1.0 / shape)
        return MomentReport(spec, mean, variance, median)
    if kind == "student_t":
        (dof,) = spec.params
        mean = 0.0 if dof > 1.0 else None
        variance = dof / (dof - 2.0) if dof > 2.0 else None
        return MomentReport(spec, mean, variance, 0.0)
    if kind == "half_t":
        (dof,) = spec.params
        mean = _t_abs_moment(dof, 1.0) if dof > 1.0 else None
        variance = None
        if dof > 2.0:
            assert mean is not None
            variance = dof / (dof - 2.0) - mean * mean
        median = float(special.stdtrit(dof, 0.75))
        return MomentReport(spec, mean, variance, median)
    raise AssertionError(kind)
