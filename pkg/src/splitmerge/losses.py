"""Robust loss functions used when merging group estimates.

Two families are supported:

``absolute_value``
    rho(z) = |z|; its derivative is the sign function.

``huber``
    Quadratic inside ``[-threshold, threshold]``, linear outside, with the
    derivative clamped to ``[-threshold, threshold]``.

Each loss carries the two scalar summaries the deviation bounds need: the
sup-norm of the derivative and the curvature constant ``c_rho`` (0 for the
absolute-value loss, ``threshold / 2`` for Huber).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LossSpec"]


@dataclass(frozen=True)
class LossSpec:
    """A merging loss: ``absolute_value`` or ``huber`` with a threshold."""

    kind: str
    threshold: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "absolute_value":
            if self.threshold is not None:
                raise ValueError("absolute_value loss takes no threshold")
        elif self.kind == "huber":
            if self.threshold is None or not np.isfinite(self.threshold) or self.threshold <= 0:
                raise ValueError(
                    f"huber loss needs a finite positive threshold, got {self.threshold}"
                )
        else:
            raise ValueError(f"unknown loss kind {self.kind!r}")

    @classmethod
    def absolute_value(cls) -> "LossSpec":
        """The absolute-value loss rho(z) = |z|."""
        return cls("absolute_value")

    @classmethod
    def huber(cls, threshold: float) -> "LossSpec":
        """The Huber loss with clipping threshold ``threshold``."""
        return cls("huber", float(threshold))

    @property
    def c_rho(self) -> float:
        """Curvature constant: 0 for absolute value, threshold/2 for Huber."""
        if self.kind == "absolute_value":
            return 0.0
        assert self.threshold is not None
        return self.threshold / 2.0

    @property
    def rho_prime_sup(self) -> float:
        """Sup-norm of the loss derivative (1 for abs, threshold for Huber)."""
        if self.kind == "absolute_value":
            return 1.0
        assert self.threshold is not None
        return self.threshold

    def rho(self, z):
        """Evaluate the loss elementwise."""
        z = np.asarray(z, dtype=float)
        if self.kind == "absolute_value":
            return np.abs(z)
        m = self.threshold
        return np.where(np.abs(z) <= m, 0.5 * z * z, m * np.abs(z) - 0.5 * m * m)

    def rho_prime(self, z):
        """Evaluate the loss derivative elementwise (sign, or clamp to +-threshold)."""
        z = np.asarray(z, dtype=float)
        if self.kind == "absolute_value":
            return np.sign(z)
        return np.clip(z, -self.threshold, self.threshold)

    def label(self) -> str:
        """Short human-readable tag, e.g. ``huber(3)``."""
        if self.kind == "absolute_value":
            return "absolute_value"
        return f"huber({self.threshold:g})"
