"""Smooth test fields with analytic gradients and Laplacians.

A field is any object with ``evaluate(points) -> (value, grad, lap)``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["CompactBump", "RadialPolynomial", "ZeroField", "product", "scale_field"]


class RadialPolynomial:
    """``sum_k c_k s^k`` with ``s = |x - center|^2``.

    ``RadialPolynomial(c, [1, -2, 1])`` is ``(1 - |x-c|^2)^2``, which
    vanishes on the unit sphere around ``c``.
    """

    def __init__(self, center, coeffs):
        self.center = np.asarray(center, dtype=float)
        self.coeffs = np.asarray(coeffs, dtype=float)

    @classmethod
    def bump(cls, center, radius=1.0, power=2):
        """``(1 - |x-c|^2 / radius^2)^power`` expanded in ``s``."""
        p = np.polynomial.Polynomial([1.0, -1.0 / radius**2]) ** power
        return cls(center, p.coef)

    def evaluate(self, points):
        x = np.atleast_2d(points)
        n = x.shape[1]
        y = x - self.center
        s = (y**2).sum(axis=1)
        P = np.polynomial.Polynomial(self.coeffs)
        dP, d2P = P.deriv(1), P.deriv(2)
        val = P(s)
        grad = 2.0 * dP(s)[:, None] * y
        lap = 2.0 * n * dP(s) + 4.0 * s * d2P(s)
        return val, grad, lap


class CompactBump:
    """``amplitude * (1 - |x-c|^2/r^2)^3`` inside ``B(c, r)``, zero outside (C^2)."""

    def __init__(self, center, radius, amplitude=1.0):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.amplitude = float(amplitude)

    def evaluate(self, points):
        x = np.atleast_2d(points)
        n = x.shape[1]
        y = x - self.center
        s = (y**2).sum(axis=1) / self.radius**2
        inside = s < 1
        w = np.where(inside, 1.0 - s, 0.0)
        a = self.amplitude
        val = a * w**3
        # d/ds (1-s)^3 = -3(1-s)^2, ds/dx = 2y/r^2
        grad = a * (-3.0 * w**2 * 2.0 / self.radius**2)[:, None] * y
        lap = a * (-3.0 * w**2 * 2.0 * n / self.radius**2 + 6.0 * w * 4.0 * s / self.radius**2)
        return val, grad, lap


class ZeroField:
    def evaluate(self, points):
        x = np.atleast_2d(points)
        return np.zeros(len(x)), np.zeros_like(x, dtype=float), np.zeros(len(x))


def product(f, g):
    """Product rule for two ``(value, grad, lap)`` triples."""
    fv, fg, fl = f
    gv, gg, gl = g
    return (
        fv * gv,
        fv[:, None] * gg + gv[:, None] * fg,
        fv * gl + gv * fl + 2.0 * (fg * gg).sum(axis=1),
    )


def scale_field(f, c):
    return f[0] * c, f[1] * c, f[2] * c
