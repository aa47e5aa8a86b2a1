"""Nonnegative potentials V: sums of distance powers or tabulated fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CompactSetSpec, distance_to_set

__all__ = ["PotentialSpec", "PowerTerm"]


@dataclass(frozen=True, eq=False)
class PowerTerm:
    """One term ``b * d(x; A)^(-m)``."""

    set: CompactSetSpec
    coefficient: float
    exponent: float

    def __post_init__(self):
        if self.coefficient <= 0:
            raise ValueError("coefficients must be positive")
        if self.exponent < 0:
            raise ValueError("exponents must be nonnegative")


class PotentialSpec:
    """Potential ``V >= 0`` evaluable at arbitrary points.

    Built either from distance powers ``sum_i b_i d(x; A_i)^(-m_i)`` or from
    a tabulated nonnegative field on a :class:`~potcap.geometry.Grid`.
    Points on a singular set evaluate to ``inf``.
    """

    def __init__(self, terms=(), table=None):
        self.terms = tuple(terms)
        self.table = table
        if not self.terms and table is None:
            raise ValueError("a potential needs at least one term or a table")

    @classmethod
    def distance_power(cls, A, m, b=1.0):
        return cls([PowerTerm(A, float(b), float(m))])

    @classmethod
    def point_power(cls, a, m, b=1.0):
        """``b |x - a|^(-m)``."""
        return cls.distance_power(CompactSetSpec.point(a), m, b)

    @classmethod
    def constant(cls, c, n):
        if c <= 0:
            raise ValueError("a constant potential must be positive")
        return cls([PowerTerm(CompactSetSpec.point(np.zeros(n)), float(c), 0.0)])

    @classmethod
    def tabulated(cls, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.size,):
            raise ValueError("tabulated potential must have one value per grid node")
        if np.any(values < 0) or not np.any(values > 0):
            raise ValueError("tabulated potential must be nonnegative and not identically zero")
        K = CompactSetSpec.from_field(grid, values)  # reuse the nearest-fill interpolant
        return cls(table=K._interp)

    @property
    def is_power_sum(self):
        return self.table is None

    def __add__(self, other):
        if not (self.is_power_sum and other.is_power_sum):
            return NotImplemented
        return PotentialSpec(self.terms + other.terms)

    def scaled(self, factor):
        if self.table is not None:
            table = self.table
            return PotentialSpec(table=lambda x: factor * table(x))
        return PotentialSpec([PowerTerm(t.set, t.coefficient * factor, t.exponent) for t in self.terms])

    def __call__(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if self.table is not None:
            return np.maximum(np.asarray(self.table(x), dtype=float), 0.0)
        V = np.zeros(len(x))
        with np.errstate(divide="ignore"):
            for t in self.terms:
                if t.exponent == 0:
                    V += t.coefficient
                else:
                    V += t.coefficient * distance_to_set(x, t.set) ** (-t.exponent)
        return V

    def to_dict(self):
        if self.table is not None:
            return {"kind": "tabulated"}
        return {
            "kind": "distance_power_sum",
            "terms": [{"set": t.set.to_dict(), "b": t.coefficient, "m": t.exponent} for t in self.terms],
        }

    def __repr__(self):
        if self.table is not None:
            return "PotentialSpec(tabulated)"
        body = " + ".join(f"{t.coefficient:g}*d(x;{t.set.kind})^-{t.exponent:g}" for t in self.terms)
        return f"PotentialSpec({body})"
