"""Parametric scalar profiles on lattice coordinates, with exact gradients.

A profile is ``const + sum_k poly_k(x[axis_k]) + sum_j bump_j(x)`` where each
polynomial acts on a single coordinate and each bump is an isotropic Gaussian
``amp * exp(-|x - c|^2 / (2 w^2))`` over a chosen set of axes.  The JSON form is

    {"const": 1.0,
     "poly": [{"axis": 1, "coeffs": [0.0, 1.0]}],
     "bumps": [{"amp": 0.1, "center": [0.5, 0.5], "width": 0.2, "axes": [1, 2]}]}

with polynomial coefficients in increasing degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PolyTerm:
    axis: int
    coeffs: tuple

    def value(self, x):
        return np.polynomial.polynomial.polyval(x[..., self.axis], self.coeffs)

    def derivative(self, x, axis):
        if axis != self.axis or len(self.coeffs) < 2:
            return np.zeros(x.shape[:-1])
        dc = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(x[..., self.axis], dc)


@dataclass(frozen=True)
class GaussianBump:
    amp: float
    center: tuple
    width: float
    axes: tuple

    def value(self, x):
        d = x[..., list(self.axes)] - np.asarray(self.center)
        return self.amp * np.exp(-0.5 * (d * d).sum(-1) / self.width**2)

    def derivative(self, x, axis):
        if axis not in self.axes:
            return np.zeros(x.shape[:-1])
        k = self.axes.index(axis)
        d = x[..., self.axes[k]] - self.center[k]
        return -d / self.width**2 * self.value(x)


@dataclass(frozen=True)
class Profile:
    const: float = 0.0
    poly: tuple = field(default_factory=tuple)
    bumps: tuple = field(default_factory=tuple)

    @classmethod
    def constant(cls, c):
        return cls(const=float(c))

    @classmethod
    def linear(cls, axis, slope=1.0, offset=0.0):
        return cls(const=float(offset), poly=(PolyTerm(int(axis), (0.0, float(slope))),))

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, (int, float)):
            return cls.constant(d)
        unknown = set(d) - {"const", "poly", "bumps"}
        if unknown:
            raise KeyError(f"unknown profile keys {sorted(unknown)}")
        poly = tuple(PolyTerm(int(t["axis"]), tuple(float(c) for c in t["coeffs"])) for t in d.get("poly", ()))
        bumps = []
        for b in d.get("bumps", ()):
            center = tuple(float(c) for c in b["center"])
            axes = tuple(int(a) for a in b.get("axes", range(len(center))))
            if len(axes) != len(center):
                raise ValueError("bump center and axes lengths differ")
            bumps.append(GaussianBump(float(b["amp"]), center, float(b["width"]), axes))
        return cls(float(d.get("const", 0.0)), poly, tuple(bumps))

    def to_dict(self):
        return {
            "const": self.const,
            "poly": [{"axis": t.axis, "coeffs": list(t.coeffs)} for t in self.poly],
            "bumps": [
                {"amp": b.amp, "center": list(b.center), "width": b.width, "axes": list(b.axes)}
                for b in self.bumps
            ],
        }

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[:-1], self.const)
        for term in self.poly + self.bumps:
            out = out + term.value(x)
        return out

    def derivative(self, x, axis):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for term in self.poly + self.bumps:
            out = out + term.derivative(x, axis)
        return out

    def gradient(self, x):
        """Exact gradient, shape ``(..., ndim)``."""
        x = np.asarray(x, dtype=float)
        return np.stack([self.derivative(x, k) for k in range(x.shape[-1])], axis=-1)
