"""Closed-form test metrics that can be evaluated pointwise or sampled onto lattices."""

from __future__ import annotations

import numpy as np

from .lattice import Lattice
from .metric_field import LORENTZIAN, RIEMANNIAN, MetricField
from .profiles import Profile


class AnalyticMetric:
    """A metric given as a vectorized function ``x[..., d] -> g[..., d, d]``.

    ``params`` records the generator arguments so presets can be rebuilt from
    a report.
    """

    def __init__(self, fn, dim, signature=RIEMANNIAN, name="custom", params=None, fd_step=1e-5):
        self.fn = fn
        self.dim = int(dim)
        self.signature = signature
        self.name = name
        self.params = dict(params or {})
        self.fd_step = fd_step

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def sample(self, lattice):
        if lattice.ndim != self.dim:
            raise ValueError(f"{self.name} metric is {self.dim}-dimensional, lattice is {lattice.ndim}")
        return MetricField(lattice, self(lattice.coordinates()), self.signature)

    def derivative(self, x):
        """``dg[..., rho, mu, nu] = d_rho g_mu_nu`` by central differences of the closed form."""
        x = np.asarray(x, dtype=float)
        h = self.fd_step
        parts = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            parts.append((self(x + e) - self(x - e)) / (2 * h))
        return np.stack(parts, axis=-3)

    def christoffel(self, x):
        """``Gamma^l_mn`` at points ``x[..., d]``."""
        g = self(x)
        dg = self.derivative(x)
        return christoffel_symbols(small_inv(g), dg)

    def to_dict(self):
        return {"preset": self.name, **self.params}


def small_inv(g):
    """Batched inverse; closed-form cofactors for 1x1, 2x2 and 3x3 blocks."""
    d = g.shape[-1]
    if d == 1:
        return 1.0 / g
    if d == 2:
        a, b, c, e = g[..., 0, 0], g[..., 0, 1], g[..., 1, 0], g[..., 1, 1]
        det = a * e - b * c
        out = np.empty_like(g)
        out[..., 0, 0], out[..., 0, 1] = e / det, -b / det
        out[..., 1, 0], out[..., 1, 1] = -c / det, a / det
        return out
    if d == 3:
        cof = np.empty_like(g)
        for i in range(3):
            for j in range(3):
                r = [k for k in range(3) if k != i]
                c = [k for k in range(3) if k != j]
                minor = g[..., r[0], c[0]] * g[..., r[1], c[1]] - g[..., r[0], c[1]] * g[..., r[1], c[0]]
                cof[..., j, i] = (-1) ** (i + j) * minor
        det = (g[..., 0, :] * cof[..., :, 0]).sum(-1)
        return cof / det[..., None, None]
    return np.linalg.inv(g)


def small_det(g):
    """Batched determinant; closed form up to 3x3."""
    d = g.shape[-1]
    if d == 1:
        return g[..., 0, 0].copy()
    if d == 2:
        return g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    if d == 3:
        return (
            g[..., 0, 0] * (g[..., 1, 1] * g[..., 2, 2] - g[..., 1, 2] * g[..., 2, 1])
            - g[..., 0, 1] * (g[..., 1, 0] * g[..., 2, 2] - g[..., 1, 2] * g[..., 2, 0])
            + g[..., 0, 2] * (g[..., 1, 0] * g[..., 2, 1] - g[..., 1, 1] * g[..., 2, 0])
        )
    return np.linalg.det(g)


def christoffel_symbols(ginv, dg):
    """``Gamma^l_mn = 1/2 g^lr (d_m g_nr + d_n g_mr - d_r g_mn)`` with ``dg[..., r, m, n] = d_r g_mn``."""
    d = dg.shape[-1]
    first = np.moveaxis(dg, -1, -3)  # [r, m, n] = d_m g_nr
    lower = first + np.swapaxes(first, -1, -2) - dg
    flat = lower.reshape(lower.shape[:-3] + (d, d * d))
    return 0.5 * (ginv @ flat).reshape(lower.shape)


def euclidean(dim):
    def fn(x):
        return np.broadcast_to(np.eye(dim), x.shape[:-1] + (dim, dim)).copy()

    return AnalyticMetric(fn, dim, RIEMANNIAN, "euclidean", {"dim": dim})


def constant(diag, signature=None):
    """Constant diagonal metric; a single leading negative entry makes it Lorentzian."""
    diag = [float(v) for v in diag]
    if signature is None:
        signature = LORENTZIAN if diag[0] < 0 and all(v > 0 for v in diag[1:]) else RIEMANNIAN
    if signature == RIEMANNIAN and any(v <= 0 for v in diag):
        raise ValueError("a Riemannian constant metric needs a positive diagonal")
    g0 = np.diag(diag)

    def fn(x):
        return np.broadcast_to(g0, x.shape[:-1] + g0.shape).copy()

    return AnalyticMetric(fn, len(diag), signature, "constant", {"diag": diag})


def minkowski(dim=4):
    m = constant([-1.0] + [1.0] * (dim - 1), LORENTZIAN)
    m.name, m.params = "minkowski", {"dim": dim}
    return m


def sphere2(radius=1.0):
    """Round 2-sphere in ``(theta, phi)``; scalar curvature ``2 / radius^2``."""
    r2 = float(radius) ** 2

    def fn(x):
        g = np.zeros(x.shape[:-1] + (2, 2))
        g[..., 0, 0] = r2
        g[..., 1, 1] = r2 * np.sin(x[..., 0]) ** 2
        return g

    return AnalyticMetric(fn, 2, RIEMANNIAN, "sphere2", {"radius": float(radius)})


def sphere3(radius=1.0):
    """Round 3-sphere in ``(chi, theta, phi)``; scalar curvature ``6 / radius^2``."""
    r2 = float(radius) ** 2

    def fn(x):
        s1 = np.sin(x[..., 0]) ** 2
        g = np.zeros(x.shape[:-1] + (3, 3))
        g[..., 0, 0] = r2
        g[..., 1, 1] = r2 * s1
        g[..., 2, 2] = r2 * s1 * np.sin(x[..., 1]) ** 2
        return g

    return AnalyticMetric(fn, 3, RIEMANNIAN, "sphere3", {"radius": float(radius)})


def conformally_flat(omega, dim):
    """``g = exp(2 omega(x)) delta``; ``omega`` is a :class:`Profile` or its dict form."""
    omega = omega if isinstance(omega, Profile) else Profile.from_dict(omega)

    def fn(x):
        return np.exp(2.0 * omega(x))[..., None, None] * np.eye(dim)

    return AnalyticMetric(fn, dim, RIEMANNIAN, "conformally_flat", {"omega": omega.to_dict(), "dim": dim})


def phase_metric(beta, dim=3, sigma0=1.0):
    """Spatial metric ``(sigma0^-2 + 4 sigma0^2 beta(x)^2) delta`` of an isotropic phase-curvature field."""
    beta = beta if isinstance(beta, Profile) else Profile.from_dict(beta)
    s2 = float(sigma0) ** 2

    def fn(x):
        b = beta(x)
        return (1.0 / s2 + 4.0 * s2 * b * b)[..., None, None] * np.eye(dim)

    return AnalyticMetric(
        fn, dim, RIEMANNIAN, "phase_metric", {"beta": beta.to_dict(), "dim": dim, "sigma0": float(sigma0)}
    )


def sphere_times_flat(radius=1.0):
    """Lorentzian product ``-dt^2 + r^2 (dtheta^2 + sin^2 theta dphi^2) + dz^2`` in ``(t, theta, phi, z)``.

    Its Einstein tensor is ``G = diag(1/r^2, 0, 0, -1/r^2)``.
    """
    r2 = float(radius) ** 2

    def fn(x):
        g = np.zeros(x.shape[:-1] + (4, 4))
        g[..., 0, 0] = -1.0
        g[..., 1, 1] = r2
        g[..., 2, 2] = r2 * np.sin(x[..., 1]) ** 2
        g[..., 3, 3] = 1.0
        return g

    return AnalyticMetric(fn, 4, LORENTZIAN, "sphere_times_flat", {"radius": float(radius)})


PRESETS = {
    "euclidean": euclidean,
    "constant": constant,
    "minkowski": minkowski,
    "sphere2": sphere2,
    "sphere3": sphere3,
    "conformally_flat": conformally_flat,
    "phase_metric": phase_metric,
    "sphere_times_flat": sphere_times_flat,
}


def preset(name, **kwargs):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown metric preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**kwargs)


def sample_around(metric, center, spacing, half_width=2):
    """Sample ``metric`` on a small cube of ``2 * half_width + 1`` sites per axis centred on ``center``."""
    center = np.asarray(center, dtype=float)
    m = 2 * half_width + 1
    lattice = Lattice((m,) * metric.dim, (spacing,) * metric.dim, tuple(center - half_width * spacing))
    return metric.sample(lattice)
