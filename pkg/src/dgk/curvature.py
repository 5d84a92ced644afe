"""Levi-Civita connection, curvature tensors, holonomy and geodesic-ball volumes.

Curvature convention::

    R^a_bmn = d_m Gamma^a_nb - d_n Gamma^a_mb + Gamma^a_ml Gamma^l_nb - Gamma^a_nl Gamma^l_mb
    R_bn    = R^a_ban,       R = g^bn R_bn

so the round sphere has ``R > 0`` and geodesic balls on it have a volume
deficit.  Derivatives are second-order central differences: ``Gamma`` is valid
one site in from every edge and the curvature tensors two sites in; values
outside those regions are NaN.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator
from scipy.special import gamma as gamma_fn

from .analytic import AnalyticMetric, christoffel_symbols, sample_around, small_det
from .errors import ConditioningError, DimensionError, IntegrationError, MarginError
from .lattice import gradient
from .metric_field import RIEMANNIAN, MetricField

CONNECTION_MARGIN = 1
CURVATURE_MARGIN = 2


def _invalid_region(metric, margin):
    """Sites whose stencil of width ``margin`` touches an edge or an invalid site."""
    bad = ~metric.valid
    if bad.any():
        bad = ndimage.binary_dilation(bad, iterations=margin)
    return bad | ~metric.lattice.interior_mask(margin)


def connection(metric):
    """Christoffel symbols ``Gamma[..., l, m, n]`` of a lattice metric."""
    g = metric._safe()
    ginv = np.linalg.inv(g)
    cond = np.linalg.cond(g[metric.valid])
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e12):
        raise ConditioningError("metric is singular at some site")
    dg = gradient(g, metric.lattice, order=2)
    gam = christoffel_symbols(ginv, dg)
    gam = 0.5 * (gam + np.swapaxes(gam, -1, -2))
    gam[_invalid_region(metric, CONNECTION_MARGIN)] = np.nan
    return gam


@dataclass(eq=False)
class CurvatureBundle:
    metric: MetricField
    ginv: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray

    @property
    def lattice(self):
        return self.metric.lattice

    @property
    def valid(self):
        return np.isfinite(self.scalar)

    def riemann_lower(self):
        """``R_abmn = g_al R^l_bmn``."""
        return np.einsum("...al,...lbmn->...abmn", self.metric.g, self.riemann)

    def scalar_from_riemann(self):
        """``g^bn R^a_ban`` contracted directly from the Riemann tensor."""
        return np.einsum("...bn,...aban->...", self.ginv, self.riemann)

    def einstein(self):
        """``G_mn = R_mn - 1/2 g_mn R``."""
        return self.ricci - 0.5 * self.metric.g * self.scalar[..., None, None]

    def at(self, site):
        site = self.lattice.check_site(site, CURVATURE_MARGIN)
        if not self.valid[site]:
            raise MarginError(f"site {site} touches a degenerate site")
        return site


def curvature_bundle(metric):
    """Connection, Riemann, Ricci and scalar curvature of a lattice metric."""
    lat = metric.lattice
    if any(d < 2 * CURVATURE_MARGIN + 1 for d in lat.dims):
        raise MarginError(f"lattice {lat.dims} is too small for curvature stencils")
    gam = connection(metric)
    dgam = gradient(gam, lat, order=2)  # [..., s, l, m, n] = d_s Gamma^l_mn
    d_term = np.einsum("...manb->...abmn", dgam)
    q_term = np.einsum("...aml,...lnb->...abmn", gam, gam)
    riem = d_term - np.swapaxes(d_term, -1, -2) + q_term - np.swapaxes(q_term, -1, -2)
    bad = _invalid_region(metric, CURVATURE_MARGIN)
    riem[bad] = np.nan
    ginv = metric.inverse()
    ricci = np.einsum("...abam->...bm", riem)
    ricci = 0.5 * (ricci + np.swapaxes(ricci, -1, -2))
    scalar = np.einsum("...mn,...mn->...", ginv, ricci)
    return CurvatureBundle(metric, ginv, gam, riem, ricci, scalar)


def loop_bivector(u, v):
    """Area bivector ``dS^mn = (u^m v^n - u^n v^m) / 2`` of the parallelogram spanned by ``u, v``."""
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    return 0.5 * (np.outer(u, v) - np.outer(v, u))


def holonomy_defect(bundle, V, dS, site):
    """``dV^a = R^a_bmn V^b dS^mn`` at a lattice site.

    With ``dS = loop_bivector(u, v)`` this is the change of ``V`` after
    parallel transport around the small loop that goes along ``v`` first,
    then ``u``, then back along ``-v`` and ``-u``.
    """
    site = bundle.at(site)
    V = np.asarray(V, dtype=float)
    dS = np.asarray(dS, dtype=float)
    d = bundle.metric.dim
    if V.shape != (d,) or dS.shape != (d, d):
        raise DimensionError(f"need V of shape ({d},) and dS of shape ({d},{d})")
    if not np.allclose(dS, -dS.T):
        raise ValueError("dS must be antisymmetric")
    return np.einsum("abmn,b,mn->a", bundle.riemann[site], V, dS)


@dataclass
class VolumeReport:
    volume: float
    stderr: float
    deficit_coeff: float
    deficit_stderr: float
    R_local: float
    expected_coeff: float
    n_samples: int
    seed: int
    r: float
    dim: int

    def to_dict(self):
        return asdict(self)

    def consistent(self, nsigma=2.0, floor=1e-8):
        """Deficit coefficient agrees with ``R_local / (6 (n + 2))`` within ``nsigma`` standard errors."""
        return abs(self.deficit_coeff - self.expected_coeff) <= nsigma * self.deficit_stderr + floor


class _GridGeometry:
    """Pointwise metric and connection of a lattice metric by linear interpolation."""

    def __init__(self, metric):
        axes = metric.lattice.axes()
        gam = connection(metric)
        self._g = RegularGridInterpolator(axes, metric.g, bounds_error=False, fill_value=np.nan)
        self._gam = RegularGridInterpolator(axes, gam, bounds_error=False, fill_value=np.nan)
        self.dim = metric.dim
        self.metric_field = metric

    def metric(self, x):
        return self._g(x)

    def christoffel(self, x):
        return self._gam(x)


class _AnalyticGeometry:
    def __init__(self, metric):
        self.dim = metric.dim
        self.analytic = metric

    def metric(self, x):
        return self.analytic(x)

    def christoffel(self, x):
        return self.analytic.christoffel(x)


def _geodesic_endpoints(geom, center, v0, steps):
    """RK4 for ``x'' = -Gamma(x)[x', x']`` over unit affine time from ``center``.

    The state is the offset ``y = x - center`` so that nearby rays keep their
    relative precision.  Returns ``(y(1), x'(1))``.
    """
    dt = 1.0 / steps
    n = v0.shape[-1]
    y, v = np.zeros_like(v0), v0.copy()

    def acc(yy, vv):
        gam = geom.christoffel(center + yy).reshape(-1, n, n * n)
        vv2 = (vv[:, :, None] * vv[:, None, :]).reshape(-1, n * n, 1)
        return -(gam @ vv2)[..., 0]

    for _ in range(steps):
        k1y, k1v = v, acc(y, v)
        k2y, k2v = v + 0.5 * dt * k1v, acc(y + 0.5 * dt * k1y, v + 0.5 * dt * k1v)
        k3y, k3v = v + 0.5 * dt * k2v, acc(y + 0.5 * dt * k2y, v + 0.5 * dt * k2v)
        k4y, k4v = v + dt * k3v, acc(y + dt * k3y, v + dt * k3v)
        y = y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(v)):
            raise IntegrationError("geodesic left the metric domain")
    return y, v


def _complement_frames(u):
    """Householder frames ``H`` with ``H[:, :, 1:]`` an orthonormal basis of ``u``'s complement."""
    m, n = u.shape
    sigma = np.where(u[:, 0] >= 0, 1.0, -1.0)
    h = u.copy()
    h[:, 0] += sigma
    H = np.eye(n) - 2.0 * h[:, :, None] * h[:, None, :] / (h * h).sum(1)[:, None, None]
    return H


def unit_ball_volume(n):
    return np.pi ** (n / 2) / gamma_fn(n / 2 + 1)


def _local_scalar(metric, geom, center, r):
    if isinstance(metric, AnalyticMetric):
        h = min(1e-3, r / 10)
        bundle = curvature_bundle(sample_around(metric, center, h))
        return float(bundle.scalar[(2,) * metric.dim])
    bundle = curvature_bundle(metric)
    interp = RegularGridInterpolator(metric.lattice.axes(), bundle.scalar, bounds_error=False, fill_value=np.nan)
    return float(interp(np.asarray(center, dtype=float)[None])[0])


def ball_volume(metric, center, r, n_samples=100_000, seed=0, steps=200, fd_rel=1e-6, batch=20_000):
    """Monte-Carlo volume of the geodesic ball ``B_r(center)`` and its curvature deficit.

    Points ``w = s u`` are drawn uniformly from the radius-``r`` ball of normal
    coordinates (an orthonormal frame at ``center``).  Each is mapped by the
    exponential map, integrated with fixed-step RK4 (``r/steps`` in arc
    length), and weighted by ``sqrt(det g) |det d exp_w|``.  The radial column
    of the Jacobian is the endpoint velocity over ``s``; the ``n - 1`` angular
    columns are forward differences over a simplex of neighbouring rays at
    ``w + delta e_k`` with ``e_k`` orthogonal to ``u``.  The deficit
    coefficient is ``(omega_n r^n - Vol) / (omega_n r^(n+2))``.
    """
    if isinstance(metric, AnalyticMetric):
        geom = _AnalyticGeometry(metric)
    elif isinstance(metric, MetricField):
        geom = _GridGeometry(metric)
    else:
        raise TypeError("metric must be an AnalyticMetric or a MetricField")
    if metric.signature != RIEMANNIAN:
        raise ValueError("ball volumes need a Riemannian metric")
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 1e4")
    n = geom.dim
    center = np.asarray(center, dtype=float)
    gc = geom.metric(center[None])[0]
    if not np.all(np.isfinite(gc)):
        raise IntegrationError("center lies outside the metric domain")
    E = np.linalg.inv(np.linalg.cholesky(gc)).T  # E^T g E = I
    delta = fd_rel * r
    rng = np.random.default_rng(seed)
    ratios = np.empty(n_samples)
    for start in range(0, n_samples, batch):
        m = min(batch, n_samples - start)
        u = rng.standard_normal((m, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        s = r * rng.random(m) ** (1.0 / n)
        w = s[:, None] * u
        H = _complement_frames(u)
        wr = np.concatenate([w[:, None, :], w[:, None, :] + delta * np.swapaxes(H[:, :, 1:], 1, 2)], axis=1)
        ye, ve = _geodesic_endpoints(geom, center, wr.reshape(-1, n) @ E.T, steps)
        ye, ve = ye.reshape(m, n, n), ve.reshape(m, n, n)
        J = np.empty((m, n, n))
        J[:, 0] = ve[:, 0] / s[:, None]
        J[:, 1:] = (ye[:, 1:] - ye[:, :1]) / delta
        gdet = small_det(geom.metric(center + ye[:, 0]))
        ratios[start : start + m] = np.sqrt(gdet) * np.abs(small_det(J))
    if not np.all(np.isfinite(ratios)):
        raise IntegrationError("geodesic left the metric domain")
    omega = unit_ball_volume(n)
    mean = ratios.mean()
    sem = ratios.std(ddof=1) / np.sqrt(n_samples)
    R_local = _local_scalar(metric, geom, center, r)
    return VolumeReport(
        volume=float(omega * r**n * mean),
        stderr=float(omega * r**n * sem),
        deficit_coeff=float((1.0 - mean) / r**2),
        deficit_stderr=float(sem / r**2),
        R_local=R_local,
        expected_coeff=R_local / (6.0 * (n + 2)),
        n_samples=int(n_samples),
        seed=int(seed),
        r=float(r),
        dim=n,
    )
