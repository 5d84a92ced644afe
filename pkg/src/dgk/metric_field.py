"""Lorentzian metric reconstruction from detector-parameter fields on a lattice.

Lattice axis 0 is time and axes ``1..n`` are space.  The spatial metric is the
pullback of the label-sector distinguishability metric through the label map
``xi_S(x)``; the squared lapse is the pullback of the temporal scale through
``xi_T(x)`` along the time axis.  Background fields (``A(x)``, ``B(x)``,
``a(x)``, ...) set the Gaussian parameters at each site without entering the
Jacobian, which is how the isotropic phase-curvature example ``B = beta(x) I``
is expressed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, DimensionError, DomainError
from .gaussian_states import SpatialDetectorParams, TemporalDetectorParams, check_spd
from .info_geometry import ParamChart, chart_metric
from .lattice import Lattice, partial
from .profiles import Profile

RANK_TOL = 1e-10

RIEMANNIAN = "riemannian"
LORENTZIAN = "lorentzian-block"


@dataclass(eq=False)
class MetricField:
    """Lattice-sampled symmetric metric ``g[..., mu, nu]``.

    ``valid`` marks sites usable by downstream stencils (all sites unless some
    were flagged degenerate during reconstruction).
    """

    lattice: Lattice
    g: np.ndarray
    signature: str = RIEMANNIAN
    valid: np.ndarray = None

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        d = self.lattice.ndim
        if g.shape != self.lattice.dims + (d, d):
            raise DimensionError(f"metric shape {g.shape} does not match lattice {self.lattice.dims} x ({d},{d})")
        if not np.allclose(g, np.swapaxes(g, -1, -2), rtol=0, atol=1e-12 * max(1.0, np.abs(g).max())):
            raise DomainError("metric is not symmetric")
        self.g = g
        if self.valid is None:
            self.valid = np.ones(self.lattice.dims, dtype=bool)
        if self.signature not in (RIEMANNIAN, LORENTZIAN):
            raise ValueError(f"unknown signature {self.signature!r}")
        if self.signature == LORENTZIAN:
            gv = g[self.valid]
            if np.any(gv[:, 0, 1:] != 0) or np.any(gv[:, 0, 0] >= 0):
                raise DomainError("lorentzian-block metric needs g_0i = 0 and g_00 < 0")

    @property
    def dim(self):
        return self.lattice.ndim

    def inverse(self):
        return np.linalg.inv(self._safe())

    def sqrt_abs_det(self):
        return np.sqrt(np.abs(np.linalg.det(self._safe())))

    def _safe(self):
        if self.valid.all():
            return self.g
        g = self.g.copy()
        diag = np.ones(self.dim)
        if self.signature == LORENTZIAN:
            diag[0] = -1.0
        g[~self.valid] = np.diag(diag)
        return g

    def spatial_block(self):
        return self.g[..., 1:, 1:]

    def spatial_slice(self, t_index=0):
        """Riemannian metric of one constant-time slice on the spatial sub-lattice."""
        if self.signature != LORENTZIAN:
            raise ValueError("spatial_slice needs a lorentzian-block metric")
        lat = self.lattice
        sub = Lattice(lat.dims[1:], lat.spacing[1:], lat.origin[1:])
        return MetricField(sub, self.g[t_index, ..., 1:, 1:], RIEMANNIAN, self.valid[t_index])


def _site_params_spatial(base, background, shape):
    """Broadcast per-site A, B, p arrays from a base state and background overrides."""
    n = base.n
    A = np.broadcast_to(base.A, shape + (n, n)).copy()
    B = np.broadcast_to(base.B, shape + (n, n)).copy()
    p = np.broadcast_to(base.p, shape + (n,)).copy()
    for key, value in background.items():
        value = np.asarray(value, dtype=float)
        if key == "A":
            A = value[..., None, None] * np.eye(n) if value.shape == shape else value
        elif key == "B":
            B = value[..., None, None] * np.eye(n) if value.shape == shape else value
        elif key == "p":
            p = value
        else:
            raise KeyError(f"unknown spatial background field {key!r}")
    if A.shape != shape + (n, n) or B.shape != shape + (n, n) or p.shape != shape + (n,):
        raise DimensionError("background field shapes do not match the lattice")
    return A, B, p


def _site_params_temporal(base, background, shape):
    a = np.broadcast_to(base.a, shape).astype(float)
    b = np.broadcast_to(base.b, shape).astype(float)
    for key, value in background.items():
        if key == "a":
            a = np.broadcast_to(np.asarray(value, dtype=float), shape).copy()
        elif key == "b":
            b = np.broadcast_to(np.asarray(value, dtype=float), shape).copy()
        else:
            raise KeyError(f"unknown temporal background field {key!r}")
    return a, b


@dataclass(eq=False)
class DetectorFieldGrid:
    """Detector-parameter fields on a spacetime lattice (axis 0 = time).

    ``xi_S`` and ``xi_T`` hold per-site chart coordinates with shapes
    ``(*dims, k_S)`` and ``(*dims, k_T)``.  ``jac_S``/``jac_T`` optionally hold
    exact Jacobians ``d xi^a / d x^mu`` with shape ``(*dims, k, ndim)``; when
    absent they are computed with fourth-order stencils.
    """

    lattice: Lattice
    spatial_chart: ParamChart
    xi_S: np.ndarray
    temporal_chart: ParamChart = None
    xi_T: np.ndarray = None
    spatial_background: dict = field(default_factory=dict)
    temporal_background: dict = field(default_factory=dict)
    jac_S: np.ndarray = None
    jac_T: np.ndarray = None

    def __post_init__(self):
        dims = self.lattice.dims
        self.xi_S = np.asarray(self.xi_S, dtype=float).reshape(dims + (self.spatial_chart.dim,))
        if self.temporal_chart is not None:
            self.xi_T = np.asarray(self.xi_T, dtype=float).reshape(dims + (self.temporal_chart.dim,))
        if self.spatial_chart.temporal:
            raise ValueError("spatial chart needs a spatial base state")
        if self.temporal_chart is not None and not self.temporal_chart.temporal:
            raise ValueError("temporal chart needs a temporal base state")
        self._validate()

    @property
    def n(self):
        return self.lattice.ndim - 1

    def _validate(self):
        dims = self.lattice.dims
        A, _, _ = _site_params_spatial(self.spatial_chart._base, self.spatial_background, dims)
        eig = np.linalg.eigvalsh(A)[..., 0]
        if np.any(eig <= 0):
            site = tuple(int(i) for i in np.argwhere(eig <= 0)[0])
            raise DomainError(f"A is not positive-definite at site {site} (eigenvalue {eig[site]!r})")
        if self.temporal_chart is not None:
            a, _ = _site_params_temporal(self.temporal_chart.base, self.temporal_background, dims)
            if np.any(a <= 0):
                site = tuple(int(i) for i in np.argwhere(a <= 0)[0])
                raise DomainError(f"temporal width a <= 0 at site {site}")

    @classmethod
    def from_profiles(
        cls,
        lattice,
        spatial_chart,
        spatial_profiles,
        temporal_chart=None,
        temporal_profiles=(),
        spatial_background=None,
        temporal_background=None,
    ):
        """Build a grid whose fields are :class:`Profile` objects, with exact Jacobians.

        Background profiles are keyed ``"A"``/``"B"`` (isotropic multiples of
        the identity) for the spatial sector and ``"a"``/``"b"`` for the
        temporal one.
        """
        x = lattice.coordinates()
        sp = [p if isinstance(p, Profile) else Profile.from_dict(p) for p in spatial_profiles]
        xi_S = np.stack([p(x) for p in sp], axis=-1)
        jac_S = np.stack([p.gradient(x) for p in sp], axis=-2)
        xi_T = jac_T = None
        if temporal_chart is not None:
            tp = [p if isinstance(p, Profile) else Profile.from_dict(p) for p in temporal_profiles]
            xi_T = np.stack([p(x) for p in tp], axis=-1)
            jac_T = np.stack([p.gradient(x) for p in tp], axis=-2)
        sbg = {}
        for key, prof in (spatial_background or {}).items():
            prof = prof if isinstance(prof, Profile) else Profile.from_dict(prof)
            sbg[key] = prof(x)
        tbg = {}
        for key, prof in (temporal_background or {}).items():
            prof = prof if isinstance(prof, Profile) else Profile.from_dict(prof)
            tbg[key] = prof(x)
        return cls(lattice, spatial_chart, xi_S, temporal_chart, xi_T, sbg, tbg, jac_S, jac_T)

    def spatial_jacobian(self):
        """``d xi_S^a / d x^i`` over the spatial axes, shape ``(*dims, k_S, n)``."""
        if self.jac_S is not None:
            return self.jac_S[..., 1:]
        parts = [partial(self.xi_S, self.lattice, ax, order=4) for ax in range(1, self.lattice.ndim)]
        return np.stack(parts, axis=-1)

    def time_derivative(self):
        """``d_0 xi_T^alpha``, shape ``(*dims, k_T)``."""
        if self.jac_T is not None:
            return self.jac_T[..., 0]
        return partial(self.xi_T, self.lattice, 0, order=4)

    def spatial_state_metric(self):
        """``G^(S)_ab(xi_S(x))`` at every site."""
        dims = self.lattice.dims
        chart = self.spatial_chart
        A, B, p = _site_params_spatial(chart._base, self.spatial_background, dims)
        if chart.is_label_chart():
            full = A + 4.0 * (B @ np.linalg.solve(A, B))
            idx = [c.index[0] for c in chart.coords]
            return full[..., idx, :][..., :, idx]
        out = np.empty(dims + (chart.dim, chart.dim))
        base = chart._base
        for site in np.ndindex(*dims):
            local = chart.with_base(SpatialDetectorParams(q=base.q, A=A[site], B=B[site], p=p[site], phi=base.phi))
            out[site] = chart_metric(local, self.xi_S[site])
        return out

    def temporal_state_metric(self):
        """``G^(T)_ab(xi_T(x))`` at every site."""
        dims = self.lattice.dims
        chart = self.temporal_chart
        a, b = _site_params_temporal(chart.base, self.temporal_background, dims)
        if chart.is_label_chart():
            return (a + 4.0 * b * b / a)[..., None, None]
        out = np.empty(dims + (chart.dim, chart.dim))
        base = chart.base
        for site in np.ndindex(*dims):
            local = chart.with_base(TemporalDetectorParams(base.t, a[site], b[site], base.pi, base.varphi))
            out[site] = chart_metric(local, self.xi_T[site])
        return out


def pullback_spatial(grid):
    """Spatial metric ``h_ij = G_ab d_i xi^a d_j xi^b`` and a per-site degeneracy flag.

    Returns ``(h, flags)`` with ``h`` of shape ``(*dims, n, n)``; a site is
    flagged when the spatial Jacobian has rank below ``n``.
    """
    if grid.spatial_chart.dim < grid.n:
        raise DimensionError(f"spatial chart has {grid.spatial_chart.dim} coordinates for n = {grid.n}")
    J = grid.spatial_jacobian()
    G = grid.spatial_state_metric()
    h = np.einsum("...ai,...ab,...bj->...ij", J, G, J)
    sv = np.linalg.svd(J, compute_uv=False)
    flags = sv[..., -1] <= RANK_TOL * np.maximum(1.0, sv[..., 0])
    return h, flags


def pullback_lapse(grid):
    """Squared lapse ``N^2 = G^(T) d_0 xi_T d_0 xi_T`` and a per-site degeneracy flag."""
    if grid.temporal_chart is None or grid.temporal_chart.dim == 0:
        raise ValueError("grid has no temporal chart")
    v = grid.time_derivative()
    G = grid.temporal_state_metric()
    N2 = np.einsum("...a,...ab,...b->...", v, G, v)
    flags = np.linalg.norm(v, axis=-1) <= RANK_TOL
    return N2, flags


def assemble_lorentzian(lattice, N2, h, flags=None, allow_degenerate=False):
    """Block-diagonal metric ``diag(-N^2, h_ij)``.

    Flagged sites raise :class:`DegeneracyError` unless ``allow_degenerate``,
    in which case they are marked invalid in the returned field.
    """
    N2 = np.asarray(N2, dtype=float)
    h = np.asarray(h, dtype=float)
    n = lattice.ndim - 1
    if N2.shape != lattice.dims or h.shape != lattice.dims + (n, n):
        raise DimensionError("N2/h shapes do not match the lattice")
    bad = np.zeros(lattice.dims, dtype=bool) if flags is None else np.asarray(flags, dtype=bool).copy()
    bad |= ~(N2 > 0)
    if n:
        bad |= ~(np.linalg.eigvalsh(h)[..., 0] > 0)
    if bad.any() and not allow_degenerate:
        sites = [tuple(int(i) for i in s) for s in np.argwhere(bad)]
        shown = ", ".join(map(str, sites[:10])) + (" ..." if len(sites) > 10 else "")
        raise DegeneracyError(f"{len(sites)} degenerate sites: {shown}", sites)
    g = np.zeros(lattice.dims + (n + 1, n + 1))
    g[..., 0, 0] = -N2
    g[..., 1:, 1:] = h
    if bad.any():
        g[bad] = np.diag([-1.0] + [1.0] * n)
    return MetricField(lattice, g, LORENTZIAN, ~bad)


def reconstruct(grid, allow_degenerate=False):
    """Full reconstruction ``ds^2 = -N^2 dt^2 + h_ij dx^i dx^j`` from a detector grid."""
    h, fs = pullback_spatial(grid)
    N2, ft = pullback_lapse(grid)
    return assemble_lorentzian(grid.lattice, N2, h, fs | ft, allow_degenerate)


def _sym(M, name):
    M = np.asarray(M, dtype=float)
    if not np.allclose(M, np.swapaxes(M, -1, -2), rtol=0, atol=1e-12 * max(1.0, np.abs(M).max(initial=0))):
        raise DomainError(f"{name} is not symmetric")
    return M


def metric_variation_spatial(A, B, dA, dB):
    """First-order change of ``A + 4 B A^-1 B`` under ``A -> A + dA``, ``B -> B + dB``."""
    A = check_spd(_sym(np.atleast_2d(A), "A"))
    B, dA, dB = (_sym(np.atleast_2d(M), name) for M, name in ((B, "B"), (dA, "dA"), (dB, "dB")))
    Ainv = np.linalg.inv(A)
    out = dA + 4.0 * (dB @ Ainv @ B + B @ Ainv @ dB - B @ Ainv @ dA @ Ainv @ B)
    return 0.5 * (out + out.T)


def metric_variation_temporal(a, b, da, db):
    """First-order change of ``a + 4 b^2 / a``."""
    if not a > 0:
        raise DomainError(f"a must be > 0, got {a!r}")
    return da + 8.0 * (b / a) * db - 4.0 * (b * b) / (a * a) * da


def metric_variation_lorentzian(A, B, a, b, dA, dB, da, db, jac_S=None, dt_xi_T=1.0):
    """Variation of the full reconstructed metric at one site from sector variations.

    ``jac_S`` is the spatial label Jacobian (identity by default) and
    ``dt_xi_T`` the time derivative of the temporal label.
    """
    A = np.atleast_2d(A)
    n = A.shape[0]
    J = np.eye(n) if jac_S is None else np.asarray(jac_S, dtype=float)
    out = np.zeros((n + 1, n + 1))
    out[0, 0] = -metric_variation_temporal(a, b, da, db) * dt_xi_T**2
    out[1:, 1:] = J.T @ metric_variation_spatial(A, B, dA, dB) @ J
    return out
