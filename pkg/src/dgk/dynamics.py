"""Deformation-field dynamics on a lattice: potential, functional, residuals and FRW.

A deformation configuration is a field ``xi^A(x)`` of chart coordinates on a
spacetime lattice, carried by :class:`FieldConfig` together with the
field-space metric ``G_AB(xi)`` used in its kinetic term.  Derivatives of
``xi`` and of composite fields are second-order central differences; every
residual is reported on the interior two sites in from each edge and is NaN
outside it, matching the region where lattice curvature is defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .analytic import christoffel_symbols, small_inv
from .curvature import CURVATURE_MARGIN
from .errors import ConditioningError, DimensionError, DomainError, IntegrationError, LatticeMismatchError
from .gaussian_states import fidelity, gaussian_kl
from .info_geometry import ParamChart, chart_metric, state_space_connection
from .lattice import Lattice, gradient

MARGIN = CURVATURE_MARGIN
POTENTIAL_KINDS = ("quadratic", "classical-kl", "fidelity")


@dataclass(frozen=True)
class Couplings:
    """Couplings of the consistency functional: ``alpha R + U + nu/2 G d xi d xi``."""

    alpha: float = 0.0
    mu: float = 1.0
    nu: float = 1.0
    G: float = 1.0

    def __post_init__(self):
        if self.mu < 0 or self.nu < 0:
            raise DomainError(f"mu and nu must be >= 0, got mu={self.mu}, nu={self.nu}")
        if not self.G > 0:
            raise DomainError(f"G must be > 0, got {self.G}")

    @classmethod
    def einstein_normalized(cls, G=1.0, mu=1.0, nu=1.0):
        """``alpha = 1 / (16 pi G)``."""
        return cls(alpha=1.0 / (16.0 * math.pi * G), mu=mu, nu=nu, G=G)

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {"alpha": self.alpha, "mu": self.mu, "nu": self.nu, "G": self.G}


# ---------------------------------------------------------------- field metrics


class ConstantFieldMetric:
    """Field-independent ``G_AB``; its connection vanishes."""

    def __init__(self, G0):
        G0 = np.atleast_2d(np.asarray(G0, dtype=float))
        if G0.shape[0] != G0.shape[1] or not np.allclose(G0, G0.T):
            raise DomainError("field metric must be a symmetric matrix")
        self.G0 = G0
        self.dim = G0.shape[0]

    def metric(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.broadcast_to(self.G0, xi.shape[:-1] + self.G0.shape).copy()

    def christoffel(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.zeros(xi.shape[:-1] + (self.dim,) * 3)

    def to_dict(self):
        return {"kind": "constant", "G": self.G0.tolist()}


class ScalarKineticMetric:
    """Single-field kinetic function ``chi(phi) = chi0 + chi1 phi``."""

    dim = 1

    def __init__(self, chi0, chi1=0.0):
        self.chi0, self.chi1 = float(chi0), float(chi1)

    def _chi(self, xi):
        chi = self.chi0 + self.chi1 * np.asarray(xi, dtype=float)[..., 0]
        if np.any(chi <= 0):
            raise ConditioningError("kinetic function chi(phi) is not positive on the configuration")
        return chi

    def metric(self, xi):
        return self._chi(xi)[..., None, None]

    def christoffel(self, xi):
        return (0.5 * self.chi1 / self._chi(xi))[..., None, None, None]

    def to_dict(self):
        return {"kind": "scalar", "chi0": self.chi0, "chi1": self.chi1}


class ChartFieldMetric:
    """Distinguishability metric of a detector chart evaluated at ``base + xi``.

    Few distinct field values are evaluated exactly (and memoized).  Otherwise
    ``G`` and its derivatives are tabulated on ``nodes`` points per coordinate
    across the visited range and interpolated multilinearly.
    """

    exact_limit = 64

    def __init__(self, chart, nodes=51):
        if nodes < 3:
            raise ValueError("a metric table needs at least 3 nodes per coordinate")
        self.chart = chart
        self.dim = chart.dim
        self.nodes = int(nodes)
        self._cache = {}
        self._table = None

    def _exact(self, x):
        key = tuple(float(v) for v in x)
        if key not in self._cache:
            G = chart_metric(self.chart, np.array(key))
            gam = state_space_connection(self.chart, np.array(key))
            self._cache[key] = (G, gam)
        return self._cache[key]

    def _build_table(self, lo, hi):
        width = np.maximum(hi - lo, 1e-6)
        lo, hi = lo - 0.02 * width, hi + 0.02 * width
        axes = [np.linspace(l, h, self.nodes) for l, h in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        G = np.empty(grid.shape[:-1] + (self.dim, self.dim))
        for idx in np.ndindex(*grid.shape[:-1]):
            G[idx] = chart_metric(self.chart, grid[idx])
        dG = np.stack([np.gradient(G, ax, axis=k, edge_order=2) for k, ax in enumerate(axes)], axis=self.dim)
        self._table = (
            lo,
            hi,
            RegularGridInterpolator(axes, G),
            RegularGridInterpolator(axes, dG),
        )

    def _prepare(self, xi):
        flat = np.asarray(xi, dtype=float).reshape(-1, self.dim)
        uniq = np.unique(flat, axis=0)
        if len(uniq) <= self.exact_limit:
            return flat, None
        lo, hi = flat.min(0), flat.max(0)
        t = self._table
        if t is None or np.any(lo < t[0]) or np.any(hi > t[1]):
            if t is not None:
                lo, hi = np.minimum(lo, t[0]), np.maximum(hi, t[1])
            self._build_table(lo, hi)
        return flat, self._table

    def metric(self, xi):
        xi = np.asarray(xi, dtype=float)
        flat, table = self._prepare(xi)
        if table is None:
            out = np.stack([self._exact(x)[0] for x in flat])
        else:
            out = table[2](flat)
        return out.reshape(xi.shape[:-1] + (self.dim, self.dim))

    def christoffel(self, xi):
        xi = np.asarray(xi, dtype=float)
        flat, table = self._prepare(xi)
        if table is None:
            out = np.stack([self._exact(x)[1] for x in flat])
        else:
            G = table[2](flat)
            out = christoffel_symbols(small_inv(G), table[3](flat))
        return out.reshape(xi.shape[:-1] + (self.dim,) * 3)

    def to_dict(self):
        return {"kind": "chart", "chart": self.chart.to_dict(), "nodes": self.nodes}


# ---------------------------------------------------------------- potentials


@dataclass(frozen=True, eq=False)
class DeformationPotentialSpec:
    """Finite divergence from the reference state ``chart.base``.

    ``quadratic`` uses ``1/2 xi^T M xi``; ``classical-kl`` the KL divergence of
    the induced densities; ``fidelity`` ``2 (1 - |<psi(xi)|psi(0)>|^2)``.  All
    are multiplied by the deformation-cost scale ``mu``.
    """

    kind: str = "fidelity"
    chart: ParamChart = None
    M: np.ndarray = None
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; choose from {POTENTIAL_KINDS}")
        if self.kind == "quadratic":
            if self.M is None:
                raise ValueError("quadratic potential needs M")
            M = np.atleast_2d(np.asarray(self.M, dtype=float))
            if M.shape[0] != M.shape[1] or not np.allclose(M, M.T):
                raise DomainError("M must be symmetric")
            if np.linalg.eigvalsh(M).min() < -1e-12 * max(1.0, np.abs(M).max()):
                raise DomainError("M must be positive semidefinite")
            M = 0.5 * (M + M.T)
            M.setflags(write=False)
            object.__setattr__(self, "M", M)
        elif self.chart is None:
            raise ValueError(f"{self.kind} potential needs a chart")

    @property
    def dim(self):
        return self.M.shape[0] if self.kind == "quadratic" else self.chart.dim

    def _point(self, x):
        if not np.any(x):
            return 0.0
        if self.kind == "classical-kl":
            return max(gaussian_kl(self.chart.embed_spatial(x), self.chart.embed_spatial(np.zeros_like(x))), 0.0)
        return max(2.0 * (1.0 - fidelity(self.chart.embed_spatial(x), self.chart._base)), 0.0)

    def value(self, xi, mu=1.0):
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.dim:
            raise DimensionError(f"potential acts on {self.dim} coordinates, got {xi.shape[-1]}")
        if self.kind == "quadratic":
            return 0.5 * mu * np.einsum("...a,ab,...b->...", xi, self.M, xi)
        flat = xi.reshape(-1, self.dim)
        return mu * np.array([self._point(x) for x in flat]).reshape(xi.shape[:-1])

    def gradient(self, xi, mu=1.0):
        """``d_A U``; exactly zero at the reference point, which is the global minimum."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "quadratic":
            return mu * xi @ self.M
        flat = xi.reshape(-1, self.dim)
        out = np.zeros_like(flat)
        h = self.fd_step
        for i, x in enumerate(flat):
            if not np.any(x):
                continue
            for a in range(self.dim):
                e = np.zeros(self.dim)
                e[a] = h
                out[i, a] = (self._point(x + e) - self._point(x - e)) / (2 * h)
        return mu * out.reshape(xi.shape)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.M is not None:
            d["M"] = self.M.tolist()
        if self.chart is not None:
            d["chart"] = self.chart.to_dict()
        return d


@dataclass(frozen=True)
class ScalarSectorSpec:
    """Single scalar with ``U = m2/2 phi^2 + lambda3 phi^3 + lambda4 phi^4`` and ``chi = chi0 + chi1 phi``.

    The potential is given directly, so ``mu`` plays no role for this sector.
    """

    m2: float = 0.0
    lambda3: float = 0.0
    lambda4: float = 0.0
    chi0: float = 1.0
    chi1: float = 0.0

    def __post_init__(self):
        if not self.chi0 > 0:
            raise DomainError(f"chi0 must be > 0, got {self.chi0}")

    dim = 1

    def value(self, xi, mu=1.0):
        phi = np.asarray(xi, dtype=float)[..., 0]
        return phi * phi * (0.5 * self.m2 + phi * (self.lambda3 + phi * self.lambda4))

    def gradient(self, xi, mu=1.0):
        phi = np.asarray(xi, dtype=float)[..., 0]
        return (phi * (self.m2 + phi * (3.0 * self.lambda3 + 4.0 * phi * self.lambda4)))[..., None]

    def dV(self, phi):
        return phi * (self.m2 + phi * (3.0 * self.lambda3 + 4.0 * phi * self.lambda4))

    def field_metric(self):
        return ScalarKineticMetric(self.chi0, self.chi1)

    def to_dict(self):
        return {"m2": self.m2, "lambda3": self.lambda3, "lambda4": self.lambda4, "chi0": self.chi0, "chi1": self.chi1}


def deformation_potential(spec, xi, mu=1.0):
    """``U(xi)`` for one point ``xi[K]`` or an array ``xi[..., K]``."""
    out = spec.value(np.asarray(xi, dtype=float), mu)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- configurations


@dataclass(eq=False)
class FieldConfig:
    """Deformation field ``xi[..., K]`` on a lattice with its field-space metric.

    ``dxi[..., mu, A]`` may carry exact derivatives; otherwise they are taken
    by central differences.
    """

    lattice: Lattice
    xi: np.ndarray
    field_metric: object
    dxi: np.ndarray = None

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape[:-1] != self.lattice.dims:
            xi = xi[..., None]
        if xi.shape[:-1] != self.lattice.dims:
            raise DimensionError(f"field shape {xi.shape} does not match lattice {self.lattice.dims}")
        if xi.shape[-1] != self.field_metric.dim:
            raise DimensionError(f"field has {xi.shape[-1]} components, field metric {self.field_metric.dim}")
        self.xi = xi
        if self.dxi is not None:
            dxi = np.asarray(self.dxi, dtype=float)
            if dxi.shape != xi.shape[:-1] + (self.lattice.ndim, xi.shape[-1]):
                raise DimensionError(f"dxi has shape {dxi.shape}")
            self.dxi = dxi

    @property
    def components(self):
        return self.xi.shape[-1]

    def derivatives(self):
        if self.dxi is not None:
            return self.dxi
        return gradient(self.xi, self.lattice, order=2)

    def with_xi(self, xi, dxi=None):
        return FieldConfig(self.lattice, xi, self.field_metric, dxi)


@dataclass(eq=False)
class StressEnergyField:
    """``T = T_kinetic + T_potential``; the first part is linear in ``nu``."""

    lattice: Lattice
    T: np.ndarray
    T_kinetic: np.ndarray = None
    T_potential: np.ndarray = None

    def __post_init__(self):
        if not np.allclose(self.T, np.swapaxes(self.T, -1, -2), equal_nan=True):
            raise ValueError("stress-energy must be symmetric")


@dataclass
class FunctionalValue:
    total: float
    curvature: float
    potential: float
    gradient: float
    domain: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "total": self.total,
            "curvature": self.curvature,
            "potential": self.potential,
            "gradient": self.gradient,
            "domain": self.domain,
        }


def _check_same(*lattices):
    first = lattices[0]
    for lat in lattices[1:]:
        if lat != first:
            raise LatticeMismatchError(f"lattice mismatch: {first} vs {lat}")


def _interior_nan(arr, lattice, extra_bad=None):
    bad = ~lattice.interior_mask(MARGIN)
    if extra_bad is not None:
        bad |= extra_bad
    arr = np.array(arr, dtype=float)
    arr[bad] = np.nan
    return arr


def _kinetic_contractions(grid, metric):
    """``(dxi, G_AB, kin^AB = g^mn d_m xi^A d_n xi^B)``."""
    dxi = grid.derivatives()
    ginv = metric.inverse()
    kin = np.einsum("...mn,...ma,...nb->...ab", ginv, dxi, dxi)
    return dxi, grid.field_metric.metric(grid.xi), kin


def consistency_functional(grid, metric, bundle, couplings, spec):
    """Trapezoid sum of ``sqrt|g| (alpha R + U + nu/2 G_AB g^mn d xi d xi)`` over the interior.

    The domain is the region two sites in from every edge; it is recorded in
    the result together with the three separate contributions.
    """
    lat = grid.lattice
    _check_same(lat, metric.lattice, *(() if bundle is None else (bundle.lattice,)))
    w = lat.trapezoid_weights(MARGIN) * metric.sqrt_abs_det()
    inside = lat.interior(MARGIN)
    if couplings.alpha != 0.0:
        if bundle is None:
            raise ValueError("alpha != 0 needs a curvature bundle")
        R = bundle.scalar[inside]
        if not np.all(np.isfinite(R)):
            raise ConditioningError("scalar curvature is undefined at some interior site")
        curv = couplings.alpha * float((w[inside] * R).sum())
    else:
        curv = 0.0
    U = spec.value(grid.xi, couplings.mu)
    pot = float((w * U)[inside].sum())
    _, G, kin = _kinetic_contractions(grid, metric)
    dens = 0.5 * couplings.nu * np.einsum("...ab,...ab->...", G, kin)
    grad = float((w * dens)[inside].sum())
    lo = [lat.origin[k] + MARGIN * lat.spacing[k] for k in range(lat.ndim)]
    hi = [lat.origin[k] + (lat.dims[k] - 1 - MARGIN) * lat.spacing[k] for k in range(lat.ndim)]
    domain = {"margin": MARGIN, "lower": lo, "upper": hi, "rule": "trapezoid"}
    return FunctionalValue(curv + pot + grad, curv, pot, grad, domain)


def _box(grid, metric):
    """``(1/sqrt|g|) d_m (sqrt|g| g^mn d_n xi^A)``."""
    lat = grid.lattice
    dxi = grid.derivatives()
    sq = metric.sqrt_abs_det()
    flux = sq[..., None, None] * np.einsum("...mn,...na->...ma", metric.inverse(), dxi)
    div = np.zeros(grid.xi.shape)
    for m in range(lat.ndim):
        div += np.gradient(flux[..., m, :], lat.spacing[m], axis=m, edge_order=2)
    return div / sq[..., None]


def sigma_residual(grid, metric, couplings, spec):
    """``nu [box xi^A + Gamma^A_BC(G) g^mn d xi^B d xi^C] - G^AB d_B U`` at interior sites."""
    _check_same(grid.lattice, metric.lattice)
    _, G, kin = _kinetic_contractions(grid, metric)
    gam = grid.field_metric.christoffel(grid.xi)
    wave = _box(grid, metric) + np.einsum("...abc,...bc->...a", gam, kin)
    dU = spec.gradient(grid.xi, couplings.mu)
    cond = np.linalg.cond(G.reshape(-1, G.shape[-1], G.shape[-1]))
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e12):
        raise ConditioningError("field-space metric is singular on the configuration")
    force = np.linalg.solve(G, dU[..., None])[..., 0]
    res = couplings.nu * wave - force
    return _interior_nan(res, grid.lattice, ~metric.valid)


def stress_energy(grid, metric, couplings, spec):
    """``T_mn = nu G_AB d_m xi^A d_n xi^B - g_mn [U + nu/2 G_AB g^rs d_r xi^A d_s xi^B]``."""
    _check_same(grid.lattice, metric.lattice)
    dxi, G, kin = _kinetic_contractions(grid, metric)
    nu = couplings.nu
    grad = np.einsum("...ab,...ma,...nb->...mn", G, dxi, dxi)
    trace = np.einsum("...ab,...ab->...", G, kin)
    T_kin = nu * (grad - 0.5 * metric.g * trace[..., None, None])
    U = spec.value(grid.xi, couplings.mu)
    T_pot = -metric.g * U[..., None, None]
    T = T_kin + T_pot
    T = 0.5 * (T + np.swapaxes(T, -1, -2))
    return StressEnergyField(grid.lattice, T, T_kin, T_pot)


def einstein_residual(bundle, T, couplings, form="8piG"):
    """``G_mn - 8 pi G T_mn``, or ``alpha G_mn - T_mn / 2`` with ``form="alpha"``."""
    _check_same(bundle.lattice, T.lattice)
    G = bundle.einstein()
    if form == "8piG":
        return G - 8.0 * math.pi * couplings.G * T.T
    if form == "alpha":
        return couplings.alpha * G - 0.5 * T.T
    raise ValueError("form must be '8piG' or 'alpha'")


def conservation_check(bundle, metric, T):
    """Covariant divergence ``g^ml (d_l T_mn - Gamma^r_lm T_rn - Gamma^r_ln T_mr)``."""
    lat = metric.lattice
    _check_same(lat, bundle.lattice, T.lattice)
    dT = gradient(T.T, lat, order=2)  # [..., l, m, n]
    gam = bundle.gamma
    cov = (
        dT
        - np.einsum("...rlm,...rn->...lmn", gam, T.T)
        - np.einsum("...rln,...mr->...lmn", gam, T.T)
    )
    div = np.einsum("...ml,...lmn->...n", metric.inverse(), cov)
    return _interior_nan(div, lat, ~bundle.valid)


def eom_projection(grid, residual):
    """``G_AB res^A d_n xi^B``: the divergence of ``T`` implied by the field equation."""
    G = grid.field_metric.metric(grid.xi)
    return np.einsum("...ab,...a,...nb->...n", G, residual, grid.derivatives())


# ---------------------------------------------------------------- scalar sector


@dataclass(frozen=True)
class CanonicalScalar:
    """Result of rescaling ``phi~ = s phi`` so the kinetic coefficient is exactly 1/2."""

    s: float
    m2: float
    lambda3: float
    lambda4: float
    chi1: float
    kinetic: float = 0.5

    def spec(self):
        """Sector spec in the canonical field, to be used with ``nu = 1``."""
        return ScalarSectorSpec(self.m2, self.lambda3, self.lambda4, chi0=1.0, chi1=self.chi1)

    def to_dict(self):
        return {
            "rescale": self.s,
            "m2": self.m2,
            "lambda3": self.lambda3,
            "lambda4": self.lambda4,
            "chi1": self.chi1,
            "kinetic": self.kinetic,
        }


def canonical_scalar_reduce(spec, nu):
    """Canonical normalization ``s = sqrt(nu chi0)`` and the rescaled couplings."""
    if not spec.chi0 > 0:
        raise DomainError(f"chi0 must be > 0, got {spec.chi0}")
    if not nu > 0:
        raise DomainError(f"nu must be > 0, got {nu}")
    s = math.sqrt(nu * spec.chi0)
    return CanonicalScalar(
        s=s,
        m2=spec.m2 / s**2,
        lambda3=spec.lambda3 / s**3,
        lambda4=spec.lambda4 / s**4,
        chi1=spec.chi1 / (spec.chi0 * s),
    )


@dataclass(eq=False)
class FRWSolution:
    t: np.ndarray
    a: np.ndarray
    phi: np.ndarray
    phidot: np.ndarray
    H: np.ndarray
    constraint: np.ndarray
    drift: np.ndarray
    status: str

    @property
    def max_drift(self):
        return float(np.max(self.drift))

    def table(self):
        """Columns ``t, a, phi, phidot, H, constraint`` for CSV output."""
        return np.column_stack([self.t, self.a, self.phi, self.phidot, self.H, self.constraint])


FRW_COLUMNS = ("t", "a", "phi", "phidot", "H", "constraint")


def frw_solve(spec, couplings, ics, t_end, dt, t0=0.0):
    """Flat FRW with one canonical scalar, integrated by fixed-step RK4.

    ``ics`` holds ``a0 > 0``, ``phi0`` and ``phidot0`` for the canonical field
    ``phi~ = sqrt(nu chi0) phi``; the potential is the canonically reduced one.
    The initial Hubble rate is fixed by the Friedmann constraint (expanding
    branch unless ``ics["branch"] == "contracting"``).  The system evolved is
    ``a'' = -(8 pi G / 3)(phi'^2 - V) a`` and ``phi'' + 3 H phi' + V' = 0``;
    the constraint ``H^2 - (8 pi G / 3)(phi'^2 / 2 + V)`` is recorded at every
    step, with ``drift`` its size relative to the larger of the two terms.
    A scale factor reaching zero stops the run with status ``"collapse"``.
    """
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    if not t_end > t0:
        raise DomainError("t_end must exceed the start time")
    unknown = set(ics) - {"a0", "phi0", "phidot0", "branch"}
    if unknown:
        raise KeyError(f"unknown initial-condition keys {sorted(unknown)}")
    a0, phi0, pd0 = float(ics["a0"]), float(ics.get("phi0", 0.0)), float(ics.get("phidot0", 0.0))
    if not a0 > 0:
        raise DomainError(f"a0 must be > 0, got {a0}")
    canon = canonical_scalar_reduce(spec, couplings.nu).spec()
    k = 8.0 * math.pi * couplings.G / 3.0

    def V(phi):
        return float(canon.value(np.array([phi])))

    def dV(phi):
        return canon.dV(phi)

    rho0 = 0.5 * pd0**2 + V(phi0)
    if rho0 < 0:
        raise DomainError("initial energy density is negative; no real Hubble rate")
    H0 = math.sqrt(k * rho0)
    if ics.get("branch", "expanding") == "contracting":
        H0 = -H0

    def rhs(y):
        a, adot, phi, pd = y
        return np.array([adot, -k * (pd * pd - V(phi)) * a, pd, -3.0 * (adot / a) * pd - dV(phi)])

    n = int(math.ceil((t_end - t0) / dt - 1e-9))
    ys = np.empty((n + 1, 4))
    ys[0] = (a0, H0 * a0, phi0, pd0)
    status = "ok"
    last = n
    # the step that crosses a = 0 may produce non-finite stages; it is discarded
    with np.errstate(all="ignore"):
        for i in range(n):
            y = ys[i]
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * dt * k1)
            k3 = rhs(y + 0.5 * dt * k2)
            k4 = rhs(y + dt * k3)
            ys[i + 1] = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(ys[i + 1])) or ys[i + 1, 0] <= 0:
                status, last = "collapse", i
                break
    ys = ys[: last + 1]
    t = t0 + dt * np.arange(last + 1)
    a, adot, phi, pd = ys.T
    H = adot / a
    rho = 0.5 * pd**2 + np.array([V(p) for p in phi])
    lhs, rhs_ = H**2, k * rho
    constraint = lhs - rhs_
    scale = np.maximum(np.abs(lhs), np.abs(rhs_))
    drift = np.where(scale > 0, np.abs(constraint) / np.where(scale > 0, scale, 1.0), 0.0)
    if status == "collapse" and not np.all(np.isfinite(ys)):
        raise IntegrationError("FRW integration produced non-finite values")
    return FRWSolution(t, a, phi, pd, H, constraint, drift, status)


# ---------------------------------------------------------------- quadratic expansion


@dataclass
class QuadraticExpansion:
    M: np.ndarray
    G0: np.ndarray

    def to_dict(self):
        return {"M": self.M.tolist(), "G0": self.G0.tolist()}


def quadratic_expansion(chart, spec, steps=(1e-3, 2e-3)):
    """``M_AB``: Hessian of ``U / mu`` at ``xi = 0`` and ``G0_AB``: the chart metric there.

    The Hessian uses central differences at two step sizes combined by
    Richardson extrapolation.
    """
    k = chart.dim
    if spec.dim != k:
        raise DimensionError(f"potential acts on {spec.dim} coordinates, chart has {k}")
    scale = chart.step_scales(np.zeros(k))

    def f(x):
        return float(spec.value(np.asarray(x), 1.0))

    def hessian(h):
        H = np.empty((k, k))
        f0 = f(np.zeros(k))
        for a in range(k):
            ea = np.zeros(k)
            ea[a] = h * scale[a]
            H[a, a] = (f(ea) - 2 * f0 + f(-ea)) / ea[a] ** 2
            for b in range(a):
                eb = np.zeros(k)
                eb[b] = h * scale[b]
                H[a, b] = H[b, a] = (f(ea + eb) - f(ea - eb) - f(eb - ea) + f(-ea - eb)) / (4 * ea[a] * eb[b])
        return H

    h1, h2 = steps
    r = (h2 / h1) ** 2
    M = (r * hessian(h1) - hessian(h2)) / (r - 1)
    M = 0.5 * (M + M.T)
    G0 = chart_metric(chart, np.zeros(k))
    return QuadraticExpansion(M, 0.5 * (G0 + G0.T))


__all__ = [
    "Couplings",
    "ConstantFieldMetric",
    "ScalarKineticMetric",
    "ChartFieldMetric",
    "DeformationPotentialSpec",
    "ScalarSectorSpec",
    "FieldConfig",
    "StressEnergyField",
    "FunctionalValue",
    "CanonicalScalar",
    "FRWSolution",
    "FRW_COLUMNS",
    "QuadraticExpansion",
    "deformation_potential",
    "consistency_functional",
    "sigma_residual",
    "stress_energy",
    "einstein_residual",
    "conservation_check",
    "eom_projection",
    "canonical_scalar_reduce",
    "frw_solve",
    "quadratic_expansion",
]
