"""Gaussian detector states: amplitudes, densities, moments and exact overlaps.

The spatial family in ``n`` dimensions is

    psi(y) = N(A) exp[-1/4 u^T A u + i/2 u^T B u + i p.u + i phi],   u = y - q,

with ``N(A) = [(2 pi)^n det(A^-1)]^(-1/4)``.  The temporal family is the
``n = 1`` member with ``(q, A, B, p, phi) = (t, a, b, pi, varphi)``; it is
converted with :meth:`TemporalDetectorParams.to_spatial` so that a single code
path serves both sectors.  Units have hbar = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, DimensionError, DomainError

#: Condition-number cap on the combined quadratic form of an overlap.
OVERLAP_CONDITION_CAP = 1e12


def check_spd(A, name="A"):
    """Raise :class:`DomainError` unless ``A`` is symmetric positive-definite."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise DomainError(f"{name} is not symmetric")
    eig = np.linalg.eigvalsh(A)
    if eig[0] <= 0:
        raise DomainError(f"{name} is not positive-definite: eigenvalue {eig[0]!r} <= 0")
    return A


def _check_symmetric(B, n, name="B"):
    B = np.asarray(B, dtype=float)
    if B.shape != (n, n):
        raise DimensionError(f"{name} must have shape {(n, n)}, got {B.shape}")
    if np.any(B != B.T):
        raise DomainError(f"{name} is not symmetric")
    return B


@dataclass(frozen=True, eq=False)
class SpatialDetectorParams:
    """Parameters ``(q, A, B, p, phi)`` of an ``n``-dimensional Gaussian detector state."""

    q: np.ndarray
    A: np.ndarray
    B: np.ndarray = None
    p: np.ndarray = None
    phi: float = 0.0

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        if q.ndim != 1:
            raise DimensionError(f"q must be a vector, got shape {q.shape}")
        n = q.size
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape != (n, n):
            raise DimensionError(f"A must have shape {(n, n)}, got {A.shape}")
        check_spd(A)
        B = np.zeros((n, n)) if self.B is None else np.atleast_2d(np.asarray(self.B, dtype=float))
        B = _check_symmetric(B, n)
        p = np.zeros(n) if self.p is None else np.atleast_1d(np.asarray(self.p, dtype=float))
        if p.shape != (n,):
            raise DimensionError(f"p must have shape {(n,)}, got {p.shape}")
        for name, value in (("q", q), ("A", A), ("B", B), ("p", p)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "phi", float(self.phi))

    @property
    def n(self):
        return self.q.size

    def replace(self, **changes):
        kw = dict(q=self.q, A=self.A, B=self.B, p=self.p, phi=self.phi)
        kw.update(changes)
        return SpatialDetectorParams(**kw)

    def same_as(self, other):
        """Exact (bitwise) equality of every parameter."""
        return (
            self.n == other.n
            and self.phi == other.phi
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.p, other.p)
        )

    def to_dict(self):
        return {
            "q": self.q.tolist(),
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "p": self.p.tolist(),
            "phi": self.phi,
        }


@dataclass(frozen=True)
class TemporalDetectorParams:
    """Parameters ``(t, a, b, pi, varphi)`` of the one-dimensional clock detector."""

    t: float = 0.0
    a: float = 1.0
    b: float = 0.0
    pi: float = 0.0
    varphi: float = 0.0

    def __post_init__(self):
        for name in ("t", "a", "b", "pi", "varphi"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.a > 0:
            raise DomainError(f"temporal width a must be > 0, got {self.a!r}")

    def to_spatial(self):
        return SpatialDetectorParams(
            q=[self.t], A=[[self.a]], B=[[self.b]], p=[self.pi], phi=self.varphi
        )

    @classmethod
    def from_spatial(cls, s):
        if s.n != 1:
            raise DimensionError("temporal parameters need a one-dimensional state")
        return cls(t=s.q[0], a=s.A[0, 0], b=s.B[0, 0], pi=s.p[0], varphi=s.phi)

    def to_dict(self):
        return {"t": self.t, "a": self.a, "b": self.b, "pi": self.pi, "varphi": self.varphi}


def as_spatial(params):
    if isinstance(params, TemporalDetectorParams):
        return params.to_spatial()
    return params


def _normalization(A):
    # A already validated as SPD
    logdet = 2.0 * np.log(np.diag(np.linalg.cholesky(A))).sum()
    return float(np.exp(0.25 * logdet - 0.25 * A.shape[0] * np.log(2 * np.pi)))


def normalization(A):
    """Return ``[(2 pi)^n det(A^-1)]^(-1/4)`` for a symmetric positive-definite ``A``."""
    return _normalization(check_spd(np.atleast_2d(np.asarray(A, dtype=float))))


def _displacement(params, y):
    y = np.asarray(y, dtype=float)
    if params.n == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        y = y[..., None]
    if y.shape[-1] != params.n:
        raise DimensionError(f"point dimension {y.shape[-1]} does not match state dimension {params.n}")
    return y - params.q


def eval_state(params, y):
    """Complex amplitude ``psi(y)``; ``y`` has shape ``(..., n)``."""
    params = as_spatial(params)
    u = _displacement(params, y)
    quad_a = np.einsum("...i,ij,...j->...", u, params.A, u)
    quad_b = np.einsum("...i,ij,...j->...", u, params.B, u)
    phase = 0.5 * quad_b + u @ params.p + params.phi
    return _normalization(params.A) * np.exp(-0.25 * quad_a + 1j * phase)


def density(params, y):
    """Probability density ``|psi(y)|^2``; independent of ``B``, ``p`` and ``phi``."""
    params = as_spatial(params)
    u = _displacement(params, y)
    quad_a = np.einsum("...i,ij,...j->...", u, params.A, u)
    return _normalization(params.A) ** 2 * np.exp(-0.5 * quad_a)


def mean(params):
    return as_spatial(params).q.copy()


def covariance(params):
    """Covariance ``A^-1`` of the density."""
    return np.linalg.inv(as_spatial(params).A)


def overlap(s1, s2, condition_cap=OVERLAP_CONDITION_CAP):
    """Exact inner product ``<psi_1|psi_2> = int conj(psi_1) psi_2 d^n y``.

    The integrand is ``exp(-u^T M u + J.u + c)`` in ``u = y - q_1`` with the
    complex symmetric matrix ``M = (A_1 + A_2)/4 + i (B_1 - B_2)/2``.  The
    square root of ``det M`` is taken on the branch continuous from the real
    case: with ``Re M = L L^T`` it equals ``det L * prod sqrt(1 + i mu_k)``
    where ``mu_k`` are the eigenvalues of ``L^-1 Im(M) L^-T``.
    """
    s1, s2 = as_spatial(s1), as_spatial(s2)
    if s1.n != s2.n:
        raise DimensionError(f"overlap of states with dimensions {s1.n} and {s2.n}")
    if s1.same_as(s2):
        return 1.0 + 0.0j
    n = s1.n
    d = s2.q - s1.q
    C1 = 0.25 * s1.A + 0.5j * s1.B
    C2 = 0.25 * s2.A - 0.5j * s2.B
    M = C1 + C2
    P, Q = M.real, M.imag
    L = np.linalg.cholesky(P)
    Linv = np.linalg.inv(L)
    mu = np.linalg.eigvalsh(Linv @ Q @ Linv.T)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > condition_cap:
        raise ConditioningError(f"combined quadratic form has condition number {cond:.3e}")
    sqrt_det = np.prod(np.diag(L)) * np.prod(np.sqrt(1.0 + 1j * mu))
    J = 2.0 * (C2 @ d) - 1j * s1.p + 1j * s2.p
    c = -(d @ C2 @ d) - 1j * (s2.p @ d) + 1j * (s2.phi - s1.phi)
    exponent = 0.25 * (J @ np.linalg.solve(M, J)) + c
    norm = _normalization(s1.A) * _normalization(s2.A)
    return complex(norm * np.pi ** (n / 2) / sqrt_det * np.exp(exponent))


def fidelity(s1, s2):
    """Squared modulus of the overlap."""
    return abs(overlap(s1, s2)) ** 2


def gaussian_kl(s1, s2):
    """Kullback-Leibler divergence ``KL(rho_1 || rho_2)`` of the induced densities.

    Phase parameters drop out, so this is blind to ``B``, ``p`` and ``phi``.
    """
    s1, s2 = as_spatial(s1), as_spatial(s2)
    if s1.n != s2.n:
        raise DimensionError(f"KL of states with dimensions {s1.n} and {s2.n}")
    if np.array_equal(s1.q, s2.q) and np.array_equal(s1.A, s2.A):
        return 0.0
    n = s1.n
    cov1 = np.linalg.inv(s1.A)
    d = s2.q - s1.q
    L1 = np.linalg.cholesky(s1.A)
    L2 = np.linalg.cholesky(s2.A)
    logdet_ratio = 2.0 * (np.log(np.diag(L1)).sum() - np.log(np.diag(L2)).sum())
    return float(0.5 * (np.trace(s2.A @ cov1) - n + d @ s2.A @ d + logdet_ratio))
