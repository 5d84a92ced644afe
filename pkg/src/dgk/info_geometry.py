"""Quantum geometric tensor, distinguishability metric and Berry structure.

Everything numeric here is built from exact Gaussian overlaps: a state
derivative is a central difference of two states, and every inner product of
such differences expands into overlaps that :func:`overlap` evaluates in closed
form.  Discretization in the step is then the only error, and two-step
Richardson extrapolation removes its leading order.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, DgkError, DomainError
from .gaussian_states import (
    SpatialDetectorParams,
    TemporalDetectorParams,
    as_spatial,
    check_spd,
    overlap,
)

DEFAULT_STEPS = (1e-3, 2e-3)
MIN_STEP = 1e-7
PSD_FLOOR = -1e-9

_TEMPORAL_ALIASES = {"t": "q", "a": "A", "b": "B", "pi": "p", "varphi": "phi"}


@dataclass(frozen=True)
class Coordinate:
    """One chart coordinate: a single component of a Gaussian parameter.

    ``kind`` is one of ``q, p, A, B, phi``; matrix kinds carry an upper-triangle
    index pair ``(i, j)`` with ``i <= j`` and move ``X[i, j]`` and ``X[j, i]``
    together.
    """

    kind: str
    index: tuple = ()

    def __post_init__(self):
        if self.kind not in ("q", "p", "A", "B", "phi"):
            raise ValueError(f"unknown coordinate kind {self.kind!r}")
        index = tuple(int(i) for i in self.index)
        if self.kind in ("q", "p") and len(index) != 1:
            raise ValueError(f"{self.kind} coordinate needs one index")
        if self.kind in ("A", "B"):
            if len(index) != 2:
                raise ValueError(f"{self.kind} coordinate needs two indices")
            index = (min(index), max(index))
        if self.kind == "phi" and index:
            raise ValueError("phi coordinate takes no index")
        object.__setattr__(self, "index", index)

    @classmethod
    def parse(cls, text):
        """Parse ``"q0"``, ``"A[0,1]"``, ``"phi"`` or a temporal name (``t, a, b, pi, varphi``)."""
        text = text.strip()
        if text in _TEMPORAL_ALIASES:
            kind = _TEMPORAL_ALIASES[text]
            return cls(kind, () if kind == "phi" else (0,) if kind in "qp" else (0, 0))
        m = re.fullmatch(r"([qpAB])\[?\s*(\d+)\s*(?:,\s*(\d+)\s*)?\]?", text)
        if text == "phi":
            return cls("phi")
        if m is None:
            raise ValueError(f"cannot parse chart coordinate {text!r}")
        idx = tuple(int(g) for g in m.groups()[1:] if g is not None)
        return cls(m.group(1), idx)

    def label(self):
        if self.kind == "phi":
            return "phi"
        if self.kind in ("q", "p"):
            return f"{self.kind}{self.index[0]}"
        return f"{self.kind}[{self.index[0]},{self.index[1]}]"

    def value(self, params):
        if self.kind == "phi":
            return params.phi
        return float(getattr(params, self.kind)[self.index])


class ParamChart:
    """Ordered coordinates ``xi^A`` on a Gaussian family around a base point.

    ``embed(xi)`` displaces the base parameters by ``xi`` along the chart
    directions, so ``embed(0)`` is the base.  Temporal bases are handled as
    one-dimensional spatial states and converted back on output.
    """

    def __init__(self, coords, base):
        coords = [c if isinstance(c, Coordinate) else Coordinate.parse(c) for c in coords]
        if len(set(coords)) != len(coords):
            raise ValueError("chart coordinates must be distinct")
        self.temporal = isinstance(base, TemporalDetectorParams)
        self.base = base
        self._base = as_spatial(base)
        n = self._base.n
        for c in coords:
            if any(i >= n for i in c.index):
                raise ValueError(f"coordinate {c.label()} out of range for n = {n}")
        self.coords = tuple(coords)

    @classmethod
    def labels(cls, base, n=None):
        """Chart spanned by all label translations (``q`` or ``t``)."""
        if isinstance(base, TemporalDetectorParams):
            return cls(["t"], base)
        n = base.n if n is None else n
        return cls([Coordinate("q", (i,)) for i in range(n)], base)

    @property
    def dim(self):
        return len(self.coords)

    @property
    def n(self):
        return self._base.n

    def is_label_chart(self):
        return all(c.kind == "q" for c in self.coords)

    def with_base(self, base):
        return ParamChart(self.coords, base)

    def embed_spatial(self, xi):
        xi = np.asarray(xi, dtype=float).reshape(-1)
        if xi.size != self.dim:
            raise ValueError(f"chart has {self.dim} coordinates, got {xi.size}")
        b = self._base
        q, A, B, p, phi = b.q.copy(), b.A.copy(), b.B.copy(), b.p.copy(), b.phi
        for c, x in zip(self.coords, xi):
            if c.kind == "q":
                q[c.index] += x
            elif c.kind == "p":
                p[c.index] += x
            elif c.kind == "phi":
                phi += x
            else:
                M = A if c.kind == "A" else B
                i, j = c.index
                M[i, j] += x
                if i != j:
                    M[j, i] += x
        try:
            return SpatialDetectorParams(q=q, A=A, B=B, p=p, phi=phi)
        except DomainError as exc:
            raise DomainError(f"chart point {xi.tolist()} leaves the SPD region: {exc}") from None

    def embed(self, xi):
        s = self.embed_spatial(xi)
        return TemporalDetectorParams.from_spatial(s) if self.temporal else s

    def step_scales(self, xi):
        """Per-coordinate step multipliers: ``max(1, |parameter|)`` for matrix entries, 1 otherwise."""
        s = self.embed_spatial(xi)
        return np.array(
            [max(1.0, abs(c.value(s))) if c.kind in ("A", "B") else 1.0 for c in self.coords]
        )

    def to_dict(self):
        return {"coords": [c.label() for c in self.coords], "base": self.base.to_dict()}


@dataclass(frozen=True)
class QGTResult:
    Q: np.ndarray
    metric: np.ndarray
    berry: np.ndarray

    @classmethod
    def from_Q(cls, Q):
        Q = np.asarray(Q, dtype=complex)
        return cls(Q=Q, metric=4.0 * Q.real, berry=2.0 * Q.imag)


def _qgt_single_step(chart, xi, h):
    """Central-difference QGT at one step vector ``h`` (one step per coordinate)."""
    k = chart.dim
    base = chart.embed_spatial(xi)
    plus, minus = [], []
    for a in range(k):
        e = np.zeros(k)
        e[a] = h[a]
        plus.append(chart.embed_spatial(xi + e))
        minus.append(chart.embed_spatial(xi - e))

    # <D_a|psi> and the Gram matrix <D_a|D_b>
    d_psi = np.array(
        [(overlap(plus[a], base) - overlap(minus[a], base)) / (2 * h[a]) for a in range(k)]
    )
    gram = np.empty((k, k), dtype=complex)
    for a in range(k):
        for b in range(a, k):
            val = (
                overlap(plus[a], plus[b])
                - overlap(plus[a], minus[b])
                - overlap(minus[a], plus[b])
                + overlap(minus[a], minus[b])
            ) / (4 * h[a] * h[b])
            gram[a, b] = val
            gram[b, a] = np.conj(val)
    return gram - np.outer(d_psi, np.conj(d_psi))


def _check_steps(steps):
    steps = tuple(float(s) for s in steps)
    if len(steps) != 2 or not 0 < steps[0] < steps[1]:
        raise ValueError(f"need two increasing positive steps, got {steps}")
    if steps[0] < MIN_STEP:
        raise ConditioningError(f"step {steps[0]:g} below conditioning floor {MIN_STEP:g}")
    return steps


def qgt_numeric(chart, xi=None, steps=DEFAULT_STEPS):
    """Quantum geometric tensor ``Q_AB`` on ``chart`` at ``xi`` from exact overlaps.

    Central differences at the two steps in ``steps`` (scaled per coordinate by
    :meth:`ParamChart.step_scales`) are combined by Richardson extrapolation.
    """
    xi = np.zeros(chart.dim) if xi is None else np.asarray(xi, dtype=float).reshape(-1)
    h1, h2 = _check_steps(steps)
    scale = chart.step_scales(xi)
    Q1 = _qgt_single_step(chart, xi, h1 * scale)
    Q2 = _qgt_single_step(chart, xi, h2 * scale)
    r = (h2 / h1) ** 2
    Q = (r * Q1 - Q2) / (r - 1)
    # exact symmetry of the ideal tensor
    Q = 0.5 * (Q + Q.conj().T)
    result = QGTResult.from_Q(Q)
    if chart.dim and np.linalg.eigvalsh(result.metric)[0] < PSD_FLOOR * max(1.0, np.abs(result.metric).max()):
        raise DgkError(f"numeric distinguishability metric is not PSD at xi = {xi.tolist()}")
    return result


def spatial_metric_closed(params):
    """Distinguishability metric of label translations, ``A + 4 B A^-1 B``."""
    params = as_spatial(params)
    A = check_spd(params.A)
    B = params.B
    return A + 4.0 * (B @ np.linalg.solve(A, B))


def temporal_metric_closed(params):
    """Temporal distinguishability scale ``a + 4 b^2 / a``."""
    if isinstance(params, SpatialDetectorParams):
        params = TemporalDetectorParams.from_spatial(params)
    a, b = params.a, params.b
    if not a > 0:
        raise DomainError(f"a must be > 0, got {a!r}")
    return a + 4.0 * b * b / a


def chart_metric(chart, xi=None):
    """``G_AB`` on ``chart``: closed form for label charts, numeric QGT otherwise."""
    xi = np.zeros(chart.dim) if xi is None else np.asarray(xi, dtype=float).reshape(-1)
    if chart.is_label_chart():
        s = chart.embed(xi)
        if chart.temporal:
            return np.array([[temporal_metric_closed(s)]])
        full = spatial_metric_closed(s)
        idx = [c.index[0] for c in chart.coords]
        return full[np.ix_(idx, idx)]
    return qgt_numeric(chart, xi).metric


def berry_connection(chart, xi=None, steps=DEFAULT_STEPS, imag_tol=1e-9):
    """Berry connection ``A_A = i <psi|d_A psi>`` by Richardson-extrapolated central differences."""
    xi = np.zeros(chart.dim) if xi is None else np.asarray(xi, dtype=float).reshape(-1)
    h1, h2 = _check_steps(steps)
    scale = chart.step_scales(xi)
    base = chart.embed_spatial(xi)

    def deriv(hvec):
        out = np.empty(chart.dim, dtype=complex)
        for a in range(chart.dim):
            e = np.zeros(chart.dim)
            e[a] = hvec[a]
            out[a] = (
                overlap(base, chart.embed_spatial(xi + e)) - overlap(base, chart.embed_spatial(xi - e))
            ) / (2 * hvec[a])
        return out

    r = (h2 / h1) ** 2
    d = (r * deriv(h1 * scale) - deriv(h2 * scale)) / (r - 1)
    conn = 1j * d
    if np.abs(conn.imag).max(initial=0.0) > imag_tol:
        warnings.warn(f"Berry connection has imaginary part {np.abs(conn.imag).max():.2e}")
    return conn.real


def _metric_derivatives(chart, xi, step, metric_fn):
    k = chart.dim
    scale = chart.step_scales(xi)

    def at(h):
        out = np.empty((k, k, k))
        for c in range(k):
            e = np.zeros(k)
            e[c] = h * scale[c]
            out[c] = (metric_fn(xi + e) - metric_fn(xi - e)) / (2 * e[c])
        return out

    # Richardson over (step, 2 step)
    return (4.0 * at(step) - at(2 * step)) / 3.0


def christoffel_from_metric(G, dG):
    """Levi-Civita symbols ``Gamma^A_BC`` from ``G_AB`` and ``dG[C, A, B] = d_C G_AB``."""
    G = np.asarray(G, dtype=float)
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1e12:
        raise ConditioningError(f"state-space metric is singular (condition number {cond:.3e})")
    Ginv = np.linalg.inv(G)
    # lower[D, B, C] = d_B G_DC + d_C G_DB - d_D G_BC
    lower = np.einsum("bdc->dbc", dG) + np.einsum("cdb->dbc", dG) - dG
    gamma = 0.5 * np.einsum("ad,dbc->abc", Ginv, lower)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def state_space_connection(chart, xi=None, step=1e-3):
    """Christoffel symbols ``Gamma^A_BC`` of ``G_AB`` on detector-state space."""
    xi = np.zeros(chart.dim) if xi is None else np.asarray(xi, dtype=float).reshape(-1)
    G = chart_metric(chart, xi)
    dG = _metric_derivatives(chart, xi, step, lambda x: chart_metric(chart, x))
    return christoffel_from_metric(G, dG)
