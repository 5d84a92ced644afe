"""Rectangular lattices, finite-difference stencils and interior quadrature weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, LatticeMismatchError, MarginError

MIN_SIZE = 5


@dataclass(frozen=True)
class Lattice:
    """Uniform rectangular lattice; axis ``k`` has ``dims[k]`` sites spaced ``spacing[k]``."""

    dims: tuple
    spacing: tuple
    origin: tuple = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        spacing = tuple(float(h) for h in np.broadcast_to(self.spacing, (len(dims),)))
        origin = (0.0,) * len(dims) if self.origin is None else tuple(float(o) for o in self.origin)
        if len(origin) != len(dims):
            raise DimensionError("origin and dims have different lengths")
        if any(d < MIN_SIZE for d in dims):
            raise MarginError(f"every axis needs at least {MIN_SIZE} sites, got {dims}")
        if any(not h > 0 for h in spacing):
            raise ValueError(f"spacings must be positive, got {spacing}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def from_bounds(cls, lower, upper, dims):
        lower, upper = np.atleast_1d(lower).astype(float), np.atleast_1d(upper).astype(float)
        dims = tuple(int(d) for d in np.broadcast_to(dims, lower.shape))
        spacing = (upper - lower) / (np.array(dims) - 1)
        return cls(dims, tuple(spacing), tuple(lower))

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def size(self):
        return int(np.prod(self.dims))

    def axis(self, k):
        return self.origin[k] + self.spacing[k] * np.arange(self.dims[k])

    def axes(self):
        return [self.axis(k) for k in range(self.ndim)]

    def coordinates(self):
        """Site coordinates, shape ``(*dims, ndim)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def interior(self, margin):
        """Slices selecting sites at least ``margin`` sites from every edge."""
        if any(d <= 2 * margin for d in self.dims):
            raise MarginError(f"lattice {self.dims} has no interior at margin {margin}")
        return tuple(slice(margin, d - margin) for d in self.dims)

    def interior_mask(self, margin):
        mask = np.zeros(self.dims, dtype=bool)
        mask[self.interior(margin)] = True
        return mask

    def check_site(self, site, margin=0):
        site = tuple(int(i) for i in site)
        if len(site) != self.ndim or any(
            i < margin or i >= d - margin for i, d in zip(site, self.dims)
        ):
            raise MarginError(f"site {site} is outside the interior at margin {margin}")
        return site

    def trapezoid_weights(self, margin=0):
        """Product trapezoid weights over the interior region; zero elsewhere."""
        w = np.ones(())
        for k, d in enumerate(self.dims):
            wk = np.zeros(d)
            wk[margin : d - margin] = self.spacing[k]
            wk[margin] *= 0.5
            wk[d - margin - 1] *= 0.5
            w = np.multiply.outer(w, wk)
        return w

    def require_same(self, other):
        if self != other:
            raise LatticeMismatchError(f"lattice mismatch: {self} vs {other}")

    def to_dict(self):
        return {"dims": list(self.dims), "spacing": list(self.spacing), "origin": list(self.origin)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["dims"]), tuple(d["spacing"]), tuple(d.get("origin") or [0.0] * len(d["dims"])))


def partial(f, lattice, axis, order=2):
    """Derivative of ``f`` (leading axes = lattice axes) along lattice ``axis``.

    ``order=2``: central differences inside, one-sided second order at the two
    edges.  ``order=4``: five-point central stencil on sites at least two from
    an edge, one-sided second order on the two outermost layers at each end.
    """
    f = np.asarray(f)
    h = lattice.spacing[axis]
    if f.shape[: lattice.ndim] != lattice.dims:
        raise DimensionError(f"field shape {f.shape} does not start with lattice dims {lattice.dims}")
    if order == 2:
        return np.gradient(f, h, axis=axis, edge_order=2)
    if order != 4:
        raise ValueError("order must be 2 or 4")
    f = np.moveaxis(f, axis, 0)
    out = np.empty(f.shape, dtype=np.result_type(f, float))
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    for i in (0, 1):
        out[i] = (-3 * f[i] + 4 * f[i + 1] - f[i + 2]) / (2 * h)
    for i in (-1, -2):
        out[i] = (3 * f[i] - 4 * f[i - 1] + f[i - 2]) / (2 * h)
    return np.moveaxis(out, 0, axis)


def gradient(f, lattice, order=2):
    """All lattice derivatives stacked on a new axis placed right after the lattice axes."""
    parts = [partial(f, lattice, k, order) for k in range(lattice.ndim)]
    return np.stack(parts, axis=lattice.ndim)
