"""Discrete exterior calculus on a periodic 4-dimensional rectangular lattice.

Cochains carry one real value per cell.  Degree-1 and degree-2 values are
stored in *component* form (value of the continuum form component sampled on
the cell), so the exterior derivative divides by the relevant spacings and
the volume-weighted inner product needs no extra metric factors.

Orientation convention: dx1^dx2^dx3^dx4 is positive; self-dual plane pairs
are (12,34), (13,42), (14,23).  Every sign-sensitive routine in the package
is gated on this single convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegreeError, LatticeMismatchError

# Plaquette planes in lexicographic order: index -> (mu, nu), mu < nu.
PLANES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
PLANE_INDEX = {p: i for i, p in enumerate(PLANES)}

# Self-dual pairing (12,34), (13,42), (14,23) expressed as plane indices and
# the sign the partner component enters the Hodge star with.
HODGE_PARTNER = (5, 4, 3, 2, 1, 0)          # 12<->34, 13<->24, 14<->23
HODGE_SIGN = (1.0, -1.0, 1.0, 1.0, -1.0, 1.0)


@dataclass(frozen=True)
class LatticeSpec:
    """Flat 4-torus discretization: sites per direction and physical periods."""

    dims: tuple[int, int, int, int]
    lengths: tuple[float, float, float, float]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        lengths = tuple(float(l) for l in self.lengths)
        if len(dims) != 4 or len(lengths) != 4:
            raise ValueError("dims and lengths must each have 4 entries")
        if any(n < 2 for n in dims):
            raise ValueError("need at least 2 sites per direction")
        if any(l <= 0 for l in lengths):
            raise ValueError("lengths must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "lengths", lengths)

    @property
    def spacings(self) -> tuple[float, float, float, float]:
        return tuple(l / n for l, n in zip(self.lengths, self.dims))

    @property
    def site_count(self) -> int:
        return int(np.prod(self.dims))

    @property
    def link_count(self) -> int:
        return 4 * self.site_count

    @property
    def plaquette_count(self) -> int:
        return 6 * self.site_count

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def cell_count(self, degree: int) -> int:
        return {0: 1, 1: 4, 2: 6}[degree] * self.site_count


def _cochain_shape(spec: LatticeSpec, degree: int):
    if degree == 0:
        return spec.dims
    if degree == 1:
        return (4,) + spec.dims
    if degree == 2:
        return (6,) + spec.dims
    raise DegreeError(f"degree {degree} cochains are not represented")


@dataclass
class Cochain:
    """A real p-cochain (p in {0,1,2}) on a :class:`LatticeSpec`."""

    spec: LatticeSpec
    degree: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = _cochain_shape(self.spec, self.degree)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != shape:
            raise LatticeMismatchError(
                f"degree-{self.degree} cochain expects shape {shape}, "
                f"got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("cochain values must be finite")

    @classmethod
    def zeros(cls, spec: LatticeSpec, degree: int) -> "Cochain":
        return cls(spec, degree, np.zeros(_cochain_shape(spec, degree)))

    def copy(self) -> "Cochain":
        return Cochain(self.spec, self.degree, self.values.copy())


def _check_pair(a: Cochain, b: Cochain):
    if a.spec != b.spec:
        raise LatticeMismatchError("cochains live on different lattices")
    if a.degree != b.degree:
        raise LatticeMismatchError(
            f"degree mismatch: {a.degree} vs {b.degree}"
        )


def _fwd(values: np.ndarray, mu: int, site_axis0: int) -> np.ndarray:
    """Sample at x + e_mu with periodic wrap."""
    return np.roll(values, -1, axis=site_axis0 + mu)


def _bwd(values: np.ndarray, mu: int, site_axis0: int) -> np.ndarray:
    """Sample at x - e_mu with periodic wrap."""
    return np.roll(values, 1, axis=site_axis0 + mu)


def exterior_derivative(c: Cochain) -> Cochain:
    """Forward-difference d with periodic wrap; satisfies d(d(.)) = 0 exactly."""
    h = c.spec.spacings
    if c.degree == 0:
        v = c.values
        out = np.empty((4,) + c.spec.dims)
        for mu in range(4):
            out[mu] = (_fwd(v, mu, 0) - v) / h[mu]
        return Cochain(c.spec, 1, out)
    if c.degree == 1:
        v = c.values
        out = np.empty((6,) + c.spec.dims)
        for p, (mu, nu) in enumerate(PLANES):
            out[p] = (_fwd(v[nu], mu, 0) - v[nu]) / h[mu] \
                - (_fwd(v[mu], nu, 0) - v[mu]) / h[nu]
        return Cochain(c.spec, 2, out)
    raise DegreeError("exterior_derivative supports degrees 0 and 1 only")


def codifferential(c: Cochain) -> Cochain:
    """Adjoint of the degree-1 exterior derivative (backward differences)."""
    if c.degree != 2:
        raise DegreeError("codifferential expects a degree-2 cochain")
    h = c.spec.spacings
    v = c.values
    out = np.zeros((4,) + c.spec.dims)
    for p, (mu, nu) in enumerate(PLANES):
        out[nu] -= (v[p] - _bwd(v[p], mu, 0)) / h[mu]
        out[mu] += (v[p] - _bwd(v[p], nu, 0)) / h[nu]
    return Cochain(c.spec, 1, out)


def divergence(c: Cochain) -> Cochain:
    """Adjoint of the degree-0 exterior derivative; a degree-0 cochain."""
    if c.degree != 1:
        raise DegreeError("divergence expects a degree-1 cochain")
    h = c.spec.spacings
    out = np.zeros(c.spec.dims)
    for mu in range(4):
        out -= (c.values[mu] - _bwd(c.values[mu], mu, 0)) / h[mu]
    return Cochain(c.spec, 0, out)


def selfdual_project(c: Cochain, sign: int) -> Cochain:
    """Project onto the +1 (self-dual) or -1 (anti-self-dual) Hodge eigenspace."""
    if c.degree != 2:
        raise DegreeError("selfdual_project expects a degree-2 cochain")
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    v = c.values
    out = np.empty_like(v)
    for p in range(6):
        q = HODGE_PARTNER[p]
        out[p] = 0.5 * (v[p] + sign * HODGE_SIGN[p] * v[q])
    return Cochain(c.spec, 2, out)


def inner_product_integral(a: Cochain, b: Cochain) -> float:
    """Volume-weighted L2 pairing; np.sum's pairwise tree keeps it reproducible."""
    _check_pair(a, b)
    return float(np.sum(a.values * b.values)) * a.spec.cell_volume


def norm(c: Cochain) -> float:
    return float(np.sqrt(max(inner_product_integral(c, c), 0.0)))
