"""Gauge and spinor fields on the 4-torus lattice.

Storage conventions
-------------------
* Link angles ``a`` have shape ``(4, N1, N2, N3, N4)``; ``a[mu]`` is the
  angle on the link leaving each site in direction ``mu``.  The connection
  1-form is ``i*a`` interpreted per unit length (component ``a/h``).
* Spinors ``psi`` have shape ``(2, N1, N2, N3, N4)`` complex (two components
  of the positive-chirality fiber per site).
* Flat serialization order is x1-fastest (Fortran order over the site axes),
  component-major.

Clifford multipliers: tau = (I, i*s1, i*s2, i*s3) with s* the Pauli matrices.
They satisfy tau_mu^dag tau_nu + tau_nu^dag tau_mu = 2 delta I; every
convention-sensitive claim about them is certified by the identity suite
rather than by the particular matrix choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IllQuantizedFluxError, LatticeMismatchError
from .lattice import (
    PLANES,
    Cochain,
    LatticeSpec,
    _bwd,
    _fwd,
    exterior_derivative,
)

_S1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_S2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_S3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
TAU = np.stack([np.eye(2, dtype=np.complex128), 1j * _S1, 1j * _S2, 1j * _S3])


def _finite(x: np.ndarray, what: str):
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} contains non-finite values")


@dataclass
class GaugeField:
    spec: LatticeSpec
    a: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        if self.a.shape != (4,) + self.spec.dims:
            raise LatticeMismatchError("gauge field shape mismatch")
        _finite(self.a, "gauge field")

    @classmethod
    def zeros(cls, spec: LatticeSpec) -> "GaugeField":
        return cls(spec, np.zeros((4,) + spec.dims))

    def copy(self) -> "GaugeField":
        return GaugeField(self.spec, self.a.copy())


@dataclass
class SpinorField:
    spec: LatticeSpec
    psi: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=np.complex128)
        if self.psi.shape != (2,) + self.spec.dims:
            raise LatticeMismatchError("spinor field shape mismatch")
        _finite(self.psi, "spinor field")

    @classmethod
    def zeros(cls, spec: LatticeSpec) -> "SpinorField":
        return cls(spec, np.zeros((2,) + spec.dims, dtype=np.complex128))

    def copy(self) -> "SpinorField":
        return SpinorField(self.spec, self.psi.copy())

    def norm_sq_site(self) -> np.ndarray:
        """|psi|^2 per site."""
        return np.sum(np.abs(self.psi) ** 2, axis=0)


@dataclass
class GaugeTransform:
    """Per-site angle theta; acts as g = exp(i theta)."""

    spec: LatticeSpec
    theta: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.shape != self.spec.dims:
            raise LatticeMismatchError("gauge transform shape mismatch")
        _finite(self.theta, "gauge transform")

    def canonical(self) -> "GaugeTransform":
        """Representative with angles in [-pi, pi)."""
        t = np.mod(self.theta + np.pi, 2 * np.pi) - np.pi
        return GaugeTransform(self.spec, t)


@dataclass
class ScalarCurvatureField:
    spec: LatticeSpec
    k: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=np.float64)
        if self.k.shape != self.spec.dims:
            raise LatticeMismatchError("scalar curvature shape mismatch")
        _finite(self.k, "scalar curvature")

    @classmethod
    def constant(cls, spec: LatticeSpec, value: float) -> "ScalarCurvatureField":
        return cls(spec, np.full(spec.dims, float(value)))

    @property
    def k_min(self) -> float:
        return float(self.k.min())


@dataclass
class Configuration:
    """A gauge field / spinor field pair on one lattice."""

    A: GaugeField
    phi: SpinorField

    def __post_init__(self):
        if self.A.spec != self.phi.spec:
            raise LatticeMismatchError("gauge and spinor fields on different lattices")

    @property
    def spec(self) -> LatticeSpec:
        return self.A.spec

    @classmethod
    def zeros(cls, spec: LatticeSpec) -> "Configuration":
        return cls(GaugeField.zeros(spec), SpinorField.zeros(spec))

    def copy(self) -> "Configuration":
        return Configuration(self.A.copy(), self.phi.copy())


def apply_gauge(g: GaugeTransform, c: Configuration) -> Configuration:
    """(A, phi) -> (A + dtheta, e^{-i theta} phi); all observables unchanged."""
    if g.spec != c.spec:
        raise LatticeMismatchError("gauge transform on a different lattice")
    a = np.empty_like(c.A.a)
    for mu in range(4):
        a[mu] = c.A.a[mu] + _fwd(g.theta, mu, 0) - g.theta
    psi = np.exp(-1j * g.theta) * c.phi.psi
    return Configuration(GaugeField(c.spec, a), SpinorField(c.spec, psi))


def plaquette_angles(A: GaugeField) -> np.ndarray:
    """Raw oriented plaquette angle sums, shape (6,) + dims."""
    a = A.a
    out = np.empty((6,) + A.spec.dims)
    for p, (mu, nu) in enumerate(PLANES):
        out[p] = a[mu] + _fwd(a[nu], mu, 0) - _fwd(a[mu], nu, 0) - a[nu]
    return out


def curvature(A: GaugeField) -> Cochain:
    """Principal-branch plaquette angle divided by the plaquette area.

    The raw oriented angle sum is exactly gauge-invariant; wrapping it into
    (-pi, pi] is what lets a single-valued link field carry nonzero flux
    (raw sums telescope to zero around any 2-torus).
    """
    theta = plaquette_angles(A)
    wrapped = theta - 2 * np.pi * np.round(theta / (2 * np.pi))
    h = A.spec.spacings
    out = np.empty_like(wrapped)
    for p, (mu, nu) in enumerate(PLANES):
        out[p] = wrapped[p] / (h[mu] * h[nu])
    return Cochain(A.spec, 2, out)


def chern_fluxes(A: GaugeField, with_distance: bool = False):
    """Integer fluxes (m12, m13, m14, m23, m24, m34) from principal-branch sums.

    Each flux is the wrapped plaquette-angle sum over the coordinate 2-torus
    at zero transverse coordinates, divided by 2 pi.
    """
    theta = plaquette_angles(A)
    wrapped = np.mod(theta + np.pi, 2 * np.pi) - np.pi
    fluxes = []
    dists = []
    for p, (mu, nu) in enumerate(PLANES):
        trans = [ax for ax in range(4) if ax not in (mu, nu)]
        sl = [slice(None)] * 4
        for ax in trans:
            sl[ax] = 0
        total = float(np.sum(wrapped[p][tuple(sl)])) / (2 * np.pi)
        m = int(round(total))
        dist = abs(total - m)
        if dist > 0.25:
            raise IllQuantizedFluxError((mu + 1, nu + 1), dist)
        fluxes.append(m)
        dists.append(dist)
    if with_distance:
        return tuple(fluxes), tuple(dists)
    return tuple(fluxes)


def covariant_forward(A: GaugeField, phi: SpinorField, mu: int) -> np.ndarray:
    """(e^{i a(x,mu)} phi(x+mu) - phi(x)) / h_mu."""
    h = A.spec.spacings[mu]
    U = np.exp(1j * A.a[mu])
    return (U * _fwd(phi.psi, mu, 1) - phi.psi) / h


def covariant_centered(A: GaugeField, phi: SpinorField, mu: int) -> np.ndarray:
    """Centered gauge-covariant difference in direction mu."""
    h = A.spec.spacings[mu]
    U = np.exp(1j * A.a[mu])
    Udag_b = np.conj(_bwd(U, mu, 0))
    return (U * _fwd(phi.psi, mu, 1) - Udag_b * _bwd(phi.psi, mu, 1)) / (2 * h)


def _clifford_apply(mats: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply a constant 2x2 matrix to the component axis of a spinor array."""
    return np.einsum("ab,b...->a...", mats, v)


def dirac_plus(A: GaugeField, phi: SpinorField) -> SpinorField:
    """Half-Dirac operator: sum_mu tau_mu (centered covariant difference)."""
    if A.spec != phi.spec:
        raise LatticeMismatchError("dirac_plus operands on different lattices")
    out = np.zeros_like(phi.psi)
    for mu in range(4):
        out += _clifford_apply(TAU[mu], covariant_centered(A, phi, mu))
    return SpinorField(A.spec, out)


def dirac_plus_adjoint(A: GaugeField, chi: SpinorField) -> SpinorField:
    """Exact adjoint of dirac_plus in the volume-weighted inner product."""
    if A.spec != chi.spec:
        raise LatticeMismatchError("dirac_plus_adjoint operands on different lattices")
    out = np.zeros_like(chi.psi)
    # Centered covariant differences are exactly anti-self-adjoint.
    for mu in range(4):
        v = _clifford_apply(TAU[mu].conj().T, chi.psi)
        out -= covariant_centered(A, SpinorField(A.spec, v), mu)
    return SpinorField(A.spec, out)


def covariant_laplacian(A: GaugeField, phi: SpinorField) -> SpinorField:
    """(nabla_forward)^* nabla_forward, positive semi-definite by construction."""
    if A.spec != phi.spec:
        raise LatticeMismatchError("laplacian operands on different lattices")
    out = np.zeros_like(phi.psi)
    h = A.spec.spacings
    for mu in range(4):
        U = np.exp(1j * A.a[mu])
        Udag_b = np.conj(_bwd(U, mu, 0))
        out += (2 * phi.psi - U * _fwd(phi.psi, mu, 1)
                - Udag_b * _bwd(phi.psi, mu, 1)) / h[mu] ** 2
    return SpinorField(A.spec, out)


def sigma_pauli(phi: SpinorField) -> np.ndarray:
    """Pauli coordinates (s1, s2, s3) of sigma(phi), shape (3,) + dims."""
    p1, p2 = phi.psi[0], phi.psi[1]
    cross = p1 * np.conj(p2)
    return np.stack([cross.real, -cross.imag,
                     0.5 * (np.abs(p1) ** 2 - np.abs(p2) ** 2)])


def sigma_form(phi: SpinorField) -> np.ndarray:
    """Traceless Hermitian matrix of the quadratic form, shape (2,2) + dims."""
    s = sigma_pauli(phi)
    out = np.empty((2, 2) + phi.spec.dims, dtype=np.complex128)
    out[0, 0] = s[2]
    out[1, 1] = -s[2]
    out[0, 1] = s[0] - 1j * s[1]
    out[1, 0] = s[0] + 1j * s[1]
    return out


def sigma_selfdual_cochain(phi: SpinorField) -> Cochain:
    """Image of sigma(phi) as a self-dual 2-cochain.

    The scale is pinned by requiring <F+, sigma> (2-cochain pairing) to equal
    (1/2) <F+ . phi, phi> for every input, which also makes the first-order
    energy expand consistently against the quartic term.
    """
    s = sigma_pauli(phi)
    out = np.empty((6,) + phi.spec.dims)
    out[0] = s[0]   # 12
    out[5] = s[0]   # 34
    out[1] = s[1]   # 13
    out[4] = -s[1]  # 24  (pair is (13,42))
    out[2] = s[2]   # 14
    out[3] = s[2]   # 23
    return Cochain(phi.spec, 2, out)


def selfdual_endomorphism(F: Cochain) -> np.ndarray:
    """End^0(S+) image of a 2-cochain under the tau-induced identification.

    Only the self-dual part acts; the scale matches the curvature term of the
    squared Dirac operator, i.e. dirac^*dirac = laplacian + (1/2) * this(F).
    """
    v = F.values
    g1 = v[0] + v[5]
    g2 = v[1] - v[4]
    g3 = v[2] + v[3]
    out = np.empty((2, 2) + F.spec.dims, dtype=np.complex128)
    out[0, 0] = 2 * g3
    out[1, 1] = -2 * g3
    out[0, 1] = 2 * (g1 - 1j * g2)
    out[1, 0] = 2 * (g1 + 1j * g2)
    return out


def clifford_action(F: Cochain, phi: SpinorField) -> SpinorField:
    """Action of a 2-cochain on positive spinors through its self-dual part."""
    if F.spec != phi.spec:
        raise LatticeMismatchError("clifford_action operands on different lattices")
    M = selfdual_endomorphism(F)
    out = np.einsum("ab...,b...->a...", M, phi.psi)
    return SpinorField(phi.spec, out)


def constant_flux_field(spec: LatticeSpec, m) -> GaugeField:
    """Gauge field with uniform plaquette angles 2 pi m / (N_mu N_nu) per plane.

    Standard torus construction: a linear ramp on the nu-links plus a
    compensating slab on the last mu-layer of mu-links; plaquettes in every
    plane come out exactly uniform (mod 2 pi).
    """
    m = tuple(int(v) for v in m)
    if len(m) != 6:
        raise ValueError("flux vector must have 6 entries (m12,m13,m14,m23,m24,m34)")
    a = np.zeros((4,) + spec.dims)
    coords = np.indices(spec.dims)
    for p, (mu, nu) in enumerate(PLANES):
        if m[p] == 0:
            continue
        Nm, Nn = spec.dims[mu], spec.dims[nu]
        a[nu] += 2 * np.pi * m[p] * coords[mu] / (Nm * Nn)
        slab = coords[mu] == Nm - 1
        a[mu] += np.where(slab, -2 * np.pi * m[p] * coords[nu] / Nn, 0.0)
    return GaugeField(spec, a)


def phi_star(A: GaugeField, phi: SpinorField) -> Cochain:
    """Im <nabla^A_mu phi, phi> on each link; the u(1) part of the pairing.

    Uses the forward covariant difference paired against the site value, the
    combination that makes the gauge-field residual the exact gradient of the
    discrete energy (checked by finite differences in the tests).
    """
    if A.spec != phi.spec:
        raise LatticeMismatchError("phi_star operands on different lattices")
    out = np.empty((4,) + A.spec.dims)
    for mu in range(4):
        grad = covariant_forward(A, phi, mu)
        out[mu] = np.sum((grad * np.conj(phi.psi)).imag, axis=0)
    return Cochain(A.spec, 1, out)
