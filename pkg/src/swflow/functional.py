"""The lattice energy functional, its residuals, and the algebraic identities.

Energy terms (volume-weighted sums over sites/cells):

    curvature_term = (1/4) |F|^2
    kinetic_term   = sum_mu |forward covariant difference of phi|^2
    quartic_term   = (1/8) |phi|^4
    coupling_term  = (1/4) k |phi|^2
    first_order    = (1/2) { |F+ - sigma(phi)|^2 + |D+ phi|^2 }

The topological gap (total - first_order) is the lattice stand-in for the
flux-sector constant; on constant-flux fields it equals the continuum value
exactly (see flux_gap_predictor).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import LatticeMismatchError
from . import lattice
from .lattice import Cochain, LatticeSpec, codifferential, inner_product_integral, selfdual_project
from .fields import (
    Configuration,
    ScalarCurvatureField,
    SpinorField,
    clifford_action,
    covariant_forward,
    covariant_laplacian,
    curvature,
    dirac_plus,
    dirac_plus_adjoint,
    phi_star,
    selfdual_endomorphism,
    sigma_form,
    sigma_selfdual_cochain,
)


@dataclass
class EnergyBreakdown:
    curvature_term: float
    kinetic_term: float
    quartic_term: float
    coupling_term: float
    total: float
    first_order_total: float
    topological_gap: float

    FIELDS = ("curvature_term", "kinetic_term", "quartic_term",
              "coupling_term", "total", "first_order_total", "topological_gap")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "EnergyBreakdown":
        d = json.loads(text)
        return cls(**{name: float(d[name]) for name in cls.FIELDS})


@dataclass
class FirstOrderResult:
    total: float
    curvature_residual: Cochain     # F+ - sigma(phi)
    dirac_residual: SpinorField     # D+ phi


def _check(c: Configuration, k: ScalarCurvatureField | None = None):
    if k is not None and k.spec != c.spec:
        raise LatticeMismatchError("curvature field on a different lattice")


def spinor_inner(a: SpinorField, b: SpinorField) -> float:
    """Real part of the volume-weighted Hermitian pairing."""
    if a.spec != b.spec:
        raise LatticeMismatchError("spinor fields on different lattices")
    return float(np.sum((a.psi * np.conj(b.psi)).real)) * a.spec.cell_volume


def spinor_norm(a: SpinorField) -> float:
    return float(np.sqrt(max(spinor_inner(a, a), 0.0)))


def first_order_energy(c: Configuration) -> FirstOrderResult:
    """(1/2) integral of |F+ - sigma|^2 + |D+ phi|^2, with residual fields."""
    F = curvature(c.A)
    Fplus = selfdual_project(F, +1)
    res_F = Cochain(c.spec, 2, Fplus.values - sigma_selfdual_cochain(c.phi).values)
    res_D = dirac_plus(c.A, c.phi)
    total = 0.5 * (inner_product_integral(res_F, res_F) + spinor_inner(res_D, res_D))
    return FirstOrderResult(total, res_F, res_D)


def energy_terms(c: Configuration, k: ScalarCurvatureField) -> tuple[float, float, float, float]:
    """(curvature, kinetic, quartic, coupling) terms; no first-order work."""
    _check(c, k)
    vol = c.spec.cell_volume
    F = curvature(c.A)
    curvature_term = 0.25 * inner_product_integral(F, F)
    kin = 0.0
    for mu in range(4):
        g = covariant_forward(c.A, c.phi, mu)
        kin += float(np.sum(np.abs(g) ** 2))
    kinetic_term = kin * vol
    nsq = c.phi.norm_sq_site()
    quartic_term = 0.125 * float(np.sum(nsq ** 2)) * vol
    coupling_term = 0.25 * float(np.sum(k.k * nsq)) * vol
    return curvature_term, kinetic_term, quartic_term, coupling_term


def sw_energy(c: Configuration, k: ScalarCurvatureField) -> EnergyBreakdown:
    curvature_term, kinetic_term, quartic_term, coupling_term = energy_terms(c, k)
    total = curvature_term + kinetic_term + quartic_term + coupling_term
    fo = first_order_energy(c).total
    return EnergyBreakdown(
        curvature_term=curvature_term,
        kinetic_term=kinetic_term,
        quartic_term=quartic_term,
        coupling_term=coupling_term,
        total=total,
        first_order_total=fo,
        topological_gap=total - fo,
    )


def el_residual_phi(c: Configuration, k: ScalarCurvatureField) -> SpinorField:
    """Delta_A phi + (|phi|^2/4) phi + (k/4) phi.

    Equals half the variational derivative of the energy with respect to phi
    under the real L2 pairing: dE.Lambda = 2 Re<this, Lambda>.
    """
    _check(c, k)
    lap = covariant_laplacian(c.A, c.phi)
    nsq = c.phi.norm_sq_site()
    out = lap.psi + 0.25 * (nsq + k.k) * c.phi.psi
    return SpinorField(c.spec, out)


def el_residual_A(c: Configuration) -> Cochain:
    """d* F + 4 Im<nabla phi, phi> as a degree-1 cochain.

    The exact energy gradient with respect to the connection cochain is half
    this field (dE.Theta = (1/2) <this, Theta>).
    """
    F = curvature(c.A)
    dstar = codifferential(F)
    p = phi_star(c.A, c.phi)
    return Cochain(c.spec, 1, dstar.values + 4.0 * p.values)


def residual_norms(c: Configuration, k: ScalarCurvatureField) -> tuple[float, float]:
    """(||spinor residual||, ||gauge residual||) in volume-weighted L2."""
    r_phi = spinor_norm(el_residual_phi(c, k))
    r_A = lattice.norm(el_residual_A(c))
    return r_phi, r_A


# ---------------------------------------------------------------------------
# Identity suite


def _end_inner(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """(1/2) trace(P Q^dag) per site, real output."""
    return 0.5 * np.einsum("ab...,ab...->...", P, np.conj(Q)).real


@dataclass
class IdentityReport:
    pairing_deviation: float      # <F+, sigma> = (1/2) <F+ . phi, phi>
    norm_deviation: float         # <sigma, sigma> = |phi|^4 / 4
    eigen_deviation: float        # sigma(phi) phi = (|phi|^2/2) phi

    def max_deviation(self) -> float:
        return max(self.pairing_deviation, self.norm_deviation,
                   self.eigen_deviation)


def identity_suite(phi: SpinorField, Fplus: Cochain) -> IdentityReport:
    """Pointwise check of the three algebraic identities certifying the
    endomorphism inner product and the Clifford conventions."""
    if Fplus.spec != phi.spec or Fplus.degree != 2:
        raise LatticeMismatchError("identity_suite expects a degree-2 cochain on the same lattice")
    sig = sigma_form(phi)
    Fend = selfdual_endomorphism(Fplus)
    nsq = phi.norm_sq_site()

    lhs1 = _end_inner(Fend, sig)
    Fphi = clifford_action(Fplus, phi)
    rhs1 = 0.5 * np.sum((Fphi.psi * np.conj(phi.psi)).real, axis=0)
    dev1 = float(np.max(np.abs(lhs1 - rhs1), initial=0.0))

    dev2 = float(np.max(np.abs(_end_inner(sig, sig) - 0.25 * nsq ** 2), initial=0.0))

    sig_phi = np.einsum("ab...,b...->a...", sig, phi.psi)
    dev3 = float(np.max(np.abs(sig_phi - 0.5 * nsq * phi.psi), initial=0.0))

    return IdentityReport(dev1, dev2, dev3)


# ---------------------------------------------------------------------------
# Weitzenboeck residual and the flux-sector constant


def weitzenbock_residual(c: Configuration, k: ScalarCurvatureField) -> float:
    """||D*D phi - Delta phi - (k/4) phi - (1/2) F.phi|| / ||phi||.

    Nonzero at finite spacing (centered vs forward stencils); shrinks under
    refinement on smooth fields with k = 0.
    """
    _check(c, k)
    nphi = spinor_norm(c.phi)
    if nphi == 0.0:
        raise ZeroDivisionError("weitzenbock residual undefined for phi = 0")
    DD = dirac_plus_adjoint(c.A, dirac_plus(c.A, c.phi))
    lap = covariant_laplacian(c.A, c.phi)
    F = curvature(c.A)
    Fphi = clifford_action(F, c.phi)
    res = DD.psi - lap.psi - 0.25 * k.k * c.phi.psi - 0.5 * Fphi.psi
    return spinor_norm(SpinorField(c.spec, res)) / nphi


def topological_constant(c: Configuration, k: ScalarCurvatureField) -> float:
    """total - first_order_total; constant on a flux sector up to O(h^2)."""
    return sw_energy(c, k).topological_gap


def flux_gap_predictor(m, spec: LatticeSpec) -> float:
    """Continuum flux-sector constant (1/4) int (|F-|^2 - |F+|^2) for the
    constant-curvature field with integer fluxes m = (m12,m13,m14,m23,m24,m34).

    The period lengths cancel; the value is -2 pi^2 (m12 m34 - m13 m24 + m14 m23).
    """
    m12, m13, m14, m23, m24, m34 = (int(v) for v in m)
    pairing = m12 * m34 - m13 * m24 + m14 * m23
    return -2.0 * np.pi ** 2 * pairing
