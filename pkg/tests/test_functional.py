"""Energy functional, residuals and derived quantities."""

import json
import math

import numpy as np
import pytest

from swflow.lattice import LatticeSpec
from swflow.fields import (Configuration, GaugeField, ScalarCurvatureField,
                           SpinorField, constant_flux_field)
from swflow.functional import (EnergyBreakdown, energy_terms,
                               first_order_energy, flux_gap_predictor,
                               residual_norms, sw_energy,
                               topological_constant, weitzenbock_residual)

from conftest import smooth_configuration

SPEC = LatticeSpec((4,) * 4, (1.0,) * 4)


def test_energy_breakdown_json_round_trip():
    eb = EnergyBreakdown(1.0, 2.0, 3.0, -0.5, 5.5, 1.25, 4.25)
    again = EnergyBreakdown.from_json(eb.to_json())
    assert again == eb
    assert set(json.loads(eb.to_json())) == set(EnergyBreakdown.FIELDS)


def test_total_is_sum_of_terms_and_gap_is_difference():
    rng = np.random.default_rng(20)
    c = smooth_configuration(rng, SPEC, amplitude=0.2)
    k = ScalarCurvatureField.constant(SPEC, -1.0)
    terms = energy_terms(c, k)
    eb = sw_energy(c, k)
    assert abs(sum(terms) - eb.total) <= 1e-10 * (1.0 + abs(eb.total))
    assert abs(eb.topological_gap
               - (eb.total - eb.first_order_total)) <= 1e-12
    assert abs(topological_constant(c, k) - eb.topological_gap) <= 1e-12


def test_first_order_energy_is_nonnegative():
    rng = np.random.default_rng(21)
    for _ in range(20):
        c = Configuration(
            GaugeField(SPEC, rng.normal(size=(4,) + SPEC.dims)),
            SpinorField(SPEC, rng.normal(size=(2,) + SPEC.dims)
                        + 1j * rng.normal(size=(2,) + SPEC.dims)))
        assert first_order_energy(c).total >= -1e-12


def test_uniform_unit_spinor_is_critical_for_unit_negative_curvature():
    psi = np.zeros((2,) + SPEC.dims, dtype=complex)
    psi[0] = 1.0
    c = Configuration(GaugeField(SPEC, np.zeros((4,) + SPEC.dims)),
                      SpinorField(SPEC, psi))
    k = ScalarCurvatureField.constant(SPEC, -1.0)
    r_phi, r_A = residual_norms(c, k)
    assert r_phi <= 1e-12 and r_A <= 1e-12
    assert abs(sw_energy(c, k).total - (-0.125)) <= 1e-12


def test_flux_gap_predictor_matches_pairing_signs():
    two_pi_sq = 2.0 * math.pi ** 2
    assert abs(flux_gap_predictor((1, 0, 0, 0, 0, 1), SPEC)
               + two_pi_sq) <= 1e-12
    assert abs(flux_gap_predictor((0, 1, 0, 0, 1, 0), SPEC)
               - two_pi_sq) <= 1e-12
    assert abs(flux_gap_predictor((0, 0, 1, 1, 0, 0), SPEC)
               + two_pi_sq) <= 1e-12
    assert flux_gap_predictor((1, 0, 0, 0, 0, 0), SPEC) == 0.0


def test_constant_flux_gap_equals_predictor():
    m = (1, 0, 0, 0, 0, 1)
    c = Configuration(constant_flux_field(SPEC, m),
                      SpinorField(SPEC, np.zeros((2,) + SPEC.dims, complex)))
    k = ScalarCurvatureField.constant(SPEC, 0.0)
    eb = sw_energy(c, k)
    gap = eb.total - eb.first_order_total
    assert abs(gap - flux_gap_predictor(m, SPEC)) <= 1e-9


def _sampled_smooth_configuration(spec):
    """The same smooth periodic continuum fields sampled on any lattice."""
    xs = np.meshgrid(*[np.arange(n) / n for n in spec.dims], indexing="ij")
    h = spec.spacings
    a = np.stack([0.3 * h[mu] * np.cos(2.0 * np.pi * xs[(mu + 1) % 4])
                  for mu in range(4)])
    phase = np.exp(2j * np.pi * xs[0])
    psi = np.stack([phase * (1.0 + 0.2 * np.sin(2.0 * np.pi * xs[2])),
                    0.5 * phase * np.cos(2.0 * np.pi * xs[3])])
    return Configuration(GaugeField(spec, a), SpinorField(spec, psi))


def test_weitzenbock_residual_shrinks_under_refinement():
    values = {}
    for n in (4, 8, 16):
        spec = LatticeSpec((n,) * 4, (1.0,) * 4)
        c = _sampled_smooth_configuration(spec)
        k = ScalarCurvatureField.constant(spec, 0.0)
        values[n] = weitzenbock_residual(c, k)
    assert values[8] < 0.6 * values[4]
    assert values[16] < 0.6 * values[8]


def test_weitzenbock_residual_rejects_zero_spinor():
    c = Configuration(GaugeField(SPEC, np.zeros((4,) + SPEC.dims)),
                      SpinorField(SPEC, np.zeros((2,) + SPEC.dims, complex)))
    k = ScalarCurvatureField.constant(SPEC, 0.0)
    with pytest.raises(ZeroDivisionError):
        weitzenbock_residual(c, k)
