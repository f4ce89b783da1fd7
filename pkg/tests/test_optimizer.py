"""Descent, gauge fixing and saddle-search plumbing."""

import numpy as np
import pytest

from swflow.errors import ContractibleLoopError
from swflow.lattice import Cochain, LatticeSpec, divergence
from swflow.fields import (Configuration, GaugeField, ScalarCurvatureField,
                           SpinorField, chern_fluxes)
from swflow.functional import sw_energy
from swflow.optimizer import (OptimizerConfig, TRACE_COLUMNS, gauge_fix,
                              linfty_check, minimize, saddle_search,
                              winding_transform)
from swflow.cli import seed_initial

SPEC = LatticeSpec((4,) * 4, (1.0,) * 4)


def test_optimizer_config_rejects_unknown_preconditioner():
    with pytest.raises(ValueError):
        OptimizerConfig(precondition="sometimes")


def test_gauge_fix_removes_divergence_and_preserves_energy():
    rng = np.random.default_rng(40)
    c = Configuration(
        GaugeField(SPEC, 0.3 * rng.normal(size=(4,) + SPEC.dims)),
        SpinorField(SPEC, rng.normal(size=(2,) + SPEC.dims)
                    + 1j * rng.normal(size=(2,) + SPEC.dims)))
    k = ScalarCurvatureField.constant(SPEC, -1.0)
    fixed = gauge_fix(c)
    h = SPEC.spacings
    one_form = Cochain(SPEC, 1, np.stack(
        [fixed.A.a[mu] / h[mu] for mu in range(4)]))
    assert np.max(np.abs(divergence(one_form).values)) <= 1e-9
    e0, e1 = sw_energy(c, k).total, sw_energy(fixed, k).total
    assert abs(e0 - e1) <= 1e-10 * (1.0 + abs(e0))
    assert chern_fluxes(fixed.A) == chern_fluxes(c.A)


def test_minimize_reaches_ginzburg_landau_minimum_on_small_lattice():
    c0 = seed_initial({"flux": [0] * 6, "seed": 1, "amplitude": 0.05}, SPEC)
    k = ScalarCurvatureField.constant(SPEC, -1.0)
    rep = minimize(c0, k, OptimizerConfig())
    assert rep.converged and not rep.stagnated
    assert abs(rep.energy.total - (-0.125)) <= 1e-8
    assert abs(rep.sup_phi_sq - 1.0) <= 1e-6
    assert rep.linfty_bound_satisfied
    assert rep.trace and len(rep.trace[0]) == len(TRACE_COLUMNS)
    assert rep.configuration is not None


def test_minimize_energy_is_monotone_along_the_trace():
    c0 = seed_initial({"flux": [0] * 6, "seed": 2, "amplitude": 0.05}, SPEC)
    k = ScalarCurvatureField.constant(SPEC, -1.0)
    rep = minimize(c0, k, OptimizerConfig(residual_tol=1e-6))
    idx = TRACE_COLUMNS.index("total")
    totals = [row[idx] for row in rep.trace]
    slack = 1e-12 * (1.0 + abs(totals[0]))
    assert all(b <= a + slack for a, b in zip(totals, totals[1:]))


def test_linfty_check_bound():
    psi = np.zeros((2,) + SPEC.dims, dtype=complex)
    psi[0] = 1.5
    phi = SpinorField(SPEC, psi)
    k = ScalarCurvatureField.constant(SPEC, -1.0)
    sup, bound, ok = linfty_check(phi, k)
    assert abs(sup - 2.25) <= 1e-12
    assert abs(bound - 1.0) <= 1e-12
    assert not ok


def test_winding_transform_is_a_legal_large_gauge_transform():
    g = winding_transform(SPEC, (1, 0, -2, 0))
    span = g.theta[-1, 0, 0, 0] - g.theta[0, 0, 0, 0]
    assert abs(span - 2.0 * np.pi * (SPEC.dims[0] - 1) / SPEC.dims[0]) <= 1e-12
    rng = np.random.default_rng(41)
    from swflow.fields import apply_gauge
    c = Configuration(
        GaugeField(SPEC, 0.1 * rng.normal(size=(4,) + SPEC.dims)),
        SpinorField(SPEC, rng.normal(size=(2,) + SPEC.dims)
                    + 1j * rng.normal(size=(2,) + SPEC.dims)))
    k = ScalarCurvatureField.constant(SPEC, -1.0)
    cg = apply_gauge(g, c)
    assert abs(sw_energy(c, k).total - sw_energy(cg, k).total) <= 1e-10
    assert chern_fluxes(cg.A) == chern_fluxes(c.A)


def test_saddle_search_rejects_contractible_loop():
    c0 = seed_initial({"flux": [0] * 6, "seed": 1, "amplitude": 0.0}, SPEC)
    k = ScalarCurvatureField.constant(SPEC, -1.0)
    with pytest.raises(ContractibleLoopError):
        saddle_search(c0, k, (0, 0, 0, 0), 8, OptimizerConfig())
