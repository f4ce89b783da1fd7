"""Shared fixtures and the global first-order lower-bound hook.

Every energy breakdown computed anywhere in the suite must satisfy
first_order_total >= -1e-12 (equivalently total >= topological gap).  The
hook wraps the energy evaluator at import time so that any configuration
produced by any test is checked automatically; a violation fails the test
that produced it.
"""

import numpy as np
import pytest

import swflow.functional as functional
import swflow.optimizer as optimizer

LOWER_BOUND_SLACK = -1e-12

# Statistics of the lower-bound hook, inspected by the acceptance test.
HOOK_STATS = {"checked": 0, "min_first_order": float("inf")}

_orig_sw_energy = functional.sw_energy


def _checked_sw_energy(c, k):
    eb = _orig_sw_energy(c, k)
    HOOK_STATS["checked"] += 1
    HOOK_STATS["min_first_order"] = min(HOOK_STATS["min_first_order"],
                                        eb.first_order_total)
    assert eb.first_order_total >= LOWER_BOUND_SLACK, (
        f"first-order energy {eb.first_order_total} violates the lower bound")
    return eb


functional.sw_energy = _checked_sw_energy
if optimizer.sw_energy is _orig_sw_energy:
    optimizer.sw_energy = _checked_sw_energy


@pytest.fixture(scope="session")
def hook_stats():
    return HOOK_STATS


def low_mode_field(rng, spec, lead=(), modes=6):
    """Random smooth real field built from Fourier modes with |k|_inf <= 1."""
    xs = np.meshgrid(*[np.arange(n) / n for n in spec.dims], indexing="ij")
    out = np.zeros(lead + spec.dims)
    flat = out.reshape((-1,) + spec.dims)
    for comp in range(flat.shape[0]):
        acc = np.zeros(spec.dims)
        for _ in range(modes):
            kvec = rng.integers(-1, 2, size=4)
            phase = 2.0 * np.pi * sum(kv * x for kv, x in zip(kvec, xs))
            acc += rng.normal() * np.cos(phase) + rng.normal() * np.sin(phase)
        flat[comp] = acc
    return out


def smooth_configuration(rng, spec, flux=(0, 0, 0, 0, 0, 0), amplitude=0.05):
    """Constant-flux background plus smooth low-mode perturbations."""
    from swflow.fields import (Configuration, GaugeField, SpinorField,
                               constant_flux_field)
    base = constant_flux_field(spec, flux)
    a = base.a + amplitude * low_mode_field(rng, spec, lead=(4,))
    psi = amplitude * (low_mode_field(rng, spec, lead=(2,))
                       + 1j * low_mode_field(rng, spec, lead=(2,)))
    return Configuration(GaugeField(spec, a),
                         SpinorField(spec, psi.astype(np.complex128)))
