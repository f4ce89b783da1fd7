"""Descent to stable critical points and minimax saddle search.

The descent direction is the exact discrete gradient smoothed by an inverse
shifted free Laplacian (applied per component with FFTs).  The smoothing
operator is symmetric positive definite, so Armijo backtracking on the raw
energy keeps every accepted step monotone while removing the lattice
Laplacian's stiffness from the iteration count.

Saddle candidates come from the string method run over the closed loop
generated by a large gauge transform of winding n: relax the interior images
along the force component orthogonal to the path tangent, reparameterize to
equal arclength each sweep, and report the maximum-energy image.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    ContractibleLoopError,
    NonFiniteEnergyError,
    SectorChangeError,
)
from . import lattice
from .lattice import Cochain, LatticeSpec, divergence, exterior_derivative
from .fields import (
    Configuration,
    GaugeField,
    GaugeTransform,
    ScalarCurvatureField,
    SpinorField,
    apply_gauge,
    plaquette_angles,
)
from .functional import (
    EnergyBreakdown,
    el_residual_A,
    el_residual_phi,
    energy_terms,
    spinor_norm,
    sw_energy,
)

STEP_FLOOR = 1e-12
BRANCH_GUARD = 0.999 * np.pi

TRACE_COLUMNS = ("iteration", "total", "curvature_term", "kinetic_term",
                 "quartic_term", "coupling_term", "residual_phi",
                 "residual_A", "sup_phi_sq")


@dataclass
class OptimizerConfig:
    initial_step: float = 0.5
    armijo_shrink: float = 0.5
    armijo_slope: float = 0.1
    residual_tol: float = 1e-8
    max_iter: int = 20000
    gauge_fix_every: int = 0
    seed: int = 0
    precondition: str = "full"       # "full", "gauge", or "none"

    def __post_init__(self):
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if not 0 < self.armijo_shrink < 1:
            raise ValueError("armijo_shrink must lie in (0, 1)")
        if not 0 < self.armijo_slope < 1:
            raise ValueError("armijo_slope must lie in (0, 1)")
        if self.residual_tol <= 0:
            raise ValueError("residual_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.gauge_fix_every < 0:
            raise ValueError("gauge_fix_every must be >= 0")
        if self.precondition not in ("full", "gauge", "none"):
            raise ValueError("precondition must be 'full', 'gauge' or 'none'")


@dataclass
class MinimizeReport:
    iterations: int
    converged: bool
    stagnated: bool
    energy: EnergyBreakdown
    residual_phi: float
    residual_A: float
    sup_phi_sq: float
    linfty_bound: float
    linfty_bound_satisfied: bool
    trace: list = dc_field(repr=False, default_factory=list)
    configuration: Configuration | None = dc_field(repr=False, default=None)


@dataclass
class SaddleReport:
    image_count: int
    loop_class: tuple[int, int, int, int]
    profile: list                      # EnergyBreakdown per image
    max_index: int
    residual_phi: float
    residual_A: float
    sweeps: int
    converged: bool
    candidate: Configuration | None = dc_field(repr=False, default=None)


# ---------------------------------------------------------------------------
# FFT helpers


def _free_laplacian_symbol(spec: LatticeSpec) -> np.ndarray:
    h = spec.spacings
    sym = np.zeros(spec.dims)
    for mu, (n, hm) in enumerate(zip(spec.dims, h)):
        k = np.arange(n)
        lam = 4.0 * np.sin(np.pi * k / n) ** 2 / hm ** 2
        shape = [1, 1, 1, 1]
        shape[mu] = n
        sym = sym + lam.reshape(shape)
    return sym


def _smooth(values: np.ndarray, symbol: np.ndarray, shift: float) -> np.ndarray:
    """Apply (shift + free Laplacian)^-1 along the site axes."""
    axes = tuple(range(values.ndim - 4, values.ndim))
    out = np.fft.ifftn(np.fft.fftn(values, axes=axes) / (shift + symbol), axes=axes)
    if np.isrealobj(values):
        return out.real
    return out


# ---------------------------------------------------------------------------
# Gauge fixing


def gauge_fix(c: Configuration) -> Configuration:
    """Coulomb-type orbit representative: removes the exact part of a.

    Solves the lattice Poisson equation with FFTs (exact on the periodic
    torus); the leftover constant is fixed by theta(origin) = 0.
    """
    spec = c.spec
    h = spec.spacings
    comp = np.stack([c.A.a[mu] / h[mu] for mu in range(4)])
    rhs = -divergence(Cochain(spec, 1, comp)).values
    sym = _free_laplacian_symbol(spec)
    rhs_hat = np.fft.fftn(rhs)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta_hat = np.where(sym > 0, rhs_hat / np.where(sym > 0, sym, 1.0), 0.0)
    theta = np.fft.ifftn(theta_hat).real
    theta = theta - theta[(0, 0, 0, 0)]
    return apply_gauge(GaugeTransform(spec, theta), c)


# ---------------------------------------------------------------------------
# L-infinity bound


def linfty_check(phi: SpinorField, k: ScalarCurvatureField,
                 tolerance: float = 1e-6) -> tuple[float, float, bool]:
    """sup_x |phi|^2 against max(0, -min_x k); the maximum-principle bound."""
    sup = float(phi.norm_sq_site().max())
    bound = max(0.0, -k.k_min)
    return sup, bound, sup <= bound + tolerance


# ---------------------------------------------------------------------------
# Minimization


def _gradients(c: Configuration, k: ScalarCurvatureField):
    """Parameter-space gradient of the energy wrt (a, psi), plus residuals."""
    spec = c.spec
    vol = spec.cell_volume
    h = spec.spacings
    el_A = el_residual_A(c)
    el_phi = el_residual_phi(c, k)
    grad_a = np.stack([vol * 0.5 * el_A.values[mu] / h[mu] for mu in range(4)])
    grad_psi = 2.0 * vol * el_phi.psi
    r_A = lattice.norm(el_A)
    r_phi = spinor_norm(el_phi)
    return grad_a, grad_psi, r_phi, r_A


def _check_sector(A: GaugeField, fluxes0) -> None:
    from .fields import chern_fluxes

    theta = plaquette_angles(A)
    wrapped = np.abs(theta - 2 * np.pi * np.round(theta / (2 * np.pi)))
    if float(wrapped.max()) >= BRANCH_GUARD:
        raise SectorChangeError("plaquette angle reached the branch cut")
    if chern_fluxes(A) != fluxes0:
        raise SectorChangeError("integer fluxes changed during descent")


def minimize(c0: Configuration, k: ScalarCurvatureField,
             opts: OptimizerConfig) -> MinimizeReport:
    """Armijo-backtracking descent on (a, psi); monotone in the total energy."""
    from .fields import chern_fluxes

    spec = c0.spec
    sym = _free_laplacian_symbol(spec)
    shift = 1.0
    a = c0.A.a.copy()
    psi = c0.phi.psi.copy()
    fluxes0 = chern_fluxes(c0.A)

    def energy_of(a_arr, psi_arr):
        cfg = Configuration(GaugeField(spec, a_arr), SpinorField(spec, psi_arr))
        terms = energy_terms(cfg, k)
        total = sum(terms)
        if not np.isfinite(total):
            raise NonFiniteEnergyError("energy is not finite")
        return terms, total, cfg

    terms, total, cfg = energy_of(a, psi)
    step = opts.initial_step
    trace: list[tuple] = []
    stagnated = False
    iterations = 0
    r_phi = r_A = np.inf

    for iterations in range(opts.max_iter + 1):
        grad_a, grad_psi, r_phi, r_A = _gradients(cfg, k)
        sup = float(cfg.phi.norm_sq_site().max())
        trace.append((iterations, total) + terms + (r_phi, r_A, sup))
        if r_phi <= opts.residual_tol and r_A <= opts.residual_tol:
            break
        if iterations == opts.max_iter:
            break

        def descent_direction(ga, gpsi):
            da = (-_smooth(ga, sym, shift)
                  if opts.precondition in ("full", "gauge") else -ga)
            dpsi = (-_smooth(gpsi, sym, shift)
                    if opts.precondition == "full" else -gpsi)
            return da, dpsi

        dir_a, dir_psi = descent_direction(grad_a, grad_psi)
        gd = float(np.sum(grad_a * dir_a)
                   + np.sum((np.conj(grad_psi) * dir_psi).real))
        if gd >= 0:  # can only happen at roundoff level
            stagnated = True
            break

        # Near the minimum the true decrease per step drops below the
        # rounding noise of the energy sum, so the energy can no longer
        # adjudicate the line search.  Two roundoff-proof merits take over:
        # the residual norm (what convergence is measured in) and the
        # preconditioned gradient pairing q = <g, Mg>, whose directional
        # derivative along -Mg is guaranteed non-positive near a minimum.
        slack = 16.0 * np.finfo(np.float64).eps * (1.0 + abs(total))
        r_sq = r_phi ** 2 + r_A ** 2
        q_cur = -gd

        def residual_trial(sv):
            try:
                out = energy_of(a + sv * dir_a, psi + sv * dir_psi)
            except NonFiniteEnergyError:
                return None
            ga, gpsi, rp_new, ra_new = _gradients(out[2], k)
            da, dpsi = descent_direction(ga, gpsi)
            q_new = -float(np.sum(ga * da)
                           + np.sum((np.conj(gpsi) * dpsi).real))
            return (rp_new ** 2 + ra_new ** 2, q_new) + out

        def improves(trial):
            return trial is not None and (trial[0] < r_sq or trial[1] < q_cur)

        s = step
        accepted = False
        trial = None
        while s >= STEP_FLOOR:
            if opts.armijo_slope * s * gd >= -slack:
                break
            try:
                terms_new, total_new, cfg_new = energy_of(
                    a + s * dir_a, psi + s * dir_psi)
            except NonFiniteEnergyError:
                s *= opts.armijo_shrink
                continue
            if total_new <= total + opts.armijo_slope * s * gd:
                accepted = True
                break
            s *= opts.armijo_shrink

        if not accepted and s >= STEP_FLOOR:
            trial = residual_trial(s)
            if improves(trial):
                while s * 2.0 <= 1e6:
                    wider = residual_trial(s * 2.0)
                    if wider is None or wider[0] >= trial[0]:
                        break
                    s *= 2.0
                    trial = wider
                accepted = True
            else:
                while s >= STEP_FLOOR:
                    s *= opts.armijo_shrink
                    trial = residual_trial(s)
                    if improves(trial):
                        accepted = True
                        break
            if accepted:
                terms_new, total_new, cfg_new = trial[2:]

        if not accepted:
            stagnated = True
            break

        a = a + s * dir_a
        psi = psi + s * dir_psi
        terms, total, cfg = terms_new, total_new, cfg_new
        _check_sector(cfg.A, fluxes0)
        step = min(s * 2.0, 1e6)

        if opts.gauge_fix_every and (iterations + 1) % opts.gauge_fix_every == 0:
            cfg = gauge_fix(cfg)
            a = cfg.A.a
            psi = cfg.phi.psi

    converged = bool(r_phi <= opts.residual_tol and r_A <= opts.residual_tol)
    sup, bound, ok = linfty_check(cfg.phi, k)
    return MinimizeReport(
        iterations=iterations,
        converged=converged,
        stagnated=stagnated,
        energy=sw_energy(cfg, k),
        residual_phi=float(r_phi),
        residual_A=float(r_A),
        sup_phi_sq=sup,
        linfty_bound=bound,
        linfty_bound_satisfied=ok,
        trace=trace,
        configuration=cfg,
    )


# ---------------------------------------------------------------------------
# Saddle search (string method over large-gauge loops)


def winding_transform(spec: LatticeSpec, n) -> GaugeTransform:
    """theta_n(x) = 2 pi sum_mu n_mu x_mu / L_mu sampled at the sites."""
    coords = np.indices(spec.dims)
    theta = np.zeros(spec.dims)
    for mu in range(4):
        theta += 2 * np.pi * n[mu] * coords[mu] / spec.dims[mu]
    return GaugeTransform(spec, theta)


def _pack(a: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.concatenate([a.ravel(), psi.real.ravel(), psi.imag.ravel()])


def _image_distance(x, y) -> float:
    da = x[0] - y[0]
    dp = x[1] - y[1]
    return float(np.sqrt(np.sum(da ** 2) + np.sum(np.abs(dp) ** 2)))


def saddle_search(cmin: Configuration, k: ScalarCurvatureField, n,
                  P: int, opts: OptimizerConfig,
                  max_sweeps: int = 300,
                  candidate_tol: float = 1e-5,
                  polish_max_iter: int = 20000) -> SaddleReport:
    """Minimax over the loop generated by the winding-n large gauge transform.

    Two phases: string relaxation of the whole loop (force orthogonal to the
    path tangent, per-image Armijo steps, equal-arclength reparameterization
    every sweep), then a descent polish of the maximum-energy image with the
    smoothing restricted to the gauge sector.  Near the pass the spinor
    contamination must die off faster than it can drag the holonomy, so the
    spinor direction is kept raw; smoothing it would invert that race.
    """
    n = tuple(int(v) for v in n)
    if all(v == 0 for v in n):
        raise ContractibleLoopError("winding vector must be nonzero")
    if P < 4:
        raise ValueError("need at least 4 images")
    spec = cmin.spec
    theta_n = winding_transform(spec, n).theta
    # Harmonic representative of d(theta_n): constant link increments.
    delta_a = np.zeros((4,) + spec.dims)
    for mu in range(4):
        delta_a[mu] += 2 * np.pi * n[mu] / spec.dims[mu]

    ts = np.linspace(0.0, 1.0, P)
    images = [(cmin.A.a + t * delta_a, np.exp(-1j * t * theta_n) * cmin.phi.psi)
              for t in ts]

    sym = _free_laplacian_symbol(spec)
    shift = 1.0
    steps = [opts.initial_step] * P

    def config_of(img) -> Configuration:
        return Configuration(GaugeField(spec, img[0]), SpinorField(spec, img[1]))

    def energy_of(img) -> float:
        total = sum(energy_terms(config_of(img), k))
        if not np.isfinite(total):
            raise NonFiniteEnergyError("energy is not finite")
        return total

    def reparameterize(imgs):
        dists = [0.0]
        for i in range(1, P):
            dists.append(dists[-1] + _image_distance(imgs[i], imgs[i - 1]))
        total = dists[-1]
        if total == 0.0:
            return imgs
        targets = np.linspace(0.0, total, P)
        out = [imgs[0]]
        j = 0
        for i in range(1, P - 1):
            t = targets[i]
            while j < P - 2 and dists[j + 1] < t:
                j += 1
            seg = dists[j + 1] - dists[j]
            w = 0.0 if seg == 0.0 else (t - dists[j]) / seg
            a = (1 - w) * imgs[j][0] + w * imgs[j + 1][0]
            psi = (1 - w) * imgs[j][1] + w * imgs[j + 1][1]
            out.append((a, psi))
        out.append(imgs[P - 1])
        return out

    best_images = [(im[0].copy(), im[1].copy()) for im in images]
    best_max = max(energy_of(im) for im in images)

    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        packed = [_pack(*im) for im in images]
        new_images = [images[0]]
        for i in range(1, P - 1):
            cfg = config_of(images[i])
            grad_a, grad_psi, _, _ = _gradients(cfg, k)
            d_a = -_smooth(grad_a, sym, shift)
            d_psi = -_smooth(grad_psi, sym, shift)
            tan = packed[i + 1] - packed[i - 1]
            tnorm = np.linalg.norm(tan)
            if tnorm > 0:
                tan = tan / tnorm
                d = _pack(d_a, d_psi)
                d = d - float(np.dot(d, tan)) * tan
                na = images[i][0].size
                npsi = images[i][1].size
                d_a = d[:na].reshape(images[i][0].shape)
                d_psi = (d[na:na + npsi] + 1j * d[na + npsi:]).reshape(
                    images[i][1].shape)
            gd = float(np.sum(grad_a * d_a)
                       + np.sum((np.conj(grad_psi) * d_psi).real))
            e0 = energy_of(images[i])
            slack = 16.0 * np.finfo(np.float64).eps * (1.0 + abs(e0))
            s = steps[i]
            moved = images[i]
            while s >= STEP_FLOOR:
                trial = (images[i][0] + s * d_a, images[i][1] + s * d_psi)
                try:
                    ok = energy_of(trial) <= e0 + opts.armijo_slope * s * gd + slack
                except NonFiniteEnergyError:
                    ok = False
                if ok:
                    moved = trial
                    steps[i] = min(s * 2.0, 1e6)
                    break
                s *= opts.armijo_shrink
            new_images.append(moved)
        new_images.append(images[P - 1])
        images = reparameterize(new_images)

        if sweeps % 20 == 0 or sweeps == max_sweeps:
            cur_max = max(energy_of(im) for im in images)
            if cur_max < best_max:
                best_max = cur_max
                best_images = [(im[0].copy(), im[1].copy()) for im in images]

    images = best_images
    energies = [sw_energy(config_of(im), k) for im in images]
    idx = int(np.argmax([e.total for e in energies]))

    # Polish the candidate: Armijo descent onto the pass set.
    polish_opts = OptimizerConfig(
        initial_step=opts.initial_step,
        armijo_shrink=opts.armijo_shrink,
        armijo_slope=opts.armijo_slope,
        residual_tol=candidate_tol,
        max_iter=polish_max_iter,
        precondition="gauge",
    )
    polish = minimize(config_of(images[idx]), k, polish_opts)
    cfg = polish.configuration
    r_phi = polish.residual_phi
    r_A = polish.residual_A

    energies[idx] = polish.energy
    converged = bool(r_phi <= candidate_tol and r_A <= candidate_tol)
    return SaddleReport(
        image_count=P,
        loop_class=n,
        profile=energies,
        max_index=idx,
        residual_phi=float(r_phi),
        residual_A=float(r_A),
        sweeps=sweeps,
        converged=converged,
        candidate=cfg,
    )
