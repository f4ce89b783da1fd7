"""Batch front end: validated JSON configs, command dispatch, artifacts.

Usage: swflow <command> --config <path> [--seed N] [--out DIR]

Commands: check-identities, gradcheck, energy, minimize, saddle, enumerate,
homotopy, convergence-study.

Exit codes: 0 success, 2 configuration error, 3 numeric abort (flux sector
change, non-finite energy, line-search stagnation, ill-quantized flux),
4 non-convergence within the iteration budget.

The environment variable SWFLOW_THREADS caps the worker-thread count of the
numeric backend (default: hardware parallelism).  Reports are deterministic
for a fixed (config, seed) pair except for the "timestamp" field.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_NO_CONVERGENCE = 4

COMMANDS = ("check-identities", "gradcheck", "energy", "minimize", "saddle",
            "enumerate", "homotopy", "convergence-study")

_TOP_KEYS = {"command", "lattice", "flux", "k_field", "amplitude",
             "optimizer", "saddle", "topology", "study", "samples",
             "directions", "seed", "output_dir"}


def _apply_thread_cap():
    cap = os.environ.get("SWFLOW_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _check_keys(d: dict, allowed, where: str):
    from .errors import ConfigError
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _require(d: dict, key: str, where: str):
    from .errors import ConfigError
    if key not in d:
        raise ConfigError(f"missing required key '{key}' in {where}")
    return d[key]


def load_config(path, command=None, seed=None, out=None) -> dict:
    """Read, validate and normalize an experiment config."""
    from .errors import ConfigError
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(cfg, _TOP_KEYS, "config")

    if command is not None:
        if "command" in cfg and cfg["command"] != command:
            raise ConfigError(
                f"config names command '{cfg['command']}' but "
                f"'{command}' was requested")
        cfg["command"] = command
    if cfg.get("command") not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}")
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("seed", 0)
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    if out is not None:
        cfg["output_dir"] = out
    cfg.setdefault("output_dir", ".")

    if "lattice" in cfg:
        lat = cfg["lattice"]
        _check_keys(lat, ("dims", "lengths"), "lattice")
        dims = _require(lat, "dims", "lattice")
        lengths = lat.get("lengths", [1.0] * 4)
        if len(dims) != 4 or len(lengths) != 4:
            raise ConfigError("lattice dims and lengths must have 4 entries")
        lat["lengths"] = lengths
    cfg.setdefault("flux", [0] * 6)
    if len(cfg["flux"]) != 6 or any(not isinstance(v, int) for v in cfg["flux"]):
        raise ConfigError("flux must be 6 integers")
    kf = cfg.setdefault("k_field", {"constant": 0.0})
    _check_keys(kf, ("constant", "path"), "k_field")
    if ("constant" in kf) == ("path" in kf):
        raise ConfigError("k_field needs exactly one of 'constant' or 'path'")
    amp = cfg.setdefault("amplitude", 0.1)
    if not isinstance(amp, (int, float)) or amp < 0:
        raise ConfigError("amplitude must be a non-negative number")
    if "optimizer" in cfg:
        from .optimizer import OptimizerConfig
        allowed = tuple(OptimizerConfig.__dataclass_fields__)
        _check_keys(cfg["optimizer"], allowed, "optimizer")
    if "saddle" in cfg:
        _check_keys(cfg["saddle"],
                    ("winding", "images", "max_sweeps", "candidate_tol"),
                    "saddle")
    if "topology" in cfg:
        _check_keys(cfg["topology"],
                    ("Q", "w", "profile", "radius", "n", "cell_cap"),
                    "topology")
        if "profile" in cfg["topology"]:
            _check_keys(cfg["topology"]["profile"],
                        ("H1", "H2", "chi", "sigma", "vol", "k_min"),
                        "topology.profile")
    if "study" in cfg:
        _check_keys(cfg["study"], ("sizes", "reference"), "study")
    return cfg


# ---------------------------------------------------------------------------
# Config -> domain objects


def _lattice_spec(cfg):
    from .errors import ConfigError
    from .lattice import LatticeSpec
    if "lattice" not in cfg:
        raise ConfigError(f"command '{cfg['command']}' needs a lattice section")
    lat = cfg["lattice"]
    try:
        return LatticeSpec(tuple(lat["dims"]), tuple(lat["lengths"]))
    except ValueError as e:
        raise ConfigError(str(e))


def _k_field(cfg, spec):
    import numpy as np
    from .errors import ConfigError
    from .fields import ScalarCurvatureField
    kf = cfg["k_field"]
    if "constant" in kf:
        return ScalarCurvatureField.constant(spec, float(kf["constant"]))
    try:
        values = np.load(kf["path"])
    except OSError as e:
        raise ConfigError(f"cannot read k_field file: {e}")
    if values.shape != spec.dims:
        raise ConfigError(
            f"k_field file has shape {values.shape}, lattice is {spec.dims}")
    return ScalarCurvatureField(spec, values)


def seed_initial(cfg, spec):
    """Constant-flux background plus seeded random perturbations."""
    import numpy as np
    from .errors import ConfigError
    from .fields import (Configuration, GaugeField, SpinorField,
                         constant_flux_field, plaquette_angles)
    m = tuple(cfg["flux"])
    base = constant_flux_field(spec, m)
    angles = plaquette_angles(base)
    wrapped = angles - 2 * np.pi * np.round(angles / (2 * np.pi))
    worst = float(np.max(np.abs(wrapped)))
    if worst >= 0.5 * np.pi:
        raise ConfigError(
            f"flux {m} drives plaquette angles to {worst:.3f} rad on this "
            "lattice; use a finer lattice for branch safety")
    rng = np.random.default_rng(cfg["seed"])
    amp = float(cfg["amplitude"])
    a = base.a + amp * rng.normal(size=(4,) + spec.dims)
    psi = amp * (rng.normal(size=(2,) + spec.dims)
                 + 1j * rng.normal(size=(2,) + spec.dims))
    return Configuration(GaugeField(spec, a), SpinorField(spec, psi))


def _profile(cfg):
    from .errors import ConfigError
    from .topology import AbelianGroup, CohomologyProfile
    top = cfg.get("topology")
    if not top or "profile" not in top:
        raise ConfigError(f"command '{cfg['command']}' needs topology.profile")
    p = top["profile"]

    def group(d, name):
        if not isinstance(d, dict):
            raise ConfigError(f"topology.profile.{name} must be an object")
        _check_keys(d, ("free_rank", "torsion"), f"topology.profile.{name}")
        return AbelianGroup(d.get("free_rank", 0), tuple(d.get("torsion", ())))

    try:
        return CohomologyProfile(
            H1=group(_require(p, "H1", "topology.profile"), "H1"),
            H2=group(_require(p, "H2", "topology.profile"), "H2"),
            chi=int(p.get("chi", 0)),
            sigma=int(p.get("sigma", 0)),
            vol=float(p.get("vol", 1.0)),
            k_min=float(p.get("k_min", 0.0)),
        )
    except ValueError as e:
        raise ConfigError(str(e))


def _intersection_form(cfg):
    import numpy as np
    from .errors import ConfigError
    from .topology import IntersectionForm
    top = cfg.get("topology", {})
    if "Q" not in top:
        raise ConfigError(f"command '{cfg['command']}' needs topology.Q")
    Q = np.asarray(top["Q"], dtype=np.int64)
    w = np.asarray(top.get("w", [0] * Q.shape[0]), dtype=np.int64)
    try:
        return IntersectionForm(Q, w)
    except ValueError as e:
        raise ConfigError(str(e))


def _optimizer(cfg):
    from .errors import ConfigError
    from .optimizer import OptimizerConfig
    try:
        return OptimizerConfig(**cfg.get("optimizer", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e))


def _group_json(g):
    return {"free_rank": g.free_rank, "torsion": list(g.torsion),
            "name": str(g)}


# ---------------------------------------------------------------------------
# Commands


def _cmd_check_identities(cfg):
    import numpy as np
    from .fields import SpinorField
    from .lattice import Cochain
    from .functional import identity_suite
    spec = _lattice_spec(cfg)
    samples = int(cfg.get("samples", 100))
    rng = np.random.default_rng(cfg["seed"])
    from .lattice import selfdual_project
    worst = {"pairing": 0.0, "norm": 0.0, "eigen": 0.0}
    for _ in range(samples):
        phi = SpinorField(spec, rng.normal(size=(2,) + spec.dims)
                          + 1j * rng.normal(size=(2,) + spec.dims))
        F = selfdual_project(
            Cochain(spec, 2, rng.normal(size=(6,) + spec.dims)), +1)
        rep = identity_suite(phi, F)
        worst["pairing"] = max(worst["pairing"], rep.pairing_deviation)
        worst["norm"] = max(worst["norm"], rep.norm_deviation)
        worst["eigen"] = max(worst["eigen"], rep.eigen_deviation)
    results = {"samples": samples, "max_deviation": max(worst.values()),
               **{f"{k}_deviation": v for k, v in worst.items()}}
    return results, None, None, EXIT_OK


def _cmd_gradcheck(cfg):
    import numpy as np
    from .fields import Configuration, GaugeField, SpinorField
    from .functional import el_residual_A, el_residual_phi, sw_energy
    spec = _lattice_spec(cfg)
    k = _k_field(cfg, spec)
    c = seed_initial(cfg, spec)
    directions = int(cfg.get("directions", 40))
    rng = np.random.default_rng(cfg["seed"] + 1)
    vol = spec.cell_volume
    h = spec.spacings
    el_A = el_residual_A(c)
    el_phi = el_residual_phi(c, k)
    eps = 1e-5
    worst = 0.0
    for _ in range(directions):
        da = rng.normal(size=(4,) + spec.dims)
        dpsi = (rng.normal(size=(2,) + spec.dims)
                + 1j * rng.normal(size=(2,) + spec.dims))
        analytic = (vol * 0.5 * float(np.sum(
            np.stack([el_A.values[mu] / h[mu] for mu in range(4)]) * da))
            + 2.0 * vol * float(np.sum((el_phi.psi * np.conj(dpsi)).real)))

        def at(t):
            cc = Configuration(GaugeField(spec, c.A.a + t * da),
                               SpinorField(spec, c.phi.psi + t * dpsi))
            return sw_energy(cc, k).total

        fd = (at(eps) - at(-eps)) / (2 * eps)
        scale = max(abs(analytic), abs(fd), 1e-30)
        worst = max(worst, abs(analytic - fd) / scale)
    return ({"directions": directions, "max_relative_error": worst},
            None, None, EXIT_OK)


def _cmd_energy(cfg):
    from .functional import residual_norms, sw_energy
    spec = _lattice_spec(cfg)
    k = _k_field(cfg, spec)
    c = seed_initial(cfg, spec)
    eb = sw_energy(c, k)
    r_phi, r_A = residual_norms(c, k)
    results = {"energy": eb.to_dict(), "residual_phi": r_phi,
               "residual_A": r_A}
    return results, None, (c, cfg["flux"]), EXIT_OK


def _cmd_minimize(cfg):
    from .optimizer import minimize
    spec = _lattice_spec(cfg)
    k = _k_field(cfg, spec)
    c0 = seed_initial(cfg, spec)
    rep = minimize(c0, k, _optimizer(cfg))
    results = {
        "iterations": rep.iterations,
        "converged": rep.converged,
        "stagnated": rep.stagnated,
        "energy": rep.energy.to_dict(),
        "residual_phi": rep.residual_phi,
        "residual_A": rep.residual_A,
        "sup_phi_sq": rep.sup_phi_sq,
        "linfty_bound": rep.linfty_bound,
        "linfty_bound_satisfied": rep.linfty_bound_satisfied,
    }
    if rep.converged:
        status = EXIT_OK
    elif rep.stagnated:
        status = EXIT_NUMERIC
    else:
        status = EXIT_NO_CONVERGENCE
    return results, rep.trace, (rep.configuration, cfg["flux"]), status


def _cmd_saddle(cfg):
    from .errors import ConfigError
    from .optimizer import minimize, saddle_search
    spec = _lattice_spec(cfg)
    k = _k_field(cfg, spec)
    sad_cfg = cfg.get("saddle", {})
    winding = tuple(sad_cfg.get("winding", (1, 0, 0, 0)))
    if len(winding) != 4:
        raise ConfigError("saddle.winding must have 4 entries")
    images = int(sad_cfg.get("images", 16))
    opts = _optimizer(cfg)
    base = minimize(seed_initial(cfg, spec), k, opts)
    if not base.converged:
        return ({"error": "sector minimization did not converge"},
                base.trace, None, EXIT_NO_CONVERGENCE)
    kwargs = {}
    if "max_sweeps" in sad_cfg:
        kwargs["max_sweeps"] = int(sad_cfg["max_sweeps"])
    if "candidate_tol" in sad_cfg:
        kwargs["candidate_tol"] = float(sad_cfg["candidate_tol"])
    rep = saddle_search(base.configuration, k, winding, images, opts, **kwargs)
    results = {
        "loop_class": list(rep.loop_class),
        "image_count": rep.image_count,
        "sweeps": rep.sweeps,
        "converged": rep.converged,
        "max_index": rep.max_index,
        "sector_minimum": base.energy.total,
        "candidate_energy": rep.profile[rep.max_index].total,
        "residual_phi": rep.residual_phi,
        "residual_A": rep.residual_A,
        "profile": [e.to_dict() for e in rep.profile],
    }
    status = EXIT_OK if rep.converged else EXIT_NO_CONVERGENCE
    return results, None, (rep.candidate, cfg["flux"]), status


def _cmd_enumerate(cfg):
    from .topology import spinc_enumerate
    Q = _intersection_form(cfg)
    p = _profile(cfg)
    top = cfg["topology"]
    radius = int(_require(top, "radius", "topology"))
    kwargs = {}
    if "cell_cap" in top:
        kwargs["cell_cap"] = int(top["cell_cap"])
    classes = spinc_enumerate(Q, p, radius, **kwargs)
    from .topology import attainment_bound
    results = {"radius": radius, "attainment_bound": attainment_bound(p),
               "count": len(classes),
               "classes": [list(c.alpha) for c in classes]}
    return results, None, None, EXIT_OK


def _cmd_homotopy(cfg):
    from .errors import ConfigError
    from .topology import homotopy_groups, pi_zero
    p = _profile(cfg)
    ns = cfg["topology"].get("n", [1, 2, 3])
    if isinstance(ns, int):
        ns = [ns]
    rows = []
    for n in ns:
        if n < 1:
            raise ConfigError("homotopy requires n >= 1; pi_0 is always reported")
        rows.append({"n": int(n), "group": _group_json(homotopy_groups(p, n))})
    results = {"pi_n": rows, "pi_zero": _group_json(pi_zero(p))}
    lines = ["  n | pi_n"] + [f"  {r['n']} | {r['group']['name']}" for r in rows]
    lines.append(f"  0 | {results['pi_zero']['name']} (components)")
    print("\n".join(lines))
    return results, None, None, EXIT_OK


def _cmd_convergence_study(cfg):
    from .errors import ConfigError
    from .lattice import LatticeSpec
    from .optimizer import minimize
    study = cfg.get("study")
    if not study or "sizes" not in study:
        raise ConfigError("convergence-study needs study.sizes")
    sizes = [int(n) for n in study["sizes"]]
    lengths = tuple(cfg["lattice"]["lengths"]) if "lattice" in cfg \
        else (1.0,) * 4
    rows = []
    all_ok = True
    for n in sizes:
        spec = LatticeSpec((n,) * 4, lengths)
        k = _k_field(cfg, spec)
        rep = minimize(seed_initial(cfg, spec), k, _optimizer(cfg))
        all_ok = all_ok and rep.converged
        rows.append({"N": n, "total": rep.energy.total,
                     "converged": rep.converged,
                     "sup_phi_sq": rep.sup_phi_sq,
                     "residual_phi": rep.residual_phi,
                     "residual_A": rep.residual_A})
    results = {"rows": rows}
    if "reference" in study:
        ref = float(study["reference"])
        errors = [abs(r["total"] - ref) for r in rows]
        results["reference"] = ref
        results["errors"] = errors
        orders = []
        import numpy as np
        floor = 1e-10
        for (n1, e1), (n2, e2) in zip(zip(sizes, errors),
                                      zip(sizes[1:], errors[1:])):
            if e1 <= floor and e2 <= floor:
                orders.append(float("inf"))
            else:
                orders.append(float(np.log(max(e1, floor) / max(e2, floor))
                                    / np.log(n2 / n1)))
        results["observed_orders"] = orders
    status = EXIT_OK if all_ok else EXIT_NO_CONVERGENCE
    return results, None, None, status


_DISPATCH = {
    "check-identities": _cmd_check_identities,
    "gradcheck": _cmd_gradcheck,
    "energy": _cmd_energy,
    "minimize": _cmd_minimize,
    "saddle": _cmd_saddle,
    "enumerate": _cmd_enumerate,
    "homotopy": _cmd_homotopy,
    "convergence-study": _cmd_convergence_study,
}


def run(cfg: dict) -> int:
    """Execute a validated config and write artifacts to its output_dir."""
    import datetime
    from . import __version__
    import numpy as np
    from .errors import (IllQuantizedFluxError, NonFiniteEnergyError,
                         SectorChangeError)
    from .optimizer import TRACE_COLUMNS
    from .snapshots import save_snapshot, write_trace_csv

    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    try:
        results, trace, snapshot, status = _DISPATCH[cfg["command"]](cfg)
    except (SectorChangeError, NonFiniteEnergyError,
            IllQuantizedFluxError) as e:
        report = {"command": cfg["command"], "config": cfg,
                  "error": {"type": type(e).__name__, "message": str(e)}}
        _write_report(outdir, report)
        print(json.dumps(report["error"]), file=sys.stderr)
        return EXIT_NUMERIC

    report = {
        "command": cfg["command"],
        "config": cfg,
        "results": results,
        "versions": {"swflow": __version__, "numpy": np.__version__,
                     "python": ".".join(map(str, sys.version_info[:3]))},
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _write_report(outdir, report)
    if trace is not None:
        write_trace_csv(os.path.join(outdir, "trace.csv"),
                        TRACE_COLUMNS, trace)
    if snapshot is not None:
        c, flux = snapshot
        save_snapshot(os.path.join(outdir, "final.swlatt"), c, flux)
    return status


def _write_report(outdir, report):
    with open(os.path.join(outdir, "report.json"), "w", encoding="utf-8") as f:
        json.dump(report, f, sort_keys=True, indent=2)
        f.write("\n")


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = argparse.ArgumentParser(
        prog="swflow",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True,
                        help="path to the JSON experiment config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=None,
                        help="override the config output directory")
    args = parser.parse_args(argv)

    from .errors import ConfigError
    try:
        cfg = load_config(args.config, command=args.command,
                          seed=args.seed, out=args.out)
        return run(cfg)
    except ConfigError as e:
        print(json.dumps({"error": {"type": "ConfigError",
                                    "message": str(e)}}), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
