"""Batch front door: JSON run configs in, tables and reports out.

    hyperres <task> --config cfg.json [--threads N] [--out DIR]

Tasks: phase, resonances, heat, invariants, poisson-check, kernels, verify.
Configs carry a versioned schema; unknown keys are rejected with their path
(silent tolerance-name typos are the main operator hazard).  Tolerance
entries may be overridden from the environment as HYPERRES_<NAME>.  Outputs
are deterministic for a fixed config and seed; every run writes a
manifest.json with the config echo and sha256 checksums of the emitted
files.

Exit codes: 0 success, 2 validation, 3 numerical budget, 4 internal
inconsistency.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import radial
from .errors import (HyperresError, InternalConsistencyError,
                     NumericalBudgetError, ValidationError)
from .kernels import kernel_table
from .potentials import HyperbolicDim, RadialPotential
from .resonances import (Disk, SearchRegion, counting_bound_constant,
                         counting_function, find_resonances,
                         probe_critical_multiplicity)
from .scattering import (default_xi_grid, levinson_constant,
                         phase_asymptotics_fit, phase_coefficient_target,
                         relative_determinant, scattering_phase, tau_at_half)
from .traces import (cosine_window, eigenvalue_oracle, heat_smallt_fit,
                     heat_trace, poisson_pairing, wave_invariants)

TASKS = ("phase", "resonances", "heat", "invariants", "poisson-check",
         "kernels", "verify")

# allowed keys per config block; None marks a required key
_SCHEMA = {
    "schema_version": None,
    "task": None,
    "dimension": None,
    "seed": "optional",
    "threads": "optional",
    "L_max": "optional",
    "potential": {"kind": None, "amplitude": "optional", "radius": "optional",
                  "samples": "optional"},
    "xi_grid": {"xi_max": None, "fine_step": "optional", "fine_until": "optional",
                "coarse_step": "optional"},
    "t_grid": {"t_min": None, "t_max": None, "points": "optional"},
    "search": {"re": None, "im": None, "exclusions": "optional"},
    "kernel": {"which": None, "s": "optional", "xi": "optional",
               "r_min": "optional", "r_max": "optional", "points": "optional"},
    "test_function": {"t0": "optional", "t1": "optional", "power": "optional"},
    "tolerances": {"specfun": "optional", "determinant_tail": "optional",
                   "heat_tail": "optional", "fit_k": "optional"},
    "output": {"dir": "optional", "formats": "optional"},
    "criteria": "optional",
}

_REQUIRED_BLOCKS = {
    "phase": ("xi_grid",),
    "resonances": ("search",),
    "heat": ("xi_grid", "t_grid"),
    "invariants": (),
    "poisson-check": ("xi_grid", "search"),
    "kernels": ("kernel",),
    "verify": (),
}


@dataclass
class RunConfig:
    task: str
    dimension: int
    potential: RadialPotential
    raw: dict
    seed: int = 0
    threads: int = 1
    L_max: object = "auto"
    tolerances: dict = field(default_factory=dict)
    out_dir: str = "."
    formats: tuple = ("csv", "json")


def _check_keys(block: dict, schema: dict, path: str):
    for key in block:
        if key not in schema:
            raise ValidationError(f"unknown config key {path}{key!r}")
        sub = schema[key]
        if isinstance(sub, dict):
            if not isinstance(block[key], dict):
                raise ValidationError(f"config key {path}{key!r} must be an object")
            _check_keys(block[key], sub, f"{path}{key}.")
    for key, marker in schema.items():
        if marker is None and key not in block:
            raise ValidationError(f"missing required config key {path}{key!r}")


def _env_overrides(tolerances: dict) -> dict:
    out = dict(tolerances)
    for key, val in os.environ.items():
        if key.startswith("HYPERRES_"):
            name = key[len("HYPERRES_"):].lower()
            try:
                out[name] = float(val)
            except ValueError:
                raise ValidationError(f"environment override {key}={val!r} is not a number")
    return out


def load_config(path: str, task: str = None) -> RunConfig:
    """Parse and validate a run config; task from the CLI must match."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ValidationError("config root must be a JSON object")
    _check_keys(raw, _SCHEMA, "")
    if raw.get("schema_version") != 1:
        raise ValidationError(f"unsupported schema_version {raw.get('schema_version')!r}")
    if raw["task"] not in TASKS:
        raise ValidationError(f"unknown task {raw['task']!r}; choose from {TASKS}")
    if task is not None and raw["task"] != task:
        raise ValidationError(
            f"config task {raw['task']!r} does not match subcommand {task!r}")
    dimension = raw["dimension"]
    if not isinstance(dimension, int) or dimension < 2:
        raise ValidationError("dimension must be an integer >= 2 (the space is H^{n+1})")
    for block in _REQUIRED_BLOCKS[raw["task"]]:
        if block not in raw:
            raise ValidationError(f"task {raw['task']!r} requires the {block!r} block")
    pot_cfg = raw.get("potential", {"kind": "zero"})
    samples = pot_cfg.get("samples")
    potential = RadialPotential(pot_cfg["kind"],
                                amplitude=float(pot_cfg.get("amplitude", 1.0)),
                                radius=float(pot_cfg.get("radius", 1.0)),
                                samples=tuple(map(tuple, samples)) if samples else None)
    out_cfg = raw.get("output", {})
    return RunConfig(task=raw["task"], dimension=dimension, potential=potential,
                     raw=raw, seed=int(raw.get("seed", 0)),
                     threads=int(raw.get("threads", 1) or 1),
                     L_max=raw.get("L_max", "auto"),
                     tolerances=_env_overrides(raw.get("tolerances", {})),
                     out_dir=out_cfg.get("dir", "."),
                     formats=tuple(out_cfg.get("formats", ("csv", "json"))))


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _fmt(x):
    return float(f"{x:.12g}")


def _xi_grid_from(cfg: RunConfig):
    g = cfg.raw["xi_grid"]
    return default_xi_grid(float(g["xi_max"]), float(g.get("fine_step", 0.01)),
                           float(g.get("fine_until", 1.0)),
                           float(g.get("coarse_step", 0.1)))


def _search_region_from(cfg: RunConfig) -> SearchRegion:
    s = cfg.raw["search"]
    excl = [Disk(complex(d["center"][0], d["center"][1]), float(d["radius"]))
            for d in s.get("exclusions", [])]
    return SearchRegion(tuple(map(float, s["re"])), tuple(map(float, s["im"])), excl)


def _phase_products(cfg: RunConfig, out):
    dim = HyperbolicDim(cfg.dimension - 1)
    grid = scattering_phase(cfg.potential, dim, _xi_grid_from(cfg),
                            L_max=cfg.L_max, threads=cfg.threads)
    path = os.path.join(out, "phase.csv")
    grid.to_csv(path)
    wi = wave_invariants(cfg.potential, dim)
    K = int(cfg.tolerances.get("fit_k", 2))
    summary = {"L_max": grid.L_max, "sigma_end": _fmt(grid.sigma[-1]),
               "tau_at_half": _fmt(tau_at_half(cfg.potential, dim).real)}
    try:
        fit = phase_asymptotics_fit(grid, dim, K=K)
        summary["fit_coefficients"] = [_fmt(c) for c in fit.coefficients]
        summary["fit_errors"] = [_fmt(e) for e in fit.errors]
        summary["targets"] = [_fmt(phase_coefficient_target(dim, k, wi.a[k]))
                              for k in (1, 2)]
        lev = levinson_constant(grid, dim, fit.coefficients)
        summary["levinson_estimate"] = _fmt(lev.value)
        summary["levinson_drift"] = _fmt(lev.drift)
    except HyperresError as exc:
        summary["fit_error"] = str(exc)
    _write_json(os.path.join(out, "phase.json"), summary)
    return [path, os.path.join(out, "phase.json")], grid


def _run_task(cfg: RunConfig, out: str):
    dim = HyperbolicDim(cfg.dimension - 1)
    files = []
    if cfg.task == "invariants":
        wi = wave_invariants(cfg.potential, dim)
        path = os.path.join(out, "invariants.json")
        _write_json(path, {"intV": _fmt(wi.intV), "intV2": _fmt(wi.intV2),
                           "a1": _fmt(wi.a[1]), "a2": _fmt(wi.a[2])})
        files.append(path)
    elif cfg.task == "phase":
        files, _ = _phase_products(cfg, out)
    elif cfg.task == "heat":
        phase_files, grid = _phase_products(cfg, out)
        files.extend(phase_files)
        t = cfg.raw["t_grid"]
        tv = np.geomspace(float(t["t_min"]), float(t["t_max"]),
                          int(t.get("points", 40)))
        eigs = []
        for l in range(3):
            eigs.extend(eigenvalue_oracle(cfg.potential, dim, l))
        fit = phase_asymptotics_fit(grid, dim, K=2)
        curve = heat_trace(grid, dim, eigs, 0, tv,
                           poly_coefficients=fit.coefficients,
                           tail_tol=cfg.tolerances.get("heat_tail", 1e-9))
        path = os.path.join(out, "heat.csv")
        curve.to_csv(path)
        files.append(path)
        hf = heat_smallt_fit(curve, dim, K=2)
        wi = wave_invariants(cfg.potential, dim)
        path = os.path.join(out, "heat.json")
        _write_json(path, {
            "fit_coefficients": [_fmt(c) for c in hf.coefficients],
            "targets": [_fmt(wi.a[k] / math.sqrt(math.pi)) for k in (1, 2)],
            "eigenvalues": [_fmt(v) for v in eigs]})
        files.append(path)
    elif cfg.task == "resonances":
        region = _search_region_from(cfg)
        rl = find_resonances(dim, cfg.potential, region, L_max=cfg.L_max,
                             seed=cfg.seed)
        jpath = os.path.join(out, "resonances.json")
        cpath = os.path.join(out, "resonances.csv")
        rl.to_json(jpath)
        rl.to_csv(cpath)
        files.extend([jpath, cpath])
        probe = probe_critical_multiplicity(dim, cfg.potential)
        spath = os.path.join(out, "resonances_summary.json")
        radii = [1.0, 2.0, 4.0, 6.0]
        _write_json(spath, {
            "total_entries": len(rl.entries),
            "counting": {str(r): counting_function(rl, dim, r) for r in radii},
            "counting_constant": _fmt(counting_bound_constant(rl, dim)),
            "critical_probe_value": probe,
            "conjugate_symmetric": rl.check_conjugate_pairs(),
            "rejected": len(rl.rejected)})
        files.append(spath)
    elif cfg.task == "poisson-check":
        phase_files, grid = _phase_products(cfg, out)
        files.extend(phase_files)
        region = _search_region_from(cfg)
        rl = find_resonances(dim, cfg.potential, region, L_max=cfg.L_max,
                             seed=cfg.seed)
        eigs = []
        for l in range(3):
            eigs.extend(eigenvalue_oracle(cfg.potential, dim, l))
        m_half = probe_critical_multiplicity(dim, cfg.potential)
        tf = cfg.raw.get("test_function", {})
        psi = cosine_window(float(tf.get("t0", 1.0)), float(tf.get("t1", 3.0)),
                            int(tf.get("power", 3)))
        r_max = min(abs(region.re_range[0] - dim.n / 2.0),
                    abs(region.re_range[1] - dim.n / 2.0),
                    abs(region.im_range[0]), abs(region.im_range[1]))
        report = poisson_pairing(dim, grid, eigs, m_half, rl, psi, r_max=r_max)
        path = os.path.join(out, "pairing.json")
        data = report.to_json_dict()
        data = {k: (_fmt(v) if isinstance(v, float) else v) for k, v in data.items()}
        data["eigenvalues"] = [_fmt(v) for v in eigs]
        _write_json(path, data)
        files.append(path)
    elif cfg.task == "kernels":
        k = cfg.raw["kernel"]
        r = np.linspace(float(k.get("r_min", 0.05)), float(k.get("r_max", 3.0)),
                        int(k.get("points", 60)))
        if k["which"] == "resolvent":
            s = complex(k["s"][0], k["s"][1])
            rr, vals = kernel_table(dim, r, s=s)
        elif k["which"] == "spectral":
            rr, vals = kernel_table(dim, r, xi=float(k["xi"]))
        else:
            raise ValidationError(f"kernel.which must be resolvent|spectral, got {k['which']!r}")
        path = os.path.join(out, "kernel.csv")
        with open(path, "w", newline="") as fh:
            fh.write("r,re,im\n")
            for rv, v in zip(rr, vals):
                fh.write(f"{rv:.12g},{v.real:.12g},{v.imag:.12g}\n")
        files.append(path)
    elif cfg.task == "verify":
        from .acceptance import run_all
        results = run_all(criteria=cfg.raw.get("criteria"), threads=cfg.threads)
        path = os.path.join(out, "acceptance.json")
        _write_json(path, {"criteria": [r.to_json_dict() for r in results],
                           "all_passed": all(r.passed for r in results)})
        files.append(path)
        if not all(r.passed for r in results):
            return files, 3
    return files, 0


def run(cfg: RunConfig) -> int:
    """Execute a validated config; returns the process exit status."""
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    try:
        files, status = _run_task(cfg, out)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except InternalConsistencyError as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return 4
    except NumericalBudgetError as exc:
        print(f"numerical budget exceeded: {exc}", file=sys.stderr)
        return 3
    manifest = {"schema_version": 1, "config": cfg.raw, "files": {}}
    for path in files:
        with open(path, "rb") as fh:
            manifest["files"][os.path.basename(path)] = hashlib.sha256(fh.read()).hexdigest()
    _write_json(os.path.join(out, "manifest.json"), manifest)
    for path in files:
        print(f"wrote {path}")
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hyperres",
        description="Resonances, scattering phases and trace checks on H^{n+1}")
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("--config", required=(task != "verify"),
                       help="JSON run configuration")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        if args.task == "verify" and args.config is None:
            cfg = RunConfig(task="verify", dimension=3,
                            potential=RadialPotential("zero"),
                            raw={"schema_version": 1, "task": "verify", "dimension": 3})
        else:
            cfg = load_config(args.config, args.task)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    if args.threads is not None:
        cfg.threads = max(1, args.threads)
    elif cfg.threads == 1:
        cfg.threads = os.cpu_count() or 1
    if args.out is not None:
        cfg.out_dir = args.out
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
