"""Command-line front end: ``simulate``, ``verify`` and ``scenarios``.

Exit codes: 0 ok, 1 verification failure, 2 usage/config error, 3 numerical
failure.
"""

import argparse
import configparser
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from . import dynamics as dyn
from . import models, scenarios, verify
from .models import CoContactState, ContactState, SpecError

FORMULATIONS = ("eph", "lpj", "eph-ext", "lpj-ext", "unreduced")
INTEGRATORS = ("euler", "rk4")
LIE_INTEGRATORS = ("lie-euler", "rkmk4")
FORMATS = ("csv", "json")
MAX_STEPS = 10**8

VECTOR_KEYS = {"chi": 3, "alpha0": 3, "xi0": 3, "mu0": 3}
SCALAR_KEYS = ("gamma", "mgl", "z0")
OVERRIDE_KEYS = ("inertia",) + tuple(VECTOR_KEYS) + SCALAR_KEYS


class ConfigError(ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass
class RunConfig:
    scenario: str = "damped-rigid-body"
    overrides: dict = field(default_factory=dict)
    formulation: str = "lpj"
    dt: float = 1e-3
    t_final: float = 5.0
    integrator: str = "rk4"
    lie_integrator: str = "rkmk4"
    reconstruct: bool = False
    output_path: str = "-"
    format: str = "csv"
    seed: int = 0

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    def validate(self):
        if self.scenario not in scenarios.REGISTRY:
            raise ConfigError("scenario", f"unknown scenario {self.scenario!r}")
        for key, allowed in (("formulation", FORMULATIONS), ("integrator", INTEGRATORS),
                             ("lie_integrator", LIE_INTEGRATORS), ("format", FORMATS)):
            if getattr(self, key) not in allowed:
                raise ConfigError(key, f"must be one of {', '.join(allowed)}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("dt", "must be > 0")
        if not (np.isfinite(self.t_final) and self.t_final > 0):
            raise ConfigError("t_final", "must be > 0")
        if self.t_final / self.dt > MAX_STEPS:
            raise ConfigError("t_final", f"t_final/dt exceeds {MAX_STEPS:g}")
        if self.n_steps < 1:
            raise ConfigError("dt", "larger than t_final")
        if self.seed < 0:
            raise ConfigError("seed", "must be unsigned")
        return self


# --- parsing -----------------------------------------------------------------------

def _floats(key, text):
    try:
        return tuple(float(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(key, f"not a list of numbers: {text!r}") from None


def parse_override(key, text):
    key = key.strip().replace("-", "_")
    if key == "inertia":
        vals = _floats(key, text)
        if len(vals) == 3:
            return vals
        if len(vals) == 9:
            return tuple(map(tuple, np.reshape(vals, (3, 3))))
        raise ConfigError(key, "needs 3 (diagonal) or 9 (row-major) numbers")
    if key in VECTOR_KEYS:
        vals = _floats(key, text)
        if len(vals) != 3:
            raise ConfigError(key, "needs 3 numbers")
        return vals
    if key in SCALAR_KEYS:
        vals = _floats(key, text)
        if len(vals) != 1:
            raise ConfigError(key, "needs a single number")
        return vals[0]
    raise ConfigError(key, f"unknown override; allowed: {', '.join(OVERRIDE_KEYS)}")


def _bool(key, text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"not a boolean: {text!r}")


def _number(key, text, kind=float):
    try:
        return kind(text)
    except (TypeError, ValueError):
        raise ConfigError(key, f"not a valid {kind.__name__}: {text!r}") from None


_RUN_KEYS = {
    "scenario": str, "formulation": str, "dt": float, "t_final": float, "integrator": str,
    "lie_integrator": str, "reconstruct": bool, "output": str, "format": str, "seed": int,
}


def _apply_run_value(cfg, key, value):
    key = key.replace("-", "_")
    if key not in _RUN_KEYS:
        raise ConfigError(key, "unknown key in [run]")
    kind = _RUN_KEYS[key]
    if kind is bool:
        value = _bool(key, value)
    elif kind in (float, int):
        value = _number(key, value, kind)
    setattr(cfg, "output_path" if key == "output" else key, value)


def load_config_file(path, cfg=None):
    """Read a ``key = value`` file with ``[run]`` and ``[overrides]`` sections."""
    cfg = cfg or RunConfig()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError("config", str(exc)) from None
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None
    for section in parser.sections():
        if section not in ("run", "overrides"):
            raise ConfigError(section, "unknown section (expected [run] or [overrides])")
    if parser.has_section("run"):
        for key, value in parser.items("run"):
            _apply_run_value(cfg, key, value)
    if parser.has_section("overrides"):
        for key, value in parser.items("overrides"):
            cfg.overrides[key.replace("-", "_")] = parse_override(key, value)
    return cfg


# --- simulate ----------------------------------------------------------------------

_STATE_COLUMNS = {
    "eph": ["xi1", "xi2", "xi3", "z"],
    "lpj": ["mu1", "mu2", "mu3", "z"],
    "eph-ext": ["xi1", "xi2", "xi3", "z", "alpha1", "alpha2", "alpha3"],
    "lpj-ext": ["mu1", "mu2", "mu3", "z", "alpha1", "alpha2", "alpha3"],
    "unreduced": ["xi1", "xi2", "xi3", "z"],
}
_DIAG_COLUMNS = {
    "eph": ["lagrangian", "hamiltonian", "mu_norm"],
    "lpj": ["hamiltonian", "mu_norm"],
    "eph-ext": ["lagrangian", "hamiltonian", "mu_norm", "alpha_norm"],
    "lpj-ext": ["hamiltonian", "mu_norm", "alpha_norm"],
    "unreduced": ["lagrangian", "hamiltonian", "mu_norm", "alpha_norm"],
}
_GROUP_COLUMNS = [f"r{i}{j}" for i in range(1, 4) for j in range(1, 4)] + ["ortho_drift"]

_FIELDS = {
    "eph": dyn.eph_field,
    "lpj": dyn.lpj_field,
    "eph-ext": dyn.eph_ext_field,
    "lpj-ext": dyn.lpj_ext_field,
    "unreduced": dyn.unreduced_herglotz_field,
}


def _initial_state(spec, s, formulation):
    xi = s.xi if isinstance(s, ContactState) else spec.inertia_inv @ s.mu
    mu = spec.inertia @ xi if isinstance(s, ContactState) else s.mu
    alpha = s.alpha if s.alpha is not None else spec.g0.T @ spec.alpha0
    return {
        "eph": lambda: ContactState(xi, s.z),
        "lpj": lambda: CoContactState(mu, s.z),
        "eph-ext": lambda: ContactState(xi, s.z, alpha),
        "lpj-ext": lambda: CoContactState(mu, s.z, alpha),
        "unreduced": lambda: dyn.FullState(spec.g0, ContactState(xi, s.z)),
    }[formulation]()


def run_simulation(cfg):
    """Run ``cfg`` and return ``(columns, rows)``; raises ConfigError / NumericalError."""
    cfg.validate()
    try:
        spec, s = scenarios.build(cfg.scenario, **cfg.overrides)
    except SpecError as exc:
        raise ConfigError("overrides", str(exc)) from None
    if not spec.symmetric and cfg.formulation in ("eph", "lpj"):
        raise ConfigError(
            "formulation",
            f"scenario {cfg.scenario!r} breaks the symmetry (mgl != 0); use eph-ext, lpj-ext or unreduced")

    s0 = _initial_state(spec, s, cfg.formulation)
    field_fn = partial(_FIELDS[cfg.formulation], spec)
    lie = cfg.lie_integrator.replace("-", "_")
    grouped = cfg.formulation == "unreduced" or cfg.reconstruct
    if grouped:
        traj = dyn.integrate_with_reconstruction(spec, field_fn, s0, cfg.dt, cfg.n_steps, lie)
    else:
        traj = dyn.integrate(field_fn, s0, cfg.dt, cfg.n_steps, cfg.integrator, spec=spec)

    columns = ["t"] + _STATE_COLUMNS[cfg.formulation] + _DIAG_COLUMNS[cfg.formulation]
    if grouped:
        body = np.array([st.body.to_vector() for st in traj.states])
        g = np.array([st.g.ravel() for st in traj.states])
        columns += _GROUP_COLUMNS
        parts = [traj.times[:, None], body]
    else:
        parts = [traj.times[:, None], traj.values()]
    parts += [traj.diagnostics[name][:, None] for name in _DIAG_COLUMNS[cfg.formulation]]
    if grouped:
        parts += [g, traj.diagnostics["ortho_drift"][:, None]]
    return columns, np.hstack(parts)


def _fmt(x):
    return format(float(x), ".17g")


def write_trajectory(cfg, columns, rows, stream):
    if cfg.format == "csv":
        stream.write(",".join(columns) + "\n")
        for row in rows:
            stream.write(",".join(_fmt(x) for x in row) + "\n")
    else:
        meta = asdict(cfg)
        meta["overrides"] = {k: v for k, v in sorted(cfg.overrides.items())}
        doc = {"meta": meta, "columns": columns, "rows": [[float(x) for x in row] for row in rows]}
        json.dump(doc, stream)
        stream.write("\n")


def cmd_simulate(cfg, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    try:
        columns, rows = run_simulation(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return 2
    except dyn.NumericalError as exc:
        print(f"numerical failure: {exc}", file=err)
        return 3
    if cfg.output_path in ("-", ""):
        write_trajectory(cfg, columns, rows, out)
    else:
        with open(cfg.output_path, "w", newline="") as fh:
            write_trajectory(cfg, columns, rows, fh)
    return 0


# --- verify / scenarios -------------------------------------------------------------

def run_verification(suite, seed, jobs=1):
    names = verify.SUITES if suite == "all" else (suite,)
    if suite != "all" and suite not in verify.SUITES:
        raise KeyError(suite)
    if jobs > 1 and len(names) > 1:
        # same per-suite seeding as verify.run, so results do not depend on jobs
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, names, [seed] * len(names), range(len(names))))
        checks = [c for part in results for c in part]
        return sorted(checks, key=lambda c: c.name)
    return verify.run(suite, seed)


def _run_one(name, seed, index):
    return verify._RUNNERS[name](np.random.default_rng([seed, index]))


def cmd_verify(suite, seed, report_path=None, jobs=1, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    if suite != "all" and suite not in verify.SUITES:
        print(f"config error: suite: unknown suite {suite!r}", file=err)
        return 2
    checks = run_verification(suite, seed, jobs)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name} residual={c.residual:.3e} tol={c.tolerance:.1e}", file=out)
    ok = all(c.passed for c in checks)
    if report_path:
        report = {"suite": suite, "seed": seed, "passed": ok, "checks": [c.as_dict() for c in checks]}
        with open(report_path, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return 0 if ok else 1


def _vec(v):
    return ",".join(format(float(x), "g") for x in np.ravel(v))


def cmd_list_scenarios(out=None):
    out = out or sys.stdout
    for name, (_, p) in scenarios.REGISTRY.items():
        init = f"xi0={_vec(p.xi0)}" if p.xi0 is not None else f"mu0={_vec(p.mu0)}"
        print(f"{name} inertia={_vec(p.inertia)} gamma={p.gamma:g} mgl={p.mgl:g} "
              f"chi={_vec(p.chi)} alpha0={_vec(p.alpha0)} {init} z0={p.z0:g}", file=out)
    return 0


# --- entry point ---------------------------------------------------------------------

def _default_seed():
    env = os.environ.get("HERGLOTZ_SEED")
    if env is None:
        return 0
    return _number("HERGLOTZ_SEED", env, int)


def build_parser():
    parser = argparse.ArgumentParser(prog="herglotz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a scenario and write its trajectory")
    sim.add_argument("--config", help="key = value file with [run] and [overrides] sections")
    sim.add_argument("--scenario")
    sim.add_argument("--formulation")
    sim.add_argument("--dt", type=str)
    sim.add_argument("--t-final", type=str)
    sim.add_argument("--integrator")
    sim.add_argument("--lie-integrator")
    sim.add_argument("--reconstruct", action="store_const", const="true")
    sim.add_argument("-o", "--output")
    sim.add_argument("--format")
    sim.add_argument("--seed", type=str)
    for key in OVERRIDE_KEYS:
        sim.add_argument(f"--{key.replace('_', '-')}", dest=f"ov_{key}", metavar="VALUE")
    sim.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="scenario override, repeatable")

    ver = sub.add_parser("verify", help="run property checks")
    ver.add_argument("suite", nargs="?", default="all")
    ver.add_argument("--seed", type=str)
    ver.add_argument("--report", help="write a JSON report here")
    ver.add_argument("--jobs", type=int, default=1, help="run suites in parallel processes")

    sub.add_parser("scenarios", help="list built-in scenarios and their defaults")
    return parser


def _config_from_args(args):
    cfg = RunConfig()
    cfg.seed = _default_seed()
    if args.config:
        load_config_file(args.config, cfg)
    for key in ("scenario", "formulation", "dt", "t_final", "integrator", "lie_integrator",
                "reconstruct", "output", "format", "seed"):
        value = getattr(args, key)
        if value is not None:
            _apply_run_value(cfg, key, value)
    for key in OVERRIDE_KEYS:
        value = getattr(args, f"ov_{key}")
        if value is not None:
            cfg.overrides[key] = parse_override(key, value)
    for item in args.set:
        if "=" not in item:
            raise ConfigError("set", f"expected KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        cfg.overrides[key.strip().replace("-", "_")] = parse_override(key, value)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(_config_from_args(args))
        if args.command == "verify":
            seed = _default_seed() if args.seed is None else _number("seed", args.seed, int)
            return cmd_verify(args.suite, seed, args.report, args.jobs)
        return cmd_list_scenarios()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
