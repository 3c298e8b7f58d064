"""Property checks run by ``herglotz verify``.

Each check returns a :class:`Check` with the measured residual and the
tolerance it is held to. Suites are grouped as ``algebra``, ``brackets``,
``dynamics`` and ``reduction``.
"""

from dataclasses import asdict, dataclass
from functools import partial

import numpy as np

from . import algebra as so3
from . import dynamics as dyn
from . import jacobi, models, scenarios
from .models import SystemSpec, cocontact_state, contact_state

SUITES = ("algebra", "brackets", "dynamics", "reduction")


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def as_dict(self):
        return {**asdict(self), "passed": self.passed}


def _scaled(err, *norms):
    # residuals scaled by operand magnitude, floor 1
    return err / max(1.0, float(np.prod(norms)))


# --- algebra -------------------------------------------------------------------

def algebra_checks(rng, n=200):
    triples = rng.uniform(-10.0, 10.0, size=(n, 3, 3))
    hat_err = max(float(np.max(np.abs(so3.hat(a) @ b - so3.ad(a, b)))) for a, b, _ in triples)
    vee_err = max(float(np.max(np.abs(so3.vee(so3.hat(a)) - a))) for a, _, _ in triples)
    jac = max(
        _scaled(np.max(np.abs(so3.ad(a, so3.ad(b, c)) + so3.ad(b, so3.ad(c, a)) + so3.ad(c, so3.ad(a, b)))),
                np.linalg.norm(a), np.linalg.norm(b), np.linalg.norm(c))
        for a, b, c in triples)
    dual = max(
        _scaled(abs(so3.pairing(so3.coad(x, m), e) - so3.pairing(m, so3.ad(x, e))),
                np.linalg.norm(x), np.linalg.norm(m), np.linalg.norm(e))
        for x, m, e in triples)
    vs = rng.uniform(-1.0, 1.0, size=(n, 3))
    vs *= (rng.uniform(0.0, 10.0, size=n) / np.linalg.norm(vs, axis=1))[:, None]
    ortho = max(so3.orthogonality_drift(so3.exp_map(v)) for v in vs)
    norm_err = max(
        abs(np.linalg.norm(so3.coadjoint_group_action(so3.exp_map(v), a)) - np.linalg.norm(a))
        / max(1.0, np.linalg.norm(a))
        for v, a in zip(vs, triples[:, 0]))
    return [
        Check("algebra.hat_equals_ad", hat_err, 1e-12),
        Check("algebra.vee_hat_roundtrip", vee_err, 0.0),
        Check("algebra.jacobi_identity_ad", jac, 1e-13),
        Check("algebra.coad_duality", dual, 1e-12),
        Check("algebra.exp_orthogonality", ortho, 1e-12),
        Check("algebra.coadjoint_action_norm", norm_err, 1e-12),
    ]


# --- brackets ------------------------------------------------------------------

def _poly_triples(rng, n_triples, extended):
    n_vars = 7 if extended else 4
    return [[jacobi.random_polynomial(rng, n_vars) for _ in range(3)] for _ in range(n_triples)]


def bracket_checks(rng, n_triples=50, n_points=50, n_field_points=100):
    out = []
    for extended, tag in ((False, ""), (True, "_ext")):
        jac = leib = anti = bilin = 0.0
        for f, g, k in _poly_triples(rng, n_triples, extended):
            pts = jacobi.random_points(rng, n_points, extended)
            jac = max(jac, jacobi.jacobi_identity_residual(f, g, k, pts))
            leib = max(leib, jacobi.leibniz_residual(f, g, k, pts))
            p = jacobi.BracketPoint.stack(pts)
            fg = jacobi.bracket(f, g, p)
            anti = max(anti, float(np.max(np.abs(fg + jacobi.bracket(g, f, p)))))
            a, b = rng.uniform(-2.0, 2.0, size=2)
            lin = jacobi.Observable(lambda q, f=f, g=g, a=a, b=b: a * f(q) + b * g(q),
                                    lambda q, f=f, g=g, a=a, b=b: a * f.grad(q) + b * g.grad(q), True)
            fk, gk = jacobi.bracket(f, k, p), jacobi.bracket(g, k, p)
            diff = np.abs(jacobi.bracket(lin, k, p) - a * fk - b * gk)
            bilin = max(bilin, float(np.max(diff / np.maximum(1.0, np.abs(a * fk) + np.abs(b * gk)))))
        out += [
            Check(f"brackets.jacobi_identity{tag}", jac, 1e-8),
            Check(f"brackets.leibniz{tag}", leib, 1e-8),
            Check(f"brackets.antisymmetry{tag}", anti, 1e-13),
            Check(f"brackets.bilinearity{tag}", bilin, 1e-12),
        ]

    out += field_consistency_checks(rng, n_field_points)

    reeb = 0.0
    for f, _, _ in _poly_triples(rng, 10, False):
        p = jacobi.BracketPoint.stack(jacobi.random_points(rng, n_points))
        lhs = jacobi.bracket(jacobi.constant(1.0), f, p)
        reeb = max(reeb, float(np.max(np.abs(lhs + f.grad(p)[3]))))
    out.append(Check("brackets.unit_bracket_is_E", reeb, 1e-10))
    return out


def field_consistency_checks(rng, n_points=100):
    spec = SystemSpec([1.0, 2.0, 3.0], gamma=0.1)
    spec_ext = SystemSpec([1.0, 2.0, 3.0], gamma=0.2, potential_strength=1.5, chi=[0.0, 0.6, 0.8])
    err = err_ext = 0.0
    h = jacobi.hamiltonian_observable(spec)
    h_ext = jacobi.hamiltonian_observable(spec_ext)
    for x in rng.uniform(-3.0, 3.0, size=(n_points, 7)):
        p = jacobi.BracketPoint(x[0:3], x[3])
        got = np.hstack(jacobi.hamiltonian_field_from_bracket(h, p))
        want = np.hstack(dyn.lpj_field(spec, cocontact_state(x[0:3], x[3])))
        err = max(err, float(np.max(np.abs(got - want))))
        p = jacobi.BracketPoint(x[0:3], x[3], x[4:7])
        got = np.hstack(jacobi.hamiltonian_field_from_bracket(h_ext, p))
        want = np.hstack(dyn.lpj_ext_field(spec_ext, cocontact_state(x[0:3], x[3], x[4:7])))
        err_ext = max(err_ext, float(np.max(np.abs(got - want))))
    return [
        Check("brackets.field_consistency", err, 1e-10),
        Check("brackets.field_consistency_ext", err_ext, 1e-10),
    ]


# --- dynamics ------------------------------------------------------------------

def derivative_check(rng, n=200):
    """Worst relative gap between analytic and finite-difference derivatives."""
    worst = 0.0
    for x in rng.uniform(-5.0, 5.0, size=(n, 13)):
        inertia = np.diag(1.0 + np.abs(x[7:10]))
        chi = x[10:13] / np.linalg.norm(x[10:13])
        spec = SystemSpec(inertia, gamma=x[3] / 5.0, potential_strength=x[6], chi=chi)
        s = contact_state(x[0:3], x[3], x[4:7])
        analytic = (models.dl_dxi(spec, s), models.dl_dz(spec, s), models.dl_dalpha(spec, s))
        for a, b in zip(analytic, models.fd_lagrangian_derivatives(spec, s)):
            worst = max(worst, float(np.max(np.abs(np.subtract(a, b)) / np.maximum(1.0, np.abs(a)))))
        c = models.legendre(spec, s)
        analytic = (models.dh_dmu(spec, c), models.dh_dz(spec, c), models.dh_dalpha(spec, c))
        for a, b in zip(analytic, models.fd_hamiltonian_derivatives(spec, c)):
            worst = max(worst, float(np.max(np.abs(np.subtract(a, b)) / np.maximum(1.0, np.abs(a)))))
    return Check("dynamics.derivatives_match_fd", worst, 1e-6)


def rk4_order_ratio(gamma=0.1, t_final=20.0, dts=(0.4, 0.2)):
    """Error ratio of RK4 on the isotropic damped body when ``dt`` halves."""
    spec = SystemSpec(np.eye(3), gamma=gamma)
    s0 = cocontact_state([1.0, 0.0, 0.0])
    errs = []
    for dt in dts:
        n = int(round(t_final / dt))
        traj = dyn.integrate(partial(dyn.lpj_field, spec), s0, dt, n)
        errs.append(abs(traj.final.mu[0] - np.exp(-gamma * t_final)))
    return errs[0] / errs[1]


def dynamics_checks(rng):
    out = [derivative_check(rng)]

    spec, s0 = scenarios.build("damped-rigid-body", mu0=(1.0, 2.0, 3.0))
    traj = dyn.integrate(partial(dyn.lpj_field, spec), s0, 1e-3, 5000, spec=spec)
    h = traj.diagnostics["hamiltonian"]
    decay = np.exp(-spec.gamma * traj.times)
    out.append(Check("dynamics.hamiltonian_decay", float(np.max(np.abs(h - h[0] * decay)) / abs(h[0])), 1e-6))
    m = traj.diagnostics["mu_norm"]
    out.append(Check("dynamics.casimir_decay", float(np.max(np.abs(m - m[0] * decay)) / m[0]), 1e-6))
    out.append(Check("dynamics.dissipation_check", jacobi.dissipation_check(spec, traj), 1e-6))

    spec, s0 = scenarios.build("free-rigid-body", mu0=(1.0, 2.0, 3.0))
    traj = dyn.integrate(partial(dyn.lpj_field, spec), s0, 1e-3, 10000, spec=spec)
    drift = max(float(np.ptp(traj.diagnostics["mu_norm"])), float(np.ptp(traj.diagnostics["hamiltonian"])))
    out.append(Check("dynamics.conservative_drift", drift, 1e-8))

    spec, s0 = scenarios.build("heavy-top-dissipative")
    traj = dyn.integrate(partial(dyn.eph_ext_field, spec), s0, 1e-3, 10000, spec=spec)
    out.append(Check("dynamics.advected_norm", float(np.ptp(traj.diagnostics["alpha_norm"])), 1e-9))
    co = dyn.integrate(partial(dyn.lpj_ext_field, spec), models.legendre(spec, s0), 1e-3, 5000, spec=spec)
    out.append(Check("dynamics.heavy_top_dissipation", jacobi.dissipation_check(spec, co), 1e-5))

    spec, s0 = scenarios.build("sleeping-top")
    traj = dyn.integrate(partial(dyn.eph_ext_field, spec), s0, 1e-3, 10000)
    v = traj.values()
    still = float(max(np.max(np.abs(v[:, 0:3] - v[0, 0:3])), np.max(np.abs(v[:, 4:7] - v[0, 4:7]))))
    out.append(Check("dynamics.sleeping_top_equilibrium", still, 1e-10))

    ratio = rk4_order_ratio()
    out.append(Check("dynamics.rk4_order", abs(ratio - 16.0), 4.0))
    return out


# --- reduction -----------------------------------------------------------------

def reduction_checks(rng, group_steps=100_000):
    out = []
    spec, s0 = scenarios.build("damped-rigid-body")
    eph = dyn.integrate(partial(dyn.eph_field, spec), s0, 1e-3, 5000)
    lpj = dyn.integrate(partial(dyn.lpj_field, spec), models.legendre(spec, s0), 1e-3, 5000)
    mapped = np.array([models.legendre(spec, s).to_vector() for s in eph.states])
    out.append(Check("reduction.eph_lpj_equivalence", float(np.max(np.abs(mapped - lpj.values()))), 1e-6))

    spec, s0 = scenarios.build("heavy-top-dissipative")
    full0 = dyn.FullState(spec.g0, contact_state(s0.xi, s0.z))
    full = dyn.integrate_with_reconstruction(spec, partial(dyn.unreduced_herglotz_field, spec), full0, 1e-3, 10000)
    red = dyn.integrate(partial(dyn.eph_ext_field, spec), s0, 1e-3, 10000)
    fv = np.array([s.body.to_vector() for s in full.states])
    rv = red.values()
    out.append(Check("reduction.symmetry_breaking_state", float(np.max(np.abs(fv - rv[:, 0:4]))), 1e-6))
    adv = np.array([so3.coadjoint_group_action(s.g.T, spec.alpha0) for s in full.states])
    out.append(Check("reduction.symmetry_breaking_alpha", float(np.max(np.abs(adv - rv[:, 4:7]))), 1e-6))

    spec, _ = scenarios.build("damped-rigid-body")
    mu0 = cocontact_state([1.0, 2.0, 3.0])
    full = dyn.integrate_with_reconstruction(
        spec, partial(dyn.unreduced_hamiltonian_field, spec), dyn.FullState(np.eye(3), mu0), 1e-3, 5000)
    lpj = dyn.integrate(partial(dyn.lpj_field, spec), mu0, 1e-3, 5000)
    marg = np.array([s.body.to_vector() for s in full.states])
    out.append(Check("reduction.flow_commutation", float(np.max(np.abs(marg - lpj.values()))), 1e-6))

    traj = dyn.integrate_with_reconstruction(spec, partial(dyn.lpj_field, spec), mu0, 1e-3, group_steps)
    worst = max(float(np.max(traj.diagnostics["ortho_drift"])), float(np.max(traj.diagnostics["det_error"])))
    out.append(Check("reduction.group_integrity", worst, 1e-8))
    return out


_RUNNERS = {
    "algebra": algebra_checks,
    "brackets": bracket_checks,
    "dynamics": dynamics_checks,
    "reduction": reduction_checks,
}


def run(suite="all", seed=0):
    """Run a suite (or ``"all"``) and return its checks sorted by name."""
    names = SUITES if suite == "all" else (suite,)
    unknown = [n for n in names if n not in _RUNNERS]
    if unknown:
        raise KeyError(suite)
    checks = []
    for i, name in enumerate(names):
        rng = np.random.default_rng([seed, i])
        checks += _RUNNERS[name](rng)
    return sorted(checks, key=lambda c: c.name)
