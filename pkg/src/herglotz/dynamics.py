"""Vector fields and fixed-step integrators.

Four reduced formulations are provided (EPH/LPJ, each with or without an
advected parameter) together with the unreduced, left-trivialized flows on
SO(3) x so(3) x R used to check reduction and reconstruction.

Advected parameters follow ``alpha(t) = g(t)^T alpha0`` under the
reconstruction equation ``g' = g hat(xi)``, so that ``alpha' = alpha x xi``.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import models
from .algebra import coad, cross, exp_map, orthogonality_drift, pairing
from .models import CoContactState, ContactState, SpecError


class NumericalError(RuntimeError):
    """A state became non-finite during integration."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


@dataclass(frozen=True, eq=False)
class FullState:
    """Unreduced state: attitude ``g`` plus body velocity/momentum state."""

    g: np.ndarray
    body: object

    def to_vector(self):
        return np.concatenate([self.g.ravel(), self.body.to_vector()])

    def with_vector(self, y):
        return FullState(y[:9].reshape(3, 3), self.body.with_vector(y[9:]))


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: list
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.states[-1]

    def values(self):
        """States stacked as rows of their flat vector layout."""
        return np.array([s.to_vector() for s in self.states])


def _require_symmetric(spec, name):
    if not spec.symmetric:
        raise SpecError(f"{name} needs potential_strength == 0; use the extended formulation")


def _require_alpha(s, name):
    if s.alpha is None:
        raise SpecError(f"{name} needs a state carrying an advected alpha")


def momentum_map_JX(x, alpha):
    """Momentum map of the adjoint representation, ``J_X(x, alpha) = -ad*_x alpha``."""
    return -coad(x, alpha)


def eph_field(spec, s):
    """Euler-Poincare-Herglotz field on so(3) x R.

    ``d/dt dl/dxi = ad*_xi dl/dxi + dl/dxi dl/dz`` and ``z' = l``.
    """
    _require_symmetric(spec, "eph_field")
    mu = models.dl_dxi(spec, s)
    d_mu = coad(s.xi, mu) + mu * models.dl_dz(spec, s)
    return spec.inertia_inv @ d_mu, models.lagrangian(spec, s)


def lpj_field(spec, s):
    """Lie-Poisson-Jacobi field on so(3)* x R."""
    _require_symmetric(spec, "lpj_field")
    w = models.dh_dmu(spec, s)
    d_mu = coad(w, s.mu) - s.mu * models.dh_dz(spec, s)
    return d_mu, pairing(s.mu, w) - models.hamiltonian(spec, s)


def eph_ext_field(spec, s):
    """EPH field with advected parameter (adjoint representation)."""
    _require_alpha(s, "eph_ext_field")
    mu = models.dl_dxi(spec, s)
    d_mu = (coad(s.xi, mu)
            + momentum_map_JX(models.dl_dalpha(spec, s), s.alpha)
            + mu * models.dl_dz(spec, s))
    d_alpha = coad(s.xi, s.alpha)
    return spec.inertia_inv @ d_mu, models.lagrangian(spec, s), d_alpha


def lpj_ext_field(spec, s):
    """LPJ field with advected parameter."""
    _require_alpha(s, "lpj_ext_field")
    w = models.dh_dmu(spec, s)
    d_mu = (coad(w, s.mu)
            - s.mu * models.dh_dz(spec, s)
            - momentum_map_JX(models.dh_dalpha(spec, s), s.alpha))
    d_alpha = coad(w, s.alpha)
    return d_mu, pairing(s.mu, w) - models.hamiltonian(spec, s), d_alpha


def advected_from_attitude(spec, g):
    """``alpha = g^-1 alpha0``, the body-frame image of the reference vector."""
    return g.T @ spec.alpha0


def unreduced_herglotz_field(spec, s):
    """Left-trivialized Herglotz flow on SO(3) x so(3) x R.

    Returns ``(omega, d_xi, d_z)`` where ``omega`` is the body velocity of
    ``g``. The symmetry-breaking force is evaluated from the attitude, which
    is what makes this independent of the reduced advected equation.
    """
    xi = s.body.xi
    body = ContactState(xi, s.body.z, advected_from_attitude(spec, s.g))
    mu = spec.inertia @ xi
    force = -spec.potential_strength * cross(spec.chi, body.alpha)
    d_mu = coad(xi, mu) + force - spec.gamma * mu
    return xi, spec.inertia_inv @ d_mu, models.lagrangian(spec, body)


def unreduced_hamiltonian_field(spec, s):
    """Left-trivialized Hamiltonian flow on T*SO(3) x R for G-invariant ``h``."""
    _require_symmetric(spec, "unreduced_hamiltonian_field")
    d_mu, d_z = lpj_field(spec, s.body)
    return spec.inertia_inv @ s.body.mu, d_mu, d_z


# --- integration --------------------------------------------------------------

def _check_steps(dt, n_steps):
    if not (np.isfinite(dt) and dt > 0):
        raise ValueError("dt must be positive and finite")
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError("n_steps must be a positive integer")


def _pack(parts):
    return np.concatenate([p if getattr(p, "ndim", 0) else [p] for p in parts])


def _flat(field, template):
    def rhs(y):
        return _pack(field(template.with_vector(y)))
    return rhs


def _euler_step(rhs, y, dt):
    return y + dt * rhs(y)


def _rk4_step(rhs, y, dt):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_STEPPERS = {"euler": _euler_step, "rk4": _rk4_step}


def integrate(field, s0, dt, n_steps, method="rk4", spec=None, t0=0.0):
    """Fixed-step explicit integration of ``s' = field(s)``.

    ``field`` takes a state and returns its tangent as a tuple laid out like
    ``s0.to_vector()``. When ``spec`` is given, per-sample diagnostics are
    attached to the returned trajectory.
    """
    _check_steps(dt, n_steps)
    try:
        step = _STEPPERS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}") from None
    rhs = _flat(field, s0)
    y = s0.to_vector()
    states = [s0]
    # blow-ups are reported through NumericalError, not floating-point warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            y = step(rhs, y, dt)
            if not np.all(np.isfinite(y)):
                raise NumericalError(k)
            states.append(s0.with_vector(y))
    times = t0 + dt * np.arange(n_steps + 1)
    traj = Trajectory(times, states)
    if spec is not None:
        traj.diagnostics = diagnostics(spec, states)
    return traj


def _body_velocity(spec, body):
    return body.xi if isinstance(body, ContactState) else spec.inertia_inv @ body.mu


def integrate_with_reconstruction(spec, field, s0, dt, n_steps, lie_method="rkmk4", t0=0.0):
    """Integrate a flow while reconstructing the attitude from ``g' = g hat(xi)``.

    ``s0`` is either a :class:`FullState` (then ``field`` returns
    ``(omega, *body_tangent)``, as the unreduced fields do) or a reduced state,
    in which case ``field`` is a reduced field, ``g`` starts at ``spec.g0`` and
    ``omega`` is the reduced body velocity.

    The attitude is always advanced multiplicatively, ``g <- g exp(u)``; the
    vector part uses the matching explicit scheme (Euler or RK4).
    """
    _check_steps(dt, n_steps)
    if isinstance(s0, FullState):
        g = np.array(s0.g, dtype=float)
        body0 = s0.body

        def split(g, body):
            out = field(FullState(g, body))
            return out[0], _pack(out[1:])
    else:
        g = np.array(spec.g0, dtype=float)
        body0 = s0

        def split(g, body):
            return _body_velocity(spec, body), _pack(field(body))

    if lie_method == "lie_euler":
        step = _lie_euler_step
    elif lie_method == "rkmk4":
        step = _rkmk4_step
    else:
        raise ValueError(f"unknown lie method {lie_method!r}")

    y = body0.to_vector()
    states = [FullState(g, body0)]
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            g, y = step(split, body0, g, y, dt)
            if not (np.all(np.isfinite(y)) and np.all(np.isfinite(g))):
                raise NumericalError(k)
            states.append(FullState(g, body0.with_vector(y)))
    times = t0 + dt * np.arange(n_steps + 1)
    return Trajectory(times, states, diagnostics(spec, states))


def _lie_euler_step(split, tmpl, g, y, dt):
    omega, k = split(g, tmpl.with_vector(y))
    return g @ exp_map(dt * omega), y + dt * k


def _rkmk4_step(split, tmpl, g, y, dt):
    # Munthe-Kaas RK4 with truncated dexpinv, written for g' = g hat(xi);
    # the right-multiplied form flips the commutator signs of the usual
    # left-multiplied scheme.
    w1, k1 = split(g, tmpl.with_vector(y))
    f1 = dt * w1
    u2 = 0.5 * f1
    y2 = y + 0.5 * dt * k1
    w2, k2 = split(g @ exp_map(u2), tmpl.with_vector(y2))
    f2 = dt * w2
    u3 = 0.5 * f2 + cross(f1, f2) / 8.0
    y3 = y + 0.5 * dt * k2
    w3, k3 = split(g @ exp_map(u3), tmpl.with_vector(y3))
    f3 = dt * w3
    y4 = y + dt * k3
    w4, k4 = split(g @ exp_map(f3), tmpl.with_vector(y4))
    f4 = dt * w4
    u = (f1 + 2.0 * f2 + 2.0 * f3 + f4) / 6.0 + cross(f1, f4) / 12.0
    return g @ exp_map(u), y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# --- diagnostics --------------------------------------------------------------

def state_diagnostics(spec, s):
    """Scalar monitors for one state (any of the supported state kinds)."""
    return {name: float(v[0]) for name, v in diagnostics(spec, [s]).items()}


def diagnostics(spec, states):
    """Per-sample monitors, vectorized over a homogeneous list of states.

    Always: ``hamiltonian``, ``lagrangian``, ``mu_norm``. With an advected
    vector (or an attitude): ``alpha_norm``. With an attitude: ``ortho_drift``
    and ``det_error``.
    """
    first = states[0]
    full = isinstance(first, FullState)
    bodies = [s.body for s in states] if full else states
    y = np.array([b.to_vector() for b in bodies])
    z = y[:, 3]
    if full:
        g = np.array([s.g for s in states])
    if bodies[0].alpha is not None:
        alpha = y[:, 4:7]
    elif full:
        alpha = np.einsum("nji,j->ni", g, spec.alpha0)
    else:
        alpha = None

    if isinstance(bodies[0], ContactState):
        xi = y[:, 0:3]
        mu = xi @ spec.inertia.T
    else:
        mu = y[:, 0:3]
        xi = mu @ spec.inertia_inv.T
    kinetic = 0.5 * np.einsum("ni,ni->n", mu, xi)
    potential = 0.0 if alpha is None else spec.potential_strength * (alpha @ spec.chi)
    if alpha is None and not spec.symmetric:
        raise SpecError("diagnostics need an advected alpha when potential_strength != 0")

    out = {
        "hamiltonian": kinetic + potential + spec.gamma * z,
        "lagrangian": kinetic - potential - spec.gamma * z,
        "mu_norm": np.linalg.norm(mu, axis=1),
    }
    if alpha is not None:
        out["alpha_norm"] = np.linalg.norm(alpha, axis=1)
    if full:
        gram = np.einsum("nki,nkj->nij", g, g) - np.eye(3)
        out["ortho_drift"] = np.sqrt(np.einsum("nij,nij->n", gram, gram))
        out["det_error"] = np.abs(np.linalg.det(g) - 1.0)
    return out
