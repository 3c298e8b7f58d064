"""Named scenarios and closed-form references."""

from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .algebra import coadjoint_group_action, vector
from .models import SpecError, SystemSpec, cocontact_state, contact_state


@dataclass(frozen=True, eq=False)
class ScenarioParams:
    name: str
    inertia: tuple = (1.0, 2.0, 3.0)
    gamma: float = 0.1
    mgl: float = 0.0
    chi: tuple = (0.0, 0.0, 1.0)
    alpha0: tuple = (0.0, 0.0, 1.0)
    xi0: Optional[tuple] = (1.0, 1.0, 1.0)
    mu0: Optional[tuple] = None
    z0: float = 0.0
    g0: np.ndarray = field(default_factory=lambda: np.eye(3))

    def override(self, **changes):
        """Copy with ``changes`` applied; giving ``mu0`` clears ``xi0`` and vice versa."""
        if changes.get("mu0") is not None and "xi0" not in changes:
            changes["xi0"] = None
        if changes.get("xi0") is not None and "mu0" not in changes:
            changes["mu0"] = None
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise SpecError(f"unknown scenario parameter(s): {', '.join(sorted(unknown))}")
        return replace(self, **changes)


def _spec(params):
    return SystemSpec(
        inertia=np.asarray(params.inertia, dtype=float),
        gamma=params.gamma,
        potential_strength=params.mgl,
        chi=params.chi,
        alpha0=params.alpha0,
        g0=params.g0,
    )


def _initial(spec, params, alpha=None):
    if (params.xi0 is None) == (params.mu0 is None):
        raise SpecError("exactly one of xi0 / mu0 must be given")
    if params.xi0 is not None:
        return contact_state(params.xi0, params.z0, alpha)
    return cocontact_state(params.mu0, params.z0, alpha)


def damped_rigid_body(params):
    """Rigid body with damping ``-gamma I xi``; no potential."""
    if params.mgl != 0.0:
        raise SpecError("damped rigid body requires mgl == 0")
    spec = _spec(params)
    return spec, _initial(spec, params)


def heavy_top_dissipative(params):
    """Heavy top with damping; the state carries the advected vector.

    The advected vector starts at ``g0^-1 alpha0``.
    """
    chi = vector(params.chi, "chi")
    if abs(np.linalg.norm(chi) - 1.0) > 1e-12:
        raise SpecError("chi must be a unit vector")
    spec = _spec(params)
    alpha = coadjoint_group_action(spec.g0.T, spec.alpha0)
    return spec, _initial(spec, params, alpha)


REGISTRY = {
    "damped-rigid-body": (damped_rigid_body, ScenarioParams("damped-rigid-body")),
    "free-rigid-body": (damped_rigid_body, ScenarioParams("free-rigid-body", gamma=0.0)),
    "heavy-top": (heavy_top_dissipative, ScenarioParams(
        "heavy-top", inertia=(1.0, 1.0, 3.0), gamma=0.0, mgl=1.0, xi0=(1.0, 0.5, 2.0))),
    "heavy-top-dissipative": (heavy_top_dissipative, ScenarioParams(
        "heavy-top-dissipative", gamma=0.2, mgl=1.0, chi=(0.0, 0.6, 0.8), xi0=(0.3, 1.0, 2.0))),
    "sleeping-top": (heavy_top_dissipative, ScenarioParams(
        "sleeping-top", inertia=(1.0, 1.0, 3.0), gamma=0.0, mgl=1.0, xi0=(0.0, 0.0, 2.0))),
}


def scenario_params(name):
    try:
        return REGISTRY[name][1]
    except KeyError:
        raise SpecError(f"unknown scenario {name!r}; choose from {', '.join(REGISTRY)}") from None


def build(name, **overrides):
    """Resolve a named scenario (with overrides) to ``(spec, initial_state)``."""
    params = scenario_params(name)
    if overrides:
        params = params.override(**overrides)
    builder = REGISTRY[name][0]
    return builder(params)


def analytic_hamiltonian_decay(h0, gamma, t):
    return h0 * np.exp(-gamma * t)


def analytic_casimir_decay(mu0_norm, gamma, t):
    return mu0_norm * np.exp(-gamma * t)
