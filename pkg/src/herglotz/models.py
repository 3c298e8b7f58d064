"""Reduced contact Lagrangians/Hamiltonians on so(3) x R (x so(3)*).

The built-in family is

    l(xi, z, alpha) = 1/2 xi.I xi - k <alpha, chi> - gamma z
    h(mu, z, alpha) = 1/2 mu.I^-1 mu + k <alpha, chi> + gamma z

with ``k = m g l`` the potential strength. ``gamma > 0`` is dissipative.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .algebra import AlgebraError, E3, group_element, pairing, vector

SYM_TOL = 1e-12
UNIT_TOL = 1e-12
FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


class SpecError(ValueError):
    """Invalid system parameters."""


@dataclass(frozen=True, eq=False)
class SystemSpec:
    inertia: np.ndarray
    gamma: float = 0.0
    potential_strength: float = 0.0
    chi: np.ndarray = field(default_factory=lambda: E3.copy())
    alpha0: np.ndarray = field(default_factory=lambda: E3.copy())
    g0: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.shape == (3,):
            inertia = np.diag(inertia)
        if inertia.shape != (3, 3) or not np.all(np.isfinite(inertia)):
            raise SpecError("inertia must be a finite 3x3 matrix or a length-3 diagonal")
        if np.max(np.abs(inertia - inertia.T)) > SYM_TOL:
            raise SpecError("inertia must be symmetric")
        try:
            np.linalg.cholesky(inertia)
        except np.linalg.LinAlgError:
            raise SpecError("inertia must be positive definite") from None
        if not np.isfinite(self.gamma) or not np.isfinite(self.potential_strength):
            raise SpecError("gamma and potential_strength must be finite")
        try:
            chi = vector(self.chi, "chi")
            alpha0 = vector(self.alpha0, "alpha0")
            g0 = group_element(self.g0)
        except AlgebraError as exc:
            raise SpecError(str(exc)) from None
        if self.potential_strength != 0.0 and abs(np.linalg.norm(chi) - 1.0) > UNIT_TOL:
            raise SpecError("chi must be a unit vector when potential_strength != 0")

        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "potential_strength", float(self.potential_strength))
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "alpha0", alpha0)
        object.__setattr__(self, "g0", g0)
        object.__setattr__(self, "inertia_inv", np.linalg.inv(inertia))

    @property
    def symmetric(self):
        """True when the potential vanishes, i.e. the Lagrangian is G-invariant."""
        return self.potential_strength == 0.0


@dataclass(frozen=True, eq=False)
class ContactState:
    """Velocity-side state ``(xi, z)``, optionally with advected ``alpha``."""

    xi: np.ndarray
    z: float
    alpha: Optional[np.ndarray] = None

    def to_vector(self):
        parts = [self.xi, [self.z]]
        if self.alpha is not None:
            parts.append(self.alpha)
        return np.concatenate(parts).astype(float)

    def with_vector(self, y):
        return ContactState(y[0:3], float(y[3]), None if self.alpha is None else y[4:7])


@dataclass(frozen=True, eq=False)
class CoContactState:
    """Momentum-side state ``(mu, z)``, optionally with advected ``alpha``."""

    mu: np.ndarray
    z: float
    alpha: Optional[np.ndarray] = None

    def to_vector(self):
        parts = [self.mu, [self.z]]
        if self.alpha is not None:
            parts.append(self.alpha)
        return np.concatenate(parts).astype(float)

    def with_vector(self, y):
        return CoContactState(y[0:3], float(y[3]), None if self.alpha is None else y[4:7])


def contact_state(xi, z=0.0, alpha=None):
    return ContactState(vector(xi, "xi"), float(z), None if alpha is None else vector(alpha, "alpha"))


def cocontact_state(mu, z=0.0, alpha=None):
    return CoContactState(vector(mu, "mu"), float(z), None if alpha is None else vector(alpha, "alpha"))


def _potential(spec, alpha):
    if spec.potential_strength == 0.0:
        return 0.0
    if alpha is None:
        raise SpecError("a state with an advected alpha is required when potential_strength != 0")
    return spec.potential_strength * pairing(alpha, spec.chi)


def lagrangian(spec, s):
    xi = s.xi
    return 0.5 * pairing(spec.inertia @ xi, xi) - _potential(spec, s.alpha) - spec.gamma * s.z


def hamiltonian(spec, s):
    mu = s.mu
    return 0.5 * pairing(mu, spec.inertia_inv @ mu) + _potential(spec, s.alpha) + spec.gamma * s.z


def dl_dxi(spec, s):
    return spec.inertia @ s.xi


def dl_dz(spec, s):
    return -spec.gamma


def dl_dalpha(spec, s):
    return -spec.potential_strength * spec.chi


def dh_dmu(spec, s):
    return spec.inertia_inv @ s.mu


def dh_dz(spec, s):
    return spec.gamma


def dh_dalpha(spec, s):
    return spec.potential_strength * spec.chi


def legendre(spec, s):
    """Reduced Legendre transform ``(xi, z[, alpha]) -> (I xi, z[, alpha])``."""
    return CoContactState(spec.inertia @ s.xi, s.z, s.alpha)


def inverse_legendre(spec, s):
    return ContactState(spec.inertia_inv @ s.mu, s.z, s.alpha)


def central_difference(fun, x, step=None):
    """Central-difference gradient of scalar ``fun`` at ``x``.

    The default step is ``eps**(1/3) * max(1, |x_i|)`` per coordinate.
    """
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        h = FD_STEP * max(1.0, abs(x[i])) if step is None else step
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return grad


def fd_lagrangian_derivatives(spec, s):
    """Finite-difference ``(dl/dxi, dl/dz, dl/dalpha)``; independent of the analytic path."""
    probe = s if s.alpha is not None else replace(s, alpha=np.zeros(3))
    grad = central_difference(lambda y: lagrangian(spec, probe.with_vector(y)), probe.to_vector())
    return grad[0:3], grad[3], grad[4:7]


def fd_hamiltonian_derivatives(spec, s):
    probe = s if s.alpha is not None else replace(s, alpha=np.zeros(3))
    grad = central_difference(lambda y: hamiltonian(spec, probe.with_vector(y)), probe.to_vector())
    return grad[0:3], grad[3], grad[4:7]
