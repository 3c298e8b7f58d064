"""Lie-Poisson-Jacobi brackets on so(3)* x R and so(3)* x R x so(3)*.

Observables are functions of a :class:`BracketPoint`. Gradients are flat
arrays laid out as ``(d/dmu (3), d/dz, d/dalpha (3))``; the alpha block is
present only for extended points. A point may carry a trailing batch axis
(``mu`` of shape ``(3, m)``), in which case every observable, gradient and
bracket is evaluated for all ``m`` points at once.

    {f, g} = <mu, df/dmu x dg/dmu> + <mu, df/dmu> dg/dz - <mu, dg/dmu> df/dz
             - f dg/dz + g df/dz
             [+ <alpha, df/dmu x dg/dalpha> - <alpha, dg/dmu x df/dalpha>]

The Reeb direction is ``d/dz`` and the conformal field is ``E = -d/dz``.
"""

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import models
from .algebra import cross, pairing
from .models import CoContactState

NESTED_FD_STEP = 1e-5
_COMPLEX_STEP = 1e-30


@dataclass(frozen=True, eq=False)
class BracketPoint:
    mu: np.ndarray
    z: float
    alpha: Optional[np.ndarray] = None

    @property
    def extended(self):
        return self.alpha is not None

    def to_vector(self):
        parts = [self.mu, [self.z]]
        if self.alpha is not None:
            parts.append(self.alpha)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, x):
        return cls(x[0:3], x[3], x[4:7] if len(x) == 7 else None)

    @classmethod
    def stack(cls, points):
        """Batch a list of points along a trailing axis."""
        return cls.from_vector(np.stack([p.to_vector() for p in points], axis=-1))

    @classmethod
    def from_state(cls, s):
        return cls(np.asarray(s.mu), s.z, s.alpha)


@dataclass(frozen=True, eq=False)
class Observable:
    """Scalar function on the bracket space.

    ``grad`` is optional; when missing, gradients come from central
    differences. ``complex_safe`` marks observables whose ``eval`` and
    ``grad`` accept complex points, which enables exact complex-step
    differentiation of brackets built from them.
    """

    eval: Callable
    grad: Optional[Callable] = None
    complex_safe: bool = False

    def __call__(self, p):
        return self.eval(p)

    def __mul__(self, other):
        return product(self, other)


def _central_difference(fun, x, step=None):
    # batch-aware: perturbs row i of x (shape (n,) or (n, m)) for every column at once
    grad = np.empty(x.shape)
    for i in range(x.shape[0]):
        h = models.FD_STEP * np.maximum(1.0, np.abs(x[i])) if step is None else step
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return grad


def gradient(f, p):
    if f.grad is not None:
        return np.asarray(f.grad(p))
    x = p.to_vector().astype(float)
    return _central_difference(lambda y: f.eval(BracketPoint.from_vector(y)), x)


def _bracket_value(f, g, p, df, dg):
    mu = p.mu
    fm, fz = df[0:3], df[3]
    gm, gz = dg[0:3], dg[3]
    # terms grouped in antisymmetric pairs so that {g, f} == -{f, g} bit for bit
    val = (pairing(mu, cross(fm, gm))
           + (pairing(mu, fm) * gz - pairing(mu, gm) * fz)
           + (g.eval(p) * fz - f.eval(p) * gz))
    if p.alpha is not None:
        fa, ga = df[4:7], dg[4:7]
        val = val + (pairing(p.alpha, cross(fm, ga)) - pairing(p.alpha, cross(gm, fa)))
    return val


def lpj_bracket(f, g, p):
    """Lie-Poisson-Jacobi bracket on so(3)* x R."""
    if p.alpha is not None:
        raise ValueError("lpj_bracket takes points without alpha; use lpj_bracket_ext")
    return _bracket_value(f, g, p, gradient(f, p), gradient(g, p))


def lpj_bracket_ext(f, g, p):
    """Semidirect-product extension of the bracket on so(3)* x R x so(3)*."""
    if p.alpha is None:
        raise ValueError("lpj_bracket_ext needs a point carrying alpha")
    return _bracket_value(f, g, p, gradient(f, p), gradient(g, p))


def bracket(f, g, p):
    return _bracket_value(f, g, p, gradient(f, p), gradient(g, p))


def _complex_step_gradient(fun, x):
    grad = np.empty(x.shape)
    for i in range(x.shape[0]):
        xc = x.astype(complex)
        xc[i] += 1j * _COMPLEX_STEP
        grad[i] = np.imag(fun(xc)) / _COMPLEX_STEP
    return grad


def bracket_observable(f, g):
    """``{f, g}`` as an observable, for nesting.

    Its gradient is taken by complex-step differentiation when ``f`` and ``g``
    are complex-safe (exact to rounding), otherwise by central differences
    with step ``NESTED_FD_STEP``.
    """

    def value(p):
        return bracket(f, g, p)

    if f.complex_safe and g.complex_safe:
        def grad(p):
            return _complex_step_gradient(lambda y: value(BracketPoint.from_vector(y)), p.to_vector())
    else:
        def grad(p):
            x = p.to_vector().astype(float)
            return _central_difference(lambda y: value(BracketPoint.from_vector(y)), x, NESTED_FD_STEP)

    return Observable(value, grad)


def product(f, g):
    def value(p):
        return f.eval(p) * g.eval(p)

    def grad(p):
        return f.eval(p) * gradient(g, p) + g.eval(p) * gradient(f, p)

    return Observable(value, grad, f.complex_safe and g.complex_safe)


def constant(c):
    def value(p):
        return c + 0.0 * p.z

    def grad(p):
        return np.zeros(np.shape(p.to_vector()))

    return Observable(value, grad, True)


def coordinate(i):
    """Coordinate observable in the flat layout (0-2 mu, 3 z, 4-6 alpha)."""

    def grad(p):
        e = np.zeros(np.shape(p.to_vector()))
        e[i] = 1.0
        return e

    return Observable(lambda p: p.to_vector()[i], grad, True)


def hamiltonian_observable(spec):
    """The built-in reduced Hamiltonian with its analytic gradient."""

    def value(p):
        return models.hamiltonian(spec, CoContactState(p.mu, p.z, p.alpha))

    def grad(p):
        s = CoContactState(p.mu, p.z, p.alpha)
        batch = np.shape(p.z)
        rows = list(models.dh_dmu(spec, s)) + [models.dh_dz(spec, s)]
        if p.alpha is not None:
            rows += list(models.dh_dalpha(spec, s))
        return np.array([np.broadcast_to(r, batch) for r in rows])

    return Observable(value, grad, True)


class Polynomial:
    """Polynomial in the flat coordinates, ``sum_k c_k prod_i x_i**e_ki``."""

    def __init__(self, coeffs, exponents):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.exponents = np.asarray(exponents, dtype=int)
        self.degree = max(1, int(self.exponents.sum(axis=1).max()))
        n = self.exponents.shape[1]
        # derivative tables: d/dx_i has coefficients c*e_i on exponents e - delta_i
        self._dcoeffs = np.stack([self.coeffs * self.exponents[:, i] for i in range(n)])
        shifted = [np.maximum(self.exponents - np.eye(n, dtype=int)[i], 0) for i in range(n)]
        self._dexps = np.concatenate(shifted)

    def _monomials(self, x, exps):
        # x: (n,) or (n, m); gathers from a table of powers x_i**e
        table = [np.ones_like(x), x]
        for _ in range(2, self.degree + 1):
            table.append(table[-1] * x)
        table = np.stack(table)
        cols = np.arange(x.shape[0])
        return np.prod(table[exps, cols], axis=1)

    def __call__(self, p):
        return self.coeffs @ self._monomials(p.to_vector(), self.exponents)

    def grad(self, p):
        x = p.to_vector()
        m = self._monomials(x, self._dexps).reshape(self._dcoeffs.shape + x.shape[1:])
        if x.ndim == 1:
            return np.sum(self._dcoeffs * m, axis=1)
        return np.sum(self._dcoeffs[..., None] * m, axis=1)

    def observable(self):
        return Observable(self, self.grad, True)


def monomial_exponents(n_vars, degree):
    rows = [row for row in itertools.product(range(degree + 1), repeat=n_vars) if sum(row) <= degree]
    return np.array(sorted(rows, key=lambda r: (sum(r), r)))


def random_polynomial(rng, n_vars, degree=3, scale=1.0):
    """Dense polynomial of total degree ``<= degree`` with uniform coefficients."""
    exps = monomial_exponents(n_vars, degree)
    coeffs = rng.uniform(-scale, scale, size=len(exps))
    return Polynomial(coeffs, exps).observable()


def hamiltonian_field_from_bracket(h, p):
    """Tangent of the contact Hamiltonian flow of ``h`` at ``p``.

    Read off from the coordinate observables via ``df/dt = {h, f} - f dh/dz``.
    Returns ``(d_mu, d_z)`` or ``(d_mu, d_z, d_alpha)``.
    """
    x = p.to_vector()
    dh = gradient(h, p)
    hz = dh[3]
    out = np.empty(x.shape)
    for i in range(x.shape[0]):
        f = coordinate(i)
        out[i] = _bracket_value(h, f, p, dh, f.grad(p)) - x[i] * hz
    if p.alpha is None:
        return out[0:3], out[3]
    return out[0:3], out[3], out[4:7]


def jacobi_identity_residual(f, g, k, points):
    """Max over ``points`` of ``|{f,{g,k}} + {g,{k,f}} + {k,{f,g}}|``."""
    if not points:
        raise ValueError("at least one point is required")
    gk, kf, fg = bracket_observable(g, k), bracket_observable(k, f), bracket_observable(f, g)
    p = BracketPoint.stack(points)
    return float(np.max(np.abs(bracket(f, gk, p) + bracket(g, kf, p) + bracket(k, fg, p))))


def leibniz_residual(f, g, k, points):
    """Max of ``|{f, gk} - g{f,k} - k{f,g} - gk E(f)|`` with ``E = -d/dz``."""
    if not points:
        raise ValueError("at least one point is required")
    gk = product(g, k)
    p = BracketPoint.stack(points)
    fz = gradient(f, p)[3]
    r = (bracket(f, gk, p) - g.eval(p) * bracket(f, k, p) - k.eval(p) * bracket(f, g, p)
         + g.eval(p) * k.eval(p) * fz)
    return float(np.max(np.abs(r)))


def random_points(rng, n, extended=False, low=-3.0, high=3.0):
    dim = 7 if extended else 4
    return [BracketPoint.from_vector(x) for x in rng.uniform(low, high, size=(n, dim))]


def _sampled_hamiltonian(spec, traj):
    if "hamiltonian" in traj.diagnostics:
        return np.asarray(traj.diagnostics["hamiltonian"])
    from .dynamics import state_diagnostics
    return np.array([state_diagnostics(spec, s)["hamiltonian"] for s in traj.states])


def dissipation_check(spec, traj):
    """Residual of the contact dissipation law ``dh/dt = -gamma h``.

    For a G-invariant Hamiltonian the closed form ``h0 exp(-gamma t)`` is
    compared directly (relative to ``max(1, |h0|)``); otherwise the sampled
    ``h`` is differentiated with a five-point stencil and ``|dh/dt + gamma h|``
    is returned.
    """
    if len(traj) < 5:
        raise ValueError("dissipation_check needs at least 5 samples")
    t = np.asarray(traj.times)
    h = _sampled_hamiltonian(spec, traj)
    if spec.symmetric:
        ref = h[0] * np.exp(-spec.gamma * (t - t[0]))
        return float(np.max(np.abs(h - ref)) / max(1.0, abs(h[0])))
    dt = t[1] - t[0]
    dh = (-h[4:] + 8.0 * h[3:-1] - 8.0 * h[1:-3] + h[:-4]) / (12.0 * dt)
    return float(np.max(np.abs(dh + spec.gamma * h[2:-2])))
