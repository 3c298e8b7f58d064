from functools import partial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from herglotz import dynamics as dyn
from herglotz import jacobi, models, scenarios
from herglotz.jacobi import BracketPoint, Observable, Polynomial
from herglotz.models import SystemSpec

from conftest import finite, vectors

MU1, MU2, MU3, Z = (jacobi.coordinate(i) for i in range(4))
A1 = jacobi.coordinate(4)


def point(mu, z=0.0, alpha=None):
    return BracketPoint(np.asarray(mu, dtype=float), float(z), None if alpha is None else np.asarray(alpha, dtype=float))


class TestBracketValues:
    def test_coordinate_bracket(self):
        assert jacobi.lpj_bracket(MU1, MU2, point([0, 0, 2.5], 7.0)) == 2.5

    def test_self_bracket(self):
        f = Observable(lambda p: p.mu @ p.mu + p.z, complex_safe=False)
        assert jacobi.lpj_bracket(f, f, point([1, 2, 3], 4)) == 0.0

    @given(vectors, finite)
    def test_z_with_mu1(self, mu, z):
        assert jacobi.lpj_bracket(Z, MU1, point(mu, z)) == 0.0

    def test_unit_bracket_is_minus_dz(self):
        # {1, f} = -df/dz, i.e. E(f) with E = -d/dz
        f = Observable(lambda p: p.z ** 2 * p.mu[0], lambda p: np.array([p.z ** 2, 0, 0, 2 * p.z * p.mu[0]]))
        p = point([1.5, 0, 0], 2.0)
        assert jacobi.lpj_bracket(jacobi.constant(1.0), f, p) == pytest.approx(-6.0, abs=1e-12)

    def test_ext_requires_alpha(self):
        with pytest.raises(ValueError):
            jacobi.lpj_bracket_ext(MU1, MU2, point([1, 2, 3]))
        with pytest.raises(ValueError):
            jacobi.lpj_bracket(MU1, MU2, point([1, 2, 3], 0, [1, 0, 0]))

    @given(vectors, finite, vectors)
    @settings(max_examples=50)
    def test_ext_reduces_for_alpha_free(self, mu, z, alpha):
        rng = np.random.default_rng(0)
        f = jacobi.random_polynomial(rng, 4)
        g = jacobi.random_polynomial(rng, 4)
        lift = lambda q: Observable(lambda p: q(BracketPoint(p.mu, p.z)),
                                    lambda p: np.concatenate([q.grad(BracketPoint(p.mu, p.z)), np.zeros(3)]))
        a = jacobi.lpj_bracket(f, g, point(mu, z))
        b = jacobi.lpj_bracket_ext(lift(f), lift(g), point(mu, z, alpha))
        assert abs(a - b) <= 1e-14 * max(1.0, abs(a))

    def test_mu_alpha_mixed(self):
        # {mu1, alpha_j} = <alpha, e1 x e_j>
        p = point([0.3, -0.1, 2.0], 0.0, [0.5, 1.5, -2.0])
        for j, expected in ((0, 0.0), (1, -2.0), (2, -1.5)):
            assert jacobi.lpj_bracket_ext(MU1, jacobi.coordinate(4 + j), p) == pytest.approx(expected, abs=1e-15)

    def test_fd_gradient_fallback(self):
        f = Observable(lambda p: p.mu[0] * p.mu[1] + p.z ** 2)
        np.testing.assert_allclose(jacobi.gradient(f, point([1, 2, 3], 0.5)), [2, 1, 0, 1], atol=1e-9)


@pytest.fixture(scope="module")
def triples():
    rng = np.random.default_rng(7)
    return ([tuple(jacobi.random_polynomial(rng, 4) for _ in range(3)) for _ in range(5)],
            [tuple(jacobi.random_polynomial(rng, 7) for _ in range(3)) for _ in range(5)])


class TestAlgebraicProperties:

    def test_jacobi_identity(self, triples):
        rng = np.random.default_rng(8)
        plain, ext = triples
        for f, g, k in plain:
            assert jacobi.jacobi_identity_residual(f, g, k, jacobi.random_points(rng, 20)) <= 1e-8
        for f, g, k in ext:
            assert jacobi.jacobi_identity_residual(f, g, k, jacobi.random_points(rng, 20, True)) <= 1e-8

    def test_leibniz(self, triples):
        rng = np.random.default_rng(9)
        plain, ext = triples
        for f, g, k in plain:
            assert jacobi.leibniz_residual(f, g, k, jacobi.random_points(rng, 20)) <= 1e-8
        for f, g, k in ext:
            assert jacobi.leibniz_residual(f, g, k, jacobi.random_points(rng, 20, True)) <= 1e-8

    def test_jacobi_on_coordinates(self):
        pts = jacobi.random_points(np.random.default_rng(1), 10)
        assert jacobi.jacobi_identity_residual(MU1, MU2, MU3, pts) <= 1e-13

    def test_jacobi_with_repeated_argument(self):
        rng = np.random.default_rng(2)
        pts = jacobi.random_points(rng, 10)
        assert jacobi.jacobi_identity_residual(MU1, MU1, MU2, pts) <= 1e-13
        # cubics: nested values reach ~1e4, so the bound is relative to them
        f, g = jacobi.random_polynomial(rng, 4), jacobi.random_polynomial(rng, 4)
        nested = jacobi.bracket(f, jacobi.bracket_observable(f, g), BracketPoint.stack(pts))
        assert jacobi.jacobi_identity_residual(f, f, g, pts) <= 1e-13 * np.max(np.abs(nested))

    def test_leibniz_examples(self):
        pts = jacobi.random_points(np.random.default_rng(3), 10)
        one = jacobi.constant(1.0)
        f = Polynomial([1.0, -2.0], [[2, 1, 0, 0], [0, 0, 1, 0]]).observable()
        assert jacobi.leibniz_residual(f, one, one, pts) <= 1e-12
        assert jacobi.leibniz_residual(Z, MU1, MU1, pts) <= 1e-10

    def test_antisymmetry_is_exact(self):
        rng = np.random.default_rng(4)
        f, g = jacobi.random_polynomial(rng, 7), jacobi.random_polynomial(rng, 7)
        p = BracketPoint.stack(jacobi.random_points(rng, 50, True))
        assert np.all(jacobi.bracket(f, g, p) + jacobi.bracket(g, f, p) == 0.0)

    def test_bilinearity(self):
        rng = np.random.default_rng(5)
        f, g, k = (jacobi.random_polynomial(rng, 4) for _ in range(3))
        a, b = 1.7, -0.4
        combo = Observable(lambda p: a * f(p) + b * g(p), lambda p: a * f.grad(p) + b * g.grad(p))
        p = BracketPoint.stack(jacobi.random_points(rng, 50))
        lhs = jacobi.bracket(combo, k, p)
        rhs = a * jacobi.bracket(f, k, p) + b * jacobi.bracket(g, k, p)
        scale = np.maximum(1.0, np.abs(a * jacobi.bracket(f, k, p)) + np.abs(b * jacobi.bracket(g, k, p)))
        assert np.max(np.abs(lhs - rhs) / scale) <= 1e-12

    def test_empty_points_rejected(self):
        with pytest.raises(ValueError):
            jacobi.jacobi_identity_residual(MU1, MU2, MU3, [])
        with pytest.raises(ValueError):
            jacobi.leibniz_residual(MU1, MU2, MU3, [])


class TestPolynomial:
    def test_value_and_gradient(self):
        # 3 x0^2 x1 - x3 + 2
        q = Polynomial([3.0, -1.0, 2.0], [[2, 1, 0, 0], [0, 0, 0, 1], [0, 0, 0, 0]])
        p = point([2.0, -1.0, 5.0], 4.0)
        assert q(p) == 3 * 4 * -1 - 4 + 2
        np.testing.assert_array_equal(q.grad(p), [3 * 2 * 2 * -1, 3 * 4, 0, -1])

    def test_batched_matches_single(self):
        rng = np.random.default_rng(6)
        q = jacobi.random_polynomial(rng, 7)
        pts = jacobi.random_points(rng, 5, True)
        batch = BracketPoint.stack(pts)
        np.testing.assert_allclose(q(batch), [q(p) for p in pts], rtol=1e-14)
        np.testing.assert_allclose(q.grad(batch), np.stack([q.grad(p) for p in pts], axis=-1), rtol=1e-14)

    def test_monomial_count(self):
        assert len(jacobi.monomial_exponents(4, 3)) == 35
        assert len(jacobi.monomial_exponents(7, 3)) == 120

    def test_gradient_matches_fd(self):
        q = jacobi.random_polynomial(np.random.default_rng(10), 4)
        p = point([0.5, -1.2, 2.0], 0.3)
        fd = jacobi.gradient(Observable(q.eval), p)
        np.testing.assert_allclose(q.grad(p), fd, rtol=1e-7, atol=1e-7)


class TestHamiltonianField:
    @given(vectors, finite)
    @settings(max_examples=50)
    def test_matches_lpj_field(self, mu, z):
        spec = SystemSpec([1.0, 2.0, 3.0], gamma=0.1)
        got = jacobi.hamiltonian_field_from_bracket(jacobi.hamiltonian_observable(spec), point(mu, z))
        want = dyn.lpj_field(spec, models.cocontact_state(mu, z))
        scale = max(1.0, mu @ mu)
        np.testing.assert_allclose(got[0], want[0], atol=1e-10 * scale)
        assert got[1] == pytest.approx(want[1], abs=1e-10 * scale)

    @given(vectors, finite, vectors)
    @settings(max_examples=50)
    def test_matches_lpj_ext_field(self, mu, z, alpha):
        spec = SystemSpec([1.0, 2.0, 3.0], gamma=0.2, potential_strength=1.5, chi=[0, 0.6, 0.8])
        got = jacobi.hamiltonian_field_from_bracket(jacobi.hamiltonian_observable(spec), point(mu, z, alpha))
        want = dyn.lpj_ext_field(spec, models.cocontact_state(mu, z, alpha))
        scale = max(1.0, mu @ mu, np.linalg.norm(mu) * np.linalg.norm(alpha))
        for a, b in zip(got, want):
            np.testing.assert_allclose(a, b, atol=1e-10 * scale)

    def test_constant_hamiltonian(self):
        d_mu, d_z = jacobi.hamiltonian_field_from_bracket(jacobi.constant(2.5), point([1, 2, 3], 1.0))
        np.testing.assert_array_equal(d_mu, 0.0)
        assert d_z == -2.5

    def test_zero_hamiltonian(self):
        d_mu, d_z, d_alpha = jacobi.hamiltonian_field_from_bracket(jacobi.constant(0.0), point([1, 2, 3], 1.0, [0, 0, 1]))
        assert not np.any(d_mu) and d_z == 0 and not np.any(d_alpha)


class TestDissipationCheck:
    def test_damped_body(self):
        spec, s0 = scenarios.build("damped-rigid-body", mu0=(1.0, 2.0, 3.0))
        traj = dyn.integrate(partial(dyn.lpj_field, spec), s0, 1e-3, 5000, spec=spec)
        assert jacobi.dissipation_check(spec, traj) <= 1e-6

    def test_conservative(self):
        spec, s0 = scenarios.build("free-rigid-body", mu0=(1.0, 2.0, 3.0))
        traj = dyn.integrate(partial(dyn.lpj_field, spec), s0, 1e-3, 2000, spec=spec)
        assert jacobi.dissipation_check(spec, traj) <= 1e-8

    def test_heavy_top(self):
        spec, s0 = scenarios.build("heavy-top-dissipative")
        traj = dyn.integrate(partial(dyn.lpj_ext_field, spec), models.legendre(spec, s0), 1e-3, 3000, spec=spec)
        assert jacobi.dissipation_check(spec, traj) <= 1e-5

    def test_detects_wrong_rate(self):
        spec, s0 = scenarios.build("damped-rigid-body", mu0=(1.0, 2.0, 3.0))
        traj = dyn.integrate(partial(dyn.lpj_field, spec), s0, 1e-3, 1000, spec=spec)
        wrong = SystemSpec(spec.inertia, gamma=0.2)
        assert jacobi.dissipation_check(wrong, traj) > 1e-3

    def test_short_trajectory_rejected(self, diag123):
        traj = dyn.integrate(partial(dyn.lpj_field, diag123), models.cocontact_state([1, 2, 3]), 1e-3, 3, spec=diag123)
        with pytest.raises(ValueError):
            jacobi.dissipation_check(diag123, traj)
