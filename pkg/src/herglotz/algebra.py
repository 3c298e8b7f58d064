"""SO(3) / so(3) kernel.

Algebra and coalgebra elements are represented as length-3 numpy arrays,
group elements as 3x3 rotation matrices. The hat map follows the usual
convention ``hat(v) @ w == v x w``, under which the bracket of so(3) is the
cross product and the pairing between so(3)* and so(3) is the dot product.
"""

import math

import numpy as np

ORTHO_TOL = 1e-9
SKEW_TOL = 1e-12
_SMALL_ANGLE = 1e-6
_I3 = np.eye(3)
_I3.flags.writeable = False

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


class AlgebraError(ValueError):
    """Raised when an input violates an so(3)/SO(3) invariant."""


def vector(v, name="vector"):
    """Coerce ``v`` to a finite length-3 float array."""
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise AlgebraError(f"{name} must have shape (3,), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise AlgebraError(f"{name} has non-finite components")
    return a


def group_element(r):
    """Validate ``r`` as an element of SO(3) and return it as an array."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise AlgebraError(f"group element must be 3x3, got {r.shape}")
    if not np.all(np.isfinite(r)):
        raise AlgebraError("group element has non-finite entries")
    if orthogonality_drift(r) > ORTHO_TOL:
        raise AlgebraError("group element is not orthogonal")
    if abs(np.linalg.det(r) - 1.0) > ORTHO_TOL:
        raise AlgebraError("group element does not have unit determinant")
    return r


def orthogonality_drift(r):
    """Frobenius norm of ``r^T r - I``."""
    return float(np.linalg.norm(r.T @ r - np.eye(3)))


def cross(a, b):
    # hand-rolled so complex inputs (complex-step derivatives) go through untouched
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def hat(v):
    """Skew-symmetric matrix of ``v``; ``hat(v) @ w == cross(v, w)``."""
    x, y, z = v
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def vee(a, tol=SKEW_TOL):
    """Inverse of :func:`hat`. Rejects matrices that are not skew-symmetric."""
    a = np.asarray(a, dtype=float)
    if a.shape != (3, 3):
        raise AlgebraError(f"expected a 3x3 matrix, got {a.shape}")
    if np.max(np.abs(a + a.T)) > tol:
        raise AlgebraError("matrix is not skew-symmetric")
    return np.array([a[2, 1] - a[1, 2], a[0, 2] - a[2, 0], a[1, 0] - a[0, 1]]) / 2.0


def ad(xi, eta):
    """Lie bracket ``[xi, eta]``, i.e. ``xi x eta``."""
    return cross(xi, eta)


def coad(xi, mu):
    """Infinitesimal coadjoint action ``ad*_xi mu = mu x xi``.

    Defined by ``<coad(xi, mu), eta> = <mu, ad(xi, eta)>``.
    """
    return cross(mu, xi)


def pairing(mu, xi):
    """Dual pairing ``<mu, xi>`` (plain dot product, no conjugation)."""
    return mu[0] * xi[0] + mu[1] * xi[1] + mu[2] * xi[2]


def exp_map(v):
    """Exponential map so(3) -> SO(3) via the Rodrigues formula."""
    x, y, z = np.asarray(v, dtype=float).tolist()
    theta2 = x * x + y * y + z * z
    theta = math.sqrt(theta2)
    if theta < _SMALL_ANGLE:
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta2
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return _I3 + a * k + b * (k @ k)


def coadjoint_group_action(g, alpha):
    """Action of ``g`` on so(3)*, taken literally as the product ``g @ alpha``.

    With this identification the advected parameter of a trajectory ``g(t)``
    is ``coadjoint_group_action(g(t).T, alpha0)``.
    """
    return g @ alpha


def inverse(g):
    return g.T
