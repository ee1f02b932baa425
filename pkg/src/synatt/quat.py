"""Unit quaternion algebra and the linear maps the attitude controllers consume.

Scalar-first convention throughout: Q = [eta, eps1, eps2, eps3] with eta the
scalar part and eps the vector part. Q and -Q represent the same attitude.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "UnitQuaternion",
    "IDENTITY",
    "quat_multiply",
    "cross_matrix",
    "nu",
    "lambda_map",
    "projector",
    "kinematics_rhs",
    "axis_angle_quats",
    "random_unit_quaternions",
]

# Construction tolerates small integration drift and renormalizes; anything
# farther off the sphere signals a bug upstream and is rejected.
NORM_TOL = 1e-6


class UnitQuaternion:
    """Immutable point on S3, renormalized at construction.

    Accepts any 4-sequence whose norm is within NORM_TOL of 1.
    """

    __slots__ = ("_w",)

    def __init__(self, w) -> None:
        w = np.array(w, dtype=float)
        if w.shape != (4,):
            raise ValueError(f"expected 4 components, got shape {w.shape}")
        n = float(np.linalg.norm(w))
        if abs(n - 1.0) > NORM_TOL:
            raise ValueError(f"quaternion norm {n} not within {NORM_TOL} of 1")
        if n != 1.0:
            w = w / n
        w.flags.writeable = False
        self._w = w

    @classmethod
    def from_parts(cls, eta: float, eps) -> "UnitQuaternion":
        return cls(np.concatenate(([float(eta)], np.asarray(eps, dtype=float))))

    @property
    def eta(self) -> float:
        return float(self._w[0])

    @property
    def eps(self) -> np.ndarray:
        return self._w[1:]

    def as_array(self) -> np.ndarray:
        """The components as a read-only 4-vector."""
        return self._w

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self._w.astype(dtype)
        return self._w

    def __neg__(self) -> "UnitQuaternion":
        return UnitQuaternion(-self._w)

    def inverse(self) -> "UnitQuaternion":
        """Conjugate, which inverts a unit quaternion: [eta, -eps]."""
        w = self._w
        return UnitQuaternion(np.array([w[0], -w[1], -w[2], -w[3]]))

    def __repr__(self) -> str:
        return f"UnitQuaternion([{self._w[0]}, {self._w[1]}, {self._w[2]}, {self._w[3]}])"


IDENTITY = UnitQuaternion(np.array([1.0, 0.0, 0.0, 0.0]))


def quat_multiply(a: UnitQuaternion, b: UnitQuaternion) -> UnitQuaternion:
    """Quaternion product a (x) b, scalar-first Hamilton convention."""
    ea, va = a.eta, a.eps
    eb, vb = b.eta, b.eps
    s = ea * eb - va @ vb
    v = ea * vb + eb * va + np.cross(va, vb)
    return UnitQuaternion.from_parts(s, v)


def cross_matrix(v) -> np.ndarray:
    """Skew matrix v^x with v^x w = v x w."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def nu(omega) -> np.ndarray:
    """Embed a 3-vector as the pure quaternion [0, omega]."""
    omega = np.asarray(omega, dtype=float)
    return np.concatenate(([0.0], omega))


def lambda_map(Q) -> np.ndarray:
    """The 4x3 kinematics map Lambda(Q), transpose of [-eps, eta*I - eps^x].

    Satisfies Qdot = 0.5 * Lambda(Q) @ omega = 0.5 * Q (x) nu(omega); its
    columns are orthonormal and span the tangent space of S3 at Q.
    """
    w = np.asarray(Q, dtype=float)
    eta, eps = w[0], w[1:]
    out = np.empty((4, 3))
    out[0] = -eps
    # transpose of (eta*I - eps^x) is eta*I + eps^x
    out[1:] = eta * np.eye(3) + cross_matrix(eps)
    return out


def projector(x) -> np.ndarray:
    """Orthogonal projector I - x x^T onto the tangent space at unit x."""
    x = np.asarray(x, dtype=float)
    return np.eye(len(x)) - np.outer(x, x)


def kinematics_rhs(Q, omega) -> np.ndarray:
    """Attitude kinematics Qdot = 0.5 * Lambda(Q) @ omega."""
    return 0.5 * (lambda_map(Q) @ np.asarray(omega, dtype=float))


def axis_angle_quats(theta: float, axis) -> tuple[UnitQuaternion, UnitQuaternion]:
    """Both unit quaternions representing a rotation of theta about axis.

    theta must lie in [0, pi]. The +cos(theta/2) representative comes first;
    the second is its antipode.
    """
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"angle {theta} outside [0, pi]")
    axis = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(axis))
    if abs(n - 1.0) > NORM_TOL:
        raise ValueError(f"axis norm {n} not within {NORM_TOL} of 1")
    axis = axis / n
    q = UnitQuaternion.from_parts(np.cos(theta / 2.0), np.sin(theta / 2.0) * axis)
    return q, -q


def random_unit_quaternions(rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, 4) array of uniform random points on S3 (normalized Gaussians)."""
    w = rng.standard_normal((n, 4))
    return w / np.linalg.norm(w, axis=1, keepdims=True)
