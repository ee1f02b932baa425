"""Angular warping and the centrally synergistic two-member family.

The warp rotates a quaternion about the fixed axis u_q = q*u by the
state-dependent angle theta(Q) = k * |eps|^2:

    T(Q, q) = exp(S_q * theta(Q)) Q = [Xi(Q, q), (eps + Gamma(Q, q) u_q)^T]^T

with Xi = cos(theta)*eta - sin(theta)*(u_q . eps) and
Gamma = sin(theta)*eta + (cos(theta) - 1)*(u_q . eps). Composing the
quadratic base potential with T gives the family U(Q, q) = P(T(Q, q)).
Because theta is even in Q, U is consistent (U(Q,q) = U(-Q,q)), every member
vanishes exactly on the desired pair +-identity, and for distinct base
eigenvalues with u not orthogonal to any eigenvector the two members carry a
positive synergy gap at each other's undesired critical points. That gap is
certified numerically at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .potential import DegenerateSpectrumError, QuadraticPotential, SpfFamily
from .quat import NORM_TOL, UnitQuaternion, projector

__all__ = [
    "WarpParams",
    "CshFamily",
    "CriticalPoint",
    "GapBounds",
    "warp_angle",
    "xi_gamma",
    "warp",
    "warp_jacobian_det",
    "theta_fixed_point",
    "degenerate_gap_witness",
]

# Minimum |u . v_i| accepted when the base spectrum is distinct; an axis
# orthogonal to an eigenvector kills the gap at that eigenvector's critical
# point and synergism fails.
ALIGNMENT_TOL = 1e-9

FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITER = 200


@dataclass(frozen=True)
class WarpParams:
    """Warp axis u (unit 3-vector), gain k, and the quadratic base potential.

    Requires 0 < k < lambda_1/lambda_3 strictly. When the base spectrum is
    distinct, every |u . v_i| must exceed ALIGNMENT_TOL; with a repeated
    eigenvalue the eigenbasis is not unique and the check is skipped (the
    family is then constructible but certifies no gap).
    """

    u: np.ndarray
    k: float
    base: QuadraticPotential

    def __post_init__(self) -> None:
        u = np.array(self.u, dtype=float)
        if u.shape != (3,):
            raise ValueError(f"expected 3-vector axis, got shape {u.shape}")
        n = float(np.linalg.norm(u))
        if abs(n - 1.0) > NORM_TOL:
            raise ValueError(f"axis norm {n} not within {NORM_TOL} of 1")
        if n != 1.0:
            u = u / n
        u.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "k", float(self.k))
        lam = self.base.eigenvalues
        ratio = lam[0] / lam[-1]
        if not 0.0 < self.k < ratio:
            raise ValueError(f"warp gain {self.k} outside (0, {ratio})")
        if self.base.has_distinct_spectrum:
            align = self.alignments
            if np.min(np.abs(align)) <= ALIGNMENT_TOL:
                raise ValueError(
                    f"warp axis nearly orthogonal to a base eigenvector (u.v = {align})"
                )

    @property
    def alignments(self) -> np.ndarray:
        """u . v_i for each base eigenvector, in eigenvalue order."""
        return self.u @ self.base.eigenvectors


def _split(Q) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(Q, dtype=float)
    return w[..., 0], w[..., 1:]


def _theta_raw(k: float, eps: np.ndarray) -> np.ndarray:
    return k * np.sum(eps * eps, axis=-1)


def _xi_gamma_raw(k: float, u_q: np.ndarray, eta, eps):
    """Xi, Gamma plus the reusable intermediates (theta, sin, cos, u_q.eps)."""
    th = _theta_raw(k, eps)
    s, c = np.sin(th), np.cos(th)
    ue = eps @ u_q
    xi = c * eta - s * ue
    gam = s * eta + (c - 1.0) * ue
    return th, s, c, ue, xi, gam


def warp_angle(W: WarpParams, Q) -> float:
    """theta(Q) = k * |eps|^2, in [0, k]."""
    _, eps = _split(Q)
    return float(_theta_raw(W.k, eps))


def xi_gamma(W: WarpParams, Q, q: int) -> tuple[float, float]:
    """Scalar part Xi and axis coefficient Gamma of the warped quaternion."""
    eta, eps = _split(Q)
    _, _, _, _, xi, gam = _xi_gamma_raw(W.k, q * W.u, eta, eps)
    return float(xi), float(gam)


def warp(W: WarpParams, Q, q: int) -> UnitQuaternion:
    """T(Q, q): rotate Q by theta(Q) about the axis embedding of u_q = q*u."""
    eta, eps = _split(Q)
    _, _, _, _, xi, gam = _xi_gamma_raw(W.k, q * W.u, eta, eps)
    return UnitQuaternion.from_parts(xi, eps + gam * (q * W.u))


def warp_jacobian_det(W: WarpParams, Q, q: int) -> float:
    """det of the ambient Jacobian of T: 1 + 2k*eta*(eps . u_q), positive for k < 1."""
    eta, eps = _split(Q)
    return float(1.0 + 2.0 * W.k * eta * (eps @ (q * W.u)))


def theta_fixed_point(W: WarpParams, alignment: float) -> float:
    """Solve theta = k*(1 - sin(theta)^2 * alignment) on (0, k].

    alignment is (u . v_i)^2 in [0, 1]. Plain iteration from theta = k
    contracts with factor k*alignment*|sin(2 theta)| < 1 and is run until the
    iterates repeat; at float resolution that is either a true fixed point or
    a two-cycle of adjacent values, in which case the newer one is taken. The
    residual is checked against FIXED_POINT_TOL afterwards.
    """
    if not 0.0 <= alignment <= 1.0:
        raise ValueError(f"alignment {alignment} outside [0, 1]")
    k = W.k
    th = k
    prev = math.inf
    for _ in range(FIXED_POINT_MAX_ITER):
        nxt = k * (1.0 - alignment * math.sin(th) ** 2)
        if nxt == th or nxt == prev:
            th = nxt
            break
        prev, th = th, nxt
    else:
        raise RuntimeError(f"fixed-point iteration did not settle in {FIXED_POINT_MAX_ITER} steps")
    if abs(th - k * (1.0 - alignment * math.sin(th) ** 2)) > FIXED_POINT_TOL:
        raise RuntimeError("fixed-point residual above tolerance")
    return th


@dataclass(frozen=True)
class CriticalPoint:
    """One critical point of U(., q); eigen_index is None on the desired pair."""

    Q: UnitQuaternion
    q: int
    theta: float
    eigen_index: int | None

    @property
    def desired(self) -> bool:
        return self.eigen_index is None


class GapBounds(NamedTuple):
    certified: float
    closed_form: float | None
    per_index: tuple[float, float, float]
    thetas: tuple[float, float, float]


class CshFamily(SpfFamily):
    """U(Q, q) = P(T(Q, q)), evaluated through the expanded closed form.

    delta is the certified synergy-gap bound from gap_bounds(), or None when
    the base spectrum is degenerate (the family then refuses controller
    assembly but remains constructible so the degeneracy can be witnessed).
    """

    central = True

    def __init__(self, params: WarpParams) -> None:
        self.params = params
        self._A = params.base.matrix
        self._uAu = float(params.u @ self._A @ params.u)
        if params.base.has_distinct_spectrum:
            self._bounds = self.gap_bounds()
            self._delta = self._bounds.certified
        else:
            self._bounds = None
            self._delta = None

    @property
    def delta(self) -> float | None:
        return self._delta

    def value(self, Q, q: int) -> float | np.ndarray:
        eta, eps = _split(Q)
        u_q = q * self.params.u
        _, _, _, _, _, gam = _xi_gamma_raw(self.params.k, u_q, eta, eps)
        Aeps = eps @ self._A
        out = (
            np.einsum("...i,...i", eps, Aeps)
            + 2.0 * gam * (Aeps @ u_q)
            + gam * gam * self._uAu
        )
        return float(out) if np.ndim(out) == 0 else out

    def grad4(self, Q, q: int) -> np.ndarray:
        """Ambient gradient of the closed form via the chain rule.

        grad Gamma = 2k*Xi*[0, eps] + [sin(theta), (cos(theta)-1)*u_q], and
        grad U = 2*[0, A eps] + 2*Gamma*[0, A u_q]
                 + 2*(u_q . A(eps + Gamma u_q)) * grad Gamma.
        """
        eta, eps = _split(Q)
        k = self.params.k
        u_q = q * self.params.u
        _, s, c, _, xi, gam = _xi_gamma_raw(k, u_q, eta, eps)
        s, c, xi, gam = (np.asarray(x, dtype=float) for x in (s, c, xi, gam))
        Aeps = eps @ self._A
        Au = self._A @ u_q
        scal = np.asarray((eps + gam[..., None] * u_q) @ Au, dtype=float)
        grad_gam = 2.0 * k * xi[..., None] * eps + (c - 1.0)[..., None] * u_q
        g0 = 2.0 * scal * s
        gv = 2.0 * Aeps + 2.0 * gam[..., None] * Au + 2.0 * scal[..., None] * grad_gam
        return np.concatenate((g0[..., None], gv), axis=-1)

    def value_difference(self, Q, q: int) -> float | np.ndarray:
        """U(Q, q) - U(Q, -q) through the trig identity.

        Expanding with Gamma(Q, -q) = sin(theta)*eta - (cos(theta)-1)*(u_q . eps)
        collapses the member difference to
        4 sin(theta) eta ((u_q . A eps) + (cos(theta)-1)(u_q . eps)(u_q . A u_q)).
        """
        eta, eps = _split(Q)
        u_q = q * self.params.u
        th = _theta_raw(self.params.k, eps)
        s, c = np.sin(th), np.cos(th)
        ue = eps @ u_q
        out = 4.0 * s * eta * ((eps @ self._A @ u_q) + (c - 1.0) * ue * self._uAu)
        return float(out) if np.ndim(out) == 0 else out

    def theta_star(self, eigen_index: int) -> float:
        """Self-consistent warp angle at the eigen_index-th undesired points."""
        a = float(self.params.alignments[eigen_index] ** 2)
        return theta_fixed_point(self.params, a)

    def critical_points(self) -> list[CriticalPoint]:
        """All 16 critical points: 4 desired (+-identity x q) and 12 undesired.

        The undesired ones are +-exp(-S_q theta*) [0, v_i] with theta* solving
        theta = k*(1 - sin(theta)^2 (u . v_i)^2); written out,
        eta = +-sin(theta*)(u_q . v_i) and
        eps = +-(v_i + (cos(theta*) - 1)(u_q . v_i) u_q).
        """
        base = self.params.base
        if not base.has_distinct_spectrum:
            raise DegenerateSpectrumError(
                "repeated base eigenvalue: undesired critical points form circles"
            )
        pts = []
        for q in self.indices:
            for sign in (1.0, -1.0):
                pts.append(CriticalPoint(
                    UnitQuaternion([sign, 0.0, 0.0, 0.0]), q, 0.0, None))
        for i in range(3):
            th = self.theta_star(i)
            v = base.eigenvectors[:, i]
            for q in self.indices:
                u_q = q * self.params.u
                uv = float(u_q @ v)
                eta = math.sin(th) * uv
                eps = v + (math.cos(th) - 1.0) * uv * u_q
                for sign in (1.0, -1.0):
                    Qc = UnitQuaternion.from_parts(sign * eta, sign * eps)
                    pts.append(CriticalPoint(Qc, q, th, i))
        return pts

    def gap_bounds(self) -> GapBounds:
        """Certified synergy-gap bound.

        At the eigen_index-i undesired points the gap is
        mu_i = 4 sin(theta_i*)^2 (u . v_i)^2 (lambda_i - sin(theta_i*)^2 u^T A u),
        independent of q and of the antipodal sign. certified = min_i mu_i.
        closed_form is the conservative bound
        (4/3) sin(k - k^3/3)^2 (lambda_1 - mean(lambda) sin(k)^2), available
        only when u is an equal-alignment axis ((u . v_i)^2 = 1/3 for all i).
        """
        base = self.params.base
        if not base.has_distinct_spectrum:
            raise DegenerateSpectrumError("repeated base eigenvalue: no positive gap exists")
        lam = base.eigenvalues
        align2 = self.params.alignments ** 2
        thetas = []
        mus = []
        for i in range(3):
            th = theta_fixed_point(self.params, float(align2[i]))
            s2 = math.sin(th) ** 2
            mus.append(4.0 * s2 * float(align2[i]) * (float(lam[i]) - s2 * self._uAu))
            thetas.append(th)
        certified = min(mus)
        if certified <= 0.0:
            raise ValueError(f"non-positive synergy bound {certified}; warp gain too large")
        closed = None
        if np.max(np.abs(align2 - 1.0 / 3.0)) < 1e-9:
            k = self.params.k
            mean_lam = float(np.sum(lam)) / 3.0
            closed = (4.0 / 3.0) * math.sin(k - k ** 3 / 3.0) ** 2 * (
                float(lam[0]) - mean_lam * math.sin(k) ** 2
            )
        return GapBounds(certified, closed, tuple(mus), tuple(thetas))


class DegenerateWitness(NamedTuple):
    v: np.ndarray
    Q: UnitQuaternion
    q: int
    gap: float
    grad_residual: float


def degenerate_gap_witness(family: CshFamily) -> DegenerateWitness:
    """Exhibit the obstruction to synergism under a repeated base eigenvalue.

    Inside a repeated eigenspace there is always a unit eigenvector v with
    u . v = 0. The point Q = [0, v] is then critical for both members
    (theta(Q) = k and the warp leaves [0, v] fixed), and the synergy gap
    there vanishes, so no positive bound delta can exist.
    """
    base = family.params.base
    if base.has_distinct_spectrum:
        raise ValueError("base spectrum is distinct; no degenerate witness exists")
    lam = base.eigenvalues
    vecs = base.eigenvectors
    gaps = np.diff(lam) / lam[-1]
    i = int(np.argmin(gaps))  # adjacent pair forming the repeat
    vi, vj = vecs[:, i], vecs[:, i + 1]
    u = family.params.u
    w = (u @ vj) * vi - (u @ vi) * vj
    n = float(np.linalg.norm(w))
    v = vi if n < 1e-12 else w / n
    Q = UnitQuaternion.from_parts(0.0, v)
    q = 1
    gap = float(family.synergy_gap(Q, q))
    res = float(np.linalg.norm(projector(Q) @ family.grad4(Q, q)))
    return DegenerateWitness(v, Q, q, gap, res)
