"""Potential functions on S3 and the switched-family interface.

A potential family assigns each logic index q in {-1, +1} a nonnegative
function of the attitude. The synergy gap

    mu(Q, q) = U(Q, q) - min_p U(Q, p)

measures how far the active member is from the family minimum and drives the
hysteresis switch. Two families live here and in `warping`: the noncentrally
synergistic baseline U(Q, q) = 1 - q*eta, and the centrally synergistic
warped family built from the quadratic base potential P(Q) = eps^T A eps.

value() and grad4() accept a single quaternion or an (..., 4) stack and
broadcast over leading axes; grad4 returns the ambient R4 gradient, with
tangential projection left to consumers (the feedback law only ever sees the
gradient through Lambda^T, which annihilates the normal component).
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .quat import UnitQuaternion

__all__ = [
    "DegenerateSpectrumError",
    "QuadraticPotential",
    "SpfFamily",
    "NcshFamily",
]

# Relative spacing below which two eigenvalues count as a repeat. Synergism
# of the warped family is impossible under exact repeats, so ties must flag.
EIG_GAP_REL = 1e-9

SYM_TOL = 1e-12


class DegenerateSpectrumError(ValueError):
    """Raised where a construction requires three distinct eigenvalues."""


def _split(Q) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(Q, dtype=float)
    return w[..., 0], w[..., 1:]


class QuadraticPotential:
    """P(Q) = eps^T A eps for symmetric positive-definite A.

    The eigendecomposition is computed once at construction and cached with
    eigenvalues ascending.
    """

    def __init__(self, A) -> None:
        A = np.array(A, dtype=float)
        if A.shape != (3, 3):
            raise ValueError(f"expected 3x3 matrix, got shape {A.shape}")
        if np.max(np.abs(A - A.T)) > SYM_TOL:
            raise ValueError("matrix is not symmetric")
        vals, vecs = np.linalg.eigh(A)
        if vals[0] <= 0.0:
            raise ValueError(f"matrix is not positive definite (min eigenvalue {vals[0]})")
        A.flags.writeable = False
        vals.flags.writeable = False
        vecs.flags.writeable = False
        self._A = A
        self._vals = vals
        self._vecs = vecs

    @property
    def matrix(self) -> np.ndarray:
        return self._A

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues ascending, so [0] is the smallest."""
        return self._vals

    @property
    def eigenvectors(self) -> np.ndarray:
        """Unit eigenvectors as columns, ordered to match eigenvalues."""
        return self._vecs

    @property
    def has_distinct_spectrum(self) -> bool:
        gaps = np.diff(self._vals) / self._vals[-1]
        return bool(np.all(gaps > EIG_GAP_REL))

    def value(self, Q) -> float | np.ndarray:
        _, eps = _split(Q)
        out = np.einsum("...i,ij,...j", eps, self._A, eps)
        return float(out) if out.ndim == 0 else out

    def grad4(self, Q) -> np.ndarray:
        """Ambient gradient [0, 2 A eps]."""
        eta, eps = _split(Q)
        g = np.zeros(np.shape(eta) + (4,))
        g[..., 1:] = 2.0 * (eps @ self._A)
        return g

    def critical_points(self) -> list[UnitQuaternion]:
        """The eight critical points of P on S3: +-identity and +-[0, v_i].

        Requires distinct eigenvalues; with a repeated eigenvalue the
        critical set contains whole circles and cannot be enumerated.
        """
        if not self.has_distinct_spectrum:
            raise DegenerateSpectrumError(
                "repeated eigenvalue: critical set of P is not a finite point set"
            )
        pts = [UnitQuaternion([1.0, 0.0, 0.0, 0.0]), UnitQuaternion([-1.0, 0.0, 0.0, 0.0])]
        for i in range(3):
            v = self._vecs[:, i]
            pts.append(UnitQuaternion.from_parts(0.0, v))
            pts.append(UnitQuaternion.from_parts(0.0, -v))
        return pts


class SpfFamily(ABC):
    """Two-member switched potential family indexed by q in {-1, +1}."""

    indices: tuple[int, int] = (-1, 1)

    #: True when every member vanishes on both desired points +-identity.
    central: bool = False

    @abstractmethod
    def value(self, Q, q: int) -> float | np.ndarray: ...

    @abstractmethod
    def grad4(self, Q, q: int) -> np.ndarray: ...

    @property
    @abstractmethod
    def delta(self) -> float | None:
        """Certified synergy-gap bound, or None when the family has none."""

    def synergy_gap(self, Q, q: int) -> float | np.ndarray:
        """mu(Q, q) = U(Q, q) - min_p U(Q, p), here max{0, U(Q,q) - U(Q,-q)}."""
        diff = self.value(Q, q) - self.value(Q, -q)
        out = np.maximum(0.0, diff)
        return float(out) if np.ndim(out) == 0 else out

    def argmin_index(self, Q, prefer: int | None = None) -> int:
        """The index minimizing U(Q, .); ties resolve to `prefer` when given."""
        lo, hi = self.indices
        vlo, vhi = self.value(Q, lo), self.value(Q, hi)
        if vlo == vhi and prefer in self.indices:
            return prefer
        return lo if vlo <= vhi else hi


class NcshFamily(SpfFamily):
    """Baseline family U(Q, q) = 1 - q*eta.

    Each member alone vanishes only at one of the two antipodal identity
    representatives, so the family is synergistic but not centrally so, and
    its feedback q*eps flips sign under Q -> -Q (it is inconsistent). The
    admissible gap bound is any delta in (0, 1); it is stored as
    configuration rather than derived.
    """

    central = False

    def __init__(self, delta: float = 0.5) -> None:
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta {delta} outside (0, 1)")
        self._delta = float(delta)

    @property
    def delta(self) -> float:
        return self._delta

    def value(self, Q, q: int) -> float | np.ndarray:
        eta, _ = _split(Q)
        out = 1.0 - q * eta
        return float(out) if np.ndim(out) == 0 else out

    def grad4(self, Q, q: int) -> np.ndarray:
        eta, _ = _split(Q)
        g = np.zeros(np.shape(eta) + (4,))
        g[..., 0] = -float(q)
        return g

    def feedback(self, Q, q: int) -> np.ndarray:
        """Closed-form feedback q*eps (equals Lambda^T grad4 identically)."""
        _, eps = _split(Q)
        return q * eps
