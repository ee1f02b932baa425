"""Hybrid feedback: the gain map kappa, hysteresis switching, control laws,
and the measurement models the closed-loop scenarios feed the controller.

The controller only ever sees measured quaternions. There is no sign
selection or disambiguation stage in front of it; a family whose value and
feedback are consistent (even in Q) is immune to measurement sign flips by
construction, and the baseline family's sensitivity to them is exactly what
the adversarial scenarios exercise.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .potential import DegenerateSpectrumError, SpfFamily
from .quat import UnitQuaternion, lambda_map

__all__ = [
    "feedback_kappa",
    "SwitchConfig",
    "SwitchDecision",
    "switch_decision",
    "kinematic_control",
    "dynamic_control",
    "MeasurementModel",
    "Clean",
    "SignFlip",
    "GaussianDirection",
]


def feedback_kappa(family: SpfFamily, Q, q: int) -> np.ndarray:
    """kappa(Q, q) = Lambda(Q)^T grad4 U(Q, q).

    Lambda^T annihilates the component of the gradient normal to S3, so the
    ambient and tangentially projected gradients give the same kappa; it
    vanishes exactly at the critical points of U(., q).
    """
    return lambda_map(Q).T @ family.grad4(Q, q)


@dataclass(frozen=True)
class SwitchConfig:
    """Hysteresis switch: jump candidates whenever mu(Q_m, q) >= delta_h.

    delta_h must lie in (0, delta] for the family's certified gap bound
    delta; a family that certifies none (degenerate warped family) is
    rejected outright. experiment_mode lifts the delta_h range check (it
    still must be >= 0) so the two pathological regimes, zero hysteresis and
    oversized hysteresis, can be realized deliberately.
    """

    family: SpfFamily
    delta_h: float
    experiment_mode: bool = False

    def __post_init__(self) -> None:
        if self.family.delta is None:
            raise DegenerateSpectrumError(
                "family certifies no synergy gap; hysteresis switching unavailable"
            )
        if self.experiment_mode:
            if self.delta_h < 0.0:
                raise ValueError(f"delta_h {self.delta_h} negative")
        elif not 0.0 < self.delta_h <= self.family.delta:
            raise ValueError(
                f"delta_h {self.delta_h} outside (0, {self.family.delta}]"
            )


class SwitchDecision(NamedTuple):
    jump: bool
    target: int
    gap: float


def switch_decision(config: SwitchConfig, Q_meas, q: int) -> SwitchDecision:
    """Evaluate the switch on a measured quaternion.

    Returns jump=True when the synergy gap reaches delta_h and switching
    actually changes the index (with delta_h > 0 the active index can never
    be the minimizer at the threshold; the equality guard only matters in
    the zero-hysteresis experiment regime). At the exact boundary
    mu = delta_h this reports a jump; a flow-priority solver may overrule.
    """
    gap = float(config.family.synergy_gap(Q_meas, q))
    target = config.family.argmin_index(Q_meas, prefer=q)
    return SwitchDecision(gap >= config.delta_h and target != q, target, gap)


def kinematic_control(family: SpfFamily, Q_meas, q: int, k_p: float) -> np.ndarray:
    """Commanded angular velocity omega = -k_p * kappa(Q_m, q)."""
    return -k_p * feedback_kappa(family, Q_meas, q)


def dynamic_control(family: SpfFamily, Q_meas, omega, q: int,
                    k_p: float, k_d: float) -> np.ndarray:
    """Commanded torque tau = -k_p * kappa(Q_m, q) - k_d * omega."""
    return -k_p * feedback_kappa(family, Q_meas, q) - k_d * np.asarray(omega, dtype=float)


# --- measurement models ------------------------------------------------------

class MeasurementModel(ABC):
    """Maps the true quaternion to what the controller sees.

    freeze(t) captures everything time- or randomness-dependent about the
    sample at time t and returns a pure map on raw 4-vectors; the simulator
    holds that map fixed across one integration step (zero-order hold at the
    sampling rate) while still evaluating it on the integrator's stage
    states. Stochastic models draw from their stream once per freeze call.
    """

    def reset(self, seed: int | None) -> None:
        """Rewind the model's random stream; no-op for deterministic models."""

    @abstractmethod
    def freeze(self, t: float) -> Callable[[np.ndarray], np.ndarray]: ...

    def measure(self, Q, t: float) -> UnitQuaternion:
        """One-shot measurement at time t (advances any random stream)."""
        return UnitQuaternion(self.freeze(t)(np.asarray(Q, dtype=float)))


class Clean(MeasurementModel):
    """Identity measurement."""

    def freeze(self, t: float) -> Callable[[np.ndarray], np.ndarray]:
        return lambda Q4: Q4


class SignFlip(MeasurementModel):
    """Square-wave antipodal flip: Q_m = s(t) Q.

    s(t) is +1 on [0, T/2) and -1 on [T/2, T) for T = 1/frequency, so
    s(0) = +1 with 50 percent duty. The half-period index is computed with a
    1e-9 s forward nudge so step times that land on a boundary up to
    rounding fall into the correct half.
    """

    def __init__(self, frequency: float = 5.0) -> None:
        if frequency <= 0.0:
            raise ValueError(f"frequency {frequency} must be positive")
        self.frequency = float(frequency)

    def sign(self, t: float) -> float:
        half = 0.5 / self.frequency
        return 1.0 if int(math.floor(t / half + 1e-9)) % 2 == 0 else -1.0

    def freeze(self, t: float) -> Callable[[np.ndarray], np.ndarray]:
        s = self.sign(t)
        return lambda Q4: s * Q4


def _box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard normals (n even) from uniform draws via Box-Muller."""
    u1 = 1.0 - rng.random(n // 2)  # (0, 1], keeps the log finite
    u2 = rng.random(n // 2)
    r = np.sqrt(-2.0 * np.log(u1))
    return np.concatenate((r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)))


class GaussianDirection(MeasurementModel):
    """Additive noise along a random direction: Q_m = (Q + n e)/|Q + n e|.

    Per sample, e is a uniformly random unit 4-vector (four standard normals
    via Box-Muller, normalized) and n is uniform on [0, n_max]. Draws come
    from a PCG64 stream so runs are reproducible from the seed alone: five
    uniforms per sample, four through Box-Muller for e and one for n.
    """

    def __init__(self, n_max: float, seed: int | None = None) -> None:
        if n_max < 0.0:
            raise ValueError(f"n_max {n_max} negative")
        self.n_max = float(n_max)
        self.reset(seed)

    def reset(self, seed: int | None) -> None:
        self._rng = np.random.Generator(np.random.PCG64(seed))

    def freeze(self, t: float) -> Callable[[np.ndarray], np.ndarray]:
        z = _box_muller(self._rng, 4)
        e = z / np.linalg.norm(z)
        n = self.n_max * self._rng.random()
        ne = n * e

        def apply(Q4: np.ndarray) -> np.ndarray:
            w = Q4 + ne
            return w / np.linalg.norm(w)

        return apply
