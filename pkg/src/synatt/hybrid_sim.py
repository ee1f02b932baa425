"""Hybrid flow/jump solver for the closed-loop attitude system.

Solutions are parameterized by hybrid time (t, j): t advances during flows,
j counts switches of the logic index q. The solver is a fixed-step RK4
integrator with jump detection by sampling the synergy gap at step
boundaries; the hysteresis width makes sub-step event localization
unnecessary. Within one step the logic index and the measurement sample are
frozen (zero-order hold at the sampling rate 1/h) while the control law is
re-evaluated at each RK4 stage from the stage's state.

Two closed loops are supported. The dynamic loop drives the rigid body

    Qdot = 0.5 Lambda(Q) omega,   J omegadot = -omega x (J omega) + tau,
    tau  = -k_p kappa(Q_m, q) - k_d omega,

and the kinematic loop commands the angular velocity directly,
omega = -k_p kappa(Q_m, q). Trace rows record the true state; the mu column
is the switch signal evaluated on the measured quaternion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .controller import MeasurementModel, SwitchConfig, feedback_kappa
from .potential import SpfFamily
from .quat import UnitQuaternion, lambda_map

__all__ = [
    "HybridTime",
    "PlantState",
    "SolverConfig",
    "Scenario",
    "SimTrace",
    "SimulationAbort",
    "plant_rhs",
    "step_flow",
    "run",
    "lyapunov_monitor",
    "MonitorReport",
    "dissipation_rate_check",
]


class SimulationAbort(RuntimeError):
    """Raised when the integrator produces a non-finite state."""


class HybridTime(NamedTuple):
    t: float
    j: int


@dataclass
class PlantState:
    """Rigid-body state: attitude Q, body rates omega, inertia J (fixed)."""

    Q: UnitQuaternion
    omega: np.ndarray
    inertia: np.ndarray

    def __post_init__(self) -> None:
        self.omega = np.asarray(self.omega, dtype=float)
        J = np.asarray(self.inertia, dtype=float)
        if J.shape != (3, 3):
            raise ValueError(f"inertia must be 3x3, got {J.shape}")
        if np.max(np.abs(J - J.T)) > 1e-12 or np.any(np.linalg.eigvalsh(J) <= 0.0):
            raise ValueError("inertia must be symmetric positive definite")
        self.inertia = J


@dataclass(frozen=True)
class SolverConfig:
    step: float = 1e-3
    t_max: float = 20.0
    j_max: int = 1_000_000
    jump_priority: bool = True  # at mu == delta_h exactly, jump wins
    renormalize: bool = True

    def __post_init__(self) -> None:
        if self.step <= 0.0 or self.t_max <= 0.0 or self.j_max < 0:
            raise ValueError("step and t_max must be positive, j_max nonnegative")


@dataclass
class Scenario:
    """Everything one run needs. switch=None disables jumps (fixed logic)."""

    family: SpfFamily
    plant: PlantState
    q0: int
    k_p: float
    k_d: float
    measurement: MeasurementModel
    config: SolverConfig
    switch: SwitchConfig | None = None
    loop: str = "dynamic"  # "dynamic" or "kinematic"
    seed: int | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.loop not in ("dynamic", "kinematic"):
            raise ValueError(f"unknown loop kind {self.loop!r}")
        if self.q0 not in self.family.indices:
            raise ValueError(f"q0 {self.q0} not a family index")
        if self.k_p <= 0.0 or self.k_d < 0.0:
            raise ValueError("k_p must be positive, k_d nonnegative")


class SimTrace:
    """Sampled hybrid arc plus run metadata.

    Arrays are row-per-sample: t, j, q, quat (N,4), omega (N,3), tau (N,3),
    V, mu. A jump inserts a second row at the same t with j and q updated;
    `jumps` lists the indices of those post-jump rows. For kinematic runs
    the omega column holds the commanded rate and tau is zero.
    """

    def __init__(self, meta: dict | None = None) -> None:
        self._rows: list[tuple] = []
        self.jumps: list[int] = []
        self.termination: str = ""
        self.meta: dict = dict(meta or {})
        self._final: dict | None = None

    def append(self, t: float, j: int, Q4: np.ndarray, q: int, omega: np.ndarray,
               tau: np.ndarray, V: float, mu: float) -> None:
        self._rows.append((t, j, Q4.copy(), q, omega.copy(), tau.copy(), V, mu))
        self._final = None

    def __len__(self) -> int:
        return len(self._rows)

    def _columns(self) -> dict:
        if self._final is None:
            rows = self._rows
            self._final = {
                "t": np.array([r[0] for r in rows]),
                "j": np.array([r[1] for r in rows], dtype=int),
                "quat": np.array([r[2] for r in rows]),
                "q": np.array([r[3] for r in rows], dtype=int),
                "omega": np.array([r[4] for r in rows]),
                "tau": np.array([r[5] for r in rows]),
                "V": np.array([r[6] for r in rows]),
                "mu": np.array([r[7] for r in rows]),
            }
        return self._final

    @property
    def t(self) -> np.ndarray:
        return self._columns()["t"]

    @property
    def j(self) -> np.ndarray:
        return self._columns()["j"]

    @property
    def quat(self) -> np.ndarray:
        return self._columns()["quat"]

    @property
    def eta(self) -> np.ndarray:
        return self._columns()["quat"][:, 0]

    @property
    def q(self) -> np.ndarray:
        return self._columns()["q"]

    @property
    def omega(self) -> np.ndarray:
        return self._columns()["omega"]

    @property
    def tau(self) -> np.ndarray:
        return self._columns()["tau"]

    @property
    def V(self) -> np.ndarray:
        return self._columns()["V"]

    @property
    def mu(self) -> np.ndarray:
        return self._columns()["mu"]


def plant_rhs(state: PlantState, tau) -> tuple[np.ndarray, np.ndarray]:
    """Rigid-body attitude dynamics.

    Qdot = 0.5 Lambda(Q) omega; omegadot = J^-1 (-omega x (J omega) + tau).
    """
    w = state.omega
    Qdot = 0.5 * (lambda_map(state.Q) @ w)
    wdot = np.linalg.solve(state.inertia, tau - np.cross(w, state.inertia @ w))
    return Qdot, wdot


def _rk4(y: np.ndarray, h: float, f) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _dynamic_field(family, frozen_meas, q, k_p, k_d, J, Jinv):
    def f(y: np.ndarray) -> np.ndarray:
        Q4, w = y[:4], y[4:]
        Qm = frozen_meas(Q4)
        kappa = lambda_map(Qm).T @ family.grad4(Qm, q)
        tau = -k_p * kappa - k_d * w
        out = np.empty(7)
        out[:4] = 0.5 * (lambda_map(Q4) @ w)
        out[4:] = Jinv @ (tau - np.cross(w, J @ w))
        return out
    return f


def _kinematic_field(family, frozen_meas, q, k_p):
    def f(Q4: np.ndarray) -> np.ndarray:
        Qm = frozen_meas(Q4)
        w_cmd = -k_p * (lambda_map(Qm).T @ family.grad4(Qm, q))
        return 0.5 * (lambda_map(Q4) @ w_cmd)
    return f


def step_flow(state: PlantState, family: SpfFamily, q: int, k_p: float, k_d: float,
              config: SolverConfig, frozen_meas=None) -> PlantState:
    """One RK4 flow step of the dynamic closed loop; q frozen (qdot = 0).

    frozen_meas is the per-step measurement map (identity when None); the
    control law is re-evaluated at every stage state through it.
    """
    if frozen_meas is None:
        frozen_meas = lambda Q4: Q4
    J = state.inertia
    Jinv = np.linalg.inv(J)
    f = _dynamic_field(family, frozen_meas, q, k_p, k_d, J, Jinv)
    y = np.concatenate((np.asarray(state.Q, dtype=float), state.omega))
    y = _rk4(y, config.step, f)
    if not np.all(np.isfinite(y)):
        raise SimulationAbort("non-finite state after flow step")
    Q4 = y[:4]
    if config.renormalize:
        Q4 = Q4 / np.linalg.norm(Q4)
    return PlantState(UnitQuaternion(Q4), y[4:], J)


def run(scenario: Scenario) -> SimTrace:
    """Simulate one hybrid arc.

    Each sample time: freeze the measurement, evaluate the synergy gap on
    the measured quaternion, record a row; under jump priority a gap at or
    above delta_h switches q (one extra row at the same t, j+1) before any
    further flow. Terminates at t >= t_max or j >= j_max.
    """
    cfg = scenario.config
    family = scenario.family
    dyn = scenario.loop == "dynamic"
    J = scenario.plant.inertia
    Jinv = np.linalg.inv(J)
    k_p, k_d = scenario.k_p, scenario.k_d

    scenario.measurement.reset(scenario.seed)

    sw = scenario.switch
    delta_h = sw.delta_h if sw is not None else None

    meta = {
        "label": scenario.label,
        "loop": scenario.loop,
        "family": type(family).__name__,
        "q0": scenario.q0,
        "k_p": k_p,
        "k_d": k_d,
        "delta_h": delta_h,
        "step": cfg.step,
        "t_max": cfg.t_max,
        "j_max": cfg.j_max,
        "seed": scenario.seed,
        "inertia_diag": tuple(np.diag(J)),
    }
    trace = SimTrace(meta)

    Q4 = np.array(scenario.plant.Q, dtype=float)
    w = scenario.plant.omega.copy()
    q = scenario.q0
    j = 0
    h = cfg.step
    n_steps = int(round(cfg.t_max / h))

    def control(Qm4: np.ndarray, w_now: np.ndarray) -> np.ndarray:
        kappa = lambda_map(Qm4).T @ family.grad4(Qm4, q)
        return -k_p * kappa - k_d * w_now

    def record(t: float, mu: float, frozen) -> None:
        Qm4 = frozen(Q4)
        if dyn:
            tau = control(Qm4, w)
            V = float(family.value(Q4, q)) + float(w @ (J @ w)) / (4.0 * k_p)
            omega_row = w
        else:
            tau = np.zeros(3)
            V = float(family.value(Q4, q))
            omega_row = -k_p * (lambda_map(Qm4).T @ family.grad4(Qm4, q))
        trace.append(t, j, Q4, q, omega_row, tau, V, mu)

    reason = ""
    # divergence is detected on the state and reported as an abort; the
    # intermediate overflow warnings are noise
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_steps + 1):
            t = i * h
            frozen = scenario.measurement.freeze(t)
            Qm4 = frozen(Q4)
            gap = float(family.synergy_gap(Qm4, q))
            record(t, gap, frozen)

            if sw is not None and j < cfg.j_max:
                target = family.argmin_index(Qm4, prefer=q)
                trigger = gap >= delta_h if cfg.jump_priority else gap > delta_h
                if trigger and target != q:
                    q = target
                    j += 1
                    record(t, float(family.synergy_gap(Qm4, q)), frozen)
                    trace.jumps.append(len(trace) - 1)
            if j >= cfg.j_max:
                reason = "j_max"
                break
            if i == n_steps:
                reason = "t_max"
                break

            if dyn:
                y = _rk4(np.concatenate((Q4, w)),
                         h, _dynamic_field(family, frozen, q, k_p, k_d, J, Jinv))
                Q4, w = y[:4], y[4:]
            else:
                Q4 = _rk4(Q4, h, _kinematic_field(family, frozen, q, k_p))
            if not np.all(np.isfinite(Q4)) or not np.all(np.isfinite(w)):
                raise SimulationAbort(f"non-finite state at t = {t + h}")
            if cfg.renormalize:
                Q4 = Q4 / np.linalg.norm(Q4)

    trace.termination = reason
    trace.meta["termination"] = reason
    return trace


@dataclass
class MonitorReport:
    flow_violations: list = field(default_factory=list)
    jump_violations: list = field(default_factory=list)
    max_flow_increase: float = 0.0
    n_jumps: int = 0

    @property
    def ok(self) -> bool:
        return not self.flow_violations and not self.jump_violations


def _trace_V(trace: SimTrace, family: SpfFamily, k_p: float, inertia) -> np.ndarray:
    """Recompute the Lyapunov sequence from the raw trace columns."""
    U = np.array([float(family.value(trace.quat[i], int(trace.q[i])))
                  for i in range(len(trace))])
    if trace.meta.get("loop") == "kinematic":
        return U
    Jw = trace.omega @ np.asarray(inertia, dtype=float).T
    return U + np.sum(trace.omega * Jw, axis=1) / (4.0 * k_p)


def lyapunov_monitor(trace: SimTrace, family: SpfFamily, k_p: float | None = None,
                     inertia=None, delta_h: float | None = None) -> MonitorReport:
    """Check the Lyapunov decrease conditions along a recorded trace.

    Flags any flow interval where V increases by more than 1e-6*(1 + V) and
    any jump where the decrease falls short of delta_h - 1e-9. Defaults for
    k_p, inertia, delta_h come from the trace metadata.
    """
    k_p = trace.meta["k_p"] if k_p is None else k_p
    inertia = np.diag(trace.meta["inertia_diag"]) if inertia is None else inertia
    delta_h = trace.meta.get("delta_h") if delta_h is None else delta_h
    V = _trace_V(trace, family, k_p, inertia)
    jump_rows = set(trace.jumps)
    report = MonitorReport(n_jumps=len(trace.jumps))
    for i in range(1, len(trace)):
        dV = V[i] - V[i - 1]
        if i in jump_rows:
            if delta_h is not None and dV > -delta_h + 1e-9:
                report.jump_violations.append((i, dV))
        else:
            report.max_flow_increase = max(report.max_flow_increase, dV)
            if dV > 1e-6 * (1.0 + V[i - 1]):
                report.flow_violations.append((i, dV))
    return report


def dissipation_rate_check(trace: SimTrace, family: SpfFamily, k_p: float,
                           k_d: float, inertia, rel_floor: float = 1e-3) -> tuple[float, int]:
    """Compare dV/dt along flows against the predicted rate.

    The dynamic loop dissipates at Vdot = -(k_d/(2 k_p)) |omega|^2; the
    kinematic loop at -(k_p/2)|proj grad|^2 = -(1/(2 k_p))|omega_cmd|^2. The
    numerical derivative uses a five-point central stencil on jump-free
    segments. Returns (max relative mismatch, number of points checked),
    with points below rel_floor of the peak rate excluded from the relative
    comparison.
    """
    V = _trace_V(trace, family, k_p, inertia)
    if trace.meta.get("loop") == "kinematic":
        expected = -np.sum(trace.omega ** 2, axis=1) / (2.0 * k_p)
    else:
        expected = -(k_d / (2.0 * k_p)) * np.sum(trace.omega ** 2, axis=1)
    h = trace.meta["step"]
    scale = np.max(np.abs(expected))
    if scale < 1e-12:  # equilibrium trace: no measurable dissipation
        return 0.0, 0
    worst = 0.0
    checked = 0
    # jump rows duplicate t; restrict stencils to maximal constant-j segments
    j = trace.j
    seg_starts = [0] + [i for i in range(1, len(j)) if j[i] != j[i - 1]]
    seg_ends = [i - 1 for i in seg_starts[1:]] + [len(j) - 1]
    for a, b in zip(seg_starts, seg_ends):
        for i in range(a + 2, b - 1):
            num = (-V[i + 2] + 8.0 * V[i + 1] - 8.0 * V[i - 1] + V[i - 2]) / (12.0 * h)
            if abs(expected[i]) < rel_floor * scale:
                continue
            worst = max(worst, abs(num - expected[i]) / abs(expected[i]))
            checked += 1
    return worst, checked
