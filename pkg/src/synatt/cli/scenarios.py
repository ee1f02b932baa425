"""Scenario definitions: built-in study cases and the key=value file format.

Built-ins sim1..sim4 reproduce the reference study setup: a rigid body with
J = diag(6.4, 6.7, 9.3) kg m^2, the potential matrix A = diag(0.6, 0.8, 1),
warp axis u = (1,1,1)/sqrt(3), warp gain k = 0.54, hysteresis delta_h = 0.1,
and PD gains k_p = 30, k_d = 15.

  sim1  escape from an undesired equilibrium: switching controller vs. the
        same potential with the logic frozen at q = 1 (clean measurements)
  sim2  5 Hz quaternion sign-flip measurement from Q0 = [0, 0.6, 0.8, 0]
  sim3  additive direction noise, n_max = 0.05, same Q0
  sim4  additive direction noise, n_max = 0.13, same Q0

Scenario files are flat `key = value` text (one controller per file); see
`parse_scenario_file` for the key set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..controller import Clean, GaussianDirection, MeasurementModel, SignFlip, SwitchConfig
from ..hybrid_sim import PlantState, Scenario, SolverConfig
from ..potential import NcshFamily, QuadraticPotential, SpfFamily
from ..quat import UnitQuaternion
from ..warping import CshFamily, WarpParams

__all__ = [
    "SpfParams",
    "LegSpec",
    "ScenarioSpec",
    "builtin_scenarios",
    "load_scenario",
    "parse_scenario_file",
    "pick_critical_point",
]

_SQ3 = 1.0 / math.sqrt(3.0)

# reference study parameter block
STUDY_A = (0.6, 0.8, 1.0)
STUDY_U = (_SQ3, _SQ3, _SQ3)
STUDY_K = 0.54
STUDY_J = (6.4, 6.7, 9.3)
STUDY_DELTA_H = 0.1
STUDY_KP = 30.0
STUDY_KD = 15.0
DEFAULT_SEED = 7


@dataclass(frozen=True)
class SpfParams:
    """Potential family parameters; defaults are the reference study values."""

    A_diag: tuple = STUDY_A
    u: tuple = STUDY_U
    k: float = STUDY_K
    ncsh_delta: float = 0.5

    def base(self) -> QuadraticPotential:
        return QuadraticPotential(np.diag(self.A_diag))

    def build(self, controller: str) -> SpfFamily:
        if controller in ("csh", "cs-fixed"):
            return CshFamily(WarpParams(np.array(self.u), self.k, self.base()))
        if controller == "ncsh":
            return NcshFamily(self.ncsh_delta)
        raise ValueError(f"unknown controller kind {controller!r}")


def pick_critical_point(family: CshFamily, eigen_index: int, q: int,
                        sign: int) -> UnitQuaternion:
    """Select one constructed undesired critical point.

    eigen_index is 0-based into the ascending eigenvalues; sign picks the
    antipodal representative whose scalar part matches sign(eta) (eta > 0
    for +1 whenever the warp axis is not orthogonal to the eigenvector).
    """
    for cp in family.critical_points():
        if cp.desired or cp.eigen_index != eigen_index or cp.q != q:
            continue
        eta = float(np.asarray(cp.Q)[0])
        if math.copysign(1.0, eta) == float(sign):
            return cp.Q
    raise ValueError(f"no undesired critical point with index {eigen_index}, "
                     f"q {q}, sign {sign}")


@dataclass(frozen=True)
class LegSpec:
    """One controller variant inside a scenario."""

    label: str
    controller: str                 # csh | ncsh | cs-fixed
    q0: int = 1
    Q0: object = (1.0, 0.0, 0.0, 0.0)   # 4 floats, or "critpoint[:IDX[:SIGN]]"
    omega0: tuple = (0.0, 0.0, 0.0)
    measurement: str = "clean"      # clean | signflip | gaussian
    flip_hz: float = 5.0
    n_max: float = 0.05
    spf: SpfParams = field(default_factory=SpfParams)
    delta_h: float = STUDY_DELTA_H
    k_p: float = STUDY_KP
    k_d: float = STUDY_KD
    J_diag: tuple = STUDY_J
    t_max: float = 10.0
    step: float = 1e-3
    loop: str = "dynamic"
    experiment_mode: bool = False

    def _initial_quaternion(self, family: SpfFamily) -> UnitQuaternion:
        spec = self.Q0
        if isinstance(spec, str):
            parts = spec.split(":")
            if parts[0] != "critpoint":
                raise ValueError(f"bad Q0 spec {spec!r}")
            idx = int(parts[1]) if len(parts) > 1 else 3
            sign = {"+": 1, "-": -1, "1": 1, "-1": -1}[parts[2]] if len(parts) > 2 else 1
            if not isinstance(family, CshFamily):
                family = self.spf.build("csh")
            return pick_critical_point(family, idx - 1, self.q0, sign)
        arr = np.asarray(spec, dtype=float)
        return UnitQuaternion(arr / np.linalg.norm(arr))

    def _measurement(self) -> MeasurementModel:
        if self.measurement == "clean":
            return Clean()
        if self.measurement == "signflip":
            return SignFlip(self.flip_hz)
        if self.measurement == "gaussian":
            return GaussianDirection(self.n_max)
        raise ValueError(f"unknown measurement model {self.measurement!r}")

    def build(self, seed: int | None, step: float | None = None,
              t_max: float | None = None) -> Scenario:
        family = self.spf.build(self.controller)
        Q0 = self._initial_quaternion(family)
        plant = PlantState(Q0, np.asarray(self.omega0, dtype=float),
                           np.diag(self.J_diag))
        switch = None
        if self.controller != "cs-fixed":
            switch = SwitchConfig(family, self.delta_h,
                                  experiment_mode=self.experiment_mode)
        config = SolverConfig(step=self.step if step is None else step,
                              t_max=self.t_max if t_max is None else t_max)
        return Scenario(family=family, plant=plant, q0=self.q0,
                        k_p=self.k_p, k_d=self.k_d,
                        measurement=self._measurement(), config=config,
                        switch=switch, loop=self.loop, seed=seed,
                        label=self.label)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    legs: tuple
    seed: int = DEFAULT_SEED


def builtin_scenarios() -> dict:
    crit = "critpoint:3:+"
    q02 = (0.0, 0.6, 0.8, 0.0)
    sims = {
        "sim1": ScenarioSpec("sim1", (
            LegSpec("csh", "csh", q0=1, Q0=crit, t_max=10.0),
            LegSpec("cs_fixed_q1", "cs-fixed", q0=1, Q0=crit, t_max=10.0),
        )),
        "sim2": ScenarioSpec("sim2", (
            LegSpec("csh", "csh", q0=-1, Q0=q02, measurement="signflip",
                    flip_hz=5.0, t_max=5.0),
            LegSpec("ncsh", "ncsh", q0=1, Q0=q02, measurement="signflip",
                    flip_hz=5.0, t_max=5.0),
        )),
        "sim3": ScenarioSpec("sim3", (
            LegSpec("csh", "csh", q0=-1, Q0=q02, measurement="gaussian",
                    n_max=0.05, t_max=10.0),
            LegSpec("ncsh", "ncsh", q0=1, Q0=q02, measurement="gaussian",
                    n_max=0.05, t_max=10.0),
        )),
        "sim4": ScenarioSpec("sim4", (
            LegSpec("csh", "csh", q0=-1, Q0=q02, measurement="gaussian",
                    n_max=0.13, t_max=10.0),
            LegSpec("ncsh", "ncsh", q0=1, Q0=q02, measurement="gaussian",
                    n_max=0.13, t_max=10.0),
        )),
    }
    return sims


_VEC_KEYS = {"Q0": 4, "omega0": 3, "A": 3, "u": 3, "J": 3}
_FLOAT_KEYS = {"flip_hz", "n_max", "k", "ncsh_delta", "delta_h",
               "k_p", "k_d", "t_max", "step"}
_INT_KEYS = {"q0", "seed"}
_BOOL_KEYS = {"experiment_mode"}
_STR_KEYS = {"name", "label", "controller", "measurement", "loop"}


def parse_scenario_file(path) -> ScenarioSpec:
    """Parse a flat key=value scenario file into a single-leg scenario.

    Keys: name, controller, q0, Q0 (four comma floats or critpoint[:IDX[:SIGN]]),
    omega0, measurement, flip_hz, n_max, A, u, k, ncsh_delta, delta_h, k_p,
    k_d, J, t_max, step, seed, loop, experiment_mode. '#' starts a comment.
    """
    from pathlib import Path

    path = Path(path)
    kv: dict = {}
    for i, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{i}: expected key = value, got {raw!r}")
        key, val = key.strip(), val.strip()
        if key in _VEC_KEYS:
            if key == "Q0" and val.startswith("critpoint"):
                kv[key] = val
            else:
                parts = tuple(float(p) for p in val.split(","))
                if len(parts) != _VEC_KEYS[key]:
                    raise ValueError(f"{path}:{i}: {key} needs {_VEC_KEYS[key]} values")
                kv[key] = parts
        elif key in _FLOAT_KEYS:
            kv[key] = float(val)
        elif key in _INT_KEYS:
            kv[key] = int(val)
        elif key in _BOOL_KEYS:
            kv[key] = val.lower() in ("1", "true", "yes", "on")
        elif key in _STR_KEYS:
            kv[key] = val
        else:
            raise ValueError(f"{path}:{i}: unknown key {key!r}")

    if "controller" not in kv:
        raise ValueError(f"{path}: missing required key 'controller'")
    name = kv.pop("name", path.stem)
    seed = kv.pop("seed", DEFAULT_SEED)
    spf = SpfParams(A_diag=kv.pop("A", STUDY_A), u=kv.pop("u", STUDY_U),
                    k=kv.pop("k", STUDY_K),
                    ncsh_delta=kv.pop("ncsh_delta", 0.5))
    leg = LegSpec(label=kv.pop("label", kv["controller"]),
                  controller=kv.pop("controller"),
                  q0=kv.pop("q0", 1),
                  Q0=kv.pop("Q0", (1.0, 0.0, 0.0, 0.0)),
                  omega0=kv.pop("omega0", (0.0, 0.0, 0.0)),
                  measurement=kv.pop("measurement", "clean"),
                  flip_hz=kv.pop("flip_hz", 5.0),
                  n_max=kv.pop("n_max", 0.05),
                  spf=spf,
                  delta_h=kv.pop("delta_h", STUDY_DELTA_H),
                  k_p=kv.pop("k_p", STUDY_KP),
                  k_d=kv.pop("k_d", STUDY_KD),
                  J_diag=kv.pop("J", STUDY_J),
                  t_max=kv.pop("t_max", 10.0),
                  step=kv.pop("step", 1e-3),
                  loop=kv.pop("loop", "dynamic"),
                  experiment_mode=kv.pop("experiment_mode", False))
    return ScenarioSpec(name, (leg,), seed=seed)


def load_scenario(name_or_path: str) -> ScenarioSpec:
    """Resolve a built-in scenario name or fall back to a file path."""
    sims = builtin_scenarios()
    if name_or_path in sims:
        return sims[name_or_path]
    from pathlib import Path

    p = Path(name_or_path)
    if p.is_file():
        return parse_scenario_file(p)
    raise KeyError(f"unknown scenario {name_or_path!r} "
                   f"(built-ins: {', '.join(sorted(sims))})")
