"""Quaternion attitude stabilization via synergistic switching potentials.

The package builds a two-member family of warped quadratic potentials on the
unit-quaternion manifold, certifies its synergy gap, and closes the loop with
hysteresis-switched PD feedback simulated by a hybrid flow/jump solver. A
noncentrally synergistic baseline controller is included for comparison
under corrupted quaternion measurements.
"""

from .controller import (
    Clean,
    GaussianDirection,
    MeasurementModel,
    SignFlip,
    SwitchConfig,
    SwitchDecision,
    dynamic_control,
    feedback_kappa,
    kinematic_control,
    switch_decision,
)
from .hybrid_sim import (
    PlantState,
    Scenario,
    SimTrace,
    SimulationAbort,
    SolverConfig,
    lyapunov_monitor,
    plant_rhs,
    run,
    step_flow,
)
from .potential import (
    DegenerateSpectrumError,
    NcshFamily,
    QuadraticPotential,
    SpfFamily,
)
from .quat import (
    IDENTITY,
    UnitQuaternion,
    axis_angle_quats,
    kinematics_rhs,
    lambda_map,
    nu,
    projector,
    quat_multiply,
)
from .warping import (
    CriticalPoint,
    CshFamily,
    GapBounds,
    WarpParams,
    degenerate_gap_witness,
    theta_fixed_point,
    warp,
    warp_angle,
    warp_jacobian_det,
    xi_gamma,
)

__version__ = "0.1.0"

__all__ = [
    "Clean",
    "CriticalPoint",
    "CshFamily",
    "DegenerateSpectrumError",
    "GapBounds",
    "GaussianDirection",
    "IDENTITY",
    "MeasurementModel",
    "NcshFamily",
    "PlantState",
    "QuadraticPotential",
    "Scenario",
    "SignFlip",
    "SimTrace",
    "SimulationAbort",
    "SolverConfig",
    "SpfFamily",
    "SwitchConfig",
    "SwitchDecision",
    "UnitQuaternion",
    "WarpParams",
    "axis_angle_quats",
    "degenerate_gap_witness",
    "dynamic_control",
    "feedback_kappa",
    "kinematic_control",
    "kinematics_rhs",
    "lambda_map",
    "lyapunov_monitor",
    "nu",
    "plant_rhs",
    "projector",
    "quat_multiply",
    "run",
    "step_flow",
    "switch_decision",
    "theta_fixed_point",
    "warp",
    "warp_angle",
    "warp_jacobian_det",
    "xi_gamma",
    "__version__",
]
