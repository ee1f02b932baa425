"""Hybrid flow/jump solver: plant dynamics, integration accuracy, trace
invariants, termination, and the Lyapunov monitors."""

import math

import numpy as np
import pytest

from synatt.controller import Clean, GaussianDirection, SignFlip, SwitchConfig
from synatt.hybrid_sim import (
    PlantState,
    Scenario,
    SimulationAbort,
    SolverConfig,
    dissipation_rate_check,
    lyapunov_monitor,
    plant_rhs,
    run,
    step_flow,
)
from synatt.potential import NcshFamily, QuadraticPotential
from synatt.quat import UnitQuaternion, kinematics_rhs, random_unit_quaternions
from synatt.warping import CshFamily, WarpParams

J_STUDY = np.diag([6.4, 6.7, 9.3])
A_STUDY = np.diag([0.6, 0.8, 1.0])
U_STUDY = np.full(3, 1.0 / math.sqrt(3.0))
WITNESS = np.array([0.0, 0.6, 0.8, 0.0])
IDENT = np.array([1.0, 0.0, 0.0, 0.0])


@pytest.fixture(scope="module")
def csh():
    return CshFamily(WarpParams(U_STUDY, 0.54, QuadraticPotential(A_STUDY)))


@pytest.fixture(scope="module")
def ncsh():
    return NcshFamily()


def make_scenario(family, Q0, omega0, q0=1, *, measurement=None, delta_h=0.1,
                  k_p=30.0, k_d=15.0, loop="dynamic", config=None, seed=None,
                  switched=True, experiment_mode=False, j_max=1_000_000):
    cfg = config or SolverConfig(t_max=2.0, j_max=j_max)
    switch = SwitchConfig(family, delta_h, experiment_mode) if switched else None
    return Scenario(
        family=family,
        plant=PlantState(UnitQuaternion(Q0), np.asarray(omega0, float), J_STUDY),
        q0=q0, k_p=k_p, k_d=k_d,
        measurement=measurement or Clean(),
        config=cfg, switch=switch, loop=loop, seed=seed,
    )


class TestPlantRhs:
    def test_rest_is_equilibrium(self):
        s = PlantState(UnitQuaternion(IDENT), np.zeros(3), J_STUDY)
        Qd, wd = plant_rhs(s, np.zeros(3))
        assert np.array_equal(Qd, np.zeros(4))
        assert np.array_equal(wd, np.zeros(3))

    def test_frozen_gyroscopic_case(self):
        s = PlantState(UnitQuaternion(IDENT), np.array([1.0, 1.0, 0.0]), J_STUDY)
        _, wd = plant_rhs(s, np.zeros(3))
        assert np.max(np.abs(wd - [0.0, 0.0, -0.03225806451612903])) < 1e-16

    def test_kinetic_energy_conserved_by_gyroscopic_term(self):
        rng = np.random.default_rng(40)
        for _ in range(100):
            w = rng.standard_normal(3)
            s = PlantState(UnitQuaternion(IDENT), w, J_STUDY)
            _, wd = plant_rhs(s, np.zeros(3))
            assert abs(w @ (J_STUDY @ wd)) < 1e-12

    def test_quaternion_rate_is_kinematics(self):
        rng = np.random.default_rng(41)
        for q4 in random_unit_quaternions(rng, 20):
            w = rng.standard_normal(3)
            s = PlantState(UnitQuaternion(q4), w, J_STUDY)
            Qd, _ = plant_rhs(s, rng.standard_normal(3))
            assert np.max(np.abs(Qd - kinematics_rhs(q4, w))) < 1e-15

    def test_torque_enters_through_inverse_inertia(self):
        s = PlantState(UnitQuaternion(IDENT), np.zeros(3), J_STUDY)
        _, wd = plant_rhs(s, np.array([6.4, 0.0, 0.0]))
        assert np.max(np.abs(wd - [1.0, 0.0, 0.0])) < 1e-15

    def test_inertia_validation(self):
        bad = np.diag([6.4, 6.7, 9.3])
        bad[0, 1] = 0.5
        with pytest.raises(ValueError):
            PlantState(UnitQuaternion(IDENT), np.zeros(3), bad)
        with pytest.raises(ValueError):
            PlantState(UnitQuaternion(IDENT), np.zeros(3), np.diag([-1.0, 6.7, 9.3]))


class TestStepFlow:
    def test_equilibrium_unchanged(self, csh):
        s = PlantState(UnitQuaternion(IDENT), np.zeros(3), J_STUDY)
        out = step_flow(s, csh, 1, 30.0, 15.0, SolverConfig())
        assert np.max(np.abs(np.asarray(out.Q) - IDENT)) < 1e-14
        assert np.max(np.abs(out.omega)) < 1e-14

    def test_per_step_norm_drift(self, csh):
        # raw RK4 step without renormalization must keep |Q| within 1e-10
        cfg = SolverConfig(renormalize=False)
        rng = np.random.default_rng(42)
        for q4 in random_unit_quaternions(rng, 50):
            s = PlantState(UnitQuaternion(q4), rng.uniform(-1.0, 1.0, 3), J_STUDY)
            out = step_flow(s, csh, 1, 30.0, 15.0, cfg)
            assert abs(np.linalg.norm(np.asarray(out.Q)) - 1.0) < 1e-10

    def test_step_halving_fourth_order(self, ncsh):
        # jump-free clean run to t = 1; halving h moves the endpoint < 1e-8
        finals = []
        for h in (1e-3, 5e-4):
            sc = make_scenario(ncsh, WITNESS, [0.1, -0.2, 0.3],
                               config=SolverConfig(step=h, t_max=1.0))
            tr = run(sc)
            assert len(tr.jumps) == 0
            finals.append(np.concatenate((tr.quat[-1], tr.omega[-1])))
        assert np.max(np.abs(finals[0] - finals[1])) < 1e-8


class TestRun:
    def test_equilibrium_trace(self, csh):
        sc = make_scenario(csh, IDENT, np.zeros(3))
        tr = run(sc)
        assert len(tr) == round(2.0 / 1e-3) + 1
        assert tr.jumps == []
        assert tr.termination == "t_max"
        assert np.all(tr.eta == 1.0)
        assert np.max(np.abs(tr.tau)) < 1e-12
        assert np.max(np.abs(tr.V)) < 1e-12

    def test_antipodal_identity_never_jumps(self, csh):
        # U(-i, q) = 0 for both members: central synergism keeps the logic put
        for q0 in (-1, 1):
            tr = run(make_scenario(csh, -IDENT, np.zeros(3), q0=q0))
            assert tr.jumps == []
            assert np.all(tr.q == q0)

    def test_time_grid_and_lexicographic_order(self, ncsh):
        sc = make_scenario(ncsh, WITNESS, np.zeros(3), measurement=SignFlip(5.0))
        tr = run(sc)
        assert len(tr.jumps) > 0
        t, j = tr.t, tr.j
        assert np.all(np.diff(t) >= 0.0)
        assert np.all(np.diff(j) >= 0)
        # strictly increasing within each j, and j bumps by exactly 1
        pairs = np.stack((t, j), axis=1)
        for a, b in zip(pairs, pairs[1:]):
            assert tuple(a) < tuple(b)
        assert np.array_equal(np.flatnonzero(np.diff(j) == 1) + 1, tr.jumps)
        # unique flow times sit on the uniform grid
        uniq = np.unique(t)
        assert np.max(np.abs(uniq - np.arange(len(uniq)) * 1e-3)) < 1e-15

    def test_jump_rows_share_time_and_raise_mu(self, ncsh):
        tr = run(make_scenario(ncsh, WITNESS, np.zeros(3), measurement=SignFlip(5.0)))
        for idx in tr.jumps:
            assert tr.t[idx] == tr.t[idx - 1]
            assert tr.j[idx] == tr.j[idx - 1] + 1
            assert tr.mu[idx - 1] >= 0.1 - 1e-12
            assert tr.q[idx] == -tr.q[idx - 1]

    def test_norms_held_on_sphere(self, ncsh):
        tr = run(make_scenario(ncsh, WITNESS, [0.4, -0.3, 0.2]))
        assert np.max(np.abs(np.linalg.norm(tr.quat, axis=1) - 1.0)) < 1e-9

    def test_jump_count_bound_clean(self, csh, ncsh):
        # each jump burns delta_h of a nonincreasing V
        for fam in (csh, ncsh):
            for eta0 in (-0.5, 0.0, 0.5):
                eps1 = math.sqrt(1.0 - eta0 * eta0)
                sc = make_scenario(fam, [eta0, eps1, 0.0, 0.0], [0.2, 0.0, -0.1])
                tr = run(sc)
                assert len(tr.jumps) <= tr.V[0] / 0.1 + 1

    def test_deterministic_given_seed(self, ncsh):
        def go():
            sc = make_scenario(ncsh, WITNESS, np.zeros(3),
                               measurement=GaussianDirection(0.13, seed=99),
                               config=SolverConfig(t_max=0.5), seed=99)
            return run(sc)

        a, b = go(), go()
        assert np.array_equal(a.quat, b.quat)
        assert np.array_equal(a.omega, b.omega)
        assert np.array_equal(a.tau, b.tau)

        sc = make_scenario(ncsh, WITNESS, np.zeros(3),
                           measurement=GaussianDirection(0.13, seed=100),
                           config=SolverConfig(t_max=0.5), seed=100)
        assert not np.array_equal(run(sc).quat, a.quat)

    def test_kinematic_loop(self, ncsh):
        sc = make_scenario(ncsh, WITNESS, np.zeros(3), loop="kinematic",
                           k_p=1.0, config=SolverConfig(t_max=6.0))
        tr = run(sc)
        assert np.max(np.abs(tr.tau)) == 0.0
        # recorded rate is the commanded -k_p * kappa; V is the potential alone
        assert abs(tr.V[0] - ncsh.value(WITNESS, 1)) < 1e-15
        assert np.max(np.abs(tr.omega[0] + 1.0 * ncsh.feedback(WITNESS, 1))) < 1e-14
        assert tr.eta[-1] > 0.99

    def test_j_max_termination(self, ncsh):
        sc = make_scenario(ncsh, WITNESS, np.zeros(3), measurement=SignFlip(5.0),
                           j_max=3)
        tr = run(sc)
        assert tr.termination == "j_max"
        assert tr.j[-1] == 3

    def test_abort_on_blowup(self, ncsh):
        sc = make_scenario(ncsh, WITNESS, np.zeros(3), k_p=1e9, k_d=0.0)
        with pytest.raises(SimulationAbort):
            run(sc)

    def test_fixed_logic_when_switch_absent(self, csh):
        # cs-fixed variant: logic pinned even where the gap is large
        sc = make_scenario(csh, WITNESS, np.zeros(3), q0=-1, switched=False)
        tr = run(sc)
        assert tr.jumps == []
        assert np.all(tr.q == -1)
        assert np.all(tr.mu == 0.0)

    def test_meta_echoes_setup(self, ncsh):
        sc = make_scenario(ncsh, WITNESS, np.zeros(3), seed=5)
        tr = run(sc)
        m = tr.meta
        assert m["loop"] == "dynamic"
        assert m["q0"] == 1
        assert m["k_p"] == 30.0
        assert m["delta_h"] == 0.1
        assert m["seed"] == 5
        assert m["termination"] == "t_max"
        assert m["inertia_diag"] == (6.4, 6.7, 9.3)


@pytest.fixture(scope="module")
def csh_clean_long(csh):
    sc = make_scenario(csh, WITNESS, np.zeros(3),
                       config=SolverConfig(t_max=12.0))
    return run(sc)


class TestConvergenceProxy:
    def test_clean_csh_settles(self, csh_clean_long):
        tr = csh_clean_long
        speed = np.linalg.norm(tr.omega, axis=1)
        hit = (np.abs(tr.eta) > 1.0 - 1e-4) & (speed < 1e-3)
        assert hit.any()
        assert tr.t[np.flatnonzero(hit)[0]] < 12.0


class TestMonitors:
    def test_equilibrium_V_identically_zero(self, csh):
        tr = run(make_scenario(csh, IDENT, np.zeros(3)))
        assert np.max(np.abs(tr.V)) < 1e-12
        rep = lyapunov_monitor(tr, csh)
        assert rep.ok
        assert rep.n_jumps == 0

    def test_clean_run_has_no_violations(self, csh, csh_clean_long):
        rep = lyapunov_monitor(csh_clean_long, csh)
        assert rep.ok
        assert rep.flow_violations == []
        assert rep.jump_violations == []

    def test_jump_drop_certified(self, ncsh):
        tr = run(make_scenario(ncsh, [-0.5, math.sqrt(0.75), 0.0, 0.0], np.zeros(3)))
        assert len(tr.jumps) >= 1
        rep = lyapunov_monitor(tr, ncsh)
        assert rep.ok and rep.n_jumps == len(tr.jumps)

    def test_monotone_V_after_initial_transient(self, csh_clean_long):
        V = csh_clean_long.V
        incr = np.diff(V)
        assert incr.max() <= 1e-6 * (1.0 + V.max())

    def test_dissipation_rate_matches_prediction(self, csh, csh_clean_long):
        worst, n = dissipation_rate_check(csh_clean_long, csh, 30.0, 15.0, J_STUDY)
        assert n > 100
        assert worst < 1e-4

    def test_dissipation_check_vacuous_at_equilibrium(self, csh):
        tr = run(make_scenario(csh, IDENT, np.zeros(3)))
        worst, n = dissipation_rate_check(tr, csh, 30.0, 15.0, J_STUDY)
        assert (worst, n) == (0.0, 0)


class TestValidation:
    def test_solver_config_ranges(self):
        with pytest.raises(ValueError):
            SolverConfig(step=0.0)
        with pytest.raises(ValueError):
            SolverConfig(t_max=-1.0)
        with pytest.raises(ValueError):
            SolverConfig(j_max=-1)

    def test_scenario_rejects_unknown_loop(self, ncsh):
        with pytest.raises(ValueError):
            make_scenario(ncsh, IDENT, np.zeros(3), loop="static")

    def test_scenario_rejects_foreign_index(self, ncsh):
        with pytest.raises(ValueError):
            make_scenario(ncsh, IDENT, np.zeros(3), q0=2)

    def test_scenario_rejects_bad_gains(self, ncsh):
        with pytest.raises(ValueError):
            make_scenario(ncsh, IDENT, np.zeros(3), k_p=0.0)
        with pytest.raises(ValueError):
            make_scenario(ncsh, IDENT, np.zeros(3), k_d=-1.0)
