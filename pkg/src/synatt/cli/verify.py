"""Seeded verification suites behind `synatt verify <suite>`.

Each suite returns a list of CheckResult rows (measured error vs. tolerance)
so the CLI can print one line per check and exit nonzero on any failure. The
suites are also what the acceptance tests drive, so tolerances here are the
contract, not advisory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..controller import Clean, feedback_kappa
from ..hybrid_sim import dissipation_rate_check, lyapunov_monitor, run
from ..potential import NcshFamily
from ..quat import (
    UnitQuaternion,
    kinematics_rhs,
    lambda_map,
    projector,
    quat_multiply,
    random_unit_quaternions,
)
from .scenarios import LegSpec, SpfParams, builtin_scenarios

__all__ = ["CheckResult", "SUITES", "run_suite", "format_report"]


@dataclass
class CheckResult:
    name: str
    error: float
    tol: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.error < self.tol

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{mark}] {self.name}: error {self.error:.3e} vs tol {self.tol:.1e}{extra}"


def _study_family():
    return SpfParams().build("csh")


# ---------------------------------------------------------------- algebra

def suite_algebra(n: int = 10_000, seed: int = 12345) -> list[CheckResult]:
    """Algebraic identities of the quaternion machinery, vectorized."""
    rng = np.random.default_rng(seed)
    Qs = random_unit_quaternions(rng, n)
    etas, epss = Qs[:, 0], Qs[:, 1:]

    # Lambda built in batch: (n, 4, 3); lower block is eta*I + eps^x
    L = np.zeros((n, 4, 3))
    L[:, 0, :] = -epss
    L[:, 1:, :] = etas[:, None, None] * np.eye(3)
    L[:, 1, 1], L[:, 1, 2] = -epss[:, 2], epss[:, 1]
    L[:, 2, 0], L[:, 2, 2] = epss[:, 2], -epss[:, 0]
    L[:, 3, 0], L[:, 3, 1] = -epss[:, 1], epss[:, 0]
    sample = rng.integers(0, n)
    spot = np.max(np.abs(L[sample] - lambda_map(UnitQuaternion(Qs[sample]))))

    LtL = np.einsum("nij,nik->njk", L, L)
    err1 = np.max(np.abs(LtL - np.eye(3)))

    Pi = np.eye(4) - np.einsum("ni,nj->nij", Qs, Qs)
    LLt = np.einsum("nij,nkj->nik", L, L)
    err2 = np.max(np.abs(LLt - Pi))

    PiL = np.einsum("nij,njk->nik", Pi, L)
    err3 = np.max(np.abs(PiL - L))

    w = rng.standard_normal((n, 4))
    ltw = np.einsum("nij,ni->nj", L, w)
    piw = np.einsum("nij,nj->ni", Pi, w)
    err4 = np.max(np.abs(np.linalg.norm(ltw, axis=1) - np.linalg.norm(piw, axis=1)))

    # associativity on random unit triples
    A3 = random_unit_quaternions(rng, n)
    B3 = random_unit_quaternions(rng, n)
    C3 = random_unit_quaternions(rng, n)

    def _mul(a, b):
        e1, v1 = a[:, :1], a[:, 1:]
        e2, v2 = b[:, :1], b[:, 1:]
        return np.concatenate(
            (e1 * e2 - np.sum(v1 * v2, axis=1, keepdims=True),
             e1 * v2 + e2 * v1 + np.cross(v1, v2)), axis=1)

    err5 = np.max(np.abs(_mul(_mul(A3, B3), C3) - _mul(A3, _mul(B3, C3))))
    sm = quat_multiply(UnitQuaternion(A3[sample]), UnitQuaternion(B3[sample]))
    spot = max(spot, float(np.max(np.abs(np.asarray(sm)
                                         - _mul(A3, B3)[sample]))))

    # kinematics: 0.5*Q x nu(omega) vs 0.5*Lambda(Q) omega
    om = rng.standard_normal((n, 3))
    lhs = 0.5 * _mul(Qs, np.concatenate((np.zeros((n, 1)), om), axis=1))
    rhs = 0.5 * np.einsum("nij,nj->ni", L, om)
    err6 = np.max(np.abs(lhs - rhs))
    spot = max(spot, float(np.max(np.abs(
        kinematics_rhs(Qs[sample], om[sample]) - rhs[sample]))))

    # feedback duality: Lambda^T (Pi g) = Lambda^T g for arbitrary g
    g = rng.standard_normal((n, 4))
    lt_pig = np.einsum("nij,ni->nj", L, np.einsum("nij,nj->ni", Pi, g))
    lt_g = np.einsum("nij,ni->nj", L, g)
    err7 = np.max(np.abs(lt_pig - lt_g))

    return [
        CheckResult("lambda^T lambda = I", float(err1), 1e-12, f"{n} samples"),
        CheckResult("lambda lambda^T = projector", float(err2), 1e-12),
        CheckResult("projector . lambda = lambda", float(err3), 1e-12),
        CheckResult("|lambda^T w| = |projector w|", float(err4), 1e-12),
        CheckResult("product associativity", float(err5), 1e-12),
        CheckResult("0.5 Q*nu(omega) = 0.5 lambda omega", float(err6), 1e-12),
        CheckResult("kappa ambient = kappa projected", float(err7), 1e-12),
        CheckResult("batch formulas match scalar API", float(spot), 1e-12),
    ]


# ------------------------------------------------------------- gradients

def _fd_grad4(value, Q4: np.ndarray, q: int, h: float = 1e-6) -> np.ndarray:
    g = np.empty(4)
    for m in range(4):
        dp = Q4.copy()
        dm = Q4.copy()
        dp[m] += h
        dm[m] -= h
        g[m] = (value(dp, q) - value(dm, q)) / (2.0 * h)
    return g


def suite_gradients(n: int = 1000, seed: int = 54321) -> list[CheckResult]:
    """Analytic ambient gradients vs. central finite differences."""
    rng = np.random.default_rng(seed)
    Qs = random_unit_quaternions(rng, n)
    qs = np.where(rng.random(n) < 0.5, -1, 1)
    csh = _study_family()
    ncsh = NcshFamily()
    base = csh.params.base

    rows = []
    for label, fam in (("csh", csh), ("ncsh", ncsh)):
        worst = 0.0
        for i in range(n):
            ana = fam.grad4(Qs[i], int(qs[i]))
            fd = _fd_grad4(fam.value, Qs[i], int(qs[i]))
            worst = max(worst, float(np.linalg.norm(fd - ana)
                                     / (1.0 + np.linalg.norm(ana))))
        rows.append(CheckResult(f"{label} grad4 vs finite differences", worst,
                                1e-6, f"{n} samples, step 1e-6"))
    worst = 0.0
    for i in range(n):
        ana = base.grad4(Qs[i])
        fd = _fd_grad4(lambda Q4, _q: base.value(Q4), Qs[i], 0)
        worst = max(worst, float(np.linalg.norm(fd - ana) / (1.0 + np.linalg.norm(ana))))
    rows.append(CheckResult("base potential grad4 vs finite differences", worst, 1e-6))
    return rows


# ----------------------------------------------------------- consistency

def suite_consistency(n: int = 2000, seed: int = 999) -> list[CheckResult]:
    """Even value / even feedback under Q -> -Q for the central family; the
    noncentral baseline must expose an inconsistency witness."""
    rng = np.random.default_rng(seed)
    Qs = random_unit_quaternions(rng, n)
    csh = _study_family()
    ncsh = NcshFamily()

    worst_v = 0.0
    worst_k = 0.0
    for q in (-1, 1):
        v_p = csh.value(Qs, q)
        v_m = csh.value(-Qs, q)
        worst_v = max(worst_v, float(np.max(np.abs(v_p - v_m))))
        for i in range(0, n, 7):  # kappa is per-point; subsample for speed
            Qp = UnitQuaternion(Qs[i])
            d = feedback_kappa(csh, Qp, q) - feedback_kappa(csh, -Qp, q)
            worst_k = max(worst_k, float(np.max(np.abs(d))))

    Qw = UnitQuaternion([0.0, 0.6, 0.8, 0.0])
    gap = float(np.linalg.norm(feedback_kappa(ncsh, Qw, 1)
                               - feedback_kappa(ncsh, -Qw, 1)))
    return [
        CheckResult("csh value even in Q", worst_v, 1e-12, f"{n} samples"),
        CheckResult("csh feedback even in Q", worst_k, 1e-12),
        CheckResult("ncsh inconsistency witness at [0,.6,.8,0]",
                    0.1 / max(gap, 1e-300), 1.0, f"kappa gap {gap:.3f}, need >= 0.1"),
    ]


# ------------------------------------------------------------ critpoints

def suite_critpoints(n_starts: int = 1000, seed: int = 777,
                     max_iter: int = 60_000) -> list[CheckResult]:
    """Residuals of the 16 constructed critical points, plus a batched
    projected-gradient descent sweep certifying the enumeration is complete."""
    csh = _study_family()
    pts = csh.critical_points()

    worst_res = 0.0
    for cp in pts:
        g = csh.grad4(cp.Q, cp.q)
        worst_res = max(worst_res, float(np.linalg.norm(projector(cp.Q) @ g)))

    # round trip: warping an undesired point lands on +-[0, v_i]
    worst_rt = 0.0
    base = csh.params.base
    from ..warping import warp
    for cp in pts:
        if cp.desired:
            continue
        w4 = np.asarray(warp(csh.params, cp.Q, cp.q))
        v4 = np.concatenate(([0.0], base.eigenvectors[:, cp.eigen_index]))
        worst_rt = max(worst_rt, min(float(np.max(np.abs(w4 - v4))),
                                     float(np.max(np.abs(w4 + v4)))))

    thetas = {f"{cp.theta:.15g}" for cp in pts if not cp.desired}
    theta_spread = 0.0 if len(thetas) == 1 else 1.0  # symmetric axis: one theta*

    rng = np.random.default_rng(seed)
    Qd = random_unit_quaternions(rng, n_starts)
    qd = np.where(rng.random(n_starts) < 0.5, -1, 1)
    alpha = 0.1
    for q in (-1, 1):
        m = qd == q
        X = Qd[m]
        for _ in range(max_iter):
            g = csh.grad4(X, q)
            pg = g - np.sum(X * g, axis=1, keepdims=True) * X
            sup = np.max(np.sum(pg * pg, axis=1))
            if sup < 1e-16:  # |pg| < 1e-8 everywhere
                break
            X = X - alpha * pg
            X /= np.linalg.norm(X, axis=1, keepdims=True)
        Qd[m] = X

    # distance from each limit to the nearest certified point with matching q
    worst_dist = 0.0
    for q in (-1, 1):
        cand = np.array([np.asarray(cp.Q) for cp in pts if cp.q == q])
        X = Qd[qd == q]
        d = np.linalg.norm(X[:, None, :] - cand[None, :, :], axis=2).min(axis=1)
        worst_dist = max(worst_dist, float(d.max()))

    return [
        CheckResult("constructed critical point residuals", worst_res, 1e-9,
                    f"{len(pts)} points"),
        CheckResult("undesired points warp onto +-[0, v_i]", worst_rt, 1e-9),
        CheckResult("single theta* across undesired points", theta_spread, 0.5),
        CheckResult("descent limits stay in the certified set", worst_dist,
                    1e-4, f"{n_starts} starts"),
    ]


# ------------------------------------------------------------------- gap

def suite_gap(n: int = 3000, seed: int = 4242) -> list[CheckResult]:
    """Gap-bound evaluation for the study parameters plus the trig identity
    for the member difference and q-independence of the point gaps."""
    csh = _study_family()
    b = csh.gap_bounds()
    rows = [
        CheckResult("closed-form bound near 0.1137",
                    abs(b.closed_form - 0.1137), 5e-4,
                    f"value {b.closed_form:.6f}"),
        CheckResult("fixed-point bound near 0.1272",
                    abs(b.certified - 0.1272), 5e-4,
                    f"value {b.certified:.6f}"),
        CheckResult("hysteresis width below both bounds",
                    0.1, min(b.certified, b.closed_form)),
    ]

    mus = []
    for cp in csh.critical_points():
        if cp.desired:
            continue
        mus.append(float(csh.synergy_gap(cp.Q, cp.q)))
    rows.append(CheckResult("certified bound attained at the point gaps",
                            b.certified - min(mus), 1e-9,
                            f"min gap {min(mus):.6f} over {len(mus)} points"))

    # every point gap must coincide with one of the three per-index values,
    # i.e. be independent of q and of the antipodal sign
    off = max(min(abs(m - b.per_index[i]) for i in range(3)) for m in mus)
    rows.append(CheckResult("point gaps independent of q and sign", off, 1e-12))

    rng = np.random.default_rng(seed)
    Qs = random_unit_quaternions(rng, n)
    worst = 0.0
    for q in (-1, 1):
        direct = csh.value(Qs, q) - csh.value(Qs, -q)
        worst = max(worst, float(np.max(np.abs(direct - csh.value_difference(Qs, q)))))
    rows.append(CheckResult("member difference matches trig identity", worst,
                            1e-12, f"{n} samples"))
    return rows


# -------------------------------------------------------------- lyapunov

def _clean_runs():
    """Clean-measurement runs covering both loops and both controllers."""
    sims = builtin_scenarios()
    legs = []
    for leg in sims["sim1"].legs:
        legs.append((f"sim1/{leg.label}", leg))
    q02 = (0.0, 0.6, 0.8, 0.0)
    legs.append(("clean dynamic ncsh",
                 LegSpec("ncsh", "ncsh", q0=1, Q0=q02, t_max=5.0)))
    legs.append(("clean kinematic csh",
                 LegSpec("csh", "csh", q0=-1, Q0=q02, t_max=5.0, loop="kinematic")))
    legs.append(("clean kinematic ncsh",
                 LegSpec("ncsh", "ncsh", q0=1, Q0=q02, t_max=5.0, loop="kinematic")))
    return legs


def suite_lyapunov() -> list[CheckResult]:
    """Monotonicity and dissipation-rate checks along clean-measurement runs."""
    rows = []
    for name, leg in _clean_runs():
        scenario = leg.build(seed=None)
        trace = run(scenario)
        family = scenario.family
        rep = lyapunov_monitor(trace, family)
        flow_err = max((dv for _, dv in rep.flow_violations), default=rep.max_flow_increase)
        rows.append(CheckResult(f"{name}: V nonincreasing on flows",
                                max(flow_err, 0.0), 1e-6,
                                f"{rep.n_jumps} jumps, {len(trace)} samples"))
        jump_err = max((dv + leg.delta_h for _, dv in rep.jump_violations), default=0.0)
        rows.append(CheckResult(f"{name}: jumps drop V by delta_h", jump_err, 1e-9))
        worst, checked = dissipation_rate_check(
            trace, family, scenario.k_p, scenario.k_d, scenario.plant.inertia)
        if checked:
            rows.append(CheckResult(f"{name}: dissipation rate matches",
                                    worst, 1e-4, f"{checked} stencil points"))
    return rows


SUITES = {
    "algebra": suite_algebra,
    "gradients": suite_gradients,
    "consistency": suite_consistency,
    "critpoints": suite_critpoints,
    "gap": suite_gap,
    "lyapunov": suite_lyapunov,
}


def run_suite(name: str) -> list[CheckResult]:
    if name == "all":
        out = []
        for key in SUITES:
            out.extend(SUITES[key]())
        return out
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r} (have: {', '.join([*SUITES, 'all'])})")
    return SUITES[name]()


def format_report(results: list[CheckResult]) -> str:
    lines = [r.line() for r in results]
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines)
