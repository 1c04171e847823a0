"""Certificates, coincidence reports, stress admissibility, penalty limits."""

import dataclasses

import numpy as np
import pytest

from risolve import (
    QuadraticMu,
    SchemeConfig,
    Trajectory,
    TrivialH,
    balance_residual,
    gamma_limit_study,
    interpolate,
    plasticity_stress_check,
    solve_incremental,
    ve_equals_e,
    verify_E,
    verify_VE,
)
from risolve.models import Delamination0dSpec


@pytest.fixture
def convex_run(toy_convex):
    cfg = SchemeConfig(scheme="E", tau=5e-3, initial_z=(0.0,))
    return solve_incremental(toy_convex, cfg)


@pytest.fixture
def delam_run(delamination):
    cfg = SchemeConfig(
        scheme="VE",
        tau=5e-3,
        correction=TrivialH(h=lambda r: r * r),
        initial_z=(1.0,),
    )
    return delamination, interpolate(solve_incremental(delamination, cfg))


class TestBalance:
    def test_convex_balance_small(self, toy_convex, convex_run):
        assert balance_residual(convex_run) < 5e-2

    def test_balance_shrinks_with_tau(self, toy_convex):
        res = []
        for tau in (2e-2, 5e-3):
            disc = solve_incremental(
                toy_convex, SchemeConfig(scheme="E", tau=tau, initial_z=(0.0,))
            )
            res.append(balance_residual(disc))
        assert res[1] < res[0]


class TestCertificates:
    def test_plain_scheme_certified(self, toy_convex, convex_run):
        cert = verify_E(toy_convex, interpolate(convex_run))
        assert cert.passed
        assert cert.stability_residual <= 1e-6
        assert cert.jump_checks == ()

    def test_corrected_delamination_certified(self, delam_run):
        prob, traj = delam_run
        cert = verify_VE(prob, traj)
        assert cert.passed, cert.verdict
        assert cert.minimality_residual <= 1e-8
        assert len(cert.jump_checks) == 1
        assert cert.jump_checks[0].cost_gap <= 5e-2

    def test_tampered_node_fails_stability(self, delam_run):
        prob, traj = delam_run
        # re-bond a node far past the debonding time: at strong loading the
        # bonded state is no longer stable and the certificate must fail
        states = list(traj.states)
        i = (3 * traj.n_nodes) // 4
        bad = dataclasses.replace(states[i], z=np.array([1.0]))
        states[i] = bad
        forged = Trajectory(
            times=traj.times,
            states=tuple(states),
            jump_records=traj.jump_records,
            meta=traj.meta,
        )
        cert = verify_VE(prob, forged)
        assert not cert.passed
        assert not cert.verdict["stability"]


class TestCoincidence:
    def test_plasticity_coincides(self, plasticity):
        cfg = SchemeConfig(
            scheme="VE",
            tau=1e-2,
            correction=TrivialH(h=lambda r: r**4),
            initial_z=(0.0,),
        )
        prob = plasticity.with_correction(TrivialH(h=lambda r: r**4))
        traj = interpolate(solve_incremental(plasticity, cfg))
        rep = ve_equals_e(prob, traj)
        assert rep.equal
        assert rep.global_stability_residual <= 1e-6
        assert rep.max_delta_c <= 1e-6

    def test_doublewell_does_not_coincide(self, toy_doublewell):
        cfg = SchemeConfig(
            scheme="VE",
            tau=5e-3,
            correction=QuadraticMu(mu=1.0),
            initial_z=(-1.0,),
        )
        prob = toy_doublewell.with_correction(QuadraticMu(mu=1.0))
        traj = interpolate(solve_incremental(toy_doublewell, cfg))
        rep = ve_equals_e(prob, traj)
        assert not rep.equal
        # the corrected run clings to the left well past plain global
        # stability, so the pre-jump residual is macroscopic
        assert rep.global_stability_residual > 0.01


class TestStressCheck:
    def test_yield_admissibility(self, plasticity):
        # the quartic correction overshoots the yield surface by O(tau^3):
        # tau = 2e-3 keeps it ~3e-8, far inside the admissibility tolerance
        cfg = SchemeConfig(
            scheme="VE",
            tau=2e-3,
            correction=TrivialH(h=lambda r: r**4),
            initial_z=(0.0,),
        )
        traj = interpolate(solve_incremental(plasticity, cfg))
        rep = plasticity_stress_check(plasticity, traj)
        assert rep.passed
        assert rep.max_abs_stress <= rep.yield_stress + 1e-6
        assert rep.stability_agrees

    def test_requires_stress_map(self, toy_convex, convex_run):
        with pytest.raises(ValueError):
            plasticity_stress_check(toy_convex, interpolate(convex_run))


class TestGammaLimit:
    def test_needs_enough_increasing_k(self):
        spec = Delamination0dSpec()
        cfg = SchemeConfig(scheme="VE", tau=2e-2, correction=spec.correction)
        with pytest.raises(ValueError):
            gamma_limit_study(spec, [4.0, 16.0, 8.0, 32.0], cfg)
        with pytest.raises(ValueError):
            gamma_limit_study(spec, [4.0, 16.0], cfg)

    def test_small_penalty_sweep(self):
        spec = Delamination0dSpec()
        cfg = SchemeConfig(
            scheme="VE",
            tau=2e-2,
            correction=spec.correction,
            initial_z=(1.0,),
        )
        rep = gamma_limit_study(spec, [4.0, 16.0, 64.0, 256.0], cfg, probe_count=33)
        assert len(rep.adhesive_trajs) == 4
        # penalization tightens the bonding constraint monotonically
        assert rep.constraint_violation[-1] < rep.constraint_violation[0]
        assert rep.sup_energy_gap[-1] < rep.sup_energy_gap[0]
        assert rep.liminf_probe_ok
