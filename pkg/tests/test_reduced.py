"""Reduced energies and the corrected global minimization step.

Every nontrivial expected value is recomputed here by an independent brute
force (dense grid plus local refinement) rather than trusted from the
production path.
"""

import numpy as np
import pytest

from risolve import (
    MinimizerConfig,
    QuadraticMu,
    RisProblem,
    global_min_corrected,
    oracle_grid_min,
    reduce_energy,
    reduced_value,
)
from risolve.core import INF
from risolve.models import Damage1dSpec, Toy1dSpec, make_damage1d, make_toy1d


def _quadratic_problem(correction=None):
    prob = RisProblem(
        n_u=0,
        n_z=1,
        energy=lambda t, u, z: 0.5 * float(z[0]) ** 2,
        power=lambda t, u, z: 0.0,
        dissipation=lambda z, zp: abs(float(zp[0]) - float(z[0])),
        z_box=((-10.0, 10.0),),
    )
    return prob.with_correction(correction)


def _brute_force_1d(f, lo, hi, coarse=20001, refine=3):
    """Dense scan plus golden-ratio-free refinement by re-gridding."""
    best_x = None
    for _ in range(refine):
        xs = np.linspace(lo, hi, coarse)
        vals = np.array([f(x) for x in xs])
        i = int(np.argmin(vals))
        best_x = xs[i]
        span = (hi - lo) / (coarse - 1)
        lo, hi = best_x - 2 * span, best_x + 2 * span
    return best_x, f(best_x)


class TestOracleGridMin:
    def test_recovers_quadratic_minimum(self):
        res = oracle_grid_min(
            lambda x: (x[0] - 0.3) ** 2, [(-1.0, 1.0)], resolution=2001
        )
        assert res.certified_global
        assert abs(res.argmin[0] - 0.3) <= res.tolerance

    def test_vectorized_matches_scalar(self):
        f = lambda x: (x[0] - 0.25) ** 2 + (x[1] + 0.5) ** 2
        fv = lambda pts: (pts[:, 0] - 0.25) ** 2 + (pts[:, 1] + 0.5) ** 2
        box = [(-1.0, 1.0), (-1.0, 1.0)]
        a = oracle_grid_min(f, box, resolution=41)
        b = oracle_grid_min(fv, box, resolution=41, vectorized=True)
        assert a.value == pytest.approx(b.value)
        assert np.allclose(a.argmin, b.argmin)

    def test_budget_guard(self):
        with pytest.raises(ValueError):
            oracle_grid_min(lambda x: 0.0, [(-1, 1)] * 3, resolution=300)

    def test_resolution_guard(self):
        with pytest.raises(ValueError):
            oracle_grid_min(lambda x: 0.0, [(-1, 1)], resolution=1)


class TestReduceEnergy:
    def test_toy_energy_direct(self, toy_convex):
        # E(0.5, z=1) = 0.5 - 1
        res = reduce_energy(toy_convex, 0.5, [1.0])
        assert res.value == pytest.approx(-0.5)
        assert res.u.size == 0

    def test_out_of_box_is_infinite(self, toy_convex):
        assert reduced_value(toy_convex, 0.5, [20.0]) == INF

    def test_damage_closed_form_vs_grid_oracle(self):
        # intact uniform 4-cell bar under end displacement: the u-solve must
        # match an exhaustive search over interior node positions
        prob = make_damage1d(Damage1dSpec(N=4, w_D=(0.0, 1.0)))
        t = 0.5
        z = np.ones(4)
        res = reduce_energy(prob, t, z)
        assert res.value == pytest.approx(0.5 * 1.0 * 0.5**2)  # 1/2 E0 w^2
        w = 0.5
        grid = oracle_grid_min(
            lambda u: prob.energy(t, u, z), [(0.0, w)] * 3, resolution=81
        )
        assert grid.value >= res.value - 1e-12
        assert grid.value - res.value < 1e-3
        assert np.allclose(res.u, grid.argmin, atol=2 * grid.tolerance)

    def test_residual_stiffness_single_cell(self):
        prob = make_damage1d(Damage1dSpec(N=1, w_D=(0.0, 1.0)))
        assert reduced_value(prob, 1.0, [0.0]) == pytest.approx(0.5 * 0.25)
        assert reduced_value(prob, 1.0, [1.0]) == pytest.approx(0.5)


class TestGlobalMinCorrected:
    def test_soft_threshold_step(self):
        # min z^2/2 + |z - 3|: brute force oracle, then the production path
        prob = _quadratic_problem()
        xo, vo = _brute_force_1d(lambda x: 0.5 * x * x + abs(x - 3.0), -10, 10)
        res = global_min_corrected(prob, 0.0, [3.0])
        assert res.value == pytest.approx(vo, abs=1e-9)
        assert res.argmin[0] == pytest.approx(xo, abs=1e-6)
        assert res.argmin[0] == pytest.approx(1.0, abs=1e-6)

    def test_soft_threshold_with_quadratic_correction(self):
        prob = _quadratic_problem(QuadraticMu(mu=1.0))
        xo, vo = _brute_force_1d(
            lambda x: 0.5 * x * x + abs(x - 3.0) + 0.5 * (x - 3.0) ** 2, -10, 10
        )
        res = global_min_corrected(prob, 0.0, [3.0])
        assert res.value == pytest.approx(vo, abs=1e-9)
        assert res.argmin[0] == pytest.approx(xo, abs=1e-6)
        assert res.argmin[0] == pytest.approx(2.0, abs=1e-6)

    def test_stay_put_when_stable(self):
        prob = _quadratic_problem()
        res = global_min_corrected(prob, 0.0, [0.5])
        # |I'(0.5)| = 0.5 < 1, so staying is optimal and ties break to z_prev
        assert res.argmin[0] == pytest.approx(0.5)
        assert res.value == pytest.approx(0.125)

    def test_never_worse_than_staying(self, toy_doublewell):
        for t in (0.0, 0.3, 0.7, 1.0):
            for z0 in (-1.0, 0.0, 1.0):
                stay = reduced_value(toy_doublewell, t, [z0])
                res = global_min_corrected(toy_doublewell, t, [z0])
                assert res.value <= stay + 1e-12

    def test_unidirectional_search_clipped(self):
        prob = make_damage1d(Damage1dSpec(N=1, w_D=(0.0, 1.0)))
        res = global_min_corrected(prob, 0.5, [0.7])
        assert res.argmin[0] <= 0.7 + 1e-12

    def test_box_corner_is_reachable(self):
        # at strong loading the single-cell damage jumps exactly onto z = 0
        prob = make_damage1d(Damage1dSpec(N=1, w_D=(0.0, 4.0)))
        res = global_min_corrected(prob, 1.0, [1.0])
        assert res.argmin[0] == 0.0

    def test_vectorized_grid_matches_scalar_fallback(self, toy_doublewell):
        import dataclasses

        scalar_prob = dataclasses.replace(
            toy_doublewell, reduced_vec=None, dissipation_vec=None
        )
        for t in (0.2, 0.5, 0.9):
            a = global_min_corrected(toy_doublewell, t, [-1.0])
            b = global_min_corrected(scalar_prob, t, [-1.0])
            assert a.value == pytest.approx(b.value, abs=1e-10)
            assert a.argmin[0] == pytest.approx(b.argmin[0], abs=1e-6)

    def test_infeasible_previous_state_raises(self):
        prob = _quadratic_problem()
        with pytest.raises(ValueError):
            global_min_corrected(prob, 0.0, [50.0])


def test_minimizer_config_validation():
    with pytest.raises(ValueError):
        MinimizerConfig(method="simulated-annealing")
    with pytest.raises(ValueError):
        MinimizerConfig(grid_resolution=1)
    with pytest.raises(ValueError):
        MinimizerConfig(descent_tol=0.0)
