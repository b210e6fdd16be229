import numpy as np
import pytest

from doco.admm import (
    AdmmProblem,
    AdmmState,
    Quadratic,
    SumConstraint,
    admm_solve,
    augmented_lagrangian,
    dispatch_admm,
    dispatch_kkt,
)
from doco.problems import dispatch_problem


def toy_qp(alpha):
    """min (x-1)^2 + (z-2)^2 subject to x = z."""
    return AdmmProblem(
        f=Quadratic(P=[[2.0]], q=[-2.0], const=1.0),
        g=Quadratic(P=[[2.0]], q=[-4.0], const=4.0),
        A=[[1.0]], B=[[-1.0]], c=[0.0], alpha=alpha,
    )


class TestAugmentedLagrangian:
    def test_feasible_point_drops_penalty(self):
        prob = toy_qp(2.0)
        val = augmented_lagrangian(prob, x=[1.0], z=[1.0], y=[4.2])
        assert val == pytest.approx((1 - 1) ** 2 + (1 - 2) ** 2)

    def test_hand_value_origin(self):
        prob = toy_qp(2.0)
        # f(0)+g(0)+0+0 = 1 + 4
        assert augmented_lagrangian(prob, [0.0], [0.0], [0.0]) == pytest.approx(5.0)

    def test_hand_value_with_dual(self):
        prob = toy_qp(2.0)
        # 0 + 4 + 1*1 + (2/2)*1 = 6
        assert augmented_lagrangian(prob, [1.0], [0.0], [1.0]) == pytest.approx(6.0)

    def test_indicator_violation_is_infinite(self):
        prob = AdmmProblem(
            f=Quadratic(P=np.eye(2), q=np.zeros(2)),
            g=SumConstraint(target=4.0),
            A=np.eye(2), B=-np.eye(2), c=np.zeros(2), alpha=1.0,
        )
        assert augmented_lagrangian(prob, [1.0, 1.0], [1.0, 1.0], [0.0, 0.0]) == np.inf
        assert np.isfinite(augmented_lagrangian(prob, [1.0, 1.0], [1.0, 3.0], [0.0, 0.0]))


class TestAdmmSolve:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_toy_qp_converges(self, alpha):
        state = admm_solve(toy_qp(alpha), max_iters=5_000, tol=1e-8)
        assert state.converged
        assert abs(state.x[0] - 1.5) < 1e-6
        assert abs(state.z[0] - 1.5) < 1e-6

    def test_zero_problem_fixed_point(self):
        prob = AdmmProblem(
            f=Quadratic(P=[[0.0]], q=[0.0]),
            g=Quadratic(P=[[0.0]], q=[0.0]),
            A=[[1.0]], B=[[1.0]], c=[0.0], alpha=1.0,
        )
        state = admm_solve(prob, tol=1e-10)
        assert state.converged
        assert state.iterate == 1
        assert state.primal_residuals[-1] == 0.0
        assert np.array_equal(state.x, [0.0]) and np.array_equal(state.z, [0.0])

    def test_stop_rule_residual_below_tol(self):
        state = admm_solve(toy_qp(1.0), tol=1e-6)
        assert state.converged
        assert state.primal_residuals[-1] <= 1e-6

    def test_residual_history_matches_iterates(self):
        state = admm_solve(toy_qp(1.0), max_iters=17, tol=0.0)
        assert not state.converged
        assert len(state.primal_residuals) == state.iterate == 17
        assert len(state.dual_residuals) == 17

    def test_literal_dual_sign_does_not_converge(self):
        state = admm_solve(toy_qp(1.0), max_iters=200, tol=1e-8,
                           literal_dual_update=True)
        assert not state.converged
        assert state.primal_residuals[-1] > 1e-3

    def test_warm_start(self):
        init = AdmmState(x=np.array([1.5]), z=np.array([1.5]), y=np.array([1.0]))
        state = admm_solve(toy_qp(1.0), init=init, tol=1e-8)
        assert state.converged
        assert abs(state.x[0] - 1.5) < 1e-6

    def test_block_updates_are_exact_argmins(self):
        prob = AdmmProblem(
            f=Quadratic(P=np.diag([2.0, 6.0]), q=[-1.0, 0.5],
                        lower=[-1.0, -1.0], upper=[0.25, 1.0]),
            g=SumConstraint(target=1.0),
            A=np.eye(2), B=-np.eye(2), c=np.zeros(2), alpha=1.3,
        )
        z0 = np.array([0.7, 0.3])
        y0 = np.array([0.2, -0.4])
        one = admm_solve(prob, init=AdmmState(x=np.zeros(2), z=z0, y=y0),
                         max_iters=1, tol=0.0)
        base_x = augmented_lagrangian(prob, one.x, z0, y0)
        for k in range(2):
            for sign in (-1.0, 1.0):
                probe = one.x.copy()
                probe[k] += sign * 1e-4
                assert augmented_lagrangian(prob, probe, z0, y0) >= base_x - 1e-12
        base_z = augmented_lagrangian(prob, one.x, one.z, y0)
        for k in range(2):
            for sign in (-1.0, 1.0):
                probe = one.z.copy()
                probe[k] += sign * 1e-4
                assert augmented_lagrangian(prob, one.x, probe, y0) >= base_z - 1e-12

    def test_box_needs_separable_subproblem(self):
        prob = AdmmProblem(
            f=Quadratic(P=np.eye(2), q=np.zeros(2), lower=[-1, -1], upper=[1, 1]),
            g=Quadratic(P=np.eye(2), q=np.zeros(2)),
            A=np.array([[1.0, 0.5], [0.0, 1.0]]), B=-np.eye(2), c=np.zeros(2),
            alpha=1.0,
        )
        with pytest.raises(ValueError, match="separable"):
            admm_solve(prob, max_iters=1)

    def test_rejects_bad_penalty(self):
        with pytest.raises(ValueError):
            toy_qp(0.0)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_random_strictly_convex_instances_converge(self, alpha):
        rng = np.random.default_rng(63)

        def spd(d):
            q, _ = np.linalg.qr(rng.normal(size=(d, d)))
            return q @ np.diag(rng.uniform(0.5, 3.0, d)) @ q.T

        def coupling(rows, cols):
            # singular values kept in [0.5, 2] so the coupling is well posed
            u, _ = np.linalg.qr(rng.normal(size=(rows, rows)))
            v, _ = np.linalg.qr(rng.normal(size=(cols, cols)))
            s = np.zeros((rows, cols))
            for idx in range(min(rows, cols)):
                s[idx, idx] = rng.uniform(0.5, 2.0)
            return u @ s @ v.T

        for _ in range(10):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 4))
            k = int(rng.integers(1, min(n, m) + 1))
            prob = AdmmProblem(
                f=Quadratic(P=spd(n), q=rng.normal(size=n)),
                g=Quadratic(P=spd(m), q=rng.normal(size=m)),
                A=coupling(k, n), B=coupling(k, m),
                c=rng.normal(size=k), alpha=alpha,
            )
            state = admm_solve(prob, max_iters=5_000, tol=1e-6)
            assert state.converged
            assert state.primal_residuals[-1] < 1e-6

    def test_residuals_csv(self, tmp_path):
        state = admm_solve(toy_qp(1.0), tol=1e-8)
        path = tmp_path / "res.csv"
        state.residuals_to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iter,primal_residual,dual_residual"
        assert len(lines) == 1 + state.iterate


class TestDispatch:
    def test_symmetric_split(self):
        p = dispatch_problem([1.0, 1.0], demand=10.0)
        x, state = dispatch_admm(p, tol=1e-8)
        assert state.converged
        assert np.allclose(x, [5.0, 5.0], atol=1e-6)

    def test_asymmetric_kkt(self):
        p = dispatch_problem([1.0, 3.0], demand=4.0)
        x, _ = dispatch_admm(p, tol=1e-8)
        assert np.allclose(x, [3.0, 1.0], atol=1e-4)

    def test_active_upper_limit(self):
        p = dispatch_problem([1.0, 1.0], demand=10.0, x_max=[4.0, np.inf])
        x, _ = dispatch_admm(p, tol=1e-8)
        assert np.allclose(x, [4.0, 6.0], atol=1e-4)

    def test_balance_and_limits(self):
        p = dispatch_problem([0.7, 1.1, 2.0], demand=6.0,
                             lin=[0.5, -0.2, 0.0],
                             x_min=[0.0, 0.0, 0.0], x_max=[3.0, 3.0, 3.0])
        tol = 1e-8
        x, state = dispatch_admm(p, tol=tol)
        assert state.converged
        assert abs(x.sum() - 6.0) <= tol
        assert np.all(x >= p.x_min - tol) and np.all(x <= p.x_max + tol)

    def test_matches_kkt_on_random_instances(self):
        rng = np.random.default_rng(5)
        for _ in range(12):
            n = int(rng.integers(2, 11))
            quad = rng.uniform(0.5, 3.0, n)
            lin = rng.uniform(-1.0, 1.0, n)
            x_min = np.where(rng.random(n) < 0.5, rng.uniform(-1.0, 0.5, n), -np.inf)
            x_max = np.where(rng.random(n) < 0.5, rng.uniform(1.0, 3.0, n), np.inf)
            lo, hi = x_min.sum(), x_max.sum()
            lo = max(lo, -5.0 * n)
            hi = min(hi, 5.0 * n)
            demand = rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo))
            p = dispatch_problem(quad, demand=demand, lin=lin, x_min=x_min, x_max=x_max)
            x, _ = dispatch_admm(p, tol=1e-8)
            assert np.max(np.abs(x - dispatch_kkt(p))) < 1e-4

    def test_kkt_oracle_hand_cases(self):
        assert np.allclose(dispatch_kkt(dispatch_problem([1.0, 1.0], 10.0)), [5, 5])
        assert np.allclose(dispatch_kkt(dispatch_problem([1.0, 3.0], 4.0)), [3, 1])
        p = dispatch_problem([1.0, 1.0], 10.0, x_max=[4.0, np.inf])
        assert np.allclose(dispatch_kkt(p), [4, 6])

    def test_residual_history(self):
        p = dispatch_problem([1.0, 2.0], demand=3.0)
        _, state = dispatch_admm(p, tol=1e-10)
        assert len(state.primal_residuals) == state.iterate
        assert len(state.dual_residuals) == state.iterate
