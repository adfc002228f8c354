import numpy as np
import pytest

from brownreg import (CoefPath, DesignSpec, Panel, PenaltySpec, SolveOptions, TimeGrid,
                      euler_maruyama, fit_path, generate_panel, objective_eval, simulate_errors)
from brownreg.errors import GridMismatch, InvalidInput
from brownreg.sde import brownian_increments, gbm_strong_errors


GRID = TimeGrid.uniform(1.0, 11)


def test_zero_coefficients_keep_initial_value():
    path = CoefPath.constant(GRID, [0.0, 0.0])
    X = np.ones((11, 5, 2))
    err = simulate_errors(path, X, PenaltySpec("lasso"), n_paths=4, seed=1, u0=0.7)
    np.testing.assert_array_equal(err.paths, 0.7)
    assert err.scheme == "euler-maruyama"


def test_constant_drift_is_exact():
    grid = TimeGrid.uniform(2.0, 9)
    err = euler_maruyama(grid, 1.5, 0.0, n_paths=3, seed=0, u0=1.0)
    np.testing.assert_allclose(err.paths[:, -1], 1.0 + 1.5 * 2.0, rtol=1e-15)
    np.testing.assert_array_equal(err.paths[:, 0], 1.0)


def test_constant_coefficient_law():
    grid = TimeGrid.uniform(1.0, 21)
    n = 20000
    u = euler_maruyama(grid, 1.0, 2.0, n_paths=n, seed=3).paths[:, -1]
    assert abs(u.mean() - 1.0) <= 3 * 2.0 / np.sqrt(n)
    assert abs(u.var() - 4.0) <= 0.05 * 4.0 * 2  # looser than acceptance: 20k paths


def test_strong_order_gbm():
    errs = gbm_strong_errors([8, 16, 32, 64], n_paths=4000, seed=2)
    h = 1.0 / np.array(sorted(errs))
    slope = np.polyfit(np.log(h), np.log([errs[k] for k in sorted(errs)]), 1)[0]
    assert slope >= 0.4


def test_left_endpoint_coefficients():
    # ridge drift sum beta^2 frozen at the left endpoint of every step
    grid = TimeGrid([0.0, 0.5, 1.5])
    betas = np.array([[1.0], [2.0], [100.0]])
    X = np.zeros((3, 1, 1))
    err = simulate_errors(CoefPath(grid, betas), X, PenaltySpec("ridge"), n_paths=1, seed=0)
    np.testing.assert_allclose(err.paths[0], [0.0, 0.5, 0.5 + 4.0])


def test_paths_are_keyed_by_index():
    a = brownian_increments(GRID, 5, seed=9)
    b = brownian_increments(GRID, 2, seed=9, path_offset=3)
    np.testing.assert_array_equal(a[3:], b)
    c = brownian_increments(GRID, 5, seed=9, stream=1)
    assert not np.any(a == c)


def test_grid_mismatch():
    path = CoefPath.constant(GRID, [1.0])
    with pytest.raises(GridMismatch):
        simulate_errors(path, np.zeros((4, 2, 1)), PenaltySpec("lasso"))
    other = Panel(TimeGrid.uniform(2.0, 11), np.zeros((11, 2)), np.zeros((11, 2, 1)))
    with pytest.raises(GridMismatch):
        simulate_errors(path, other, PenaltySpec("lasso"))
    with pytest.raises(GridMismatch):
        objective_eval(other, path)


def test_dW_shape_checked():
    with pytest.raises(InvalidInput):
        euler_maruyama(GRID, 0.0, 1.0, 2, 0, dW=np.zeros((3, 10)))


class TestGeneratePanel:
    def test_noiseless_is_linear_and_recoverable(self):
        truth = CoefPath(GRID, np.column_stack([np.linspace(1, 2, 11), np.full(11, -0.5)]))
        panel = generate_panel(truth, DesignSpec(15), PenaltySpec("lasso"), seed=4, noise=0.0)
        np.testing.assert_array_equal(panel.Y, np.einsum("tij,tj->ti", panel.X, truth.betas))
        path, _ = fit_path(panel, PenaltySpec("lasso", 0.0), opts=SolveOptions(tol=1e-14))
        np.testing.assert_allclose(path.betas, truth.betas, atol=1e-8)

    def test_zero_coefficients_give_zero_noise(self):
        truth = CoefPath.constant(GRID, [0.0])
        panel = generate_panel(truth, DesignSpec(4), PenaltySpec("lasso"), seed=1, noise=1.0)
        np.testing.assert_array_equal(panel.Y, 0.0)

    def test_seed_determinism(self):
        truth = CoefPath.constant(GRID, [1.0, -1.0])
        a = generate_panel(truth, DesignSpec(6), PenaltySpec("ridge"), seed=11, noise=0.1)
        b = generate_panel(truth, DesignSpec(6), PenaltySpec("ridge"), seed=11, noise=0.1)
        c = generate_panel(truth, DesignSpec(6), PenaltySpec("ridge"), seed=12, noise=0.1)
        assert a.Y.tobytes() == b.Y.tobytes() and a.X.tobytes() == b.X.tobytes()
        assert a != c

    def test_cubic_basis(self):
        truth = CoefPath.constant(GRID, [2.0])
        panel = generate_panel(truth, DesignSpec(3), PenaltySpec("spline"), "cubic", seed=0,
                               noise=0.0)
        x = panel.X[..., 0]
        np.testing.assert_allclose(panel.Y, 2.0 * (x + x ** 2 + x ** 3))

    def test_explicit_design_shape(self):
        truth = CoefPath.constant(GRID, [1.0])
        with pytest.raises(GridMismatch):
            generate_panel(truth, np.zeros((5, 2, 1)), PenaltySpec("ridge"))

    def test_errors_scale_with_noise(self):
        truth = CoefPath.constant(GRID, [1.0])
        X = DesignSpec(5).draw(11, 1, 3)
        p1 = generate_panel(truth, X, PenaltySpec("ridge"), seed=3, noise=1.0)
        p2 = generate_panel(truth, X, PenaltySpec("ridge"), seed=3, noise=0.5)
        clean = X[..., 0]
        np.testing.assert_allclose(p2.Y - clean, 0.5 * (p1.Y - clean), atol=1e-12)


class TestObjective:
    def test_perfect_fit(self):
        truth = CoefPath.constant(GRID, [1.5])
        panel = generate_panel(truth, DesignSpec(3), PenaltySpec("ridge"), seed=0, noise=0.0)
        assert objective_eval(panel, truth) == 0.0

    def test_constant_residual(self):
        grid = TimeGrid([0.0, 0.3, 1.0])
        panel = Panel(grid, np.full((3, 1), 2.5), np.ones((3, 1, 1)))
        r = 2.5 - 1.0
        assert objective_eval(panel, CoefPath.constant(grid, [1.0])) == pytest.approx(r * r)
