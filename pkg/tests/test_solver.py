import math

import numpy as np
import pytest

from aperiod_sde import (
    DiffusionSpec,
    DriftSpec,
    ModelSpec,
    TimeGrid,
    check_hypotheses,
    gamma_apply,
    integrate,
    sample_ensemble,
    solve_bounded,
    translated_solution,
)
from aperiod_sde.errors import BindingError, ContractionError, DivergenceError, GridError
from aperiod_sde.model import eval_diffusion, eval_drift
from aperiod_sde.noise import slice_window
from aperiod_sde.solver import sup_l2_distance, write_path_csv


def linear_model(lam=1.0, b=0.0, sigma=0.0, q=1.0, modes=()):
    return ModelSpec(
        dim_state=1,
        dim_noise=1,
        spectrum=[lam],
        q_eigenvalues=[q],
        drift=DriftSpec(base=[b], modes=[(np.array([a]), w, ph) for a, w, ph in modes]),
        diffusion=DiffusionSpec(base_sigma=[sigma]),
    )


def zero_noise(grid, n_paths=1, q=0.0):
    return sample_ensemble(grid, [q], n_paths, 0)


class TestIntegrate:
    def test_pure_semigroup_decay(self):
        model = linear_model(lam=1.0)
        grid = TimeGrid(0.0, 0.05, 200)
        sol = integrate(model, zero_noise(grid), [1.0])
        ks = np.arange(201)
        expected = np.exp(-grid.dt) ** ks
        assert np.allclose(sol.values[0, :, 0], expected, rtol=1e-12)

    def test_constant_forcing_discrete_fixed_point(self):
        # X_{k+1} = e^(-lam dt) (X_k + b dt): geometric sum gives
        # X_k = x* (1 - e^(-lam k dt)) with x* = b dt e^(-lam dt)/(1 - e^(-lam dt)).
        lam, b = 1.3, 0.8
        model = linear_model(lam=lam, b=b)
        grid = TimeGrid(0.0, 0.02, 600)
        sol = integrate(model, zero_noise(grid), [0.0])
        decay = math.exp(-lam * grid.dt)
        x_star = b * grid.dt * decay / (1.0 - decay)
        ks = np.arange(601)
        expected = x_star * (1.0 - decay**ks)
        assert np.allclose(sol.values[0, :, 0], expected, rtol=1e-11, atol=1e-14)
        # Long-run level approaches b / lam as dt -> 0 (O(dt) bias here).
        assert sol.values[0, -1, 0] == pytest.approx(b / lam, rel=2 * grid.dt)

    def test_ou_long_run_variance(self):
        lam, sigma, q = 1.0, 0.5, 1.0
        model = linear_model(lam=lam, sigma=sigma, q=q)
        grid = TimeGrid(0.0, 0.01, 1200)
        noise = sample_ensemble(grid, [q], 4000, 31)
        sol = integrate(model, noise, [0.0])
        target = sigma**2 * q / (2.0 * lam)
        measured = sol.values[:, -1, 0].var()
        assert measured == pytest.approx(target, rel=0.1)

    def test_divergence_guard(self):
        model = linear_model(lam=1.0, b=1.0)
        grid = TimeGrid(0.0, 0.1, 50)
        with pytest.raises(DivergenceError):
            integrate(model, zero_noise(grid), [1.0], ceiling=0.5)

    def test_restart_reproduces_tail(self):
        # Cocycle consistency: restarting from a mid node with the same
        # increments reproduces the stored tail (identical recursion).
        model = linear_model(lam=0.7, b=0.2, sigma=0.3)
        grid = TimeGrid(0.0, 0.05, 100)
        noise = sample_ensemble(grid, [1.0], 8, 5)
        sol = integrate(model, noise, [0.4])
        k = 40
        tail_noise = slice_window(noise, grid.t_start + k * grid.dt, grid.n_steps - k)
        tail = integrate(model, tail_noise, sol.values[:, k, :])
        diff = np.abs(tail.values - sol.values[:, k:, :])
        assert diff.max() <= 1e-10 * max(1.0, np.abs(sol.values).max())


class TestGamma:
    def test_zero_coefficients_give_zero(self):
        model = linear_model()
        grid = TimeGrid(0.0, 0.1, 30)
        noise = zero_noise(grid, n_paths=3, q=1.0)
        x = integrate(model, noise, [1.0])
        out = gamma_apply(model, x, noise)
        assert np.all(out.values == 0.0)

    def test_constant_forcing_closed_form(self):
        lam, b = 1.0, 0.5
        model = linear_model(lam=lam, b=b)
        grid = TimeGrid(-4.0, 0.02, 400)
        noise = zero_noise(grid)
        zero = integrate(linear_model(lam=lam), zero_noise(grid), [0.0])
        out = gamma_apply(model, zero, noise)
        decay = math.exp(-lam * grid.dt)
        x_star = b * grid.dt * decay / (1.0 - decay)
        ks = np.arange(401)
        expected = x_star * (1.0 - decay**ks)
        assert np.allclose(out.values[0, :, 0], expected, rtol=1e-11, atol=1e-14)
        # geometric-sum level tends to b/lam far from the left edge
        assert out.values[0, -1, 0] == pytest.approx(b / lam, rel=2 * grid.dt)

    def test_recursion_equals_direct_convolution(self, catalog_model):
        grid = TimeGrid(-1.0, 0.01, 100)
        noise = sample_ensemble(grid, catalog_model.q_eigenvalues, 3, 17)
        x = integrate(catalog_model, noise, [0.1, -0.2])
        out = gamma_apply(catalog_model, x, noise)
        # Direct O(n^2) sum: Gamma X(t_k) = sum_{j<k} S((k-j) dt) [F dt + G dW].
        lam = catalog_model.spectrum
        d = catalog_model.dim_state
        ks = min(catalog_model.dim_state, catalog_model.dim_noise)
        for p in range(3):
            direct = np.zeros((grid.n_steps + 1, d))
            for k in range(1, grid.n_steps + 1):
                acc = np.zeros(d)
                for j in range(k):
                    t_j = grid.t_start + j * grid.dt
                    term = eval_drift(catalog_model, t_j, x.values[p, j, :]) * grid.dt
                    gterm = eval_diffusion(catalog_model, t_j, x.values[p, j, :])
                    term[:ks] += gterm * noise.increments[p, j, :ks]
                    acc += np.exp(-lam * (k - j) * grid.dt) * term
                direct[k] = acc
            rel = np.abs(out.values[p] - direct) / (np.abs(direct).max() + 1e-30)
            assert rel.max() <= 1e-10

    def test_rejects_unbound_noise(self, catalog_model):
        grid = TimeGrid(0.0, 0.1, 10)
        noise_a = sample_ensemble(grid, catalog_model.q_eigenvalues, 2, 1)
        noise_b = sample_ensemble(grid, catalog_model.q_eigenvalues, 2, 2)
        x = integrate(catalog_model, noise_a, [0.0, 0.0])
        with pytest.raises(BindingError):
            gamma_apply(catalog_model, x, noise_b)


class TestSolveBounded:
    def test_refuses_without_contraction(self):
        model = linear_model()
        model.drift.nonlinearity_gain = 1.0
        grid = TimeGrid(0.0, 0.1, 10)
        noise = zero_noise(grid, q=1.0)
        with pytest.raises(ContractionError):
            solve_bounded(model, noise)

    def test_two_iterations_when_lipschitz_zero(self):
        model = linear_model(lam=1.0, b=0.7)
        grid = TimeGrid(-6.0, 0.02, 400)
        noise = zero_noise(grid, q=1.0)
        sol, conv = solve_bounded(model, noise, tol=1e-10)
        assert conv.converged
        assert conv.iterations == 2
        assert conv.deltas[1] == 0.0
        # Deterministic profile tends to b/lambda after burn-in.
        assert sol.values[0, -1, 0] == pytest.approx(0.7, rel=3 * grid.dt)

    def test_ou_stationary_variance(self):
        lam, sigma, q = 1.0, 0.4, 1.0
        model = linear_model(lam=lam, sigma=sigma, q=q)
        grid = TimeGrid(-8.0, 0.01, 1400)
        noise = sample_ensemble(grid, [q], 3000, 77)
        sol, conv = solve_bounded(model, noise, tol=1e-8)
        assert conv.converged and conv.iterations == 2
        cloud = sol.values[:, -1, 0]
        assert cloud.var() == pytest.approx(sigma**2 * q / (2 * lam), rel=0.1)

    def test_contraction_rate_observed(self, catalog_model):
        report = check_hypotheses(catalog_model)
        grid = TimeGrid(-6.0, 0.02, 500)
        noise = sample_ensemble(grid, catalog_model.q_eigenvalues, 400, 9)
        _, conv = solve_bounded(catalog_model, noise, tol=1e-12, max_iter=25)
        ratios = [
            conv.deltas[i + 1] / conv.deltas[i]
            for i in range(1, len(conv.deltas) - 1)
            if conv.deltas[i] > 1e-9
        ]
        assert ratios, "need at least one informative ratio"
        assert max(ratios) <= math.sqrt(report.kappa) + 0.1

    def test_fixed_point_residual(self, catalog_model):
        tol = 1e-6
        report = check_hypotheses(catalog_model)
        grid = TimeGrid(-6.0, 0.02, 500)
        noise = sample_ensemble(grid, catalog_model.q_eigenvalues, 200, 10)
        sol, conv = solve_bounded(catalog_model, noise, tol=tol)
        assert conv.converged
        residual = sup_l2_distance(gamma_apply(catalog_model, sol, noise), sol)
        assert residual <= tol / (1.0 - math.sqrt(report.kappa))

    def test_non_convergence_reported(self, catalog_model):
        grid = TimeGrid(-2.0, 0.02, 150)
        noise = sample_ensemble(grid, catalog_model.q_eigenvalues, 50, 11)
        _, conv = solve_bounded(catalog_model, noise, tol=1e-14, max_iter=2)
        assert not conv.converged
        assert conv.iterations == 2

    def test_burnin_doubling_bound(self):
        # Doubling the burn-in moves the solution on [0, T] by at most
        # K (1 + S) e^(-delta Tb) (1/delta + 1/sqrt(2 delta)).
        model = linear_model(lam=1.0, b=0.5, sigma=0.3)
        tb, t_max, dt = 4.0, 2.0, 0.02
        n_long = int(round((2 * tb + t_max) / dt))
        long_grid = TimeGrid(-2 * tb, dt, n_long)
        long_noise = sample_ensemble(long_grid, [1.0], 200, 21)
        short_noise = slice_window(long_noise, -tb, int(round((tb + t_max) / dt)))
        long_sol, _ = solve_bounded(model, long_noise, tol=1e-9)
        short_sol, _ = solve_bounded(model, short_noise, tol=1e-9)
        k0_long = long_grid.index_of(0.0)
        k0_short = short_noise.grid.index_of(0.0)
        diff = long_sol.values[:, k0_long:, :] - short_sol.values[:, k0_short:, :]
        gap = np.sqrt(np.einsum("pnd,pnd->n", diff, diff) / 200).max()
        report = check_hypotheses(model)
        s_sup = np.sqrt(
            np.einsum("pnd,pnd->n", long_sol.values, long_sol.values).max() / 200
        )
        bound = (
            report.growth
            * (1.0 + s_sup)
            * math.exp(-report.delta * tb)
            * (1.0 / report.delta + 1.0 / math.sqrt(2.0 * report.delta))
        )
        assert gap <= bound + 1e-9


class TestTranslatedSolution:
    def test_zero_shift_bit_exact(self, catalog_model, small_noise):
        base, _ = solve_bounded(catalog_model, small_noise, tol=1e-6)
        shifted = translated_solution(catalog_model, small_noise, 0.0, tol=1e-6)
        assert np.array_equal(base.values, shifted.values)

    def test_autonomous_model_is_shift_invariant(self):
        model = linear_model(lam=1.0, sigma=0.3)
        model.drift.nonlinearity_gain = 0.1
        grid = TimeGrid(-6.0, 0.02, 500)
        noise = sample_ensemble(grid, [1.0], 100, 3)
        base, _ = solve_bounded(model, noise, tol=1e-8)
        for tau in (0.5, 2.0, 7.5):
            shifted = translated_solution(model, noise, tau, tol=1e-8)
            assert np.array_equal(base.values, shifted.values)

    def test_periodic_model_recurs_at_period(self):
        period = 2.0
        w = 2.0 * math.pi / period
        model = linear_model(lam=1.0, sigma=0.1, modes=((1.0, w, 0.0),))
        grid = TimeGrid(-6.0, 0.02, 500)
        noise = sample_ensemble(grid, [1.0], 100, 4)
        base, _ = solve_bounded(model, noise, tol=1e-9)
        shifted = translated_solution(model, noise, period, tol=1e-9)
        # cos(w t + 2 pi) vs cos(w t): pure floating rounding of the phase.
        assert np.abs(shifted.values - base.values).max() <= 1e-10
        half = translated_solution(model, noise, period / 2.0, tol=1e-9)
        assert np.abs(half.values - base.values).max() > 0.1

    def test_rejects_offgrid_tau(self, catalog_model, small_noise):
        with pytest.raises(GridError):
            translated_solution(catalog_model, small_noise, 0.013)


class TestExport:
    def test_csv_deterministic_and_shaped(self, tmp_path, catalog_model):
        grid = TimeGrid(0.0, 0.1, 4)
        noise = sample_ensemble(grid, catalog_model.q_eigenvalues, 3, 8)
        sol = integrate(catalog_model, noise, [0.0, 0.0])
        f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_path_csv(sol, f1)
        write_path_csv(sol, f2)
        assert f1.read_bytes() == f2.read_bytes()
        lines = f1.read_text().splitlines()
        assert lines[0] == "path,t,X_1,X_2"
        assert len(lines) == 1 + 3 * 5


class TestMeanDynamics:
    def test_linear_mean_follows_ode(self):
        # c = gamma = 0: E X(t) obeys the forced linear ODE, realized by the
        # deterministic solve with the noise switched off.
        lam = 1.0
        w = 2.0
        model = linear_model(lam=lam, sigma=0.25, modes=((0.8, w, 0.3),), b=0.2)
        grid = TimeGrid(-8.0, 0.02, 600)
        noise = sample_ensemble(grid, [1.0], 3000, 55)
        sol, _ = solve_bounded(model, noise, tol=1e-8)

        det_model = linear_model(lam=lam, sigma=0.0, modes=((0.8, w, 0.3),), b=0.2)
        det_noise = sample_ensemble(grid, [0.0], 1, 0)
        det, _ = solve_bounded(det_model, det_noise, tol=1e-8)

        k0 = grid.index_of(0.0)
        mean = sol.values[:, k0:, 0].mean(axis=0)
        ode = det.values[0, k0:, 0]
        # Monte Carlo band: 4 sigma of the mean estimator.
        band = 4.0 * sol.values[:, k0:, 0].std(axis=0).max() / np.sqrt(3000)
        assert np.abs(mean - ode).max() <= band
