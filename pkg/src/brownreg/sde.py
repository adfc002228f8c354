"""Euler-Maruyama simulation of the error dynamics and synthetic panel generation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import kernels
from .core import BasisKind, CoefPath, Panel, PenaltySpec, TimeGrid
from .errors import GridMismatch, InvalidInput
from .penalty import apply_basis, diffusion, drift

#: Philox stream tags, so that error paths and generated designs never share draws
STREAM_ERRORS = 0
STREAM_DESIGN = 1


@dataclass(frozen=True, eq=False)
class ErrorPaths:
    grid: TimeGrid
    paths: np.ndarray
    seed: int
    scheme: str = "euler-maruyama"

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]


def brownian_increments(grid: TimeGrid, n_paths: int, seed: int, stream: int = STREAM_ERRORS,
                        path_offset: int = 0) -> np.ndarray:
    """``dB[p, t] = sqrt(ds_t) Z`` with ``Z`` keyed by ``(seed, stream, path, step)``."""
    ids = np.arange(path_offset, path_offset + n_paths, dtype=np.uint64)
    z = kernels.standard_normals(seed, stream, ids, 0, len(grid) - 1)
    return z * np.sqrt(grid.steps)[None, :]


def euler_maruyama(grid: TimeGrid, mu, sigma, n_paths: int, seed: int, u0: float = 0.0,
                   mu_lin=0.0, sigma_lin=0.0, dW=None) -> ErrorPaths:
    """Simulate ``dU = (mu + mu_lin U) ds + (sigma + sigma_lin U) dB``.

    Coefficients are scalars or per-step arrays frozen at the left endpoint of
    each step. ``dW`` may be supplied to reuse a Brownian path.
    """
    S = len(grid) - 1
    coef = [np.broadcast_to(np.asarray(c, dtype=float), (S,)).copy()
            for c in (mu, mu_lin, sigma, sigma_lin)]
    if dW is None:
        dW = brownian_increments(grid, n_paths, seed)
    elif dW.shape != (n_paths, S):
        raise InvalidInput(f"dW must have shape {(n_paths, S)}, got {dW.shape}")
    paths = kernels.em_affine(float(u0), grid.steps, dW, coef[0], coef[1], coef[2], coef[3])
    return ErrorPaths(grid, paths, int(seed))


def _coefficients(beta_path: CoefPath, X, spec, basis):
    T = len(beta_path.grid)
    if X.shape[0] != T:
        raise GridMismatch(f"covariates cover {X.shape[0]} times, coefficient path {T}")
    mu = np.array([drift(spec, beta_path.betas[t], X[t].mean(axis=0)) for t in range(T - 1)])
    sigma = np.array([diffusion(beta_path.betas[t], X[t], basis) for t in range(T - 1)])
    return mu, sigma


def simulate_errors(beta_path: CoefPath, panel_X, spec: PenaltySpec,
                    basis=BasisKind.IDENTITY, n_paths: int = 1, seed: int = 0,
                    u0: float = 0.0) -> ErrorPaths:
    """Error paths driven by the penalty's drift and the linear diffusion.

    ``panel_X`` is a :class:`Panel` (its grid must equal the path's) or an
    ``(n_times, N, J)`` covariate array on the path's grid.
    """
    if isinstance(panel_X, Panel):
        if panel_X.grid != beta_path.grid:
            raise GridMismatch("panel and coefficient path use different grids")
        X = panel_X.X
    else:
        X = np.asarray(panel_X, dtype=float)
    mu, sigma = _coefficients(beta_path, X, spec, BasisKind.parse(basis))
    return euler_maruyama(beta_path.grid, mu, sigma, n_paths, seed, u0)


@dataclass(frozen=True)
class DesignSpec:
    """Gaussian covariates ``X[t, i, j] ~ N(loc, scale^2)`` drawn from the design stream."""

    n_cases: int
    loc: float = 0.0
    scale: float = 1.0

    def draw(self, n_times: int, J: int, seed: int) -> np.ndarray:
        if self.n_cases < 1 or J < 1:
            raise InvalidInput("design needs n_cases >= 1 and J >= 1")
        ids = np.arange(self.n_cases * J, dtype=np.uint64)
        z = kernels.standard_normals(seed, STREAM_DESIGN, ids, 0, n_times)
        return self.loc + self.scale * z.reshape(self.n_cases, J, n_times).transpose(2, 0, 1)


def generate_panel(beta_true: CoefPath, X_gen: Union[DesignSpec, np.ndarray], spec: PenaltySpec,
                   basis=BasisKind.IDENTITY, seed: int = 0, noise: float = 1.0,
                   u0: float = 0.0) -> Panel:
    """``Y_i(s) = sum_k beta_k(s) h(X_ik(s)) + noise * U_i(s)``, one error path per case."""
    basis = BasisKind.parse(basis)
    T, J = len(beta_true.grid), beta_true.J
    if isinstance(X_gen, DesignSpec):
        X = X_gen.draw(T, J, seed)
    else:
        X = np.asarray(X_gen, dtype=float)
        if X.ndim != 3 or X.shape[0] != T or X.shape[2] != J:
            raise GridMismatch(f"design must have shape ({T}, N, {J}), got {X.shape}")
    N = X.shape[1]
    Y = np.einsum("tij,tj->ti", apply_basis(X, basis), beta_true.betas)
    if noise != 0:
        U = simulate_errors(beta_true, X, spec, basis, n_paths=N, seed=seed, u0=u0).paths
        Y = Y + noise * U.T
    return Panel(beta_true.grid, Y, X)


def objective_eval(panel: Panel, beta_path: CoefPath, basis=BasisKind.IDENTITY) -> float:
    """Trapezoid integral over time of ``sum_i (Y_i - sum_k beta_k h(X_ik))^2``."""
    if panel.grid != beta_path.grid:
        raise GridMismatch("panel and coefficient path use different grids")
    Xh = apply_basis(panel.X, basis)
    resid = panel.Y - np.einsum("tij,tj->ti", Xh, beta_path.betas)
    return float(np.trapezoid(np.sum(resid * resid, axis=1), panel.grid.points))


def gbm_strong_errors(steps_per_unit, a=0.5, b=1.0, u0=1.0, T=1.0, n_paths=20000, seed=0):
    """RMS error at ``T`` of Euler-Maruyama against the exact geometric Brownian motion.

    All resolutions share one Brownian path, built at the finest resolution and
    aggregated for coarser steps.
    """
    levels = sorted(int(n) for n in steps_per_unit)
    fine = int(levels[-1] * T)
    fine_grid = TimeGrid.uniform(T, fine + 1)
    dW_fine = brownian_increments(fine_grid, n_paths, seed)
    exact = u0 * np.exp((a - 0.5 * b * b) * T + b * dW_fine.sum(axis=1))
    errors = {}
    for n in levels:
        n_steps = int(n * T)
        ratio = fine // n_steps
        dW = dW_fine.reshape(n_paths, n_steps, ratio).sum(axis=2)
        grid = TimeGrid.uniform(T, n_steps + 1)
        paths = euler_maruyama(grid, 0.0, 0.0, n_paths, seed, u0, mu_lin=a, sigma_lin=b, dW=dW)
        errors[n] = float(np.sqrt(np.mean((paths.paths[:, -1] - exact) ** 2)))
    return errors
