"""Coordinate-wise solution of the first-order conditions, per time point and along a grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .core import BasisKind, CoefPath, Family, Panel, PenaltySpec
from .errors import BrownRegError, InvalidSpec, NoConsistentBranch
from .foc import (FocContext, branch_update, f_eval, foc_residuals, group_system_residuals,
                  group_update, closed_update, rss)

INIT_MODES = ("auto", "ols", "zero", "warm")


@dataclass(frozen=True)
class SolveOptions:
    """Solver configuration.

    ``tol`` is an absolute bound on ``max_k |foc_residual_k|`` after scaling by
    ``1 + ||Y||^2``. ``init`` is one of ``auto`` (least squares), ``ols``,
    ``zero``, ``warm`` (previous grid point, for :func:`fit_path`) or an explicit
    starting vector. ``fixed_signs`` pins the sign branch of every coordinate
    instead of trying both.
    """

    max_sweeps: int = 500
    tol: float = 1e-8
    init: Union[str, Sequence[float]] = "auto"
    fixed_signs: Optional[tuple] = None

    def __post_init__(self):
        if int(self.max_sweeps) < 1:
            raise InvalidSpec("max_sweeps", "must be >= 1")
        if not self.tol > 0:
            raise InvalidSpec("tol", "must be > 0")
        if isinstance(self.init, str):
            if self.init not in INIT_MODES:
                raise InvalidSpec("init", f"must be one of {INIT_MODES} or a vector")
        else:
            object.__setattr__(self, "init", tuple(float(v) for v in self.init))
        if self.fixed_signs is not None:
            signs = tuple(int(v) for v in self.fixed_signs)
            if any(v not in (1, -1) for v in signs):
                raise InvalidSpec("fixed_signs", "entries must be +1 or -1")
            object.__setattr__(self, "fixed_signs", signs)


@dataclass
class PointReport:
    converged: bool
    sweeps: int
    max_residual: float
    foc_residual_norm: float
    branch_signs: np.ndarray
    objective: float
    message: str = ""


@dataclass
class FitReport:
    points: list = field(default_factory=list)
    aggregate_objective: float = float("nan")

    @property
    def all_converged(self) -> bool:
        return all(p.converged for p in self.points)

    @property
    def partially_converged(self) -> bool:
        return any(p.converged for p in self.points) and not self.all_converged


def ols_start(ctx: FocContext) -> np.ndarray:
    return np.linalg.lstsq(ctx.Xh, ctx.Y, rcond=None)[0]


def _initial(ctx: FocContext, init, warm=None) -> np.ndarray:
    if not isinstance(init, str):
        beta = np.array(init, dtype=float)
        if beta.shape != (ctx.J,):
            raise InvalidSpec("init", f"starting vector must have length {ctx.J}")
        return beta
    if init == "warm" and warm is not None:
        return np.array(warm, dtype=float)
    if init == "zero":
        return np.zeros(ctx.J)
    return ols_start(ctx)


def _criterion_residuals(ctx, beta):
    if ctx.spec.family is Family.GROUPLASSO:
        return group_system_residuals(ctx, beta)
    return foc_residuals(ctx, beta)


def _sweep(ctx: FocContext, beta: np.ndarray, opts: SolveOptions) -> None:
    spec = ctx.spec
    if spec.family is Family.GROUPLASSO:
        m = spec.group_size
        for blk in range(ctx.J // m):
            beta[blk * m:(blk + 1) * m] = group_update(ctx, beta, blk)
        return
    if not spec.branched:
        for k in range(ctx.J):
            beta[k] = closed_update(ctx, beta, k)
        return
    for k in range(ctx.J):
        branches = (opts.fixed_signs[k],) if opts.fixed_signs else (1, -1)
        best = None
        for br in branches:
            v, ok = branch_update(ctx, beta, k, br)
            if not ok:
                continue
            if best is None:
                best = v
            else:
                trial = beta.copy()
                trial[k] = best
                f_best = f_eval(ctx, trial)
                trial[k] = v
                if f_eval(ctx, trial) < f_best:  # ties stay on the +1 branch
                    best = v
        if best is None:
            raise NoConsistentBranch(k)
        beta[k] = best


def fit_timepoint(ctx: FocContext, opts: SolveOptions = SolveOptions(), warm=None):
    """Cyclic closed-form coordinate sweeps until ``max_k |residual_k| <= tol``.

    Returns ``(beta, PointReport)``. Running out of sweeps is reported through
    ``converged=False``; structural failures (no consistent sign branch, zero
    denominator) raise.
    """
    if opts.fixed_signs is not None and len(opts.fixed_signs) != ctx.J:
        raise InvalidSpec("fixed_signs", f"need {ctx.J} signs")
    beta = _initial(ctx, opts.init, warm)
    tol_abs = opts.tol * (1.0 + float(ctx.Y @ ctx.Y))
    res = np.inf
    converged = False
    sweeps = 0
    for sweeps in range(1, int(opts.max_sweeps) + 1):
        _sweep(ctx, beta, opts)
        res = float(np.max(np.abs(_criterion_residuals(ctx, beta))))
        if res <= tol_abs:
            converged = True
            break
    if ctx.spec.family is Family.GROUPLASSO:
        foc_norm = float(np.max(np.abs(foc_residuals(ctx, beta))))
    else:
        foc_norm = res
    report = PointReport(
        converged=converged,
        sweeps=sweeps,
        max_residual=res,
        foc_residual_norm=foc_norm,
        branch_signs=np.where(beta < 0, -1, 1),
        objective=f_eval(ctx, beta),
        message="" if converged else f"not converged after {sweeps} sweeps (residual {res:.3g})",
    )
    return beta, report


def fit_path(panel: Panel, spec: PenaltySpec, basis=BasisKind.IDENTITY,
             opts: SolveOptions = SolveOptions()):
    """Fit every grid point independently (optionally warm-started along the grid).

    A failure at one point is recorded in its report and does not abort the
    others. The aggregate objective is the trapezoid integral over time of the
    residual sum of squares.
    """
    basis = BasisKind.parse(basis)
    T, J = len(panel.grid), panel.J
    betas = np.full((T, J), np.nan)
    report = FitReport()
    rss_t = np.full(T, np.nan)
    warm = None
    for t in range(T):
        ctx = FocContext.from_panel(panel, t, spec, basis)
        try:
            beta, pr = fit_timepoint(ctx, opts, warm=warm)
        except BrownRegError as exc:
            pr = PointReport(False, 0, float("nan"), float("nan"), np.ones(J, dtype=int),
                             float("nan"), f"{type(exc).__name__}: {exc}")
            report.points.append(pr)
            continue
        betas[t] = beta
        rss_t[t] = rss(ctx, beta)
        report.points.append(pr)
        if opts.init == "warm":
            warm = beta
    report.aggregate_objective = float(np.trapezoid(rss_t, panel.grid.points))
    path = CoefPath(
        panel.grid,
        betas,
        foc_residual_norm=np.array([p.foc_residual_norm for p in report.points]),
        iterations=np.array([p.sweeps for p in report.points]),
        branch_signs=np.array([p.branch_signs for p in report.points]),
        converged=np.array([p.converged for p in report.points]),
        messages=tuple(p.message for p in report.points),
    )
    return path, report
