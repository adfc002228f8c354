"""Per-time-point first-order conditions and their coordinate-wise closed forms.

At a time ``s`` the coefficients minimise

    f(beta) = RSS(beta) + g + g_s + g_X . mu(beta) + 1/2 sum sigma-term

with the exponential penalization function ``g(s, x) = lambda* exp(s x)``.
``foc_residual`` is ``-df/dbeta_k``; every closed form below zeroes it (except
the group lasso update, which solves its own block linear system).

How ``g`` is aggregated over cases:

* inside sums over cases (the diffusion term) ``g`` is evaluated per entry
  ``X_ik``, giving ``c_k = s^2 sum_i h(X_ik) g(s, X_ik)``;
* elsewhere it is evaluated at the case mean ``xbar_k`` of column ``k``, so the
  drift weight of coordinate ``k`` is ``w_k = s g(s, xbar_k)``;
* drifts that couple coordinates (Lp-norm, fused lasso, bridge) use one shared
  weight ``s g(s, xbar)`` at the grand mean, which keeps ``f`` a potential for
  its FOC residual;
* group lasso blocks use the mean over their cases and columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import BasisKind, COUPLED, Family, PenaltySpec, Panel
from .errors import GOverflow, InvalidInput, SingularSystem, ZeroDenominator
from .penalty import _drift_partials, _check_smooth, apply_basis, drift

_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class GFunction:
    """``g(s, x) = lambda_star * exp(s x)`` with ``g_x = s g`` and ``g_xx = s^2 g``."""

    lambda_star: float

    def __post_init__(self):
        if not self.lambda_star >= 0:
            raise InvalidInput(f"lambda_star must be >= 0, got {self.lambda_star}")

    def __call__(self, s, x, order=0):
        return g_eval(self, s, x, order)


def g_eval(gf: GFunction, s, x, order: int = 0):
    """Evaluate ``g`` (order 0), ``dg/dx`` (1) or ``d2g/dx2`` (2).

    Raises :class:`GOverflow` when ``s x`` exceeds the largest finite exponent
    instead of saturating to ``inf``.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    sx = np.multiply(s, x)
    if np.any(sx > _LOG_MAX):
        raise GOverflow(f"g(s, x) overflows: s*x = {np.max(sx):.6g} > {_LOG_MAX:.6g}")
    if gf.lambda_star == 0:
        out = np.zeros_like(sx, dtype=float)
    else:
        out = gf.lambda_star * np.exp(sx) * np.power(s, order)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class FocContext:
    """Everything needed to evaluate ``f`` and its partials at one time ``s``."""

    s: float
    Y: np.ndarray
    X: np.ndarray
    spec: PenaltySpec
    basis: BasisKind = BasisKind.IDENTITY
    Xh: np.ndarray = field(init=False, repr=False)
    xbar: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    sigma_term: np.ndarray = field(init=False, repr=False)
    g_level: float = field(init=False, repr=False)
    g_time: float = field(init=False, repr=False)

    def __post_init__(self):
        s = float(self.s)
        if not s >= 0:
            raise InvalidInput(f"time s must be >= 0, got {self.s}")
        Y = np.asarray(self.Y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if Y.size > 1 else X.reshape(1, -1)
        if X.shape[0] != Y.size:
            raise InvalidInput(f"X has {X.shape[0]} rows but Y has {Y.size} entries")
        basis = BasisKind.parse(self.basis)
        spec = self.spec
        J = X.shape[1]
        gf = GFunction(spec.lambda_star)
        xbar = X.mean(axis=0)
        g_col = g_eval(gf, s, xbar)
        if spec.family in COUPLED:
            weights = np.full(J, s * g_eval(gf, s, X.mean()))
        elif spec.family is Family.GROUPLASSO:
            m = spec.group_size
            spec.group_matrices(J)
            xb = X.reshape(X.shape[0], J // m, m).mean(axis=(0, 2))
            weights = np.repeat(s * g_eval(gf, s, xb), m)
        else:
            weights = s * g_col
        Xh = apply_basis(X, basis)
        # 1/2 * (d sigma_i / d beta_k = 2 h(X_ik)) * g_xx(s, X_ik), summed over cases
        sigma_term = s * s * np.sum(Xh * g_eval(gf, s, X), axis=0)
        for name, val in (("s", s), ("Y", Y), ("X", X), ("basis", basis), ("Xh", Xh),
                          ("xbar", xbar), ("weights", np.atleast_1d(weights)),
                          ("sigma_term", np.atleast_1d(sigma_term)),
                          ("g_level", float(np.sum(g_col))),
                          ("g_time", float(np.sum(xbar * g_col)))):
            object.__setattr__(self, name, val)

    @classmethod
    def from_panel(cls, panel: Panel, t_index: int, spec, basis=BasisKind.IDENTITY):
        return cls(float(panel.grid.points[t_index]), panel.Y[t_index], panel.X[t_index],
                   spec, basis)

    @property
    def N(self) -> int:
        return self.Y.size

    @property
    def J(self) -> int:
        return self.X.shape[1]

    @property
    def g(self) -> GFunction:
        return GFunction(self.spec.lambda_star)

    def block_g(self, b: int) -> float:
        """Bare ``g`` of group-lasso block ``b`` (its drift weight without the ``s``)."""
        m = self.spec.group_size
        xb = self.X[:, b * m:(b + 1) * m].mean()
        return g_eval(self.g, self.s, xb)


def _weighted_drift(ctx: FocContext, beta) -> float:
    spec, w = ctx.spec, ctx.weights
    fam = spec.family
    if fam in COUPLED:
        return float(w[0] * drift(spec, beta))
    if fam is Family.LASSO:
        return float(w @ np.abs(beta))
    if fam is Family.RIDGE:
        return float(w @ (beta * beta))
    if fam is Family.ELASTICNET:
        a = spec.alpha
        return float(w @ ((1 - a) * np.abs(beta) + a * beta * beta))
    if fam is Family.SPLINE:
        return float(w @ (beta * (2.0 + 6.0 * ctx.xbar)))
    if fam is Family.GROUPLASSO:
        m = spec.group_size
        total = 0.0
        for b, Kb in enumerate(spec.group_matrices(beta.size)):
            bb = beta[b * m:(b + 1) * m]
            total += w[b * m] * float(bb @ Kb @ bb)
        return total
    raise AssertionError(fam)


def rss(ctx: FocContext, beta) -> float:
    r = ctx.Y - ctx.Xh @ np.asarray(beta, dtype=float)
    return float(r @ r)


def f_eval(ctx: FocContext, beta) -> float:
    """The per-time Lagrangian ``f`` whose ``beta``-stationary points are the estimates."""
    beta = np.asarray(beta, dtype=float)
    return (rss(ctx, beta) + ctx.g_level + ctx.g_time + _weighted_drift(ctx, beta)
            + float(ctx.sigma_term @ beta))


def foc_residuals(ctx: FocContext, beta) -> np.ndarray:
    """FOC residual of every coordinate (``-grad f``)."""
    beta = np.asarray(beta, dtype=float)
    for k in range(beta.size):
        _check_smooth(ctx.spec, beta, k)
    r = ctx.Y - ctx.Xh @ beta
    return (2.0 * (ctx.Xh.T @ r) - ctx.weights * _drift_partials(ctx.spec, beta, ctx.xbar)
            - ctx.sigma_term)


def foc_residual(ctx: FocContext, beta, k: int) -> float:
    """``2 sum_i (Y_i - Xh_i beta) Xh_ik - g_X dmu/dbeta_k - 1/2 g_XX dsigma/dbeta_k``."""
    beta = np.asarray(beta, dtype=float)
    _check_smooth(ctx.spec, beta, k)
    r = ctx.Y - ctx.Xh @ beta
    dmu = _drift_partials(ctx.spec, beta, ctx.xbar)[k]
    return float(2.0 * (ctx.Xh[:, k] @ r) - ctx.weights[k] * dmu - ctx.sigma_term[k])


# -- closed forms ------------------------------------------------------------

def _partial_terms(ctx, beta, k):
    """``a = sum_i Xh_ik^2`` and ``b = 2 sum_i Xh_ik (partial residual)_i``."""
    xk = ctx.Xh[:, k]
    a = float(xk @ xk)
    r = ctx.Y - ctx.Xh @ beta + xk * beta[k]
    return a, 2.0 * float(xk @ r)


def _sgn(v):
    return 1 if v > 0 else (-1 if v < 0 else 0)


def branch_update(ctx: FocContext, beta, k: int, branch: int = 1):
    """Closed-form ``beta_k`` on the requested sign branch.

    Returns ``(value, consistent)``. ``consistent`` is True when the value lies
    on the branch it was derived for (and, for the fused lasso, on the assumed
    side of both neighbours); only then does it zero the FOC residual. Families
    with a single formula ignore ``branch`` and are always consistent.
    """
    beta = np.array(beta, dtype=float)
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    spec = ctx.spec
    fam = spec.family
    if fam is Family.GROUPLASSO:
        m = spec.group_size
        return float(group_update(ctx, beta, k // m)[k % m]), True
    a, b = _partial_terms(ctx, beta, k)
    c = float(ctx.sigma_term[k])
    w = float(ctx.weights[k])
    if a == 0:
        raise ZeroDenominator(k)
    if fam is Family.RIDGE:
        return (b - c) / (2.0 * (a + w)), True
    if fam is Family.SPLINE:
        return (b - c - w * (2.0 + 6.0 * ctx.xbar[k])) / (2.0 * a), True
    if fam is Family.LASSO:
        v = (b - c - branch * w) / (2.0 * a)
        return v, _sgn(v) == branch
    if fam is Family.ELASTICNET:
        al = spec.alpha
        den = 2.0 * (a + al * w)
        if den == 0:
            raise ZeroDenominator(k)
        v = (b - c - branch * w * (1 - al)) / den
        return v, _sgn(v) == branch
    if fam is Family.FUSEDLASSO:
        return _fused_update(ctx, beta, k, branch, a, b, c, w)
    if fam is Family.BRIDGE:
        return _bridge_update(ctx, beta, k, branch, a, b, c, w)
    if fam is Family.LPNORM:
        return _lp_update(ctx, beta, k, branch, a, b, c, w)
    raise AssertionError(fam)


def closed_update(ctx: FocContext, beta, k: int, branch: int = 1) -> float:
    """Closed-form coordinate update with the other coordinates held fixed."""
    return branch_update(ctx, beta, k, branch)[0]


def _fused_update(ctx, beta, k, branch, a, b, c, w):
    al = ctx.spec.alpha
    J = beta.size
    left = (1, -1) if k > 0 else (0,)
    right = (1, -1) if k + 1 < J else (0,)
    for s1 in left:
        for s2 in right:
            v = (b - c - w * (al * branch + (1 - al) * (s1 - s2))) / (2.0 * a)
            ok = _sgn(v) == branch
            if k > 0:
                ok = ok and _sgn(v - beta[k - 1]) == s1
            if k + 1 < J:
                ok = ok and _sgn(beta[k + 1] - v) == s2
            if ok:
                return v, True
    # no stationary point on this branch: fall back to the current neighbour ordering
    s1 = (_sgn(beta[k] - beta[k - 1]) or 1) if k > 0 else 0
    s2 = (_sgn(beta[k + 1] - beta[k]) or 1) if k + 1 < J else 0
    v = (b - c - w * (al * branch + (1 - al) * (s1 - s2))) / (2.0 * a)
    return v, False


def _coordinate_f(ctx, beta, k, values):
    trial = beta.copy()
    out = []
    for v in values:
        trial[k] = v
        out.append(f_eval(ctx, trial))
    return out


def _best_local_min(ctx, beta, k, candidates):
    if not candidates:
        return 0.0, False
    fs = _coordinate_f(ctx, beta, k, candidates)
    return float(candidates[int(np.argmin(fs))]), True


def _bridge_update(ctx, beta, k, branch, a, b, c, w):
    # with t = branch * u^2 the FOC is the cubic 2a u^3 + (w - branch (b - c)) u + w R = 0
    R = float(np.sum(np.sqrt(np.abs(np.delete(beta, k)))))
    q = w - branch * (b - c)
    coeffs = [2.0 * a, 0.0, q, w * R]
    cands = []
    for root in np.roots(coeffs):
        if abs(root.imag) > 1e-8 * (1 + abs(root.real)):
            continue
        u = root.real
        for _ in range(3):  # Newton polish
            d = 6.0 * a * u * u + q
            if d == 0:
                break
            u -= (2.0 * a * u ** 3 + q * u + w * R) / d
        if u <= 0:
            continue
        if 2.0 * a - w * R / (2.0 * u ** 3) <= 0:  # not a local minimum in t
            continue
        cands.append(branch * u * u)
    return _best_local_min(ctx, beta, k, cands)


def _lp_update(ctx, beta, k, branch, a, b, c, w):
    # along v = |beta_k| on the branch: phi(v) = 2a v - B + w d(v), d > 0
    p = ctx.spec.p
    S_o = float(np.sum(np.abs(np.delete(beta, k)) ** p)) if beta.size > 1 else 0.0
    B = branch * (b - c)

    if w == 0:
        v = B / (2.0 * a)
        # ties at zero go to the +1 branch, as in the solver
        return (branch * v, True) if v > 0 or (v == 0 and branch == 1) else (0.0, False)

    def d(v):
        if S_o == 0:
            return np.ones_like(v)
        vp = v ** p
        return (vp / (vp + S_o)) ** ((p - 1.0) / p)

    def phi(v):
        return 2.0 * a * v - B + w * d(v)

    v_hi = (max(B, 0.0) + 1.0) / (2.0 * a)
    grid = np.unique(np.concatenate([np.geomspace(v_hi * 1e-12, v_hi, 240),
                                     np.linspace(0, v_hi, 121)[1:]]))
    vals = phi(grid)
    cands = []
    for i in range(grid.size - 1):
        if vals[i] < 0 <= vals[i + 1]:
            v = brentq(lambda x: float(phi(x)), grid[i], grid[i + 1], xtol=1e-15,
                       rtol=4 * np.finfo(float).eps,
                       maxiter=200)
            cands.append(branch * v)
    return _best_local_min(ctx, beta, k, cands)


# -- group lasso -------------------------------------------------------------

def _group_system(ctx: FocContext, beta, blk: int):
    """Group-lasso block linear system ``(2 A) beta_blk = rhs`` for block ``blk``."""
    spec = ctx.spec
    m = spec.group_size
    J = ctx.J
    Ks = spec.group_matrices(J)
    sl = slice(blk * m, (blk + 1) * m)
    Xb = ctx.Xh[:, sl]
    gb = ctx.block_g(blk)
    A = Xb.T @ Xb + (Ks[blk] + Ks[blk].T) * gb
    r_other = ctx.Y - ctx.Xh @ beta + Xb @ beta[sl]
    cross = np.zeros(m)
    for j, Kj in enumerate(Ks):
        if j != blk:
            cross += (Kj + Kj.T) @ beta[j * m:(j + 1) * m]
    rhs = 2.0 * (Xb.T @ r_other) - ctx.s * gb * cross - ctx.sigma_term[sl]
    return 2.0 * A, rhs


def group_update(ctx: FocContext, beta, blk: int) -> np.ndarray:
    """Block update of the group lasso, solved without forming an inverse.

    ``beta_blk = 1/2 [sum_i X_ib' X_ib + (K_b + K_b') g]^{-1}
    [2 X_b' r_{-b} - s g sum_{j != b} (K_j + K_j') beta_j - sigma-term]``
    """
    beta = np.asarray(beta, dtype=float)
    M, rhs = _group_system(ctx, beta, blk)
    try:
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > 1e14:
            raise SingularSystem(f"group block {blk} system is singular (cond={cond:.3g})")
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"group block {blk} system is singular") from exc


def group_system_residuals(ctx: FocContext, beta) -> np.ndarray:
    """Residual of the group-lasso block system per coordinate."""
    beta = np.asarray(beta, dtype=float)
    m = ctx.spec.group_size
    out = np.empty(ctx.J)
    for blk in range(ctx.J // m):
        M, rhs = _group_system(ctx, beta, blk)
        out[blk * m:(blk + 1) * m] = rhs - M @ beta[blk * m:(blk + 1) * m]
    return out
