"""Drift and diffusion coefficients of the error dynamics for each penalty family.

The error process follows ``dU = mu(beta, X) ds + sigma(beta, X) dB`` with a scalar
drift ``mu`` (the penalty itself) and the linear diffusion
``sigma = 2 * sum_i sum_k beta_k h(X_ik)``.

Coordinates are 0-based throughout.
"""

from __future__ import annotations

import numpy as np

from .core import BasisKind, Family, PenaltySpec
from .errors import InvalidInput, NonDifferentiableAtZero, TiedFusedPair


def apply_basis(X, basis=BasisKind.IDENTITY) -> np.ndarray:
    """Elementwise basis map: identity, or ``h(x) = x + x**2 + x**3``."""
    X = np.asarray(X, dtype=float)
    if BasisKind.parse(basis) is BasisKind.IDENTITY:
        return X
    return X + X * X + X * X * X


def _lp_drift(beta, p):
    a = np.abs(beta)
    with np.errstate(divide="ignore"):
        if p < 0 and np.any(a == 0):
            return 0.0
        return float(np.sum(a ** p) ** (1.0 / p))


def drift(spec: PenaltySpec, beta, xbar=None) -> float:
    """Scalar drift ``mu(beta)`` of the error dynamics.

    ``xbar`` (case-averaged raw covariates, one per coordinate) is only used by
    the cubic spline family, whose drift ``sum_k beta_k (2 + 6 xbar_k)`` depends
    on the covariates.
    """
    beta = np.asarray(beta, dtype=float)
    fam = spec.family
    if fam is Family.LASSO:
        return float(np.sum(np.abs(beta)))
    if fam is Family.RIDGE:
        return float(np.sum(beta * beta))
    if fam is Family.LPNORM:
        return _lp_drift(beta, spec.p)
    if fam is Family.ELASTICNET:
        a = spec.alpha
        return float((1 - a) * np.sum(np.abs(beta)) + a * np.sum(beta * beta))
    if fam is Family.FUSEDLASSO:
        a = spec.alpha
        return float(a * np.sum(np.abs(beta)) + (1 - a) * np.sum(np.abs(np.diff(beta))))
    if fam is Family.BRIDGE:
        return float(np.sum(np.sqrt(np.abs(beta))) ** 2)
    if fam is Family.GROUPLASSO:
        m = spec.group_size
        Ks = spec.group_matrices(beta.size)
        return float(sum(beta[b * m:(b + 1) * m] @ Kb @ beta[b * m:(b + 1) * m]
                         for b, Kb in enumerate(Ks)))
    if fam is Family.SPLINE:
        if xbar is None:
            raise InvalidInput("spline drift needs the case-averaged covariates xbar")
        return float(np.sum(beta * (2.0 + 6.0 * np.asarray(xbar, dtype=float))))
    raise AssertionError(fam)


def _check_smooth(spec, beta, k):
    fam = spec.family
    if fam in (Family.LASSO, Family.ELASTICNET, Family.BRIDGE, Family.FUSEDLASSO):
        if beta[k] == 0:
            raise NonDifferentiableAtZero(k)
    if fam is Family.LPNORM:
        p = spec.p
        if p < 0:
            zero = np.flatnonzero(beta == 0)
            if zero.size:
                raise NonDifferentiableAtZero(int(zero[0]))
        elif p <= 1 and beta[k] == 0:
            raise NonDifferentiableAtZero(k)
        elif not np.any(beta != 0):
            raise NonDifferentiableAtZero(k)
    if fam is Family.FUSEDLASSO:
        if k > 0 and beta[k] == beta[k - 1]:
            raise TiedFusedPair(k, k - 1)
        if k + 1 < beta.size and beta[k] == beta[k + 1]:
            raise TiedFusedPair(k, k + 1)


def drift_grad(spec: PenaltySpec, beta, k: int, xbar=None) -> float:
    """Exact partial derivative of :func:`drift` with respect to ``beta[k]``.

    Raises
    ------
    NonDifferentiableAtZero
        ``beta[k] == 0`` under a family with an absolute value in ``beta[k]``.
    TiedFusedPair
        ``beta[k]`` equals a neighbour under the fused lasso.
    """
    beta = np.asarray(beta, dtype=float)
    if not 0 <= k < beta.size:
        raise IndexError(f"coordinate {k} out of range for J={beta.size}")
    _check_smooth(spec, beta, k)
    return float(_drift_partials(spec, beta, xbar)[k])


def drift_gradient(spec: PenaltySpec, beta, xbar=None) -> np.ndarray:
    """All partials of the drift; validates every coordinate's smoothness."""
    beta = np.asarray(beta, dtype=float)
    for k in range(beta.size):
        _check_smooth(spec, beta, k)
    return _drift_partials(spec, beta, xbar)


def _drift_partials(spec, beta, xbar):
    fam = spec.family
    sgn = np.sign(beta)
    if fam is Family.LASSO:
        return sgn
    if fam is Family.RIDGE:
        return 2.0 * beta
    if fam is Family.LPNORM:
        p = spec.p
        a = np.abs(beta)
        S = np.sum(a ** p)
        # d/db_k (sum |b|^p)^(1/p) = sign(b_k) (|b_k|^p / S)^((p-1)/p)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = sgn * (a ** p / S) ** ((p - 1.0) / p)
        return np.where(a == 0, 0.0, out) if p > 1 else out
    if fam is Family.ELASTICNET:
        a = spec.alpha
        return (1 - a) * sgn + 2 * a * beta
    if fam is Family.FUSEDLASSO:
        a = spec.alpha
        d = np.sign(np.diff(beta))
        tv = np.zeros_like(beta)
        tv[1:] += d
        tv[:-1] -= d
        return a * sgn + (1 - a) * tv
    if fam is Family.BRIDGE:
        r = np.sqrt(np.abs(beta))
        with np.errstate(divide="ignore"):
            return sgn * np.sum(r) / r
    if fam is Family.GROUPLASSO:
        m = spec.group_size
        out = np.empty_like(beta)
        for b, Kb in enumerate(spec.group_matrices(beta.size)):
            sl = slice(b * m, (b + 1) * m)
            out[sl] = (Kb + Kb.T) @ beta[sl]
        return out
    if fam is Family.SPLINE:
        if xbar is None:
            raise InvalidInput("spline drift needs the case-averaged covariates xbar")
        return 2.0 + 6.0 * np.asarray(xbar, dtype=float)
    raise AssertionError(fam)


def diffusion(beta, X, basis=BasisKind.IDENTITY) -> float:
    """``2 * sum_i sum_k beta_k h(X_ik)`` for one time point (``X`` is ``N x J``)."""
    Xh = apply_basis(np.atleast_2d(X), basis)
    return float(2.0 * np.sum(Xh @ np.asarray(beta, dtype=float)))


def diffusion_grad(X, k: int, basis=BasisKind.IDENTITY) -> float:
    """``d diffusion / d beta_k = 2 * sum_i h(X_ik)``."""
    Xh = apply_basis(np.atleast_2d(X), basis)
    return float(2.0 * np.sum(Xh[:, k]))
