import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from brownreg import (FocContext, GFunction, PenaltySpec, branch_update, closed_update, f_eval,
                      foc_residual, foc_residuals, g_eval, group_update)
from brownreg.core import Family
from brownreg.errors import GOverflow, InvalidInput, SingularSystem, ZeroDenominator
from brownreg.foc import group_system_residuals

from instances import make_spec, random_ctx, smooth_beta

E = math.e


class TestG:
    def test_values(self):
        assert g_eval(GFunction(1.0), 0.0, 7.0) == 1.0
        assert g_eval(GFunction(0.0), 3.0, 2.0, 2) == 0.0
        assert g_eval(GFunction(0.5), 1.0, 1.0, 1) == pytest.approx(0.5 * E, rel=1e-15)

    def test_overflow_reported(self):
        with pytest.raises(GOverflow):
            g_eval(GFunction(1.0), 10.0, 100.0)

    def test_negative_lambda(self):
        with pytest.raises(InvalidInput):
            GFunction(-1.0)

    def test_order(self):
        with pytest.raises(ValueError):
            g_eval(GFunction(1.0), 1.0, 1.0, 3)

    @given(st.floats(0.01, 2.0), st.floats(-2.0, 2.0), st.floats(0.1, 3.0))
    def test_derivatives_match_finite_differences(self, s, x, lam):
        gf = GFunction(lam)
        h = 1e-5
        d1 = (gf(s, x + h) - gf(s, x - h)) / (2 * h)
        d2 = (gf(s, x + h, 1) - gf(s, x - h, 1)) / (2 * h)
        assert gf(s, x, 1) == pytest.approx(d1, rel=1e-7)
        assert gf(s, x, 2) == pytest.approx(d2, rel=1e-7)

    def test_nonnegative_and_level_at_zero(self):
        gf = GFunction(0.7)
        assert gf(0.0, -5.0) == 0.7
        assert np.all(gf(1.3, np.linspace(-5, 5, 11)) >= 0)


def scalar_ctx(lam=0.5, s=1.0, Y=1.0, X=1.0, family="ridge"):
    return FocContext(s, [Y], [[X]], PenaltySpec(family, lam))


class TestScalarRidge:
    def test_f_eval_by_hand(self):
        # RSS 0, g = 1, g_time = 1 * g, drift 0 * beta^2, sigma term 0
        ctx = FocContext(0.0, [1.0], [[1.0]], PenaltySpec("ridge", 1.0))
        assert f_eval(ctx, [1.0]) == pytest.approx(2.0)
        assert f_eval(ctx, [0.0]) == pytest.approx(3.0)

    def test_residual_at_s_zero(self):
        ctx = FocContext(0.0, [0.0], [[1.0]], PenaltySpec("ridge", 1.0))
        assert foc_residual(ctx, [1.0], 0) == -2.0

    def test_closed_form_plug_in(self):
        g = 0.5 * E
        expected = (2.0 - g) / (2.0 * (1.0 + g))
        assert closed_update(scalar_ctx(), [0.0], 0) == pytest.approx(expected, rel=1e-15)
        assert expected == pytest.approx(0.13582, abs=1e-5)

    def test_residual_root(self):
        ctx = scalar_ctx()
        root = brentq(lambda b: foc_residual(ctx, [b], 0), 0.0, 1.0, xtol=1e-15)
        assert abs(foc_residual(ctx, [root], 0)) <= 1e-9
        assert closed_update(ctx, [0.0], 0) == pytest.approx(root, abs=1e-12)

    def test_branch_ignored(self):
        ctx = scalar_ctx()
        assert branch_update(ctx, [0.0], 0, -1) == branch_update(ctx, [0.0], 0, 1)


def test_perfect_fit_has_zero_residual(rng):
    X = rng.normal(size=(8, 3))
    beta = np.array([1.0, -2.0, 0.5])
    for fam in ("lasso", "ridge", "elasticnet", "bridge", "fusedlasso"):
        ctx = FocContext(0.8, X @ beta, X, make_spec(fam, 0.0))
        np.testing.assert_allclose(foc_residuals(ctx, beta), 0.0, atol=1e-12)


FAMILIES = list(Family)


def _fd_residual(ctx, beta, k):
    h = 1e-6 * (1 + abs(beta[k]))
    up, dn = beta.copy(), beta.copy()
    up[k] += h
    dn[k] -= h
    return -(f_eval(ctx, up) - f_eval(ctx, dn)) / (2 * h)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.value)
def test_residual_is_minus_gradient_of_f(rng, family):
    for _ in range(25):
        ctx = random_ctx(rng, family)
        beta = smooth_beta(rng, ctx.J, family)
        for k in range(ctx.J):
            fd = _fd_residual(ctx, beta, k)
            assert abs(foc_residual(ctx, beta, k) - fd) <= 1e-5 * (1 + abs(fd))


@pytest.mark.parametrize("p", [0.5, 1.0, 3.0, -1.0])
def test_lp_residual_other_exponents(rng, p):
    for _ in range(20):
        ctx = random_ctx(rng, "lpnorm", p=p)
        beta = smooth_beta(rng, ctx.J, "lpnorm")
        for k in range(ctx.J):
            fd = _fd_residual(ctx, beta, k)
            assert abs(foc_residual(ctx, beta, k) - fd) <= 1e-5 * (1 + abs(fd))


@pytest.mark.parametrize("family", [f for f in FAMILIES if f is not Family.GROUPLASSO],
                         ids=lambda f: f.value)
def test_closed_update_is_fixed_point(rng, family):
    hits = 0
    for _ in range(40):
        ctx = random_ctx(rng, family)
        beta = smooth_beta(rng, ctx.J, family)
        k = int(rng.integers(ctx.J))
        for br in (1, -1):
            v, ok = branch_update(ctx, beta, k, br)
            if not ok:
                continue
            hits += 1
            trial = beta.copy()
            trial[k] = v
            scale = 1 + float(ctx.Y @ ctx.Y) + abs(ctx.sigma_term[k]) + abs(ctx.weights[k])
            assert abs(foc_residual(ctx, trial, k)) <= 1e-8 * scale
    assert hits > 20


@pytest.mark.parametrize("family", [f for f in FAMILIES if f is not Family.GROUPLASSO],
                         ids=lambda f: f.value)
def test_s_zero_gives_ols_coordinate(rng, family):
    Y = rng.normal(size=7)
    X = rng.normal(size=(7, 1))
    ctx = FocContext(0.0, Y, X, make_spec(family, 0.8))
    ols = float(X[:, 0] @ Y / (X[:, 0] @ X[:, 0]))
    br = 1 if ols > 0 else -1
    v, ok = branch_update(ctx, np.array([ols]), 0, br)
    assert ok
    assert v == pytest.approx(ols, rel=1e-12)


@pytest.mark.parametrize("family", [f for f in FAMILIES if f is not Family.GROUPLASSO],
                         ids=lambda f: f.value)
def test_lambda_zero_gives_partial_residual_update(rng, family):
    for _ in range(10):
        ctx = random_ctx(rng, family, lam=0.0)
        beta = smooth_beta(rng, ctx.J, family)
        k = int(rng.integers(ctx.J))
        xk = ctx.Xh[:, k]
        r = ctx.Y - ctx.Xh @ beta + xk * beta[k]
        ols = float(xk @ r / (xk @ xk))
        v, ok = branch_update(ctx, beta, k, 1 if ols > 0 else -1)
        assert ok
        assert v == pytest.approx(ols, rel=1e-9, abs=1e-12)


def test_lasso_sign_flip(rng):
    # flipping Y flips every term except the beta-free diffusion contribution c_k
    for _ in range(50):
        ctx = random_ctx(rng, "lasso")
        neg = FocContext(ctx.s, -ctx.Y, ctx.X, ctx.spec)
        beta = smooth_beta(rng, ctx.J, "lasso")
        k = int(rng.integers(ctx.J))
        vp, _ = branch_update(ctx, beta, k, 1)
        vn, _ = branch_update(neg, -beta, k, -1)
        a = float(ctx.Xh[:, k] @ ctx.Xh[:, k])
        assert vp + vn == pytest.approx(-ctx.sigma_term[k] / a, rel=1e-9, abs=1e-12)
        ctx0 = FocContext(0.0, ctx.Y, ctx.X, ctx.spec)
        neg0 = FocContext(0.0, -ctx.Y, ctx.X, ctx.spec)
        assert (branch_update(ctx0, beta, k, 1)[0]
                == pytest.approx(-branch_update(neg0, -beta, k, -1)[0], rel=1e-12))


def test_elasticnet_reductions(rng):
    for _ in range(10):
        ctx_l = random_ctx(rng, "lasso")
        beta = smooth_beta(rng, ctx_l.J, "lasso")
        k = int(rng.integers(ctx_l.J))
        en0 = FocContext(ctx_l.s, ctx_l.Y, ctx_l.X, PenaltySpec("elasticnet", ctx_l.spec.lambda_star, alpha=0.0))
        en1 = FocContext(ctx_l.s, ctx_l.Y, ctx_l.X, PenaltySpec("elasticnet", ctx_l.spec.lambda_star, alpha=1.0))
        ridge = FocContext(ctx_l.s, ctx_l.Y, ctx_l.X, PenaltySpec("ridge", ctx_l.spec.lambda_star))
        for br in (1, -1):
            assert branch_update(en0, beta, k, br)[0] == pytest.approx(
                branch_update(ctx_l, beta, k, br)[0], rel=1e-12)
        assert branch_update(en1, beta, k, 1)[0] == pytest.approx(
            closed_update(ridge, beta, k), rel=1e-12)


def test_zero_column_denominator():
    ctx = FocContext(1.0, [1.0, 2.0], [[0.0, 1.0], [0.0, 2.0]], PenaltySpec("lasso", 0.1))
    with pytest.raises(ZeroDenominator):
        branch_update(ctx, np.array([1.0, 1.0]), 0, 1)


def test_bridge_candidates_are_local_minima(rng):
    for _ in range(30):
        ctx = random_ctx(rng, "bridge")
        beta = smooth_beta(rng, ctx.J, "bridge")
        k = int(rng.integers(ctx.J))
        for br in (1, -1):
            v, ok = branch_update(ctx, beta, k, br)
            if not ok:
                continue
            t = beta.copy()
            t[k] = v
            f0 = f_eval(ctx, t)
            for d in (1e-4, -1e-4):
                t[k] = v + d
                assert f_eval(ctx, t) >= f0 - 1e-12 * abs(f0)


class TestGroup:
    def test_lambda_zero_is_ols_coordinate(self, rng):
        Y = rng.normal(size=9)
        X = rng.normal(size=(9, 3))
        ctx = FocContext(0.7, Y, X, PenaltySpec("grouplasso", 0.0))
        beta = rng.normal(size=3)
        for k in range(3):
            xk = X[:, k]
            r = Y - X @ beta + xk * beta[k]
            assert group_update(ctx, beta, k)[0] == pytest.approx(xk @ r / (xk @ xk), rel=1e-12)

    def test_block_denominator_differs_from_ridge_at_s_zero(self):
        lam = 0.5
        ctx_g = FocContext(0.0, [1.0], [[1.0]], PenaltySpec("grouplasso", lam))
        ctx_r = FocContext(0.0, [1.0], [[1.0]], PenaltySpec("ridge", lam))
        # numerators agree at s = 0; denominators are 2(1 + 2 lam) vs 2(1 + 0)
        vg = group_update(ctx_g, [0.0], 0)[0]
        vr = closed_update(ctx_r, [0.0], 0)
        assert vr == pytest.approx(1.0)
        assert 2.0 / vg - 2.0 / vr == pytest.approx(2.0 * 2 * lam)

    def test_random_spd_block_solves_system(self, rng):
        for _ in range(20):
            A = rng.normal(size=(2, 2))
            K = [A @ A.T + 0.5 * np.eye(2), np.eye(2) * 1.5]
            ctx = FocContext(float(rng.uniform(0.1, 1.2)), rng.normal(size=10),
                             rng.normal(size=(10, 4)),
                             PenaltySpec("grouplasso", 0.4, group_size=2, K=K))
            beta = rng.normal(size=4)
            for blk in range(2):
                beta[2 * blk:2 * blk + 2] = group_update(ctx, beta, blk)
                res = group_system_residuals(ctx, beta)[2 * blk:2 * blk + 2]
                assert np.max(np.abs(res)) <= 1e-10

    def test_singular_block(self):
        ctx = FocContext(1.0, [1.0, 2.0], [[0.0, 1.0], [0.0, 1.0]], PenaltySpec("grouplasso", 0.0))
        with pytest.raises(SingularSystem):
            group_update(ctx, np.zeros(2), 0)


def test_context_validation():
    with pytest.raises(InvalidInput):
        FocContext(-1.0, [1.0], [[1.0]], PenaltySpec("ridge"))
    with pytest.raises(InvalidInput):
        FocContext(1.0, [1.0, 2.0], [[1.0, 2.0, 3.0]], PenaltySpec("ridge"))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.5), st.floats(0.0, 2.0))
def test_f_is_bounded_below_for_ridge(s, lam):
    ctx = FocContext(s, [1.0, -1.0, 0.5], [[1.0], [0.3], [-2.0]], PenaltySpec("ridge", lam))
    v = closed_update(ctx, [0.0], 0)
    f0 = f_eval(ctx, [v])
    for d in (-1.0, -1e-3, 1e-3, 1.0):
        assert f_eval(ctx, [v + d]) >= f0
