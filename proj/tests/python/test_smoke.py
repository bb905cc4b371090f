import numpy as np
import pytest

import pydebias as pd


def test_soft_threshold_debiases_to_hard():
    f = np.array([3.0, -0.5, 1.0, -4.0, 0.2])
    soft = pd.soft_threshold(f, 1.0)
    np.testing.assert_allclose(soft.estimate, [2.0, 0.0, 0.0, -3.0, 0.0])
    phi = pd.LinearMap.identity(5)
    out = pd.debias_cls(soft.estimate, soft.model, phi, f)
    np.testing.assert_allclose(out, [3.0, 0.0, 0.0, -4.0, 0.0], atol=1e-12)


def test_tv1d_primal_dual_matches_oracle():
    rng = np.random.default_rng(3)
    f = rng.normal(size=6) * 4.0
    phi = pd.LinearMap.identity(6)
    gamma = pd.grad_1d(6)
    params = pd.PdParams.defaults_for(gamma)
    params.tol = 1e-12
    params.max_iters = 200000
    res = pd.solve_pd_debiased(phi, gamma, 1.0, f, params)
    support, u_ref = pd.cosupport_bruteforce(phi, gamma, 1.0, f)
    np.testing.assert_allclose(res.u_star, u_ref, atol=1e-6)
    np.testing.assert_allclose(res.tilde_u_star, pd.explicit_debias(phi, gamma, f, support), atol=1e-6)


def test_linear_map_shapes_and_adjoint():
    g = pd.grad_2d(4, 5)
    assert g.domain_dim == 20
    assert g.codomain_dim == 40
    x = np.arange(20.0)
    y = np.linspace(-1.0, 1.0, 40)
    assert abs(g.apply(x) @ y - x @ g.apply_adjoint(y)) < 1e-10
    assert abs(pd.op_norm(pd.grad_1d(16), 2000) - 2.0) < 1e-3


def test_nlm_and_general_debiasing():
    img = np.tile(np.arange(8.0) * 20.0, (8, 1))
    cfg = pd.NlmConfig(1, 2, 20.0)
    w = pd.nlm_weights(img, cfg)
    out = pd.nlm_apply(img, w)
    assert out.shape == (8, 8)
    ones = pd.nlm_apply(np.ones((8, 8)), w)
    np.testing.assert_allclose(ones, 1.0)

    f = np.array([5.0, 0.3, -2.0, 0.0, 7.0])
    soft = pd.soft_threshold(f, 1.0)

    def jvp(d):
        return np.where(np.abs(f) > 1.0, d, 0.0)

    cfg = pd.DebiasConfig()
    cfg.max_dirs = 5
    run = pd.debias_general(f, soft.estimate, jvp, pd.LinearMap.identity(5), cfg)
    np.testing.assert_allclose(run.tilde_u, [5.0, 0.0, -2.0, 0.0, 7.0], atol=1e-10)


def test_metrics_and_errors():
    u = pd.gen_pwc_1d(128, 4, 8, seed=1)
    assert u.shape == (128,)
    assert np.count_nonzero(np.diff(u)) == 3
    assert pd.psnr(u, u) == float("inf")
    noisy = pd.awgn(u, 5.0, seed=2)
    assert 30.0 < pd.psnr(noisy, u) < 37.0
    with pytest.raises(pd.DebiasError):
        pd.soft_threshold(u, -1.0)
    with pytest.raises(pd.DebiasError):
        pd.LinearMap.identity(4).apply(np.zeros(3))
