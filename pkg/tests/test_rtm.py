import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exact_linear_dataset

from koopgen import rtm, sysid
from koopgen.dataset import SnapshotDataset, generate_dataset
from koopgen.dictionary import Dictionary, monomial_dictionary
from koopgen.errors import ConfigError, DegenerateDataError
from koopgen.systems import builtin_system


def _single_x_dictionary():
    return Dictionary("monomial", 1, np.array([[1]]))


def _linear_data(a=-1.0, M=50, T=1.0, G=20, seed=0):
    return exact_linear_dataset(a, M, T, G, seed)


@pytest.fixture(scope="module")
def vdp_data():
    return generate_dataset(builtin_system("vdp"), 100, 1.0, 50, 0)


class TestConfig:
    @pytest.mark.parametrize("kw", [
        {"mu": 0.0}, {"lam": 1.0, "mu": 2.0}, {"T": 0.0}, {"gamma_count": 0}, {"delta": -1.0},
        {"quadrature_mode": "simpson"},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            rtm.RtmConfig(**kw)

    def test_defaults(self):
        cfg = rtm.RtmConfig()
        assert (cfg.mu, cfg.lam, cfg.T, cfg.delta) == (2.5, 1e8, 1.0, 0.0)


class TestAssemble:
    def test_scalar_linear_oracle(self):
        data = generate_dataset(builtin_system("linear"), 1, 1.0, 20, 0, initial=np.array([[1.0]]))
        inter = rtm.assemble(data, _single_x_dictionary(), rtm.RtmConfig(mu=2.0, gamma_count=20))
        assert inter.I_quad[0, 0] == pytest.approx((1 - math.exp(-3)) / 3, abs=1e-10)
        assert inter.I_quad[0, 0] == pytest.approx(0.316738, abs=1e-6)
        assert inter.Phi_T[0, 0] == pytest.approx(math.exp(-1), abs=1e-10)

    def test_constant_observable(self):
        mu = 2.5
        data = generate_dataset(builtin_system("vdp"), 6, 1.0, 12, 1)
        inter = rtm.assemble(data, monomial_dictionary(2, caps=2), rtm.RtmConfig(mu=mu, gamma_count=12))
        np.testing.assert_allclose(inter.I_quad[:, 0], (1 - math.exp(-mu)) / mu, rtol=1e-13)

    def test_tiny_horizon(self):
        data = generate_dataset(builtin_system("vdp"), 4, 1e-6, 3, 1)
        inter = rtm.assemble(data, monomial_dictionary(2, caps=2), rtm.RtmConfig(T=1e-6, gamma_count=3))
        assert np.max(np.abs(inter.I_quad)) < 2e-6
        np.testing.assert_allclose(inter.Phi_T, inter.X, atol=1e-5)

    def test_mismatched_horizon(self):
        data = _linear_data(T=1.0, G=4)
        with pytest.raises(ConfigError):
            rtm.assemble(data, _single_x_dictionary(), rtm.RtmConfig(T=2.0, gamma_count=4))

    @pytest.mark.parametrize("mode", ["uniform_composite", "uniform_interp"])
    def test_uniform_modes_agree_with_gl(self, mode):
        data = _linear_data(M=5, G=40)
        d = monomial_dictionary(1, total_degree=2)
        ref = rtm.assemble(data, d, rtm.RtmConfig(gamma_count=40)).I_quad
        got = rtm.assemble(data, d, rtm.RtmConfig(gamma_count=40, quadrature_mode=mode)).I_quad
        np.testing.assert_allclose(got, ref, atol=1e-6)

    def test_gl_mode_needs_nodes(self):
        data = generate_dataset(builtin_system("linear"), 3, 1.0, 4, 0, gl_nodes=False)
        with pytest.raises(ConfigError):
            rtm.assemble(data, _single_x_dictionary(), rtm.RtmConfig(gamma_count=4))


class TestResolventWeights:
    def test_scalar_linear(self):
        data = _linear_data(M=3)
        cfg = rtm.RtmConfig(mu=2.0, gamma_count=20)
        Xi, _ = rtm.solve_resolvent_weights(rtm.assemble(data, _single_x_dictionary(), cfg), cfg)
        assert Xi[0, 0] == pytest.approx(1 / 3, abs=1e-12)

    def test_constant_row(self):
        cfg = rtm.RtmConfig(mu=2.0, gamma_count=20)
        Xi, _ = rtm.solve_resolvent_weights(rtm.assemble(_linear_data(), monomial_dictionary(1, total_degree=2), cfg), cfg)
        np.testing.assert_allclose(Xi[:, 0], [0.5, 0.0, 0.0], atol=1e-10)

    def test_resolvent_consistency(self):
        # R(mu) x^n = x^n / (mu + n) for f = -x
        mu = 2.5
        data = _linear_data()
        d = monomial_dictionary(1, total_degree=3)
        cfg = rtm.RtmConfig(mu=mu, gamma_count=20)
        inter = rtm.assemble(data, d, cfg)
        Xi, _ = rtm.solve_resolvent_weights(inter, cfg)
        want = inter.X / (mu + np.arange(4))
        np.testing.assert_allclose(inter.X @ Xi, want, atol=1e-6)

    def test_empty(self):
        data = _linear_data(M=2)
        empty = SnapshotDataset(data.initial[:0], 1.0, 20, data.end_states[:0], node_states=data.node_states[:0])
        with pytest.raises(DegenerateDataError):
            rtm.assemble(empty, _single_x_dictionary(), rtm.RtmConfig(gamma_count=20))


class TestLearn:
    def test_linear_generator(self):
        gen = rtm.learn(_linear_data(), monomial_dictionary(1, total_degree=2), rtm.RtmConfig(gamma_count=20))
        assert np.max(np.abs(gen.L - np.diag([0.0, -1.0, -2.0]))) <= 1e-5

    @pytest.mark.parametrize("a", [-1.0, -0.5])
    def test_linear_spectrum(self, a):
        n = 4
        gen = rtm.learn(_linear_data(a=a), monomial_dictionary(1, total_degree=n), rtm.RtmConfig(gamma_count=20))
        eig = np.sort(np.linalg.eigvals(gen.L).real)
        np.testing.assert_allclose(eig, np.sort(a * np.arange(n + 1)), atol=1e-4)

    @pytest.mark.parametrize("lam", [1e6, 1e8, 1e10])
    def test_lambda_enters_as_yosida_approximation(self, lam):
        # with an exact resolvent the method returns lam L (lam - L)^{-1}, i.e. L + L^2/lam + ...
        data, d = _linear_data(), monomial_dictionary(1, total_degree=2)
        L_true = np.diag([0.0, -1.0, -2.0])
        yosida = lam * L_true @ np.linalg.inv(lam * np.eye(3) - L_true)
        got = rtm.learn(data, d, rtm.RtmConfig(lam=lam, gamma_count=20)).L
        np.testing.assert_allclose(got, yosida, atol=1e-6)

    def test_lambda_robustness_at_large_lambda(self):
        data, d = _linear_data(), monomial_dictionary(1, total_degree=2)
        Ls = [rtm.learn(data, d, rtm.RtmConfig(lam=lam, gamma_count=20)).L for lam in (1e8, 1e10)]
        assert np.max(np.abs(Ls[0] - Ls[1])) <= 1e-6

    def test_tikhonov_shift_is_continuous(self):
        data, d = _linear_data(), monomial_dictionary(1, total_degree=2)
        base = rtm.learn(data, d, rtm.RtmConfig(gamma_count=20))
        smin = np.linalg.svd(base.intermediates.A, compute_uv=False)[-1]
        shifted = rtm.learn(data, d, rtm.RtmConfig(gamma_count=20, delta=10 * smin ** 2)).L
        assert np.max(np.abs(shifted - base.L)) > 0
        assert np.array_equal(np.argmax(np.abs(shifted), axis=1), np.argmax(np.abs(base.L), axis=1))
        smaller = rtm.learn(data, d, rtm.RtmConfig(gamma_count=20, delta=0.1 * smin ** 2)).L
        assert np.max(np.abs(smaller - base.L)) < np.max(np.abs(shifted - base.L))

    def test_vdp_weight_range(self, vdp_data):
        d = monomial_dictionary(2, caps=[3, 3])
        truth = sysid.true_weights(builtin_system("vdp"), d)
        for mu in (2.5, 3.5):
            gen = rtm.learn(vdp_data, d, rtm.RtmConfig(mu=mu, gamma_count=50))
            assert sysid.rmse_weights(sysid.recover_field(gen).theta, truth) <= 1e-6

    def test_diagnostics_recorded(self, vdp_data):
        gen = rtm.learn(vdp_data, monomial_dictionary(2, caps=[3, 3]), rtm.RtmConfig())
        assert {"cond_A", "cond_resolvent", "cond_X", "M", "N"} <= set(gen.diagnostics)
        assert gen.config["lam"] == 1e8

    def test_condition_warning(self):
        # a redundant dictionary (x and x again) makes A singular
        d = Dictionary("monomial", 1, np.array([[0], [1], [1]]))
        with pytest.warns(RuntimeWarning, match="cond"):
            rtm.learn(_linear_data(G=20), d, rtm.RtmConfig(gamma_count=20))

    @settings(max_examples=15)
    @given(seed=st.integers(0, 2**31))
    def test_permutation_equivariance(self, seed):
        data = generate_dataset(builtin_system("vdp"), 40, 1.0, 10, 3)
        d = monomial_dictionary(2, caps=[3, 3])
        cfg = rtm.RtmConfig(gamma_count=10)
        perm = np.random.default_rng(seed).permutation(d.size)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            L = rtm.learn(data, d, cfg).L
            Lp = rtm.learn(data, d.permuted(perm), cfg).L
        np.testing.assert_allclose(Lp, L[np.ix_(perm, perm)], rtol=0, atol=1e-12)


class TestTruncationBound:
    def test_plug_in(self):
        with mpmath.workdps(40):
            ref = float(mpmath.mpf(10) ** 4 / 99 * mpmath.e ** -100)
        assert rtm.truncation_bound(100.0, 1.0, 1.0, 1.0) == pytest.approx(ref, rel=1e-12)
        assert ref == pytest.approx(3.76e-42, rel=1e-2)

    def test_zero_horizon(self):
        assert rtm.truncation_bound(10.0, 0.0, 2.0, 3.0) == pytest.approx(3.0 * 100 / 8)

    def test_decreasing_in_lambda(self):
        T = 1.0
        lams = [2.5, 5, 10, 20, 40, 80]
        vals = [rtm.truncation_bound(lam, T, 0.5, 1.0) for lam in lams]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_lambda_below_omega(self):
        with pytest.raises(ConfigError):
            rtm.truncation_bound(1.0, 1.0, 2.0, 1.0)
