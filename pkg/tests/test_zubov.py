import numpy as np
import pytest

from koopgen import zubov
from koopgen.dataset import generate_dataset
from koopgen.dictionary import monomial_dictionary, tanh_random_dictionary
from koopgen.errors import ConfigError, EmptyRegionError, EquilibriumNotFoundError
from koopgen.generator import LearnedGenerator, projected_generator
from koopgen.rtm import RtmConfig, learn
from koopgen.sysid import IdentifiedSystem
from koopgen.systems import builtin_system

ALPHA = 0.1


def closed_form(x):
    # u = 1 - exp(-alpha x^2 / 2) solves  -x u' = -alpha x^2 (1 - u)
    return 1.0 - np.exp(-ALPHA * x ** 2 / 2)


@pytest.fixture(scope="module")
def oracle():
    d = tanh_random_dictionary(1, 30, 0, scale_W=2.0)
    gen = projected_generator(d, builtin_system("linear").field, np.linspace(-1, 1, 401)[:, None])
    prob = zubov.default_problem([(-1, 1)], [0.0], alpha=ALPHA, counts=201, weights=(1, 100, 0))
    return d, gen, prob, zubov.zubov_solve(gen, prob)


class TestProblem:
    def test_alpha_positive(self):
        with pytest.raises(ConfigError):
            zubov.ZubovProblem(0.0, [0.0], [[0.5]], [[1.0]])

    def test_weights_not_all_zero(self):
        with pytest.raises(ConfigError):
            zubov.ZubovProblem(0.1, [0.0], [[0.5]], [[1.0]], weights=(0, 0, 0))

    def test_default_problem_layout(self):
        prob = zubov.default_problem([(-1, 1), (-1, 1)], [0.0, 0.0], counts=11, exclusion=0.1)
        assert prob.boundary.shape == (40, 2)
        assert np.all(np.abs(prob.boundary).max(axis=1) == 1.0)
        assert np.all(np.linalg.norm(prob.collocation, axis=1) >= 0.2)
        assert np.all(np.abs(prob.collocation) < 1.0)


class TestSolve:
    def test_value_at_half(self, oracle):
        d, _, _, sol = oracle
        assert sol.u(d, [[0.5]])[0] == pytest.approx(1 - np.exp(-0.05 * 0.25), abs=1e-3)
        assert 1 - np.exp(-0.05 * 0.25) == pytest.approx(0.0124222, abs=1e-7)

    def test_sup_error(self, oracle):
        d, _, _, sol = oracle
        x = np.linspace(-0.9, 0.9, 181)
        assert np.max(np.abs(sol.u(d, x[:, None]) - closed_form(x))) <= 1e-3

    def test_residual(self, oracle):
        assert oracle[3].residual_rms <= 1e-3

    def test_equilibrium_pinned(self, oracle):
        d, gen, _, _ = oracle
        prob = zubov.default_problem([(-1, 1)], [0.0], alpha=ALPHA, counts=101, weights=(1, 1e6, 0))
        assert abs(zubov.zubov_solve(gen, prob).equilibrium_value) <= 1e-6

    def test_denser_collocation_does_not_hurt(self):
        # f = -alpha x (1 - x^2) / 2 has the exact polynomial solution u = x^2
        d = monomial_dictionary(1, total_degree=5)
        gen = projected_generator(d, lambda X: -ALPHA * X * (1 - X ** 2) / 2, np.linspace(-1, 1, 41)[:, None])
        rms = []
        for n in (51, 101, 201, 401, 801):
            sol = zubov.zubov_solve(gen, zubov.default_problem([(-0.9, 0.9)], [0.0], ALPHA, n, weights=(1, 100, 0)))
            rms.append(sol.residual_rms)
            np.testing.assert_allclose(sol.theta, [0, 0, 1, 0, 0, 0], atol=1e-9)
        assert np.all(np.diff(rms) <= 1e-10)

    @pytest.mark.filterwarnings("ignore:RTM")
    def test_learned_generator(self):
        d = tanh_random_dictionary(1, 30, 0, scale_W=2.0)
        data = generate_dataset(builtin_system("linear"), 200, 1.0, 20, 1)
        gen = learn(data, d, RtmConfig(gamma_count=20))
        prob = zubov.default_problem([(-1, 1)], [0.0], alpha=ALPHA, counts=201, weights=(1, 100, 0))
        sol = zubov.zubov_solve(gen, prob)
        x = np.linspace(-0.9, 0.9, 181)
        assert np.max(np.abs(sol.u(d, x[:, None]) - closed_form(x))) <= 1e-3
        assert sol.residual_rms <= 1e-3

    def test_ceiling_warning(self):
        d = monomial_dictionary(1, total_degree=1)
        gen = LearnedGenerator(np.array([[0.0, 5.0], [3.0, 0.0]]), "EXACT", d)
        prob = zubov.default_problem([(-1, 1)], [0.0], counts=21)
        with pytest.warns(RuntimeWarning, match="residual"):
            zubov.zubov_solve(gen, prob)

    def test_json(self, oracle, tmp_path):
        sol = oracle[3]
        sol.to_json(tmp_path / "z.json")
        assert "theta" in (tmp_path / "z.json").read_text()


class TestRoa:
    def test_covers_lattice(self, oracle):
        d, _, _, sol = oracle
        roa = zubov.roa_extract(sol, d, zubov.lattice([(-1, 1)], 201), 0.01)
        assert roa.fraction >= 0.95

    def test_values_on_mask_below_level(self, oracle):
        d, _, _, sol = oracle
        roa = zubov.roa_extract(sol, d, zubov.lattice([(-1, 1)], 201), 0.01)
        vals = roa.values[roa.mask]
        assert vals.max() <= 1 - 0.01 and vals.min() >= -1e-6

    def test_shrinks_with_epsilon(self, oracle):
        d, _, _, sol = oracle
        axes = zubov.lattice([(-1, 1)], 201)
        fracs = [zubov.roa_extract(sol, d, axes, eps).fraction for eps in (0.01, 0.99, 0.9999)]
        assert fracs[0] >= fracs[1] >= fracs[2]
        assert fracs[2] < 0.1

    def test_two_components(self):
        # u = 16 (x^2 - 0.25)^2 dips below 0.5 near both +-0.5; only the +0.5 well holds x_eq
        d = monomial_dictionary(1, total_degree=4)
        theta = 16 * np.array([0.0625, 0.0, -0.5, 0.0, 1.0])
        sol = zubov.ZubovSolution(theta, 0.0, np.array([0.5]), 0.0, None)
        axes = zubov.lattice([(-1, 1)], 81)
        roa = zubov.roa_extract(sol, d, axes, 0.5)
        assert roa.mask[axes[0] > 0].any() and not roa.mask[axes[0] < 0].any()

    def test_empty_region(self):
        d = monomial_dictionary(1, total_degree=1)
        sol = zubov.ZubovSolution(np.array([2.0, 0.0]), 0.0, np.array([0.0]), 2.0, None)
        with pytest.raises(EmptyRegionError):
            zubov.roa_extract(sol, d, zubov.lattice([(-1, 1)], 11), 0.1)

    def test_csv(self, oracle, tmp_path):
        d, _, _, sol = oracle
        roa = zubov.roa_extract(sol, d, zubov.lattice([(-1, 1)], 11), 0.01)
        roa.to_csv(tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "x1,u,in_roa" and len(lines) == 12


class TestLieCheck:
    def test_negative_away_from_equilibrium(self, oracle):
        d, gen, _, sol = oracle
        pts = np.linspace(0.1, 1.0, 10)[:, None]
        assert zubov.lie_derivative_check(gen, sol.theta, np.vstack([pts, -pts])) < 0

    def test_zero_theta(self, oracle):
        _, gen, _, _ = oracle
        assert zubov.lie_derivative_check(gen, np.zeros(gen.size), [[0.3], [-0.2]]) == 0.0

    def test_equilibrium_only(self, oracle):
        _, gen, _, sol = oracle
        assert abs(zubov.lie_derivative_check(gen, sol.theta, [[0.0]])) <= 1e-6


class TestEquilibrium:
    def test_vdp_truth(self):
        d = monomial_dictionary(2, caps=[3, 3])
        from koopgen.sysid import true_weights
        ident = IdentifiedSystem(true_weights(builtin_system("vdp"), d), d, "EXACT")
        np.testing.assert_allclose(zubov.find_equilibrium(ident, start=[0.3, -0.2]), [0.0, 0.0], atol=1e-12)

    def test_shifted_linear(self):
        d = monomial_dictionary(1, total_degree=1)
        ident = IdentifiedSystem(np.array([[0.4, -2.0]]), d, "EXACT")
        assert zubov.find_equilibrium(ident)[0] == pytest.approx(0.2, abs=1e-12)

    def test_no_root(self):
        d = monomial_dictionary(1, total_degree=2)
        ident = IdentifiedSystem(np.array([[1.0, 0.0, 1.0]]), d, "EXACT")
        with pytest.raises(EquilibriumNotFoundError):
            zubov.find_equilibrium(ident)
