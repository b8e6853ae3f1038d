import numpy as np
import pytest

from mimosel import rounding
from mimosel.interference_model import build_model, sinr_direct
from mimosel.oracle import exhaustive_optimum
from mimosel.rounding import (
    make_config, project_to_relaxed_set, randomized_rounding,
    refine_by_swaps, sample_candidate)
from mimosel.scp_solver import RelaxedSolution, run_scp
from mimosel.selection import (
    from_indices, is_binary, is_feasible, make_mode)
from mimosel.utils.tools import derive_rng

MODE_CASES = [
    ('joint', {'k': 4}),
    ('factored', {'kt': 2, 'kr': 2}),
    ('mfc', {'km': 2, 'kr': 2}),
    ('hybrid', {'kt': 3, 'km': 2, 'kr': 2}),
]


def relaxed_at(c_star, sigma):
    c_star = np.asarray(c_star, dtype=float)
    return RelaxedSolution(c_star=c_star, history=[c_star],
                           sigma_diag=np.full(c_star.shape, sigma))


def projection_by_bisection(z, k):
    """Projection of z onto {0 <= c <= 1, c^T c <= k} from the KKT
    conditions c = clip(z / (1 + lam), 0, 1)."""
    def c_of(lam):
        return np.clip(z / (1 + lam), 0, 1)
    if c_of(0.) @ c_of(0.) <= k:
        return c_of(0.)
    lo, hi = 0., 1.
    while c_of(hi) @ c_of(hi) > k:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if c_of(mid) @ c_of(mid) > k else (lo, mid)
    return c_of(hi)


class TestSampling:
    def test_deterministic(self):
        relaxed = relaxed_at(np.full(9, 0.4), 0.01)
        a = [sample_candidate(relaxed, derive_rng(7)) for _ in range(3)]
        b = [sample_candidate(relaxed, derive_rng(7)) for _ in range(3)]
        np.testing.assert_array_equal(a, b)

    def test_concentration(self):
        relaxed = relaxed_at(np.linspace(0, 1, 6), 1e-4)
        z = sample_candidate(relaxed, derive_rng(0))
        assert np.all(np.abs(z - relaxed.c_star) < 5 * 1e-2)

    def test_mean(self):
        relaxed = relaxed_at(np.linspace(0.1, 0.9, 4), 0.05)
        rng = derive_rng(3)
        draws = np.stack([sample_candidate(relaxed, rng)
                          for _ in range(100000)])
        np.testing.assert_allclose(draws.mean(axis=0), relaxed.c_star,
                                   atol=0.01)

    def test_streams_differ(self):
        relaxed = relaxed_at(np.full(4, 0.5), 0.1)
        a = sample_candidate(relaxed, derive_rng(1, 0, 0))
        b = sample_candidate(relaxed, derive_rng(1, 0, 1))
        assert not np.allclose(a, b)


class TestProjection:
    def test_feasible_is_fixed(self):
        mode = make_mode('joint', 3, 3, k=4)
        z = np.random.default_rng(0).uniform(0, 0.6, 9)
        np.testing.assert_array_equal(project_to_relaxed_set(z, mode), z)

    def test_box_clamp(self):
        mode = make_mode('factored', 3, 3, kt=2, kr=2)
        z = np.array([-0.5, 1.5, 0.2, 0.1, -0.1, 0.3, 0.2, 0.0, 2.0])
        np.testing.assert_array_equal(
            project_to_relaxed_set(z, mode), np.clip(z, 0, 1))

    def test_joint_sphere(self):
        mode = make_mode('joint', 2, 2, k=2)
        z = np.full(4, 2.)
        projected = project_to_relaxed_set(
            z, mode, {'projection_tolerance': 1e-10})
        np.testing.assert_allclose(projected, np.sqrt(2 / 4), atol=1e-4)
        np.testing.assert_allclose(
            projected, projection_by_bisection(z, 2), atol=1e-4)

    def test_joint_against_bisection(self):
        mode = make_mode('joint', 3, 3, k=3)
        rng = np.random.default_rng(4)
        for _ in range(5):
            z = rng.uniform(-0.5, 1.5, 9)
            projected = project_to_relaxed_set(
                z, mode, {'projection_tolerance': 1e-10})
            np.testing.assert_allclose(
                projected, projection_by_bisection(z, 3), atol=1e-4)

    @pytest.mark.parametrize('name,counts', MODE_CASES)
    def test_relaxed_constraints_hold(self, name, counts):
        mode = make_mode(name, 3, 3, **counts)
        z = np.random.default_rng(5).uniform(-1, 2, 9)
        projected = project_to_relaxed_set(z, mode)
        assert np.all((projected >= 0) & (projected <= 1))
        for con in mode.constraints():
            if con.sense != '>=':
                assert con.form(projected) <= con.bound + 1e-6

    def test_non_finite(self):
        mode = make_mode('joint', 2, 2, k=2)
        with pytest.raises(ValueError):
            project_to_relaxed_set(np.array([0., np.nan, 0., 0.]), mode)


class TestRandomizedRounding:
    @pytest.mark.parametrize('name,counts', MODE_CASES)
    def test_feasible_and_monotone(self, small_scenario, name, counts):
        model = build_model(small_scenario)
        mode = make_mode(name, 3, 3, **counts)
        relaxed = run_scp(model, mode, {'max_outer_iterations': 4})
        result = randomized_rounding(
            model, mode, relaxed, {'n_samples': 20}, derive_rng(0))
        assert is_binary(result.best) and is_feasible(result.best, mode)
        assert is_feasible(result.projected_selection, mode)
        assert result.sinr_db == pytest.approx(sinr_direct(model, result.best))
        assert result.sinr_db >= result.projected_sinr_db
        assert len(result.best_so_far) == 20
        assert np.all(np.diff(result.best_so_far) >= 0)
        assert result.sinr_db >= sinr_direct(model, mode.round(relaxed.c_star))

    def test_deterministic(self, small_scenario):
        model = build_model(small_scenario)
        mode = make_mode('mfc', 3, 3, km=2, kr=2)
        relaxed = run_scp(model, mode, {'max_outer_iterations': 3})
        a = randomized_rounding(model, mode, relaxed, {'n_samples': 10,
                                                       'seed': 11})
        b = randomized_rounding(model, mode, relaxed, {'n_samples': 10,
                                                       'seed': 11})
        assert a.bits == b.bits
        assert a.sinr_db == b.sinr_db

    def test_pure_noise(self, noise_scenario):
        model = build_model(noise_scenario)
        mode = make_mode('joint', 2, 2, k=2)
        relaxed = run_scp(model, mode)
        result = randomized_rounding(model, mode, relaxed, {'n_samples': 5})
        assert result.sinr_db == pytest.approx(
            10 * np.log10(model.sigma_s2 * 2 / model.sigma_n2))

    def test_config(self):
        with pytest.raises(ValueError):
            make_config({'n_samples': 0})
        assert make_config().n_samples == 1000

    def test_samples_are_rounded_when_f_fails(self, small_scenario,
                                              monkeypatch):
        model = build_model(small_scenario)
        mode = make_mode('factored', 3, 3, kt=2, kr=2)
        optimum = exhaustive_optimum(model, mode).best
        relaxed = relaxed_at(1 - 0.9 * optimum, 1e-4)
        assert not np.array_equal(mode.round(relaxed.c_star), optimum)

        def no_objective(*args):
            raise np.linalg.LinAlgError('not positive definite')
        monkeypatch.setattr(rounding, 'project_to_relaxed_set',
                            lambda z, mode, conf: optimum.astype(float))
        monkeypatch.setattr(rounding, 'f_logdet', no_objective)
        result = randomized_rounding(
            model, mode, relaxed, {'n_samples': 3, 'swap_refinement': False})
        np.testing.assert_array_equal(result.best, optimum)
        assert result.best_so_far == [sinr_direct(model, optimum)] * 3
        np.testing.assert_array_equal(result.best_projected, relaxed.c_star)

    def test_iterates_are_rounded(self, small_scenario, monkeypatch):
        model = build_model(small_scenario)
        mode = make_mode('mfc', 3, 3, km=2, kr=2)
        optimum = exhaustive_optimum(model, mode).best
        c_star = 1 - 0.9 * optimum
        relaxed = RelaxedSolution(
            c_star=c_star, history=[optimum * 0.8, c_star],
            sigma_diag=np.full(9, 1e-4))
        monkeypatch.setattr(rounding, 'project_to_relaxed_set',
                            lambda z, mode, conf: c_star)
        result = randomized_rounding(
            model, mode, relaxed, {'n_samples': 1, 'swap_refinement': False})
        np.testing.assert_array_equal(result.best, optimum)


class TestSwapRefinement:
    @pytest.mark.parametrize('name,counts', MODE_CASES)
    def test_local_optimum(self, small_scenario, name, counts):
        model = build_model(small_scenario)
        mode = make_mode(name, 3, 3, **counts)
        start = mode.round(np.random.default_rng(2).uniform(size=9))
        refined = refine_by_swaps(model, mode, start)
        assert is_feasible(refined, mode)
        value = sinr_direct(model, refined)
        assert value >= sinr_direct(model, start) - 1e-9
        for indices in mode.neighbors(refined):
            assert sinr_direct(model, from_indices(indices, 9)) <= value + 1e-9

    def test_no_swaps(self, small_scenario):
        model = build_model(small_scenario)
        mode = make_mode('joint', 3, 3, k=4)
        start = mode.round(np.linspace(0, 1, 9))
        np.testing.assert_array_equal(
            refine_by_swaps(model, mode, start, max_swaps=0), start)

    def test_never_worse(self, small_scenario):
        model = build_model(small_scenario)
        mode = make_mode('hybrid', 3, 3, kt=3, km=2, kr=2)
        relaxed = run_scp(model, mode, {'max_outer_iterations': 3})
        plain = randomized_rounding(
            model, mode, relaxed, {'n_samples': 5, 'swap_refinement': False})
        refined = randomized_rounding(model, mode, relaxed, {'n_samples': 5})
        assert refined.sinr_db >= plain.sinr_db
        assert refined.best_so_far == plain.best_so_far
        assert refined.sinr_db == pytest.approx(
            sinr_direct(model, refined.best))
