"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Unit tests for newteki.kalman module.

Tests cover:
- TestEnsemble
- TestEvaluateForward
- TestStats
- TestOrthonormalBasis
- TestEkiStep
- TestTekiStep
- TestDenseUpdate
"""

import numpy as np
import pytest

from .helpers import print_my_func_name, print_my_captured
import newteki.utility as NewtUtil
import newteki.field as NewtField
import newteki.problem as NewtProb
import newteki.kalman as NewtKalman
from newteki.field import CovarianceSpec
from newteki.problem import LinearModel, NoiseSpec, InverseProblem
from newteki.kalman import Ensemble


TOY_SPEC = CovarianceSpec(alpha=2.0, tau=1.0, kmax=1)


def _toy_problem(lam=1.0):
    model = LinearModel(np.array([[1.0, 0.0, 0.0, 0.0]]), TOY_SPEC)
    return InverseProblem(model, np.array([2.0]), NoiseSpec.from_scalar(1.0, 1), TOY_SPEC, lam)


def _toy_ensemble(values):
    coeffs = np.zeros((4, len(values)))
    coeffs[0, :] = values
    return Ensemble(coeffs, TOY_SPEC)


def _point_problem(spec, seed=0):
    model = NewtProb.PointObservationModel([(0.2, 0.3), (0.8, 0.6), (0.5, 0.1)], spec)
    truth = NewtField.sample_prior(spec, NewtUtil.make_rng(seed, "truth"))
    noise = NoiseSpec.from_scalar(0.05, 3)
    y, _ = NewtProb.synthesize_data(model, truth, noise, NewtUtil.make_rng(seed, "noise"))
    return InverseProblem(model, y, noise, spec)


class TestEnsemble:
    """ Tests for Ensemble construction. """


    def test_ensemble_from_members(self, capsys):
        """ Ensure members become columns and round-trip through member(j). """
        print_my_func_name()

        spec = CovarianceSpec(2.0, 3.0, 2)
        rng = NewtUtil.make_rng(0, "init")
        members = [NewtField.sample_prior(spec, rng) for _ in range(3)]
        e = Ensemble.from_members(members)
        print("shape:", e.coeffs.shape)

        assert e.size == 3
        assert np.array_equal(e.member(1).coeffs, members[1].coeffs)
        assert np.allclose(NewtKalman.ensemble_mean(e).coeffs,
                           np.mean([m.coeffs for m in members], axis=0))

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "shape: (9, 3)" in captured.out
        assert "" == captured.err


    def test_ensemble_invalid(self, capsys):
        """ Ensure J < 2, wrong mode counts, mixed specs and misaligned caches stop. """
        print_my_func_name()

        with pytest.raises(SystemExit):
            Ensemble(np.zeros((4, 1)), TOY_SPEC)
        with pytest.raises(SystemExit):
            Ensemble(np.zeros((5, 2)), TOY_SPEC)
        with pytest.raises(SystemExit):
            Ensemble(np.zeros((4, 2)), TOY_SPEC, cached_forward=np.zeros((1, 3)))
        with pytest.raises(SystemExit):
            Ensemble.from_members([NewtField.zero_field(TOY_SPEC),
                                   NewtField.zero_field(CovarianceSpec(3.0, 1.0, 1))])

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Newt.kalman.Ensemble : J < 2" in captured.err
        assert "Newt.kalman.Ensemble : shape" in captured.err
        assert "Newt.kalman.Ensemble : cache" in captured.err
        assert "Newt.kalman.Ensemble.from_members : spec" in captured.err
        assert captured.err.count("\n::: ERROR :::\n") == 4


class TestEvaluateForward:
    """ Tests for evaluate_forward. """


    def test_evaluate_forward_serial_and_parallel(self, capsys):
        """ Ensure joblib workers return the same member-ordered values as the loop. """
        print_my_func_name()

        spec = CovarianceSpec(2.0, 3.0, 2)
        problem = _point_problem(spec)
        rng = NewtUtil.make_rng(1, "init")
        e = Ensemble.from_members([NewtField.sample_prior(spec, rng) for _ in range(4)])

        serial = NewtKalman.evaluate_forward(e, problem.model)
        parallel = NewtKalman.evaluate_forward(e, problem.model, n_jobs=2)

        assert serial.cached_forward.shape == (3, 4)
        assert np.allclose(serial.cached_forward, parallel.cached_forward)
        assert np.allclose(serial.cached_forward[:, 2], problem.model.apply(e.member(2)))

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


class TestStats:
    """ Tests for stats. """


    def test_stats_centered(self, capsys):
        """ Ensure centered factors have zero row sums and a missing cache stops. """
        print_my_func_name()

        e = NewtKalman.evaluate_forward(_toy_ensemble([1.0, 3.0, 5.0]), _toy_problem().model)
        st = NewtKalman.stats(e)

        assert st.mean_g.tolist() == [3.0]
        assert np.allclose(st.centered_u.sum(axis=1), 0.0)
        assert st.centered_g.tolist() == [[-2.0, 0.0, 2.0]]

        with pytest.raises(SystemExit):
            NewtKalman.stats(_toy_ensemble([1.0, 3.0]))

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Newt.kalman.stats : missing cache" in captured.err


class TestOrthonormalBasis:
    """ Tests for orthonormal_basis and subspace_residual. """


    def test_orthonormal_basis_rank(self, capsys):
        """ Ensure dependent columns are dropped and the result is orthonormal. """
        print_my_func_name()

        columns = np.array([[1.0, 2.0, 0.0, 1.0],
                            [0.0, 0.0, 1.0, 1.0],
                            [0.0, 0.0, 0.0, 0.0]])
        basis = NewtKalman.orthonormal_basis(columns)
        print("rank:", basis.shape[1])

        assert basis.shape == (3, 2)
        assert np.allclose(basis.T @ basis, np.eye(2))
        assert NewtKalman.orthonormal_basis(np.zeros((3, 2))).shape == (3, 0)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "rank: 2" in captured.out


    def test_subspace_residual(self, capsys):
        """ Ensure members inside the span give 0 and outside ones their relative distance. """
        print_my_func_name()

        e = _toy_ensemble([1.0, 2.0])
        inside = NewtKalman.orthonormal_basis(e.coeffs)
        assert NewtKalman.subspace_residual(e, inside) == pytest.approx(0.0)

        other = np.zeros((4, 1))
        other[1, 0] = 1.0
        assert NewtKalman.subspace_residual(e, other) == pytest.approx(1.0)

        with pytest.raises(SystemExit):
            NewtKalman.subspace_residual(e, np.zeros((3, 1)))

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Newt.kalman.subspace_residual : basis" in captured.err


class TestEkiStep:
    """ Tests for eki_step. """


    def test_eki_step_scalar_toy(self, capsys):
        """ Ensure the scalar toy gives gain C/(C + Gamma) = 1/2. """
        print_my_func_name()

        updated = NewtKalman.eki_step(_toy_ensemble([1.0, 3.0]), _toy_problem())
        print("updated:", np.round(updated.coeffs[0], 12).tolist())

        assert np.allclose(updated.coeffs[0], [1.5, 2.5])
        assert np.allclose(updated.coeffs[1:], 0.0)
        assert updated.cached_forward is None

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "updated: [1.5, 2.5]" in captured.out


    def test_eki_step_perturbed_stays_in_span(self, capsys):
        """ Ensure perturbed updates stay in the initial span and repeat with the same stream. """
        print_my_func_name()

        spec = CovarianceSpec(2.0, 3.0, 3)
        problem = _point_problem(spec)
        rng = NewtUtil.make_rng(4, "init")
        e = Ensemble.from_members([NewtField.sample_prior(spec, rng) for _ in range(5)])
        basis = NewtKalman.orthonormal_basis(e.coeffs)

        step_1 = NewtKalman.eki_step(e, problem, perturb="full", rng=NewtUtil.make_rng(0, "perturb"))
        step_2 = NewtKalman.eki_step(e, problem, perturb="full", rng=NewtUtil.make_rng(0, "perturb"))
        step_3 = NewtKalman.eki_step(e, problem)

        assert np.array_equal(step_1.coeffs, step_2.coeffs)
        assert not np.allclose(step_1.coeffs, step_3.coeffs)
        assert NewtKalman.subspace_residual(step_1, basis) < 1e-10

        with pytest.raises(SystemExit):
            NewtKalman.eki_step(e, problem, perturb="full")
        with pytest.raises(SystemExit):
            NewtKalman.eki_step(e, problem, perturb="half")

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Newt.kalman.eki_step : rng" in captured.err
        assert "Newt.kalman.eki_step : perturb" in captured.err


class TestTekiStep:
    """ Tests for teki_step. """


    def test_teki_step_scalar_toy(self, capsys):
        """ Ensure data and prior rows act as two unit-variance observations: gain 1/3 each. """
        print_my_func_name()

        updated = NewtKalman.teki_step(_toy_ensemble([1.0, 3.0]), _toy_problem())
        print("updated:", np.round(updated.coeffs[0], 12).tolist())

        assert np.allclose(updated.coeffs[0], [1.0, 5.0 / 3.0])
        assert np.allclose(updated.coeffs[1:], 0.0)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


    def test_teki_step_shrinks_more_than_eki(self, capsys):
        """ Ensure the Tikhonov rows pull the mean towards zero compared with EKI. """
        print_my_func_name()

        e = _toy_ensemble([1.0, 3.0])
        eki = NewtKalman.eki_step(e, _toy_problem())
        teki = NewtKalman.teki_step(e, _toy_problem(lam=4.0))

        assert teki.coeffs[0].mean() < eki.coeffs[0].mean()

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


    def test_teki_step_perturbed_projection(self, capsys):
        """ Ensure projected and unprojected perturbations both keep members in the span. """
        print_my_func_name()

        spec = CovarianceSpec(2.0, 3.0, 3)
        problem = _point_problem(spec, seed=2)
        rng = NewtUtil.make_rng(2, "init")
        e = Ensemble.from_members([NewtField.sample_prior(spec, rng) for _ in range(4)])
        basis = NewtKalman.orthonormal_basis(e.coeffs)

        projected = NewtKalman.teki_step(
            e, problem, perturb="full", rng=NewtUtil.make_rng(1, "perturb"), span=basis
        )
        raw = NewtKalman.teki_step(
            e, problem, perturb="full", rng=NewtUtil.make_rng(1, "perturb"),
            project_perturbations=False
        )

        assert NewtKalman.subspace_residual(projected, basis) < 1e-10
        assert NewtKalman.subspace_residual(raw, basis) < 1e-10

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


    def test_teki_step_needs_initial_span(self, capsys):
        """ Ensure projected perturbations stop without the initial span. """
        print_my_func_name()

        spec = CovarianceSpec(2.0, 3.0, 2)
        problem = _point_problem(spec, seed=3)
        rng = NewtUtil.make_rng(3, "init")
        e = Ensemble.from_members([NewtField.sample_prior(spec, rng) for _ in range(3)])

        with pytest.raises(SystemExit):
            NewtKalman.teki_step(e, problem, perturb="full", rng=NewtUtil.make_rng(0, "perturb"))

        unprojected = NewtKalman.teki_step(
            e, problem, perturb="full", rng=NewtUtil.make_rng(0, "perturb"),
            project_perturbations=False
        )
        assert unprojected.coeffs.shape == e.coeffs.shape

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "\nLocation: Newt.kalman.teki_step : span" \
        "\n::: ERROR :::" \
        "\nProjected perturbations need the initial ensemble span\n" in captured.err
        assert captured.err.count("\n::: ERROR :::\n") == 1


def _dense_problem(seed):
    """ Random 3 x 4 linear problem with unequal noise variances and 3 members. """
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((3, TOY_SPEC.n_modes))
    noise = NoiseSpec(np.array([0.5, 1.0, 2.0]))
    problem = InverseProblem(LinearModel(matrix, TOY_SPEC), rng.standard_normal(3), noise, TOY_SPEC, 0.7)
    return problem, Ensemble(rng.standard_normal((TOY_SPEC.n_modes, 3)), TOY_SPEC)


def _dense_update(coeffs, forward, targets, sigma_diag):
    """ u + C^{uf} (C^{ff} + Sigma)^(-1) (target - F(u)) with full matrices and 1/J statistics. """
    size = coeffs.shape[1]
    centered_u = coeffs - coeffs.mean(axis=1, keepdims=True)
    centered_f = forward - forward.mean(axis=1, keepdims=True)
    c_uf = centered_u @ centered_f.T / size
    c_ff = centered_f @ centered_f.T / size
    return coeffs + c_uf @ np.linalg.solve(c_ff + np.diag(sigma_diag), targets - forward)


class TestDenseUpdate:
    """ Tests comparing eki_step and teki_step with the update in full matrix form. """


    def test_eki_step_matches_dense(self, capsys):
        """ Ensure the ensemble-space EKI update equals the dense formula to 1e-10. """
        print_my_func_name()

        problem, e = _dense_problem(5)
        forward = problem.model.matrix @ e.coeffs
        targets = np.repeat(problem.y[:, None], e.size, axis=1)
        dense = _dense_update(e.coeffs, forward, targets, problem.noise.gamma_diag)

        updated = NewtKalman.eki_step(e, problem)
        error = np.abs(updated.coeffs - dense).max() / np.abs(dense).max()
        print("relative_error_below_1e-10:", bool(error < 1e-10))

        assert np.allclose(updated.coeffs, dense, rtol=1e-10, atol=1e-12)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "relative_error_below_1e-10: True" in captured.out
        assert "" == captured.err


    def test_teki_step_matches_dense(self, capsys):
        """ Ensure the TEKI update equals the dense formula on F(u) = (Au, u), Sigma = diag(Gamma, C0 / lambda). """
        print_my_func_name()

        problem, e = _dense_problem(6)
        forward = np.vstack([problem.model.matrix @ e.coeffs, e.coeffs])
        z = np.concatenate([problem.y, np.zeros(TOY_SPEC.n_modes)])
        targets = np.repeat(z[:, None], e.size, axis=1)
        sigma = np.concatenate([
            problem.noise.gamma_diag,
            NewtField.eigenvalues(TOY_SPEC).reshape(-1) / problem.lam,
        ])
        dense = _dense_update(e.coeffs, forward, targets, sigma)

        updated = NewtKalman.teki_step(e, problem)

        assert np.allclose(updated.coeffs, dense, rtol=1e-10, atol=1e-12)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


    def test_teki_step_perturbed_matches_dense(self, capsys):
        """ Ensure perturbed TEKI with the mode block projected on the initial span equals the dense formula. """
        print_my_func_name()

        problem, e = _dense_problem(7)
        span = NewtKalman.orthonormal_basis(e.coeffs)
        aug = NewtProb.augment(problem)

        xi = NewtUtil.make_rng(9, "perturb").standard_normal((e.size, aug.obs_dim)).T
        noise = xi / aug.weights[:, None]
        noise[problem.obs_dim:, :] = span @ (span.T @ noise[problem.obs_dim:, :])
        forward = np.vstack([problem.model.matrix @ e.coeffs, e.coeffs])
        targets = aug.z[:, None] + noise
        dense = _dense_update(e.coeffs, forward, targets, 1.0 / aug.weights ** 2)

        updated = NewtKalman.teki_step(
            e, problem, perturb="full", rng=NewtUtil.make_rng(9, "perturb"), span=span
        )

        assert np.allclose(updated.coeffs, dense, rtol=1e-10, atol=1e-12)
        assert NewtKalman.subspace_residual(updated, span) < 1e-10

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err
