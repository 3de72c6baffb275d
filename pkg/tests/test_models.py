"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Unit tests for newteki.models module.

Tests cover:
- TestGeometry
- TestObserve
- TestFmmSolve
- TestEikonalModel
- TestDarcySolve
- TestDarcyModel
"""

import numpy as np
import pytest

from .helpers import print_my_func_name, print_my_captured, print_my_array
import newteki.utility as NewtUtil
import newteki.field as NewtField
import newteki.models as NewtModels
from newteki.field import CovarianceSpec, GridField
from newteki.models import EikonalConfig, DarcyConfig


def _fmm_error(n):
    """ Max error for s = 1 from (0, 0.5), outside the ball of radius 5/n. """
    travel = NewtModels.fmm_solve(GridField.constant(n, 1.0), (0.0, 0.5))
    exact = GridField.from_function(n, lambda x1, x2: np.sqrt(x1 ** 2 + (x2 - 0.5) ** 2))
    outside = exact.values > 5.0 / n
    return float(np.abs(travel.values - exact.values)[outside].max())


class TestGeometry:
    """ Tests for default_obs_points, random_sources and config validation. """


    def test_default_obs_points(self, capsys):
        """ Ensure the interior lattice is ordered with x1 fastest. """
        print_my_func_name()

        points = NewtModels.default_obs_points(2)
        print("points:", [(round(x1, 4), round(x2, 4)) for x1, x2 in points])

        assert np.allclose(points, [(1 / 3, 1 / 3), (2 / 3, 1 / 3), (1 / 3, 2 / 3), (2 / 3, 2 / 3)])
        assert len(NewtModels.default_obs_points()) == 64

        with pytest.raises(SystemExit):
            NewtModels.default_obs_points(0)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "points: [(0.3333, 0.3333), (0.6667, 0.3333), (0.3333, 0.6667), (0.6667, 0.6667)]" in captured.out
        assert "Newt.models.default_obs_points : n_side < 1" in captured.err


    def test_random_sources(self, capsys):
        """ Ensure sources sit on x1 = 0 and repeat for the same stream. """
        print_my_func_name()

        sources_1 = NewtModels.random_sources(5, NewtUtil.make_rng(0, "sources"))
        sources_2 = NewtModels.random_sources(5, NewtUtil.make_rng(0, "sources"))

        assert sources_1 == sources_2
        assert all(x1 == 0.0 and 0.0 <= x2 <= 1.0 for x1, x2 in sources_1)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


    def test_configs_invalid(self, capsys):
        """ Ensure off-edge sources, points outside the square and small grids stop. """
        print_my_func_name()

        with pytest.raises(SystemExit):
            EikonalConfig(n=10, sources=[(0.5, 0.5)])
        with pytest.raises(SystemExit):
            EikonalConfig(n=10, obs_points=[(1.5, 0.5)])
        with pytest.raises(SystemExit):
            DarcyConfig(n=3)
        with pytest.raises(SystemExit):
            DarcyConfig(n=8, f=GridField.constant(4, 1.0))

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Newt.models.EikonalConfig : sources\n" in captured.err
        assert "Newt.models.EikonalConfig : obs_points : range" in captured.err
        assert "Newt.models.DarcyConfig : n < 4" in captured.err
        assert "Newt.models.DarcyConfig : f\n" in captured.err


class TestObserve:
    """ Tests for observe. """


    def test_observe_nearest_and_mollified(self, capsys):
        """ Ensure width 0 reads the nearest node and a symmetric window keeps linear fields exact. """
        print_my_func_name()

        g = GridField.from_function(10, lambda x1, x2: x1 + 2.0 * x2)

        nearest = NewtModels.observe(g, [(0.52, 0.31), (1.0, 1.0)])
        smooth = NewtModels.observe(g, [(0.5, 0.5)], width=0.15)
        print_my_array("nearest", nearest)

        assert np.allclose(nearest, [0.5 + 0.6, 3.0])
        assert smooth[0] == pytest.approx(1.5)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "nearest: [1.1, 3.0]" in captured.out


class TestFmmSolve:
    """ Tests for fmm_solve. """


    def test_fmm_solve_axis_exact(self, capsys):
        """ Ensure travel times along the source row equal the distance exactly. """
        print_my_func_name()

        n = 20
        travel, order = NewtModels.fmm_solve(GridField.constant(n, 2.0), (0.0, 0.5), return_order=True)
        row = travel.as_array()[10]

        assert np.allclose(row, 2.0 * np.linspace(0.0, 1.0, n + 1), atol=1e-12)
        assert len(order) == (n + 1) ** 2
        assert all(b >= a for a, b in zip(order, order[1:]))

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


    def test_fmm_solve_converges(self, capsys):
        """ Ensure the max error outside the 5/n source ball halves with n at observed order >= 0.8. """
        print_my_func_name()

        errors = {n: _fmm_error(n) for n in (50, 100, 200)}
        orders = [np.log2(errors[50] / errors[100]), np.log2(errors[100] / errors[200])]
        print("errors:", {n: round(e, 5) for n, e in errors.items()})
        print_my_array("orders", orders)

        assert errors[200] < errors[100] < errors[50]
        assert errors[100] <= 0.02 * np.sqrt(2.0)
        assert min(orders) >= 0.8

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


    def test_fmm_solve_init_radius(self, capsys):
        """ Ensure the frozen ball is exact, radius 0 keeps T(source) = 0, a negative radius stops. """
        print_my_func_name()

        n = 40
        s = GridField.from_function(n, lambda x1, x2: 1.0 + 0.5 * x1)
        travel = NewtModels.fmm_solve(s, (0.5, 0.5)).as_array()
        point_source = NewtModels.fmm_solve(s, (0.5, 0.5), init_radius=0.0).as_array()

        # node (i, j) = (22, 20): distance 0.05, slowness 1.25 and 1.275
        assert travel[20, 22] == pytest.approx(0.05 * 0.5 * (1.25 + 1.275), abs=1e-14)
        assert travel[20, 20] == 0.0
        assert point_source[20, 20] == 0.0
        assert np.all(np.isfinite(point_source)) and np.all(point_source >= 0.0)

        with pytest.raises(SystemExit):
            NewtModels.fmm_solve(s, (0.5, 0.5), init_radius=-0.1)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Newt.models.fmm_solve : init_radius > Newt.console.validate_positive : bound" in captured.err
        assert captured.err.count("\n::: ERROR :::\n") == 1


    def test_fmm_solve_slowness_scaling(self, capsys):
        """ Ensure scaling the slowness by c scales every travel time by c. """
        print_my_func_name()

        n = 24
        s = GridField.from_function(n, lambda x1, x2: np.exp(0.3 * np.sin(3.0 * x1) * np.cos(2.0 * x2)))
        base = NewtModels.fmm_solve(s, (0.3, 0.7))
        scaled = NewtModels.fmm_solve(GridField(n, 2.5 * s.values), (0.3, 0.7))
        ratio = scaled.values[base.values > 0.0] / base.values[base.values > 0.0]
        print_my_array("ratio_range", [ratio.min(), ratio.max()])

        assert np.allclose(scaled.values, 2.5 * base.values, rtol=1e-12, atol=0.0)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "ratio_range: [2.5, 2.5]" in captured.out



    def test_fmm_solve_slowness_positive(self, capsys):
        """ Ensure zero slowness stops. """
        print_my_func_name()

        with pytest.raises(SystemExit):
            NewtModels.fmm_solve(GridField.constant(4, 0.0), (0.0, 0.5))

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Newt.models.fmm_solve : slowness > Newt.console.validate_positive : bound" in captured.err


class TestEikonalModel:
    """ Tests for eikonal_observe, eikonal_forward and EikonalModel. """


    def test_eikonal_model_zero_field(self, capsys):
        """ Ensure u = 0 gives unit slowness and one block of travel times per source. """
        print_my_func_name()

        spec = CovarianceSpec(2.0, 3.0, 2)
        cfg = EikonalConfig(n=20, sources=[(0.0, 0.5), (0.0, 0.0)], obs_points=[(0.5, 0.5), (1.0, 0.0)])
        model = NewtModels.EikonalModel(spec, cfg)
        output = model.apply(NewtField.zero_field(spec))
        print("obs_dim:", model.obs_dim)

        assert output.shape == (4,)
        assert output[0] == pytest.approx(0.5, abs=1e-12)
        assert output[3] == pytest.approx(1.0, abs=1e-12)
        assert output[1] == pytest.approx(np.sqrt(1.25), abs=0.1)

        with pytest.raises(SystemExit):
            NewtModels.eikonal_observe(GridField.constant(10, 0.0), cfg)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "obs_dim: 4" in captured.out
        assert "Newt.models.eikonal_observe : n" in captured.err


class TestDarcySolve:
    """ Tests for darcy_solve. """


    def test_darcy_manufactured_solution(self, capsys):
        """ Ensure p = 100 + 3 x2^2 - 2 x2^3 is reproduced with error exactly 2 h^2 x2. """
        print_my_func_name()

        for n in (8, 16):
            h = 1.0 / n
            cfg = DarcyConfig(
                n=n, f=GridField.from_function(n, lambda x1, x2: 12.0 * x2 - 6.0),
                dirichlet_bottom=100.0, flux_left=0.0, obs_points=[(0.5, 0.5)]
            )
            pressure = NewtModels.darcy_solve(GridField.constant(n, 1.0), cfg)
            exact = GridField.from_function(n, lambda x1, x2: 100.0 + 3.0 * x2 ** 2 - 2.0 * x2 ** 3)
            shift = GridField.from_function(n, lambda x1, x2: 2.0 * h ** 2 * x2 + 0.0 * x1)

            error = pressure.values - exact.values
            print(n, "max error:", round(float(np.abs(error).max()), 8))
            assert np.allclose(error, shift.values, atol=1e-5)
            assert np.all(pressure.as_array()[0] == 100.0)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


    def test_darcy_left_inflow(self, capsys):
        """ Ensure inflow through x1 = 0 raises the pressure, highest on the left edge. """
        print_my_func_name()

        n = 12
        cfg = DarcyConfig(n=n, source_value=0.0, flux_left=5.0, obs_points=[(0.5, 0.5)])
        pressure = NewtModels.darcy_solve(GridField.constant(n, 1.0), cfg).as_array()

        assert np.all(pressure[1:] > 100.0)
        assert np.all(pressure[1:, 0] >= pressure[1:, -1])
        assert np.all(np.diff(pressure[1:], axis=1) <= 1e-9)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


    def test_darcy_invalid_kappa(self, capsys):
        """ Ensure non-positive permeability and a grid mismatch stop. """
        print_my_func_name()

        cfg = DarcyConfig(n=4, obs_points=[(0.5, 0.5)])
        with pytest.raises(SystemExit):
            NewtModels.darcy_solve(GridField.constant(4, -1.0), cfg)
        with pytest.raises(SystemExit):
            NewtModels.darcy_solve(GridField.constant(6, 1.0), cfg)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Newt.models.darcy_solve : kappa > Newt.console.validate_positive : bound" in captured.err
        assert "Newt.models.darcy_solve : n\n" in captured.err


class TestDarcyModel:
    """ Tests for darcy_observe, darcy_forward and DarcyModel. """


    def test_darcy_model_reads_pressure(self, capsys):
        """ Ensure the model reads the solved pressure at its observation points. """
        print_my_func_name()

        spec = CovarianceSpec(2.0, 3.0, 2)
        points = [(0.25, 0.5), (0.75, 1.0)]
        cfg = DarcyConfig(n=8, obs_points=points, flux_left=10.0)
        model = NewtModels.DarcyModel(spec, cfg)
        u = NewtField.sample_prior(spec, NewtUtil.make_rng(0, "truth"))

        output = model.apply(u)
        kappa = GridField(8, np.exp(NewtField.synthesize(u, 8).values))
        pressure = NewtModels.darcy_solve(kappa, cfg)

        assert model.obs_dim == 2
        assert np.allclose(output, NewtModels.observe(pressure, points))
        assert np.allclose(NewtModels.darcy_forward(u, cfg), output)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err
