"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Unit tests for newteki.cli module.

Tests cover:
- TestMain
"""

import os
import tempfile

import pytest

from .helpers import print_my_func_name, print_my_captured
import newteki.files as NewtFiles
import newteki.field as NewtField
import newteki.cli as NewtCli
from newteki.field import GridField


CONFIG = {
    "method": "eki",
    "init": "kl-basis",
    "model": "linear-toy",
    "ensemble_size": "3",
    "iterations": "2",
    "prior.tau": "3",
    "prior.kmax": "1",
    "grid_n": "6",
    "snapshot_iters": "1",
    "n_obs_side": "2",
    "record_trajectory": "true",
}


def _write_config(tmpdir):
    file_name = os.path.join(tmpdir, "config.txt")
    NewtFiles.save_keyvalue_to_file(
        file_name, {**CONFIG, "output_dir": os.path.join(tmpdir, "default")}, print_log=False
    )
    return file_name


class TestMain:
    """ Tests for main. """


    def test_main_run_and_check(self, capsys):
        """ Ensure run writes into the overridden directory and check passes on it. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            config = _write_config(tmpdir)
            run_dir = os.path.join(tmpdir, "cli_run")

            code_run = NewtCli.main(["run", config, "--seed", "4", "--output", run_dir, "--log"])
            code_check = NewtCli.main(["check", run_dir])
            manifest = NewtFiles.read_keyvalue_from_file(os.path.join(run_dir, "manifest.txt"), print_log=False)

            print("codes:", code_run, code_check)
            assert manifest["seed"] == "4"
            assert os.path.isfile(os.path.join(run_dir, "run_log.txt"))
            assert os.path.isfile(os.path.join(run_dir, "checks.txt"))
            assert not os.path.exists(os.path.join(tmpdir, "default"))

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "codes: 0 0" in captured.out
        assert "[Newt.experiment.check_trajectory] subspace_residual: ok" in captured.out
        assert "" == captured.err


    def test_main_matrix(self, capsys):
        """ Ensure matrix runs the four arms and returns 0 when all are ok. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            config = _write_config(tmpdir)
            out_dir = os.path.join(tmpdir, "matrix")

            code = NewtCli.main(["matrix", config, "--output", out_dir])
            print("code:", code)
            assert os.path.isfile(os.path.join(out_dir, "summary.csv"))
            assert os.path.isdir(os.path.join(out_dir, "teki_kl-basis"))

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "code: 0" in captured.out
        assert "\n[Newt.experiment.run_matrix] Saved summary:\n" in captured.out


    def test_main_forward(self, capsys):
        """ Ensure forward writes the observation vector. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            config = _write_config(tmpdir)
            field_file = os.path.join(tmpdir, "field.csv")
            output_file = os.path.join(tmpdir, "obs.csv")
            NewtField.save_grid_field(field_file, GridField.constant(6, 0.5), print_log=False)

            code = NewtCli.main(["forward", "linear-toy", field_file, "--config", config, "--output", output_file])
            rows = NewtFiles.read_csv_from_file(output_file, print_log=False)
            print("code:", code)
            print("rows:", [round(float(row[0]), 12) for row in rows])

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "code: 0" in captured.out
        assert "rows: [0.5, 0.5, 0.5, 0.5]" in captured.out


    def test_main_failures(self, capsys):
        """ Ensure a missing config returns 1 and bad arguments exit through argparse. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            code = NewtCli.main(["run", os.path.join(tmpdir, "missing.txt")])
            print("code:", code)

        with pytest.raises(SystemExit) as exc_info:
            NewtCli.main(["forward", "heat", "field.csv"])
        assert exc_info.value.code == 2

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "code: 1" in captured.out
        assert "File not found:" in captured.err
        assert "invalid choice: 'heat'" in captured.err
