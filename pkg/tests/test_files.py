"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Unit tests for newteki.files module.

Tests cover:
- TestNormalizeNewlines
- TestEnsureDirExists
- TestCheckFileExists
- TestTextFiles
- TestKeyValueFiles
- TestCsvFiles
- TestLogging
"""

import os
import tempfile

import pytest

from .helpers import print_my_func_name, print_my_captured
import newteki.files as NewtFiles


class TestNormalizeNewlines:
    """ Tests for _normalize_newlines function. """


    def test_normalize_newlines_mixed_endings(self, capsys):
        """ Ensure CRLF and CR become LF and trailing whitespace is removed. """
        print_my_func_name()

        output = NewtFiles._normalize_newlines("a\r\nb\rc\n  \n")
        print("output:", repr(output))
        assert output == "a\nb\nc"

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Function: test_normalize_newlines_mixed_endings" \
        "\n============================================" \
        "\noutput: 'a\\nb\\nc'" \
        "\n" == captured.out
        assert "" == captured.err


class TestEnsureDirExists:
    """ Tests for ensure_dir_exists function. """


    def test_ensure_dir_exists_nested_dirs_created(self, capsys):
        """ Ensure missing parent directories are created, not the file. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            file_path = os.path.join(tmpdir, "case1", "teki", "metrics.csv")
            NewtFiles.ensure_dir_exists(file_path)

            dirname_exists = os.path.isdir(os.path.dirname(file_path))
            print("dirname_exists:", dirname_exists)
            assert dirname_exists is True
            assert os.path.exists(file_path) is False

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "" == captured.err


    def test_ensure_dir_exists_empty_string_exit(self, capsys):
        """ Ensure an empty path stops with the is_empty location. """
        print_my_func_name()

        with pytest.raises(SystemExit) as exc_info:
            NewtFiles.ensure_dir_exists("")
            print("This line will not be printed")
        assert exc_info.value.code == 1

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "\nLocation: Newt.files.ensure_dir_exists : file_path" \
        " > Newt.console.validate_type : is_empty\n" in captured.err
        assert captured.err.count("\n::: ERROR :::\n") == 1

        # Expected absence of result
        assert "This line will not be printed" not in captured.out


class TestCheckFileExists:
    """ Tests for check_file_exists function. """


    def test_check_file_exists_missing_file(self, capsys):
        """ Ensure a missing file logs, and stops only with stop=True. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            file_path = os.path.join(tmpdir, "missing.txt")

            check_1 = NewtFiles.check_file_exists(file_path, stop=False)
            check_2 = NewtFiles.check_file_exists(file_path, stop=False, print_log=False)
            print("check_1:", check_1)
            print("check_2:", check_2)

            with pytest.raises(SystemExit):
                NewtFiles.check_file_exists(file_path)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Function: test_check_file_exists_missing_file" \
        "\n============================================" \
        "\ncheck_1: False" \
        "\ncheck_2: False" \
        "\n" == captured.out
        assert captured.err.count("\nFile not found: ") == 2
        assert captured.err.count("\n::: ERROR :::\n") == 2


class TestTextFiles:
    """ Tests for text read and write. """


    def test_save_and_read_text_from_file(self, capsys):
        """ Ensure text written is read back with a final newline and logged. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            file_path = os.path.join(tmpdir, "notes", "file.txt")

            NewtFiles.save_text_to_file(file_path, "line 1\r\nline 2")
            NewtFiles.save_text_to_file(file_path, "line 3", append=True, print_log=False)
            result = NewtFiles.read_text_from_file(file_path)
            print("result:", repr(result))

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Function: test_save_and_read_text_from_file" \
        "\n============================================" \
        "\n[Newt.files.save_text_to_file] Saved text to file:" \
        "\n" + file_path + \
        "\n(length=14, mode=write)" \
        "\n[Newt.files.read_text_from_file] Loaded text from file:" \
        "\n" + file_path + \
        "\n(length=21)" \
        "\nresult: 'line 1\\nline 2\\nline 3\\n'" \
        "\n" == captured.out
        assert "" == captured.err


    def test_read_text_from_file_missing(self, capsys):
        """ Ensure a missing file returns None with stop=False. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            result = NewtFiles.read_text_from_file(
                os.path.join(tmpdir, "none.txt"), stop=False, print_log=False
            )
            print("result:", result)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "result: None" in captured.out
        assert "" == captured.err


class TestKeyValueFiles:
    """ Tests for key=value read and write. """


    def test_save_and_read_keyvalue(self, capsys):
        """ Ensure entries survive a write and read, comments and blanks are skipped. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            file_path = os.path.join(tmpdir, "config.txt")
            NewtFiles.save_keyvalue_to_file(file_path, {"case": 2, "method": "teki"}, print_log=False)
            NewtFiles.save_text_to_file(
                file_path, "\n# comment\n\nprior.a = 0.5 \nlabel=a=b", append=True, print_log=False
            )

            entries = NewtFiles.read_keyvalue_from_file(file_path)
            print("entries:", entries)

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert entries == {"case": "2", "method": "teki", "prior.a": "0.5", "label": "a=b"}
        assert list(entries) == ["case", "method", "prior.a", "label"]
        assert "\n[Newt.files.read_keyvalue_from_file] Loaded key=value file:\n" in captured.out
        assert "\n(keys=4)\n" in captured.out
        assert "" == captured.err


    def test_read_keyvalue_malformed(self, capsys):
        """ Ensure a line without '=' and a repeated key are errors. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            file_1 = os.path.join(tmpdir, "no_sep.txt")
            file_2 = os.path.join(tmpdir, "repeat.txt")
            NewtFiles.save_text_to_file(file_1, "case=1\nmethod teki", print_log=False)
            NewtFiles.save_text_to_file(file_2, "case=1\ncase=2", print_log=False)

            output_1 = NewtFiles.read_keyvalue_from_file(file_1, stop=False)
            print("output_1:", output_1)

            with pytest.raises(SystemExit) as exc_info:
                NewtFiles.read_keyvalue_from_file(file_2)
            assert exc_info.value.code == 1

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "output_1: None" in captured.out
        assert "\nLocation: Newt.files.read_keyvalue_from_file : no separator" \
        "\n::: ERROR :::" \
        "\nLine 2 has no '=': method teki\n" in captured.err
        assert "\nLocation: Newt.files.read_keyvalue_from_file : repeated key" \
        "\n::: ERROR :::" \
        "\nLine 2 repeats key: case\n" in captured.err
        assert captured.err.count("\n::: ERROR :::\n") == 2


    def test_save_keyvalue_bad_key(self, capsys):
        """ Ensure a key containing '=' cannot be written. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            with pytest.raises(SystemExit):
                NewtFiles.save_keyvalue_to_file(os.path.join(tmpdir, "x.txt"), {"a=b": 1})

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Newt.files.save_keyvalue_to_file : key" in captured.err


class TestCsvFiles:
    """ Tests for CSV read and write. """


    def test_save_and_read_csv(self, capsys):
        """ Ensure rows are written as strings, appended, and read back with logs. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            file_path = os.path.join(tmpdir, "metrics.csv")
            NewtFiles.save_csv_to_file(file_path, [["iter", "t"], [0, 0.0]])
            NewtFiles.save_csv_to_file(file_path, [[1, 0.5]], append=True, print_log=False)
            rows = NewtFiles.read_csv_from_file(file_path)
            print("rows:", rows)

            with open(file_path, "rb") as f:
                raw = f.read()

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert rows == [["iter", "t"], ["0", "0.0"], ["1", "0.5"]]
        assert raw == b"iter,t\n0,0.0\n1,0.5\n"

        assert "Function: test_save_and_read_csv" \
        "\n============================================" \
        "\n[Newt.files.save_csv_to_file] Saved CSV to file:" \
        "\n" + file_path + \
        "\n(rows=2, mode=write)" \
        "\n[Newt.files.read_csv_from_file] Loaded CSV from file:" \
        "\n" + file_path + \
        "\n(rows=3)" \
        "\nrows: [['iter', 't'], ['0', '0.0'], ['1', '0.5']]" \
        "\n" == captured.out
        assert "" == captured.err


    def test_read_csv_missing_and_bad_rows(self, capsys):
        """ Ensure a missing CSV returns None and non-list rows stop. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            rows = NewtFiles.read_csv_from_file(os.path.join(tmpdir, "none.csv"), stop=False, print_log=False)
            print("rows:", rows)

            with pytest.raises(SystemExit):
                NewtFiles.save_csv_to_file(os.path.join(tmpdir, "x.csv"), "not rows")

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "rows: None" in captured.out
        assert "Newt.files.save_csv_to_file : rows > Newt.console.validate_type" in captured.err
        assert captured.err.count("\n::: ERROR :::\n") == 1


class TestLogging:
    """ Tests for setup_logging and cleanup_logging functions. """


    def test_setup_logging_and_cleanup_logging(self, capsys):
        """ Ensure console output is copied to the log file and the file is moved. """
        print_my_func_name()

        with tempfile.TemporaryDirectory() as tmpdir:
            setup_data = NewtFiles.setup_logging(tmpdir)
            time_file, file_content, origin_stdout, origin_stderr = setup_data

            print("test message")
            assert os.path.exists(time_file)

            file_path = os.path.join(tmpdir, "run_log.txt")
            NewtFiles.cleanup_logging(setup_data, file_path)

            result = NewtFiles.read_text_from_file(file_path, print_log=False)
            print("result:", result)
            assert os.path.exists(time_file) is False

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "Function: test_setup_logging_and_cleanup_logging" \
        "\n============================================" \
        "\ntest message" \
        "\nLog moved to " + file_path + \
        "\nresult: test message\n" \
        "\n" == captured.out
        assert "" == captured.err
