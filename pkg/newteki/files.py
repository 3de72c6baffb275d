"""
Updated on 2026-10
Created on 2025-10

@author: NewtCode Anna Burova

Functions:
    def _normalize_newlines(
        content: str
        ) -> str
    def ensure_dir_exists(
        file_path: str
        ) -> None
    def check_file_exists(
        file_path: str,
        stop: bool = True,
        print_log: bool = True
        ) -> bool
    === TEXT ===
    def read_text_from_file(
        file_name: str,
        stop: bool = True,
        print_log: bool = True
        ) -> str | None
    def save_text_to_file(
        file_name: str,
        content: str,
        append: bool = False,
        print_log: bool = True
        ) -> None
    === KEY=VALUE ===
    def read_keyvalue_from_file(
        file_name: str,
        stop: bool = True,
        print_log: bool = True
        ) -> dict[str, str] | None
    def save_keyvalue_to_file(
        file_name: str,
        content: dict[str, object],
        print_log: bool = True
        ) -> None
    === CSV ===
    def read_csv_from_file(
        file_name: str,
        stop: bool = True,
        print_log: bool = True
        ) -> list[list[str]] | None
    def save_csv_to_file(
        file_name: str,
        rows: list[list[object]],
        append: bool = False,
        print_log: bool = True
        ) -> None
    === LOG ===
    def setup_logging(
        dir_global: str
        ) -> tuple[str, TextIO, object, object]
            class Tee
                def __init__()
                def write()
                def flush()
    def cleanup_logging(
        setup_data: tuple[str, TextIO, object, object],
        file_target: str
        ) -> None
"""

from __future__ import annotations

import csv
import os
import shutil
import sys
from collections.abc import Callable
from datetime import datetime, timezone
from typing import TextIO, TypeVar

import newteki.console as NewtCons

T = TypeVar("T")


def _normalize_newlines(
        content: str
        ) -> str:
    """ `\\r\\n` and `\\r` become `\\n`; trailing whitespace is dropped. """

    NewtCons.validate_type(
        content, str,
        location="Newt.files._normalize_newlines"
    )

    return content.rstrip().replace("\r\n", "\n").replace("\r", "\n")


def ensure_dir_exists(
        file_path: str
        ) -> None:
    """ ## Create the parent directories of `file_path` (not the file).

    Raises:
        SystemExit:
            On an empty path or a directory that cannot be made.
    """

    NewtCons.validate_type(
        file_path, str, check_non_empty=True,
        location="Newt.files.ensure_dir_exists : file_path"
    )

    dir_path = os.path.dirname(file_path)

    if not dir_path or os.path.exists(dir_path):
        return None

    try:
        os.makedirs(dir_path, exist_ok=True)

    except OSError as e:  # pragma: no cover
        NewtCons.error_msg(
            f"Cannot create directory: {dir_path}",
            f"Exception: {e}",
            location="Newt.files.ensure_dir_exists : OSError makedirs"
        )


def check_file_exists(
        file_path: str,
        stop: bool = True,
        print_log: bool = True
        ) -> bool:
    """ ## Check that `file_path` is a readable file.

    Args:
        file_path (str):
            Path to check.
        stop (bool):
            If True, a missing file exits with code 1.<br>
            Defaults to True.
        print_log (bool):
            If True, a missing file is reported as a warning block.<br>
            With `stop=True` it is always reported.<br>
            Defaults to True.

    Returns:
        out (bool):
            Whether the file can be read.

    Raises:
        SystemExit:
            Missing file with `stop=True`.
    """

    if not NewtCons.validate_type(
        file_path, str, check_non_empty=True, stop=stop,
        location="Newt.files.check_file_exists : file_path"
    ):
        return False

    if os.path.isfile(file_path) and os.access(file_path, os.R_OK):
        return True

    if print_log or stop:
        NewtCons.error_msg(
            f"File not found: {file_path}",
            location="Newt.files.check_file_exists : print_log",
            stop=stop
        )

    return False


# === TEXT ===

def _read_file(
        file_name: str,
        parse: Callable[[TextIO], T],
        stop: bool,
        print_log: bool,
        location: str
        ) -> T | None:
    """ Open `file_name` for reading and return `parse(f)`, or None if missing. """

    if not check_file_exists(file_name, stop=stop, print_log=print_log):
        return None

    try:
        with open(file_name, encoding="utf-8", newline="") as f:
            return parse(f)

    except (OSError, UnicodeDecodeError) as e:
        NewtCons.error_msg(
            f"Cannot read file: {file_name}",
            f"Exception: {e}",
            location=f"{location} : read",
            stop=stop
        )
        return None


def _write_file(
        file_name: str,
        dump: Callable[[TextIO], None],
        append: bool,
        location: str
        ) -> str:
    """ Create the directory, open `file_name` and call `dump(f)`; returns the mode name. """

    ensure_dir_exists(file_name)
    appending = append and os.path.isfile(file_name)

    try:
        with open(file_name, "a" if appending else "w", encoding="utf-8", newline="\n") as f:
            dump(f)

    except OSError as e:  # pragma: no cover
        NewtCons.error_msg(
            f"Cannot write file: {file_name}",
            f"Exception: {e}",
            location=f"{location} : write"
        )

    return "append" if appending else "write"


def read_text_from_file(
        file_name: str,
        stop: bool = True,
        print_log: bool = True
        ) -> str | None:
    """ ## Read a UTF-8 text file, newlines kept as written.

    Args:
        file_name (str):
            Text file path.
        stop (bool):
            If True, a missing file exits with code 1.<br>
            Defaults to True.
        print_log (bool):
            If True, prints the path and the number of characters.<br>
            Defaults to True.

    Returns:
        out (str | None):
            File content, or None when the file is missing.
    """

    content = _read_file(
        file_name, lambda f: f.read(), stop, print_log,
        "Newt.files.read_text_from_file"
    )

    if content is not None and print_log:
        print("[Newt.files.read_text_from_file] Loaded text from file:")
        print(file_name)
        print(f"(length={len(content)})")

    return content


def save_text_to_file(
        file_name: str,
        content: str,
        append: bool = False,
        print_log: bool = True
        ) -> None:
    """ ## Write text with `\\n` newlines and one final newline.

    Missing directories are created.
    With `append=True` an existing file is extended instead of replaced.
    """

    NewtCons.validate_type(
        content, str,
        location="Newt.files.save_text_to_file : content"
    )

    content = _normalize_newlines(content) + "\n"
    mode = _write_file(
        file_name, lambda f: f.write(content), append,
        "Newt.files.save_text_to_file"
    )

    if print_log:
        print("[Newt.files.save_text_to_file] Saved text to file:")
        print(file_name)
        print(f"(length={len(content)}, mode={mode})")


# === KEY=VALUE ===

def read_keyvalue_from_file(
        file_name: str,
        stop: bool = True,
        print_log: bool = True
        ) -> dict[str, str] | None:
    """ ## Read a flat `key=value` text file into a dict of strings.

    Blank lines and lines starting with `#` are skipped.
    Keys and values are stripped; the first `=` splits a line.
    A repeated key or a line without `=` is an error.

    Args:
        file_name (str):
            Path to the config or manifest file.
        stop (bool):
            If True, terminates execution on a missing file or a malformed line.<br>
            Defaults to True.
        print_log (bool):
            If True, prints the file path and key count after loading.<br>
            Defaults to True.

    Returns:
        out (dict[str, str] | None):
            Parsed entries in file order,<br>
            or None if the file is missing or malformed.

    Raises:
        SystemExit:
            If the file is missing or malformed and `stop=True`.
    """

    content = read_text_from_file(file_name, stop=stop, print_log=False)
    if content is None:
        return None

    entries: dict[str, str] = {}

    for line_nr, line in enumerate(_normalize_newlines(content).split("\n"), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue

        if "=" not in line:
            NewtCons.error_msg(
                f"Line {line_nr} has no '=': {line}",
                f"File: {file_name}",
                location="Newt.files.read_keyvalue_from_file : no separator",
                stop=stop
            )
            return None

        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()

        if key in entries:
            NewtCons.error_msg(
                f"Line {line_nr} repeats key: {key}",
                f"File: {file_name}",
                location="Newt.files.read_keyvalue_from_file : repeated key",
                stop=stop
            )
            return None

        entries[key] = value

    if print_log:
        print("[Newt.files.read_keyvalue_from_file] Loaded key=value file:")
        print(file_name)
        print(f"(keys={len(entries)})")

    return entries


def save_keyvalue_to_file(
        file_name: str,
        content: dict[str, object],
        print_log: bool = True
        ) -> None:
    """ ## Write a dict as a flat `key=value` text file, one entry per line.

    Values are written with `str()`; callers format floats beforehand.

    Raises:
        SystemExit:
            If a key contains `=` or a newline.
    """

    NewtCons.validate_type(
        content, dict,
        location="Newt.files.save_keyvalue_to_file : content"
    )

    lines = []
    for key, value in content.items():
        if "=" in str(key) or "\n" in str(key) or "\n" in str(value):
            NewtCons.error_msg(
                f"Key or value cannot be written: {key}",
                location="Newt.files.save_keyvalue_to_file : key"
            )
        lines.append(f"{key}={value}")

    save_text_to_file(file_name, "\n".join(lines), print_log=False)

    if print_log:
        print("[Newt.files.save_keyvalue_to_file] Saved key=value file:")
        print(file_name)
        print(f"(keys={len(lines)})")


# === CSV ===

def read_csv_from_file(
        file_name: str,
        stop: bool = True,
        print_log: bool = True
        ) -> list[list[str]] | None:
    """ ## Read a comma-separated file into rows of strings.

    Args:
        file_name (str):
            CSV file path.
        stop (bool):
            If True, a missing file exits with code 1.<br>
            Defaults to True.
        print_log (bool):
            If True, prints the path and the row count.<br>
            Defaults to True.

    Returns:
        out (list[list[str]] | None):
            Rows in file order, or None when the file is missing.
    """

    rows = _read_file(
        file_name, lambda f: list(csv.reader(f)), stop, print_log,
        "Newt.files.read_csv_from_file"
    )

    if rows is not None and print_log:
        print("[Newt.files.read_csv_from_file] Loaded CSV from file:")
        print(file_name)
        print(f"(rows={len(rows)})")

    return rows


def save_csv_to_file(
        file_name: str,
        rows: list[list[object]],
        append: bool = False,
        print_log: bool = True
        ) -> None:
    """ ## Write rows as comma-separated lines with `\\n` endings.

    Cells go through `str()`, so floats are formatted by the caller
    (see `utility.format_float`). Missing directories are created.

    Args:
        file_name (str):
            CSV file path.
        rows (list[list[object]]):
            Table rows; the header, if any, is the first row.
        append (bool):
            If True, rows are added to an existing file.<br>
            Defaults to False.
        print_log (bool):
            If True, prints the path, row count and mode.<br>
            Defaults to True.
    """

    NewtCons.validate_type(
        rows, list,
        location="Newt.files.save_csv_to_file : rows"
    )

    def dump(f: TextIO) -> None:
        csv.writer(f, lineterminator="\n").writerows([[str(cell) for cell in row] for row in rows])

    mode = _write_file(file_name, dump, append, "Newt.files.save_csv_to_file")

    if print_log:
        print("[Newt.files.save_csv_to_file] Saved CSV to file:")
        print(file_name)
        print(f"(rows={len(rows)}, mode={mode})")


# === LOG ===

def setup_logging(
        dir_global: str
        ) -> tuple[str, TextIO, object, object]:
    """ ## Redirect stdout and stderr to both console and a timestamped log file.

    Creates a log file named after the current UTC time in `dir_global`
    and replaces sys.stdout and sys.stderr with Tee instances.

    Args:
        dir_global (str):
            Directory where the timestamped log file will be created.

    Returns:
        tuple[str, TextIO, object, object]:
            Log filename, open file object,
            original sys.stdout and original sys.stderr.

    Example:
        >>> setup_data = setup_logging(dir_global="runs/case2")
        >>> cleanup_logging(setup_data, "runs/case2/run_log.txt")
    """

    NewtCons.validate_type(
        dir_global, str, check_non_empty=True,
        location="Newt.files.setup_logging : dir_global"
    )

    os.makedirs(dir_global, exist_ok=True)

    time_now = datetime.now(timezone.utc)
    time_file_name = time_now.strftime('%Y-%m-%d-%H-%M-%S-%f') + ".txt"

    class Tee:
        # a - console
        # b - file
        def __init__(self, a, b):
            self.a, self.b = a, b

        def write(self, s: str) -> None:
            self.a.write(s)
            if not self.b.closed:
                self.b.write(s)
            self.flush()

        def flush(self) -> None:
            self.a.flush()
            if not self.b.closed:
                self.b.flush()

    origin_stdout = sys.stdout
    origin_stderr = sys.stderr
    time_file = os.path.join(dir_global, time_file_name)
    file_content: TextIO = open(time_file, "a", encoding="utf-8", newline="\n")
    sys.stdout = Tee(origin_stdout, file_content)
    sys.stderr = Tee(origin_stderr, file_content)

    return (time_file, file_content, origin_stdout, origin_stderr)


def cleanup_logging(
        setup_data: tuple[str, TextIO, object, object],
        file_target: str
        ) -> None:
    """ ## Restore original stdout/stderr and move the log file to its target path.

    Args:
        setup_data (tuple[str, TextIO, object, object]):
            Tuple returned from setup_logging().
        file_target (str):
            Final log path, usually `<output_dir>/run_log.txt`.
    """

    NewtCons.validate_type(
        setup_data, tuple, check_non_empty=True,
        location="Newt.files.cleanup_logging : setup_data"
    )

    NewtCons.validate_type(
        file_target, str, check_non_empty=True,
        location="Newt.files.cleanup_logging : file_target"
    )

    time_file, file_content, origin_stdout, origin_stderr = setup_data

    sys.stdout = origin_stdout
    sys.stderr = origin_stderr
    file_content.close()
    ensure_dir_exists(file_target)
    shutil.move(time_file, file_target)
    print("Log moved to", file_target)
