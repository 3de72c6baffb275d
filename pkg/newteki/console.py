"""
Updated on 2026-10
Created on 2025-10

@author: NewtCode Anna Burova

Functions:
    def _divider(
        ) -> None
    def error_msg(
        *args: str,
        location: str = "Unknown",
        stop: bool = True
        ) -> None
    def validate_type(
        value: object,
        expected_type: type | tuple[type, ...],
        check_non_empty: bool = False,
        stop: bool = True,
        location: str = ""
        ) -> bool
    def validate_positive(
        value: object,
        strict: bool = True,
        stop: bool = True,
        location: str = ""
        ) -> bool
"""

from __future__ import annotations

import sys

import numpy as np
from colorama import Fore, Style


def _divider(
        ) -> None:
    """ Separator line between matrix arms in the run log. """

    print("\n" + "-" * 50 + "\n")


def error_msg(
        *args: str,
        location: str = "Unknown",
        stop: bool = True
        ) -> None:
    """ ## Report a failure on stderr as a red `::: ERROR :::` block.

    Each positional argument becomes one line of the block (Colorama colours).
    Numerical code, file helpers and the CLI all report through here.

    Args:
        *args (str):
            Message lines, printed in order.
        location (str):
            Where the failure was detected, as `Newt.<module>.<function> : <detail>`.<br>
            Defaults to "Unknown".
        stop (bool):
            If True, exits with code 1 once the block is printed.<br>
            If False, the block is only a warning.<br>
            Defaults to True.

    Raises:
        SystemExit:
            Code 1, only when `stop=True`.
    """

    message = "\n".join(str(arg) for arg in args)

    print(Style.BRIGHT + Fore.RED, file=sys.stderr)
    print(f"Location: {location}", file=sys.stderr)
    print("::: ERROR :::", file=sys.stderr)
    print(message, file=sys.stderr)
    print(Style.RESET_ALL, file=sys.stderr)

    if stop:
        raise SystemExit(1)


def validate_type(
        value: object,
        expected_type: type | tuple[type, ...],
        check_non_empty: bool = False,
        stop: bool = True,
        location: str = ""
        ) -> bool:
    """ ## Check the type of a config value or argument.

    A mismatch is reported through `error_msg()`.
    Booleans are never accepted where a number is expected.

    Args:
        value (object):
            The value to validate.
        expected_type (type | tuple[type, ...]):
            One type or a tuple of accepted types.
        check_non_empty (bool):
            If True, an empty value is rejected too.<br>
            Works for str, list, tuple, dict and numpy arrays.<br>
            Defaults to False.
        stop (bool):
            If True, a failed check exits with code 1.<br>
            If False, it is reported and False is returned.<br>
            Defaults to True.
        location (str):
            Caller location, prepended to the error location.<br>
            Defaults to empty string.

    Returns:
        out (bool):
            Whether the check passed.

    Raises:
        SystemExit:
            Code 1 on a failed check with `stop=True`.
    """

    if location:
        location = str(location) + " > "

    expected = expected_type if isinstance(expected_type, tuple) else (expected_type,)

    # bool is a subclass of int, but a flag is never a count or a size
    numeric_wanted = any(t in (int, float) for t in expected) and bool not in expected

    if not isinstance(value, expected_type) or (numeric_wanted and type(value) is bool):
        error_msg(
            f"Value: {value}",
            f"Received type: {type(value)}",
            f"Expected type: {expected_type}",
            location=location + "Newt.console.validate_type",
            stop=stop
        )
        return False

    if check_non_empty:
        is_empty = False

        if isinstance(value, str):
            is_empty = value.strip() == ""
        elif isinstance(value, (list, tuple, dict)):
            is_empty = len(value) == 0
        elif isinstance(value, np.ndarray):
            is_empty = value.size == 0
        else:
            error_msg(
                "check_non_empty is not supported for this type",
                f"Value: {value}",
                f"Type: {type(value)}",
                location=location + "Newt.console.validate_type : check_non_empty",
                stop=stop
            )
            return False

        if is_empty:
            error_msg(
                "Value must not be empty",
                f"Value: {value}",
                f"Type: {type(value)}",
                location=location + "Newt.console.validate_type : is_empty",
                stop=stop
            )
            return False

    return True


def validate_positive(
        value: object,
        strict: bool = True,
        stop: bool = True,
        location: str = ""
        ) -> bool:
    """ ## Validate that a number or every entry of an array is finite and positive.

    Args:
        value (object):
            A real number or a numpy array of real numbers.
        strict (bool):
            If True, zero is rejected (value > 0).<br>
            If False, zero is accepted (value >= 0).<br>
            Defaults to True.
        stop (bool):
            If True, a failed check exits with code 1.<br>
            Defaults to True.
        location (str):
            Caller location, prepended to the error location.<br>
            Defaults to empty string.

    Returns:
        out (bool):
            True if the check passes, otherwise False.

    Raises:
        SystemExit:
            If the check fails and `stop=True`, terminates with exit code 1.
    """

    if not validate_type(
        value, (int, float, np.floating, np.integer, np.ndarray), stop=stop,
        location=location
    ):
        return False

    if location:
        location = str(location) + " > "

    values = np.asarray(value, dtype=float)
    bound_text = "> 0" if strict else ">= 0"

    if not np.all(np.isfinite(values)):
        error_msg(
            "Value must be finite",
            f"Value: {value}",
            location=location + "Newt.console.validate_positive : isfinite",
            stop=stop
        )
        return False

    failed = values <= 0.0 if strict else values < 0.0
    if np.any(failed):
        worst = float(values.min()) if values.size else float("nan")
        error_msg(
            f"Value must be {bound_text}",
            f"Smallest value: {worst}",
            location=location + "Newt.console.validate_positive : bound",
            stop=stop
        )
        return False

    return True
