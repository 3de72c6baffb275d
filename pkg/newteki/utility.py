"""
Updated on 2026-10
Created on 2025-10

@author: NewtCode Anna Burova

Constants:
    STREAM_LABELS (tuple[str, ...]):
        Labels of the named random streams derived from a master seed.

Functions:
    def check_dict_keys(
        data_mapping: Mapping[str, object],
        expected_set: set[str],
        allow_missing: bool = False,
        location: str = "",
        stop: bool = True
        ) -> bool
    def format_float(
        value: float
        ) -> str
    def parse_int_list(
        text: str,
        location: str = "",
        stop: bool = True
        ) -> list[int]
    def parse_bool(
        text: str,
        location: str = "",
        stop: bool = True
        ) -> bool
    def make_rng(
        seed: int,
        label: str
        ) -> np.random.Generator
"""

from __future__ import annotations

import zlib
from collections.abc import Mapping

import numpy as np

import newteki.console as NewtCons


# === CONSTANTS ===

STREAM_LABELS: tuple[str, ...] = ("truth", "noise", "init", "sources", "perturb", "model")


def check_dict_keys(
        data_mapping: Mapping[str, object],
        expected_set: set[str],
        allow_missing: bool = False,
        location: str = "",
        stop: bool = True
        ) -> bool:
    """ ## Validate that a mapping contains the expected keys and nothing else.

    Checks for missing and unexpected keys in the provided mapping.
    Used for config files, where an unknown key is always a mistake
    and a missing key may fall back to its default.

    Args:
        data_mapping (Mapping[str, object]):
            Read-only mapping to validate.
        expected_set (set[str]):
            Set of keys that are allowed (and required unless `allow_missing`).
        allow_missing (bool):
            If True, only unexpected keys are an error.<br>
            Defaults to False.
        location (str):
            Additional context appended to the error message location.<br>
            Defaults to empty string.
        stop (bool):
            If True, stops execution on validation failure.<br>
            Defaults to True.

    Returns:
        out (bool):
            True if the key set is acceptable, otherwise False.

    Raises:
        SystemExit:
            If an error occurs and `stop=True`, terminates with exit code 1.
    """

    if location:
        location = str(location) + " > "

    data_keys = set(data_mapping.keys())
    expected_keys = set(expected_set)
    missing_keys = set() if allow_missing else expected_keys - data_keys
    extra_keys = data_keys - expected_keys

    if missing_keys or extra_keys:
        NewtCons.error_msg(
            f"Data keys: {', '.join(sorted(data_keys))}",
            f"Missing keys: {', '.join(sorted(missing_keys))}",
            f"Unexpected keys: {', '.join(sorted(extra_keys))}",
            location=location + "Newt.utility.check_dict_keys",
            stop=stop
        )
        return False

    return True


def format_float(
        value: float
        ) -> str:
    """ ## Format a real number with 17 significant digits.

    17 digits round-trip every IEEE double, so written files replay exactly.

    Args:
        value (float):
            Number to format.

    Returns:
        out (str):
            Text form, e.g. `0.10000000000000001`.
    """

    return f"{float(value):.17g}"


def parse_int_list(
        text: str,
        location: str = "",
        stop: bool = True
        ) -> list[int]:
    """ ## Parse a comma separated list of integers, e.g. `1,5,11,17,23`.

    Args:
        text (str):
            Comma separated integers. Empty text gives an empty list.
        location (str):
            Additional location context for error reporting.<br>
            Defaults to empty string.
        stop (bool):
            If True, stops execution on a malformed entry.<br>
            Defaults to True.

    Returns:
        out (list[int]):
            Parsed integers in the given order.

    Raises:
        SystemExit:
            If an entry is not an integer and `stop=True`.
    """

    if location:
        location = str(location) + " > "

    result = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            result.append(int(part))
        except ValueError:
            NewtCons.error_msg(
                f"Not an integer: {part}",
                f"Text: {text}",
                location=location + "Newt.utility.parse_int_list",
                stop=stop
            )
            return []

    return result


def parse_bool(
        text: str,
        location: str = "",
        stop: bool = True
        ) -> bool:
    """ ## Parse `true/false/yes/no/1/0` (any case) into a bool.

    Raises:
        SystemExit:
            If the text is not a recognised flag and `stop=True`.
    """

    if location:
        location = str(location) + " > "

    flag = text.strip().lower()
    if flag in ("true", "yes", "1", "on"):
        return True
    if flag in ("false", "no", "0", "off"):
        return False

    NewtCons.error_msg(
        f"Not a boolean flag: {text}",
        location=location + "Newt.utility.parse_bool",
        stop=stop
    )
    return False


def make_rng(
        seed: int,
        label: str
        ) -> np.random.Generator:
    """ ## Create the named random stream for a master seed.

    Each label gets its own independent stream, so changing how many
    numbers one consumer draws (for example the ensemble size)
    never shifts what another consumer sees (for example the truth).

    Args:
        seed (int):
            Master seed, any non-negative 64-bit integer.
        label (str):
            One of `STREAM_LABELS`.

    Returns:
        out (np.random.Generator):
            PCG64 generator seeded from (seed, label).

    Raises:
        SystemExit:
            If the label is unknown or the seed is negative.
    """

    NewtCons.validate_type(
        seed, (int, np.integer),
        location="Newt.utility.make_rng : seed"
    )

    if label not in STREAM_LABELS:
        NewtCons.error_msg(
            f"Unknown stream label: {label}",
            f"Known labels: {', '.join(STREAM_LABELS)}",
            location="Newt.utility.make_rng : label"
        )

    if seed < 0:
        NewtCons.error_msg(
            f"Seed must be non-negative: {seed}",
            location="Newt.utility.make_rng : seed < 0"
        )

    label_key = zlib.crc32(label.encode("utf-8"))
    sequence = np.random.SeedSequence([int(seed), label_key])
    return np.random.Generator(np.random.PCG64(sequence))
