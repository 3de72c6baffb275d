"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Print helpers shared by the test modules.
Every test prints its own name first and dumps what it captured at the end,
so `pytest -s` output (see `_list.sh`) reads as a log per test.

Functions:
    def print_my_func_name(
        ) -> None
    def print_my_captured(
        captured
        ) -> None
    def print_my_array(
        label: str,
        values
        ) -> None

Test example:
    def test_function_example(self, capsys):
        print_my_func_name()

        spec = CovarianceSpec(alpha=2.0, tau=3.0, kmax=2)
        print("n_modes:", spec.n_modes)

        with pytest.raises(SystemExit) as exc_info:
            NewtField.eigenvalue(spec, (5, 0))
        assert exc_info.value.code == 1

        captured = capsys.readouterr()
        print_my_captured(captured)

        assert "n_modes: 9" in captured.out
        assert captured.err.count("\\n::: ERROR :::\\n") == 1
"""

import inspect

import numpy as np


def print_my_func_name(
        ) -> None:
    """ Print the name of the calling test. """

    frame = inspect.currentframe()
    caller = frame.f_back.f_code.co_name if frame and frame.f_back else "<unknown>"

    print("Function:", caller)
    print("============================================")


def print_my_captured(
        captured
        ) -> None:
    """ ## Dump stdout and stderr captured by `capsys.readouterr()`.

    Args:
        captured (CaptureResult):
            Object with `.out` and `.err` text.
    """

    print()
    print("START=======================================")

    for name, text in (("out", captured.out), ("err", captured.err)):
        print(f"=====captured.{name}=====")
        print(text if text else f"(no std{name} captured)")

    print("END=========================================")


def print_my_array(
        label: str,
        values
        ) -> None:
    """ Print an array rounded to 6 digits, flattened, after `label:`. """

    print(f"{label}:", np.round(np.asarray(values, dtype=float).ravel(), 6).tolist())
