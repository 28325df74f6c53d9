from __future__ import annotations

import os
import subprocess
import sys

import pytest

from sq2hit import backend


def _active(env_extra):
    env = dict(os.environ, **env_extra)
    res = subprocess.run([sys.executable, "-c", "from sq2hit import backend; print(backend.NAME)"],
                         capture_output=True, text=True, env=env)
    return res.stdout.strip()


def test_pure_python_can_be_forced():
    assert _active({"SQ2HIT_PURE": "1"}) == "python"


def test_compiled_selected_when_built():
    if backend.compiled is None:
        pytest.skip("compiled kernel not built")
    assert _active({"SQ2HIT_PURE": ""}) == "compiled"


def test_get_by_name():
    assert backend.get("python") is backend.python
    with pytest.raises(ValueError):
        backend.get("fortran")


def test_pure_fallback_end_to_end():
    env = dict(os.environ, SQ2HIT_PURE="1")
    code = ("from sq2hit.hitengine import admissible_basis; "
            "from sq2hit import backend; print(backend.NAME, admissible_basis(5, 18).dim)")
    res = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert res.stdout.split() == ["python", "730"]
