from __future__ import annotations

import pytest

from sq2hit import backend

KERNELS = ["python"] + (["compiled"] if backend.compiled is not None else [])


@pytest.fixture(params=KERNELS)
def kernel(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
