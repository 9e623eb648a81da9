import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from disruptsim import _pykernels  # noqa: E402

try:
    from disruptsim import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

from helpers import ACCEPTANCE_LINES  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=["python", "cython"])
def kernels(request):
    if request.param == "cython":
        if _ckernels is None:
            pytest.skip("compiled kernels not built")
        return _ckernels
    return _pykernels


@pytest.fixture
def python_backend(monkeypatch):
    """Route every module through the pure-Python kernels."""
    import disruptsim.generator
    import disruptsim.metrics
    import disruptsim.nullmodel
    for mod in (disruptsim.generator, disruptsim.metrics, disruptsim.nullmodel):
        monkeypatch.setattr(mod, "kernels", _pykernels)
