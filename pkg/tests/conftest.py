from __future__ import annotations

import time

import pytest

from dmspaces import _kernels, ghlp, gluing, prokhorov

BACKENDS = {"python": _kernels.python_backend}
if _kernels.compiled_backend is not None:
    BACKENDS["compiled"] = _kernels.compiled_backend

# criterion number -> (title, passed, seconds); filled by the acceptance tests
ACCEPTANCE: dict[int, tuple[str, bool, float]] = {}


@pytest.fixture(params=sorted(BACKENDS))
def kernel_backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    k = BACKENDS[request.param]
    for mod in (prokhorov, gluing, ghlp):
        monkeypatch.setattr(mod, "backend", k)
    return request.param


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    mark = item.get_closest_marker("criterion")
    t0 = time.perf_counter()
    outcome = yield
    if mark is not None:
        number, title = mark.args
        ACCEPTANCE[number] = (title, outcome.excinfo is None, time.perf_counter() - t0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, secs = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'} ({secs:6.2f} s)  {title}")
