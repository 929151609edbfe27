import sys
import warnings
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

# criterion number -> (passed, description, measured)
ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture
def record():
    def _record(number: int, passed: bool, description: str, measured: str) -> bool:
        ACCEPTANCE[number] = (bool(passed), description, measured)
        return bool(passed)
    return _record


@pytest.fixture(autouse=True)
def _quiet_regime_warnings():
    from grwa.effective import StrongCouplingWarning
    from grwa.model import WeakHoppingWarning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StrongCouplingWarning)
        warnings.simplefilter("ignore", WeakHoppingWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, description, measured = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {description}  [{measured}]")
