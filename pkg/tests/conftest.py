import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nanorotor_sgi import IntegratorOptions, ScenarioParams, run_pair  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def cached_pair(labels=None, strict=False, fixed=False, dense=False, **changes):
    """Simulated arm pair for the reference scenario with ``changes`` applied, memoised per session."""
    params = ScenarioParams().replace(**changes) if changes else ScenarioParams()
    opts = IntegratorOptions(strict_bnv=strict, fixed_step=fixed, dense=dense)
    return run_pair(params, options=opts, labels=labels)


@pytest.fixture(scope="session")
def preset_pair():
    return cached_pair()


@pytest.fixture(scope="session")
def preset():
    return ScenarioParams()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
