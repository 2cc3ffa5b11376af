from __future__ import annotations

import functools

import pytest

from gaslight import cases
from gaslight.policies import run_seq_coup, run_seq_dec, run_stoch_coup


@functools.lru_cache(maxsize=None)
def fixture(name: str):
    return cases.FIXTURES[name]()


@functools.lru_cache(maxsize=None)
def solved(name: str, policy: str, **cfg):
    system, scenarios = fixture(name)
    if cfg:
        system = system.with_config(**cfg)
    runner = {"stoch": run_stoch_coup, "seq": run_seq_coup, "dec": run_seq_dec}[policy]
    return runner(system, scenarios)


@pytest.fixture(scope="session")
def case3x3():
    return fixture("case3x3")


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
